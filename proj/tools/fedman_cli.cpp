// Experiment driver: runs, comparisons, f* and dataset generation, plus the
// two halves of a distributed TCP run.

#include <cstdio>
#include <exception>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "fedman/config.hpp"
#include "fedman/errors.hpp"
#include "fedman/metrics_io.hpp"
#include "fedman/problems.hpp"
#include "fedman/runtime.hpp"
#include "fedman/transport.hpp"

using namespace fedman;

namespace {

struct Flags {
  std::map<std::string, std::string> values;
  std::string config_file;
  bool dump = false;
};

// Registers every config key as a string-valued flag so that only the flags
// actually given override the config file.
void add_config_flags(CLI::App& cmd, Flags& flags) {
  for (const auto& key : config_keys()) {
    if (key == "theory-steps" || key == "no-timing") {
      cmd.add_flag_callback("--" + key, [&flags, key] { flags.values[key] = "true"; });
      continue;
    }
    cmd.add_option_function<std::string>("--" + key, [&flags, key](const std::string& v) { flags.values[key] = v; });
  }
  cmd.add_option("--config", flags.config_file, "key = value file; flags override it");
  cmd.add_flag("--dump-config", flags.dump, "print the resolved config and exit");
}

ExperimentConfig load_config(const Flags& flags) {
  ExperimentConfig config;
  if (!flags.config_file.empty()) {
    const auto bytes = read_file_bytes(flags.config_file);
    apply_config_text(config, std::string(bytes.begin(), bytes.end()));
  }
  for (const auto& [key, value] : flags.values) apply_setting(config, key, value);
  config = resolve(config);
  validate(config);
  return config;
}

CsvOptions csv_options(const ExperimentConfig& config) { return {!config.no_timing}; }

std::vector<RoundMetrics> run_one(Algorithm algo, const ExperimentConfig& config,
                                  const std::shared_ptr<Problem>& problem) {
  const HyperParams hp = build_hyperparams(config, *problem);
  RunOptions options;
  options.seed = config.seed;
  if (config.mode == "tcp") return run_tcp_loopback(algo, problem, hp, options, config.addr);
  return run_inproc(algo, problem, hp, options);
}

void report_last(const std::string& name, const std::vector<RoundMetrics>& series) {
  const RoundMetrics& last = series.back();
  std::printf("%s: rounds=%ld grad_norm=%.6e objective=%.12g", name.c_str(), last.round, last.grad_norm,
              last.objective);
  if (last.obj_gap) std::printf(" obj_gap=%.6e", *last.obj_gap);
  std::printf(" uplink=%ld\n", last.uplink_matrices);
}

int cmd_run(const ExperimentConfig& config) {
  const auto problem = build_problem(config);
  const Algorithm algo = parse_algorithm(config.algo);
  const auto series = run_one(algo, config, problem);
  write_metrics_csv(series, config.out, csv_options(config));
  if (!config.svg.empty()) {
    PlotOptions plot;
    plot.title = config.problem + ": " + config.algo;
    emit_svg_plot({{config.algo, series}}, plot, config.svg);
  }
  report_last(config.algo, series);
  return 0;
}

int cmd_compare(const ExperimentConfig& config) {
  const auto problem = build_problem(config);
  std::vector<NamedSeries> runs;
  for (const auto& name : config.algos) {
    runs.push_back({name, run_one(parse_algorithm(name), config, problem)});
    report_last(name, runs.back().metrics);
  }
  write_text_file(config.out, format_merged_csv(runs, csv_options(config)));
  if (!config.svg.empty()) {
    PlotOptions plot;
    plot.title = config.problem + ": gradient norm";
    emit_svg_plot(runs, plot, config.svg);
  }
  return 0;
}

int cmd_fstar(const ExperimentConfig& config) {
  if (config.problem == "lrmc") throw ConfigError("fstar is only defined for kPCA problems");
  const auto problem = build_problem(config);
  std::printf("%.17g\n", *problem->f_star());
  return 0;
}

int cmd_gen_data(const ExperimentConfig& config) {
  if (config.problem == "kpca-mnist") throw ConfigError("gen-data generates kpca-synth or lrmc data");
  if (!config.data_file.empty()) throw ConfigError("gen-data writes to --out, not --data-file");
  const auto problem = build_problem(config);
  write_dataset(*problem, config.out);
  std::printf("wrote %s\n", config.out.c_str());
  return 0;
}

int cmd_serve(const ExperimentConfig& config) {
  const Algorithm algo = parse_algorithm(config.algo);
  if (!is_federated(algo)) throw ConfigError("serve needs a federated algorithm");
  const auto problem = build_problem(config);
  const HyperParams hp = build_hyperparams(config, *problem);
  TcpServerTransport server(config.addr, problem->num_clients());
  std::fprintf(stderr, "listening on port %u\n", static_cast<unsigned>(server.port()));
  server.accept_clients();
  RunOptions options;
  options.seed = config.seed;
  const auto series = orchestrate(algo, *problem, hp, &server, options);
  write_metrics_csv(series, config.out, csv_options(config));
  report_last(config.algo, series);
  return 0;
}

int cmd_client(const ExperimentConfig& config, std::size_t id) {
  const Algorithm algo = parse_algorithm(config.algo);
  const auto problem = build_problem(config);
  const HyperParams hp = build_hyperparams(config, *problem);
  auto node = make_client_node(algo, problem, id, hp, config.seed);
  run_tcp_client(config.addr, id, *node);
  return 0;
}

// One-line diagnostics only: collapse any embedded newlines.
void print_error(const std::string& message) {
  std::string line = message;
  for (char& ch : line) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  std::fprintf(stderr, "error: %s\n", line.c_str());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Federated optimization on the Stiefel manifold"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* app;
    Flags flags;
  };
  std::map<std::string, Sub> subs;
  const std::vector<std::pair<std::string, std::string>> names = {
      {"run", "run one algorithm"},
      {"compare", "run several algorithms from the same start"},
      {"fstar", "print the kPCA optimal value"},
      {"gen-data", "write a synthetic dataset file"},
      {"serve", "TCP server for a distributed run"},
      {"client", "TCP client for a distributed run"},
  };
  for (const auto& [name, help] : names) {
    Sub& sub = subs[name];
    sub.app = app.add_subcommand(name, help);
    add_config_flags(*sub.app, sub.flags);
  }
  std::size_t client_id = 0;
  subs["client"].app->add_option("--id", client_id, "client id in [0, n)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    print_error(e.what());
    return 2;
  }

  try {
    for (auto& [name, sub] : subs) {
      if (!sub.app->parsed()) continue;
      const ExperimentConfig config = load_config(sub.flags);
      if (sub.flags.dump) {
        std::fputs(dump_config(config).c_str(), stdout);
        return 0;
      }
      if (name == "run") return cmd_run(config);
      if (name == "compare") return cmd_compare(config);
      if (name == "fstar") return cmd_fstar(config);
      if (name == "gen-data") return cmd_gen_data(config);
      if (name == "serve") return cmd_serve(config);
      if (name == "client") return cmd_client(config, client_id);
    }
  } catch (const TubeExit& e) {
    print_error(e.what());
    return 3;
  } catch (const std::exception& e) {
    print_error(e.what());
    return 1;
  }
  return 1;
}
