#include "fedman/config.hpp"

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <map>

#include "fedman/errors.hpp"

namespace fedman {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

std::string bad(std::string_view key, std::string_view value, const char* expected) {
  return "invalid value '" + std::string(value) + "' for " + std::string(key) + " (expected " + expected + ")";
}

std::uint64_t to_u64(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  errno = 0;
  const unsigned long long v = std::strtoull(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || s.front() == '-' || errno != 0) {
    throw ConfigError(bad(key, value, "a non-negative integer"));
  }
  return v;
}

int to_int(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (s.empty() || *end != '\0' || errno != 0 || v < -2147483647L || v > 2147483647L) {
    throw ConfigError(bad(key, value, "an integer"));
  }
  return static_cast<int>(v);
}

double to_real(std::string_view key, std::string_view value) {
  const std::string s(value);
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (s.empty() || *end != '\0' || !std::isfinite(v)) throw ConfigError(bad(key, value, "a finite real"));
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "yes" || value.empty()) return true;
  if (value == "false" || value == "0" || value == "no") return false;
  throw ConfigError(bad(key, value, "true or false"));
}

std::vector<std::string> to_list(std::string_view value) {
  std::vector<std::string> out;
  std::size_t begin = 0;
  while (begin <= value.size()) {
    auto pos = value.find(',', begin);
    if (pos == std::string_view::npos) pos = value.size();
    const std::string item = trim(value.substr(begin, pos - begin));
    if (!item.empty()) out.push_back(item);
    begin = pos + 1;
  }
  return out;
}

std::string real_text(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

using Setter = std::function<void(ExperimentConfig&, std::string_view, std::string_view)>;

const std::map<std::string, Setter, std::less<>>& setters() {
  static const std::map<std::string, Setter, std::less<>> table = {
      {"problem", [](auto& c, auto, auto v) { c.problem = std::string(v); }},
      {"algo", [](auto& c, auto, auto v) { c.algo = std::string(v); }},
      {"algos", [](auto& c, auto, auto v) { c.algos = to_list(v); }},
      {"n", [](auto& c, auto k, auto v) { c.n = to_u64(k, v); }},
      {"d", [](auto& c, auto k, auto v) { c.d = to_u64(k, v); }},
      {"k", [](auto& c, auto k, auto v) { c.k = to_u64(k, v); }},
      {"p", [](auto& c, auto k, auto v) { c.p = to_u64(k, v); }},
      {"T", [](auto& c, auto k, auto v) { c.T = to_u64(k, v); }},
      {"eta",
       [](auto& c, auto k, auto v) {
         if (v == "auto") {
           c.eta_auto = true;
           c.eta.reset();
         } else {
           c.eta_auto = false;
           c.eta = to_real(k, v);
         }
       }},
      {"eta-g", [](auto& c, auto k, auto v) { c.eta_g = to_real(k, v); }},
      {"tau", [](auto& c, auto k, auto v) { c.tau = to_int(k, v); }},
      {"rounds", [](auto& c, auto k, auto v) { c.rounds = to_int(k, v); }},
      {"batch", [](auto& c, auto k, auto v) { c.batch = to_u64(k, v); }},
      {"mu", [](auto& c, auto k, auto v) { c.mu = to_real(k, v); }},
      {"seed", [](auto& c, auto k, auto v) { c.seed = to_u64(k, v); }},
      {"theory-steps", [](auto& c, auto k, auto v) { c.theory_steps = to_bool(k, v); }},
      {"mode", [](auto& c, auto, auto v) { c.mode = std::string(v); }},
      {"addr", [](auto& c, auto, auto v) { c.addr = std::string(v); }},
      {"mnist-dir", [](auto& c, auto, auto v) { c.mnist_dir = std::string(v); }},
      {"data-file", [](auto& c, auto, auto v) { c.data_file = std::string(v); }},
      {"out", [](auto& c, auto, auto v) { c.out = std::string(v); }},
      {"svg", [](auto& c, auto, auto v) { c.svg = std::string(v); }},
      {"no-timing", [](auto& c, auto k, auto v) { c.no_timing = to_bool(k, v); }},
  };
  return table;
}

}  // namespace

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys = {
      "problem", "algo", "algos", "n", "d", "k", "p", "T", "eta", "eta-g", "tau", "rounds", "batch", "mu",
      "seed", "theory-steps", "mode", "addr", "mnist-dir", "data-file", "out", "svg", "no-timing"};
  return keys;
}

void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value) {
  const auto& table = setters();
  const auto it = table.find(key);
  if (it == table.end()) throw ConfigError("unknown config key '" + std::string(key) + "'");
  it->second(config, key, value);
}

void apply_config_text(ExperimentConfig& config, std::string_view text) {
  std::size_t line_no = 0;
  std::size_t begin = 0;
  while (begin < text.size()) {
    auto end = text.find('\n', begin);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(begin, end - begin);
    begin = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    if (trim(line).empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      apply_setting(config, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
}

ExperimentConfig resolve(const ExperimentConfig& in) {
  ExperimentConfig c = in;
  auto fill = [](auto& field, auto value) {
    if (!field) field = value;
  };
  if (c.problem == "kpca-synth") {
    fill(c.n, 30);
    fill(c.d, 20);
    fill(c.k, 5);
    fill(c.p, 15);
    fill(c.tau, 5);
    if (!c.eta && !c.eta_auto) c.eta = 4e-3;
  } else if (c.problem == "kpca-mnist") {
    fill(c.n, 10);
    fill(c.k, 2);
    fill(c.tau, 10);
    if (!c.eta) c.eta_auto = true;
  } else if (c.problem == "lrmc") {
    fill(c.n, 10);
    fill(c.d, 100);
    fill(c.k, 2);
    fill(c.T, 1000);
    fill(c.tau, 10);
    if (!c.eta && !c.eta_auto) c.eta = 1e-4;
  }
  fill(c.eta_g, 1.0);
  fill(c.rounds, 100);
  if (c.algos.empty()) c.algos = {"fedman", "rfedavg", "rfedprox", "rfedsvrg"};
  return c;
}

void validate(const ExperimentConfig& c) {
  if (c.problem != "kpca-synth" && c.problem != "kpca-mnist" && c.problem != "lrmc") {
    throw ConfigError("unknown problem '" + c.problem + "' (expected kpca-synth, kpca-mnist or lrmc)");
  }
  parse_algorithm(c.algo);
  for (const auto& a : c.algos) parse_algorithm(a);
  if (c.mode != "inproc" && c.mode != "tcp") throw ConfigError("unknown mode '" + c.mode + "' (expected inproc or tcp)");
  auto positive = [](const std::optional<std::size_t>& v, const char* name) {
    if (v && *v == 0) throw ConfigError(std::string(name) + " must be positive");
  };
  positive(c.n, "n");
  positive(c.d, "d");
  positive(c.k, "k");
  positive(c.p, "p");
  positive(c.T, "T");
  if (c.k && c.d && *c.k > *c.d) {
    throw ConfigError("k (" + std::to_string(*c.k) + ") must not exceed d (" + std::to_string(*c.d) + ")");
  }
  if (c.problem == "lrmc" && c.T && c.n && *c.n > *c.T) throw ConfigError("n must not exceed T");
  if (c.tau && *c.tau < 1) throw ConfigError("tau must be >= 1");
  if (c.rounds && *c.rounds < 0) throw ConfigError("rounds must be >= 0");
  if (c.eta && !(*c.eta > 0.0)) throw ConfigError("eta must be positive");
  if (c.eta_g && !(*c.eta_g > 0.0)) throw ConfigError("eta-g must be positive");
  if (c.mu < 0.0) throw ConfigError("mu must be >= 0");
  if (c.eta_auto && c.problem == "lrmc") throw ConfigError("eta = auto (1/beta) is only defined for kPCA problems");
  if (c.theory_steps && c.problem == "lrmc") throw ConfigError("theory-steps is only available for kPCA problems");
}

std::string dump_config(const ExperimentConfig& c) {
  std::string out = "# fedman experiment config\n";
  auto line = [&](const char* key, const std::string& value) {
    out += key;
    out += " = ";
    out += value;
    out += '\n';
  };
  auto opt_size = [&](const char* key, const std::optional<std::size_t>& v) {
    if (v) line(key, std::to_string(*v));
  };
  line("problem", c.problem);
  line("algo", c.algo);
  std::string algos;
  for (const auto& a : c.algos) algos += (algos.empty() ? "" : ",") + a;
  if (!algos.empty()) line("algos", algos);
  opt_size("n", c.n);
  opt_size("d", c.d);
  opt_size("k", c.k);
  opt_size("p", c.p);
  opt_size("T", c.T);
  if (c.eta_auto) {
    line("eta", "auto");
  } else if (c.eta) {
    line("eta", real_text(*c.eta));
  }
  if (c.eta_g) line("eta-g", real_text(*c.eta_g));
  if (c.tau) line("tau", std::to_string(*c.tau));
  if (c.rounds) line("rounds", std::to_string(*c.rounds));
  line("batch", std::to_string(c.batch));
  line("mu", real_text(c.mu));
  line("seed", std::to_string(c.seed));
  line("theory-steps", c.theory_steps ? "true" : "false");
  line("mode", c.mode);
  line("addr", c.addr);
  if (!c.mnist_dir.empty()) line("mnist-dir", c.mnist_dir);
  if (!c.data_file.empty()) line("data-file", c.data_file);
  line("out", c.out);
  if (!c.svg.empty()) line("svg", c.svg);
  line("no-timing", c.no_timing ? "true" : "false");
  return out;
}

std::string mnist_directory(const ExperimentConfig& c) {
  if (!c.mnist_dir.empty()) return c.mnist_dir;
  if (const char* env = std::getenv("FEDMAN_MNIST_DIR"); env && *env) return env;
  throw ConfigError("kpca-mnist needs --mnist-dir or FEDMAN_MNIST_DIR");
}

std::shared_ptr<Problem> build_problem(const ExperimentConfig& raw) {
  const ExperimentConfig c = resolve(raw);
  validate(c);
  std::shared_ptr<Problem> problem;
  if (!c.data_file.empty()) {
    problem = std::make_shared<Problem>(read_dataset(c.data_file));
    const bool want_kpca = c.problem != "lrmc";
    if ((problem->kind() == ProblemKind::Kpca) != want_kpca) {
      throw ConfigError("data file " + c.data_file + " does not hold a " + c.problem + " problem");
    }
  } else if (c.problem == "kpca-synth") {
    problem = std::make_shared<Problem>(gen_kpca_synthetic(*c.n, *c.d, *c.p, *c.k, c.seed));
  } else if (c.problem == "kpca-mnist") {
    problem = std::make_shared<Problem>(load_mnist_kpca(mnist_directory(c), *c.n, *c.k));
  } else {
    problem = std::make_shared<Problem>(gen_lrmc(*c.d, *c.T, *c.k, *c.n, c.seed));
  }
  if (problem->kind() == ProblemKind::Kpca) problem->set_f_star(kpca_fstar(*problem));
  return problem;
}

HyperParams build_hyperparams(const ExperimentConfig& raw, const Problem& problem) {
  const ExperimentConfig c = resolve(raw);
  validate(c);
  HyperParams hp;
  hp.eta_g = *c.eta_g;
  hp.tau = *c.tau;
  hp.rounds = *c.rounds;
  hp.batch = c.batch;
  hp.mu = c.mu;
  if (c.theory_steps) {
    if (problem.kind() != ProblemKind::Kpca) throw ConfigError("theory-steps is only available for kPCA problems");
    const StepSizeSuggestion s =
        theorem_step_sizes(kpca_step_constants(problem, c.seed), problem.num_clients(), hp.tau);
    hp.eta = s.eta;
    hp.eta_g = s.eta_g;
  } else if (c.eta_auto) {
    if (problem.kind() != ProblemKind::Kpca) throw ConfigError("eta = auto (1/beta) is only defined for kPCA problems");
    hp.eta = 1.0 / kpca_beta(problem);
  } else {
    hp.eta = *c.eta;
  }
  hp.validate(problem);
  return hp;
}

}  // namespace fedman
