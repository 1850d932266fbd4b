#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fedman/fedman.hpp"
#include "fedman/problems.hpp"
#include "fedman/runtime.hpp"

namespace fedman {

/// Everything needed to reproduce a run.
///
/// Unset dimensions and step parameters take the defaults of the selected
/// problem (see resolve()). Keys in config files use the CLI flag names
/// without the leading dashes, e.g. `eta-g = 1`.
struct ExperimentConfig {
  std::string problem = "kpca-synth";  // kpca-synth | kpca-mnist | lrmc
  std::string algo = "fedman";
  std::vector<std::string> algos;  // compare list

  std::optional<std::size_t> n, d, k, p, T;
  std::optional<double> eta;  // unset + eta_auto -> 1/beta
  bool eta_auto = false;
  std::optional<double> eta_g;
  std::optional<int> tau;
  std::optional<int> rounds;
  std::size_t batch = 0;
  double mu = 0.01;
  std::uint64_t seed = 1;
  bool theory_steps = false;

  std::string mode = "inproc";  // inproc | tcp
  std::string addr = "127.0.0.1:0";
  std::string mnist_dir;
  std::string data_file;
  std::string out = "metrics.csv";
  std::string svg;
  bool no_timing = false;
};

/// Keys accepted by apply_setting(), in dump order.
const std::vector<std::string>& config_keys();

/// Sets one field from its text form. Throws ConfigError on an unknown key or
/// a malformed value.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

/// Applies `key = value` lines; `#` starts a comment, blank lines are ignored.
void apply_config_text(ExperimentConfig& config, std::string_view text);

/// Fills every unset field with the defaults of the selected problem:
///   kpca-synth: n=30 d=20 k=5 p=15 eta=4e-3 tau=5
///   kpca-mnist: n=10 k=2 eta=auto tau=10
///   lrmc:       n=10 d=100 k=2 T=1000 tau=10 eta=1e-4
/// and rounds=100, eta-g=1.
ExperimentConfig resolve(const ExperimentConfig& config);

/// Cross-field checks that need no data (problem/algo/mode names, positive
/// sizes, k <= d, tau >= 1, eta-g > 0). Throws ConfigError.
void validate(const ExperimentConfig& config);

/// Full `key = value` text of a resolved config; apply_config_text() on it
/// reproduces the same run.
std::string dump_config(const ExperimentConfig& config);

/// MNIST directory from the config, falling back to FEDMAN_MNIST_DIR.
std::string mnist_directory(const ExperimentConfig& config);

/// Generates or loads the problem. kPCA problems get their f* attached.
std::shared_ptr<Problem> build_problem(const ExperimentConfig& config);

/// Hyperparameters for `algo` on `problem`: eta=auto becomes 1/beta and
/// theory-steps replaces eta and eta-g by theorem_step_sizes() (kPCA
/// only). Validates batch against the client sample counts.
HyperParams build_hyperparams(const ExperimentConfig& config, const Problem& problem);

}  // namespace fedman
