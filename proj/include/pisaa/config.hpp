#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "pisaa/diagnostics.hpp"
#include "pisaa/engine.hpp"

namespace pisaa {

inline constexpr const char* kVersion = "0.1.0";

/// Aggregated validation failure: one entry per violation.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(std::vector<std::string> issues);
  const std::vector<std::string>& issues() const { return issues_; }

 private:
  static std::string join(const std::vector<std::string>& issues);
  std::vector<std::string> issues_;
};

/// Replicate sweep around a run-config template.
struct ExperimentSpec {
  RunConfig base;
  std::string normalized;  // full config with defaults filled, canonical dump
  std::string problem_id;
  std::uint64_t master_seed = 1;

  std::size_t replicates = 1;
  std::vector<std::size_t> kappa_sweep;
  std::vector<double> beta_sweep;
  std::string output_dir = "out";
  unsigned parallel = 1;
  bool fixed_budget = false;  // run kappa for floor(n / kappa) iterations

  bool oracle_enabled = false;
  double oracle_tau = 1.0;
  OracleOptions oracle_options;
};

/// Parse + validate a single-run config; throws ConfigError with every
/// violation collected.
RunConfig parse_run_config(const std::string& json_text);

/// Parse + validate an experiment spec (a run config plus an optional
/// "experiment" section).
ExperimentSpec parse_experiment_spec(const std::string& json_text);
ExperimentSpec load_experiment_file(const std::string& path);

/// Per-cell seed: a 64-bit hash of (master seed, problem id, kappa, beta,
/// replicate), injective across any sane sweep grid.
std::uint64_t derive_seed(std::uint64_t master, const std::string& problem_id,
                          std::size_t kappa, double beta, std::size_t replicate);

/// FNV-1a over the canonical config dump; recorded in manifests.
std::uint64_t config_hash(const std::string& text);

}  // namespace pisaa
