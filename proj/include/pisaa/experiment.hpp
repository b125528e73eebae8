#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pisaa/config.hpp"
#include "pisaa/diagnostics.hpp"
#include "pisaa/engine.hpp"

namespace pisaa {

/// Outcome of one replicate cell.
struct CellResult {
  std::size_t kappa = 1;
  double beta = 0.55;
  std::size_t replicate = 0;
  std::uint64_t seed = 0;
  std::string trace_file;
  bool failed = false;
  std::string error;
  double best_energy = 0.0;
  double oracle_error = 0.0;  // ||theta - w*|| on the oracle support; NaN if no oracle
  Trace trace;                // cleared after files are written
};

struct ExperimentOutcome {
  int exit_code = 0;  // 0 ok, 2 everything failed, 3 some cell fully failed
  std::vector<CellResult> cells;
  std::vector<std::string> files;
};

/// Run the full sweep: per-run trace CSVs, replicate summaries, diagnostics
/// (MSE always with an oracle, RE under fixed-budget sweeps), and a manifest
/// that reproduces every output byte for byte. Workers run replicates
/// concurrently; one collector writes all files.
ExperimentOutcome run_experiment(const ExperimentSpec& spec);

/// Rebuild summary tables from a directory holding manifest.json and traces.
int summarize_directory(const std::string& dir);

/// Compute and store the oracle weights for a config (CLI verb `oracle`).
int write_oracle_file(const ExperimentSpec& spec);

void write_trace_csv(const std::string& path, const Trace& trace);

/// Deterministic float formatting used in every CSV (%.17g round-trip).
std::string format_double(double v);

}  // namespace pisaa
