#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pisaa/engine.hpp"
#include "pisaa/problems.hpp"
#include "pisaa/schedules.hpp"
#include "pisaa/target.hpp"

namespace pisaa {

/// True normalized bias weights of a (problem, partition, pi, tau) tuple,
/// computed by deterministic quadrature or exact enumeration. Subregions
/// with zero mass are flagged empty and carry no weight.
struct OracleWeights {
  std::vector<double> w;                // gauge-fixed weights; oracle-empty entries 0
  std::vector<std::uint8_t> nonempty;   // per-subregion support flags
  double tau = 1.0;
  double pi_extra = 0.0;                // redistributed mass of empty subregions
  double max_refinement_delta = 0.0;    // entry change at the final doubling
  std::size_t grid_points = 0;          // per-axis resolution that passed the gate

  std::size_t size() const { return w.size(); }
};

struct OracleOptions {
  std::size_t initial_grid = 64;        // per-axis trapezoid resolution
  std::size_t max_grid = 1 << 14;
  double convergence_gate = 1e-4;       // max per-entry change on doubling
  ThetaNormalization normalization = ThetaNormalization::kUnitSum;
};

/// Limiting bias weights
/// w_j = log integral_{E_j} exp(-U(x)/tau) dx - log(pi_j + pi_e), gauge-fixed
/// like the run under test. Continuous problems must have d <= 2 (tensor
/// trapezoid over the box, refined until the gate passes); binary problems
/// must have at most 2^20 states (exact enumeration). Anything else throws.
OracleWeights oracle_weights(const Problem& problem, const Partition& partition,
                             const DesiredProbability& pi, double tau,
                             const OracleOptions& options = {});

/// Euclidean distance between two weight vectors on the oracle support after
/// applying the same gauge fix to both. theta is a full-length (m) vector;
/// pi is only needed for the pi-weighted gauge.
double theta_mse(std::span<const double> theta, const OracleWeights& oracle,
                 ThetaNormalization mode = ThetaNormalization::kUnitSum,
                 const std::vector<double>* pi = nullptr);

/// Plain Euclidean norm of the difference (no restriction, no gauge fix).
double l2_distance(std::span<const double> a, std::span<const double> b);

struct EfficiencyOptions {
  bool squared = true;         // mean-squared ratio, the scale of the kappa^(beta-1) law
  bool mean_of_ratios = false; // pair replicates instead of the ratio of means
};

/// Relative efficiency of the kappa-chain estimator at matched budget:
/// errors are per-replicate distances to the oracle. Throws on a zero
/// denominator.
double relative_efficiency(std::span<const double> errors_kappa,
                           std::span<const double> errors_single,
                           const EfficiencyOptions& options = {});

/// Least-squares slope of y against x.
double fit_slope(std::span<const double> x, std::span<const double> y);

/// Pointwise best-energy statistics across replicate traces sharing one
/// record schedule.
struct ReplicateSummary {
  std::vector<std::uint64_t> t;
  std::vector<double> mean;
  std::vector<double> se;
  std::vector<double> min;
  std::vector<double> max;
  std::vector<double> terminal_best;  // per replicate
};

ReplicateSummary summarize_replicates(const std::vector<Trace>& traces);

}  // namespace pisaa
