#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "pisaa/schedules.hpp"

namespace pisaa {

/// Working bias-weight state of the self-adjusting mechanism. Entries for
/// subregions never yet proposed stay at the reset vector and are excluded
/// from the truncation norm. The non-empty set only grows over a run.
struct ThetaState {
  std::vector<double> theta;
  std::vector<std::uint8_t> nonempty;
  std::vector<double> theta_reset;
  long trunc_count = 0;

  static ThetaState zeros(std::size_t m);

  std::size_t size() const { return theta.size(); }
  void mark_nonempty(std::size_t j) { nonempty[j] = 1; }
  bool is_nonempty(std::size_t j) const { return nonempty[j] != 0; }
  std::size_t nonempty_count() const;

  /// Euclidean norm of theta restricted to the non-empty set.
  double restricted_norm() const;
};

/// Unnormalised log-density of the biased Boltzmann target for one
/// individual: -energy/tau - theta[j]. The population log-density is the
/// sum of this over individuals.
inline double biased_log_density(double energy, std::size_t j,
                                 std::span<const double> theta, double tau) {
  return -energy / tau - theta[j];
}

/// Population visit proportions: entry j is the fraction of the kappa
/// indices equal to j.
std::vector<double> visit_proportion(std::span<const std::size_t> indices, std::size_t m);

/// Self-adjusting update theta_j += gamma * (p_j - pi_j), applied only on
/// the non-empty set. The given indices are marked non-empty first, so a
/// standalone call reproduces the single-chain indicator update at kappa=1.
void weight_update(ThetaState& state, std::span<const std::size_t> indices,
                   const DesiredProbability& pi, double gamma);

/// Varying-bound truncation: keep theta if its restricted norm is within
/// the current bound, otherwise reset to theta_reset and escalate.
/// Returns true when a reset fired.
bool truncate_theta(ThetaState& state, const TruncationBounds& bounds);

enum class ThetaNormalization { kUnitSum, kPiWeighted };

/// End-of-run additive gauge fix. Unit-sum mode shifts so that
/// sum_j exp(theta_j) = 1; pi-weighted mode so that
/// sum_j pi_j exp(theta_j) = 1. `pi` may be null for unit-sum.
void normalize_theta(std::vector<double>& theta, ThetaNormalization mode,
                     const std::vector<double>* pi = nullptr);

/// log(sum_i exp(v_i)) computed stably.
double log_sum_exp(std::span<const double> v);

}  // namespace pisaa
