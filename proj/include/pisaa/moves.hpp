#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "pisaa/problems.hpp"
#include "pisaa/rng.hpp"
#include "pisaa/schedules.hpp"
#include "pisaa/target.hpp"

namespace pisaa {

enum class OpKind : int {
  kMetropolis = 0,
  kHitAndRun,
  kKPointMutation,
  kGibbs,
  kKPointCrossover,
  kSnookerCrossover,
  kLinearCrossover,
};
inline constexpr std::size_t kOpCount = 7;

const char* op_name(OpKind op);
bool op_is_mutation(OpKind op);
bool op_has_scale(OpKind op);
bool op_needs_continuous(OpKind op);

/// Adaptive proposal scale; step() is the sigma^2 multiplier in front of the
/// proposal deviates. Adaptation only happens during the pilot phase.
struct ProposalScale {
  double log_var = 0.0;
  double target_rate = 0.234;
  bool frozen = false;

  double step() const { return std::exp(log_var); }
};

/// One pilot-batch adaptation step: log sigma^2 += observed - target.
/// A frozen scale is returned unchanged.
ProposalScale adapt_scale(ProposalScale scale, double observed_accept);

/// Softmax temperatures of the energy-weighted partner selection.
struct SelectionTemps {
  double kc = 0.1;
  double sc = 0.1;
  double lc = 0.1;
};

/// Frozen snapshot of the biased target used throughout one sampling update.
struct TargetView {
  const Partition* partition = nullptr;
  std::span<const double> theta;
  double tau = 1.0;

  std::size_t subregion(double energy) const { return partition->subregion(energy); }
  double log_density(double energy, std::size_t j) const {
    return biased_log_density(energy, j, theta, tau);
  }
  double log_density(double energy) const { return log_density(energy, subregion(energy)); }
};

/// State of one chain: current point, cached energy and subregion, and the
/// integer count cache for binary problems.
struct ChainState {
  std::vector<double> x;
  double energy = 0.0;
  std::size_t index = 0;
  std::array<long long, 2> counts{0, 0};
};

/// Running minimum over every evaluated feasible proposal, accepted or not.
struct BestTracker {
  double energy = std::numeric_limits<double>::infinity();
  std::vector<double> point;

  void offer(std::span<const double> x, double e) {
    if (e < energy) {
      energy = e;
      point.assign(x.begin(), x.end());
    }
  }
  void merge(const BestTracker& other) {
    if (other.energy < energy) {
      energy = other.energy;
      point = other.point;
    }
  }
};

/// Result of one operator application. Evaluated proposals are reported so
/// the engine can grow the non-empty set and audit the evaluation budget.
struct MoveOutcome {
  bool accepted = false;
  std::uint32_t evals = 0;
  std::size_t n_proposals = 0;
  std::array<std::size_t, 2> proposed_index{0, 0};
  std::array<double, 2> proposed_energy{0.0, 0.0};

  void add_proposal(std::size_t j, double e) {
    proposed_index[n_proposals] = j;
    proposed_energy[n_proposals] = e;
    ++n_proposals;
  }
};

/// Uniform direction on the unit sphere (normalised Gaussian vector);
/// reduces to +-1 in one dimension.
std::vector<double> unit_sphere_direction(std::size_t d, Rng& rng);

/// k-point segment exchange: sorted points are boundary labels in
/// {1, ..., d-1}; coordinates between each odd point and the following even
/// point are swapped, a trailing odd point swapping through the end.
/// Applying the same points twice restores both vectors.
void swap_segments(std::span<double> a, std::span<double> b,
                   std::span<const std::size_t> sorted_points);

// ---- mutation operations (single chain; theta frozen) ----
//
// Every Metropolis-type operator draws the proposal deviates first, rejects
// out-of-support proposals outright (no acceptance draw), and otherwise
// consumes exactly one uniform for the accept decision. Rejected moves
// leave the chain state untouched.

MoveOutcome metropolis_mutation(const Problem& problem, ChainState& chain,
                                const ProposalScale& scale, double scale_mult,
                                const TargetView& target, Rng& rng, BestTracker& best);

MoveOutcome hit_and_run_mutation(const Problem& problem, ChainState& chain,
                                 const ProposalScale& scale, double scale_mult,
                                 const TargetView& target, Rng& rng, BestTracker& best);

MoveOutcome kpoint_mutation(const Problem& problem, ChainState& chain, std::size_t k,
                            const ProposalScale& scale, double scale_mult,
                            const TargetView& target, Rng& rng, BestTracker& best);

/// Conditional probability that the given site is 1 under the biased target;
/// shared by the Gibbs operator and the exact transition-matrix tests.
double gibbs_conditional_prob(const BinaryProblem& problem, const ChainState& chain,
                              std::size_t site, const TargetView& target);

MoveOutcome gibbs_site_mutation(const BinaryProblem& problem, ChainState& chain,
                                const TargetView& target, Rng& rng, BestTracker& best);

// ---- crossover operations (whole population; serial phase) ----

/// Energy-weighted pair choice of the k-point crossover, with the
/// symmetrised selection probabilities entering the acceptance ratio.
struct PairChoice {
  std::size_t i = 0;
  std::size_t j = 0;
  double forward_prob = 0.0;  // w1(i) * w2(j|i)
  double reverse_prob = 0.0;  // w1(j) * w2(i|j)
};

/// Draw i from the energy softmax over all chains, then j != i from the
/// renormalised weights. `literal_secondary` reproduces the conditional
/// selection formula exactly as printed (constant in the candidate, hence
/// a uniform draw) instead of the standard softmax reading.
PairChoice select_pair(std::span<const double> energies, double temp, Rng& rng,
                       bool literal_secondary = false);

/// Symmetrised selection probability w1(i)w2(j|i) + w1(j)w2(i|j) for a given
/// energy vector; used to re-evaluate the numerator at the proposed population.
double pair_selection_prob(std::span<const double> energies, std::size_t i, std::size_t j,
                           double temp, bool literal_secondary = false);

/// Partner draw of the snooker/linear crossovers: j != i with probability
/// proportional to exp(-U_j / temp).
std::size_t select_partner(std::span<const double> energies, std::size_t i, double temp,
                           Rng& rng, bool literal_secondary = false);

MoveOutcome kpoint_crossover(const Problem& problem, std::span<ChainState> population,
                             std::size_t k, const SelectionTemps& temps,
                             const TargetView& target, Rng& rng, BestTracker& best,
                             bool literal_secondary = false);

MoveOutcome snooker_crossover(const Problem& problem, std::span<ChainState> population,
                              const ProposalScale& scale, const SelectionTemps& temps,
                              const TargetView& target, Rng& rng, BestTracker& best,
                              bool literal_secondary = false);

MoveOutcome linear_crossover(const Problem& problem, std::span<ChainState> population,
                             const SelectionTemps& temps, const TargetView& target,
                             Rng& rng, BestTracker& best, bool literal_secondary = false);

}  // namespace pisaa
