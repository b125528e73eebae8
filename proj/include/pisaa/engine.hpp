#pragma once

#include <array>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pisaa/moves.hpp"
#include "pisaa/problems.hpp"
#include "pisaa/rng.hpp"
#include "pisaa/schedules.hpp"
#include "pisaa/target.hpp"

namespace pisaa {

enum class RunMode { kPisaa, kPsaa, kSa };

const char* mode_name(RunMode mode);

// Stream roles of the counter-based RNG: chain i draws from
// (seed, kStreamRoleChain, base + i); initialisation and the crossover
// phase own dedicated streams.
inline constexpr std::uint64_t kStreamRoleInit = 1;
inline constexpr std::uint64_t kStreamRoleChain = 2;
inline constexpr std::uint64_t kStreamRoleCross = 3;

/// Operator mixture and proposal tuning for the MCMC sweep. One sweep gives
/// every chain one mutation attempt (operator drawn per chain from the
/// mutation rates) followed by a number of crossover attempts drawn from
/// the crossover rates; by default that number is kappa * Wc / Wm, which
/// makes all operators equally frequent when the rates are equal.
struct OperatorMix {
  std::array<double, kOpCount> rates{};
  std::size_t k_mutation = 1;
  std::size_t k_crossover = 1;
  SelectionTemps selection_temps;
  double initial_log_scale = 0.0;
  double pilot_fraction = 0.05;
  std::uint64_t pilot_cap = 10000;
  std::uint64_t pilot_batch = 100;
  bool subregion_scaling = false;
  bool literal_pair_selection = false;
  long crossover_attempts = -1;  // -1: derive from rates

  double& rate(OpKind op) { return rates[static_cast<std::size_t>(op)]; }
  double rate(OpKind op) const { return rates[static_cast<std::size_t>(op)]; }
};

struct WarmStart {
  bool enabled = false;
  double tau0 = 100.0;
  std::uint64_t sweeps = 100;
};

struct RunConfig {
  std::shared_ptr<const Problem> problem;
  RunMode mode = RunMode::kPisaa;
  std::size_t kappa = 1;
  std::uint64_t iterations = 1000;
  std::uint64_t seed = 1;

  Partition partition = Partition(std::vector<double>{});
  double lambda = 0.1;
  GainSchedule gain;
  TemperatureLadder temperature;
  TruncationBounds truncation;
  OperatorMix moves;
  WarmStart warm_start;
  ThetaNormalization normalization = ThetaNormalization::kUnitSum;

  std::uint64_t trace_stride = 100;
  std::uint64_t theta_stride = 10;  // every k-th trace record carries theta/visit
  std::uint64_t checkpoint_stride = 0;  // 0: no checkpoints
  unsigned threads = 1;
};

struct TraceRecord {
  std::uint64_t t = 0;
  double tau = 0.0;
  double gamma = 0.0;
  double best_energy = 0.0;
  std::vector<double> accept_rate;  // per configured op; NaN when no attempts
  std::vector<double> visit;        // empty unless a theta row
  std::vector<double> theta;        // empty unless a theta row
};

struct Trace {
  std::string problem;
  RunMode mode = RunMode::kPisaa;
  std::size_t kappa = 1;
  std::size_t m = 1;
  std::uint64_t iterations = 0;
  std::uint64_t seed = 0;
  double beta = 0.0;

  std::vector<OpKind> ops;  // configured operators, enum order
  std::array<std::uint64_t, kOpCount> attempts{};
  std::array<std::uint64_t, kOpCount> accepts{};
  std::array<std::uint64_t, kOpCount> op_evals{};
  std::uint64_t init_evals = 0;
  std::uint64_t total_evals = 0;

  std::vector<TraceRecord> records;
  std::vector<double> final_theta;  // gauge-fixed at end of run
  double best_energy = 0.0;
  std::vector<double> best_point;
};

/// One run in progress: population, bias weights, schedules, and streams.
/// step() executes one full iteration (sampling update, weight update,
/// truncation). Chains own counter-based RNG streams derived from
/// (seed, role, base_stream + chain), so a PSAA run decomposes exactly into
/// kappa single-chain runs with shifted base streams.
class Sampler {
 public:
  explicit Sampler(RunConfig cfg, std::size_t base_stream = 0);

  void step();
  void run_all();

  std::uint64_t t() const { return t_; }
  const RunConfig& config() const { return cfg_; }
  const std::vector<ChainState>& population() const { return chains_; }
  const ThetaState& theta_state(std::size_t chain = 0) const;
  const BestTracker& best() const { return best_; }
  const ProposalScale& scale(OpKind op) const {
    return scales_[static_cast<std::size_t>(op)];
  }

  /// Re-evaluates every cached energy/index; throws on mismatch.
  void validate_cache() const;

  /// Gauge-fixes theta, appends the final record, and returns the trace.
  Trace finish();

  void save_checkpoint(std::ostream& os) const;
  static Sampler load_checkpoint(std::istream& is, RunConfig cfg, std::size_t base_stream = 0);

 private:
  struct MutationSlot {
    OpKind op = OpKind::kMetropolis;
    MoveOutcome outcome;
    BestTracker local_best;
  };

  void init_population();
  void warm_start_prelude();
  ThetaState& theta_for_chain(std::size_t chain);
  const Partition& partition() const { return partition_; }
  TargetView view_for_chain(std::size_t chain, double tau) const;
  void mutate_chain(std::size_t chain, double tau, MutationSlot& slot);
  void crossover_phase(double tau);
  void register_outcome(OpKind op, const MoveOutcome& outcome, std::size_t theta_slot);
  void adapt_if_pilot();
  void maybe_record(bool force);
  std::vector<std::size_t> current_indices() const;

  RunConfig cfg_;
  std::size_t base_stream_ = 0;
  Partition partition_ = Partition(std::vector<double>{});
  DesiredProbability pi_;
  std::vector<ChainState> chains_;
  std::vector<ThetaState> thetas_;  // 1 for PISAA/SA, kappa for PSAA
  std::vector<Rng> chain_rngs_;
  Rng cross_rng_;
  BestTracker best_;

  std::array<ProposalScale, kOpCount> scales_{};
  std::vector<OpKind> mutation_ops_;
  std::vector<double> mutation_weights_;
  std::vector<OpKind> crossover_ops_;
  std::vector<double> crossover_weights_;
  std::uint64_t crossover_attempts_ = 0;
  std::uint64_t pilot_end_ = 0;

  std::uint64_t t_ = 0;
  Trace trace_;
  std::array<std::uint64_t, kOpCount> window_attempts_{};
  std::array<std::uint64_t, kOpCount> window_accepts_{};
  std::array<std::uint64_t, kOpCount> batch_attempts_{};
  std::array<std::uint64_t, kOpCount> batch_accepts_{};
  std::uint64_t records_since_theta_ = 0;
};

/// Run a config to completion (all modes). When `checkpoint_path` is given
/// and the config has a checkpoint stride, a resumable snapshot is
/// rewritten there every stride and at the end of the run.
Trace run(const RunConfig& cfg);
Trace run(const RunConfig& cfg, const std::string& checkpoint_path);

/// Single-chain run whose streams start at the given base index; chain i of
/// a PSAA run is reproduced exactly by base_stream = i.
Trace run_single_chain(RunConfig cfg, std::size_t base_stream);

}  // namespace pisaa
