#include "pisaa/engine.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <stdexcept>
#include <thread>

namespace pisaa {

namespace {

constexpr std::uint32_t kCheckpointMagic = 0x50495341;  // "PISA"
constexpr std::uint32_t kCheckpointVersion = 1;

void put_u64(std::ostream& os, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
}

std::uint64_t get_u64(std::istream& is) {
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i)
    v |= static_cast<std::uint64_t>(static_cast<unsigned char>(is.get())) << (8 * i);
  return v;
}

void put_f64(std::ostream& os, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, sizeof(bits));
  put_u64(os, bits);
}

double get_f64(std::istream& is) {
  std::uint64_t bits = get_u64(is);
  double d;
  std::memcpy(&d, &bits, sizeof(d));
  return d;
}

void put_vec(std::ostream& os, const std::vector<double>& v) {
  put_u64(os, v.size());
  for (double d : v) put_f64(os, d);
}

std::vector<double> get_vec(std::istream& is) {
  std::vector<double> v(get_u64(is));
  for (double& d : v) d = get_f64(is);
  return v;
}

}  // namespace

const char* mode_name(RunMode mode) {
  switch (mode) {
    case RunMode::kPisaa: return "pisaa";
    case RunMode::kPsaa: return "psaa";
    case RunMode::kSa: return "sa";
  }
  return "?";
}

Sampler::Sampler(RunConfig cfg, std::size_t base_stream)
    : cfg_(std::move(cfg)), base_stream_(base_stream) {
  if (!cfg_.problem) throw std::invalid_argument("run config: problem not set");
  if (cfg_.kappa < 1) throw std::invalid_argument("run config: kappa must be >= 1");
  if (cfg_.trace_stride < 1 || cfg_.theta_stride < 1)
    throw std::invalid_argument("run config: strides must be >= 1");
  if (cfg_.moves.pilot_batch < 1)
    throw std::invalid_argument("run config: pilot batch must be >= 1");

  const Problem& problem = *cfg_.problem;
  const std::size_t d = problem.dimension();
  const bool discrete = problem.discrete();
  const auto* binary = dynamic_cast<const BinaryProblem*>(&problem);

  if (cfg_.mode == RunMode::kSa) {
    partition_ = Partition(std::vector<double>{});
    pi_.pi = {1.0};
    pi_.lambda = 0.0;
  } else {
    if (cfg_.partition.size() < 2)
      throw std::invalid_argument("run config: annealed modes need a partition with m >= 2");
    partition_ = cfg_.partition;
    pi_ = DesiredProbability::geometric(cfg_.lambda, partition_.size());
  }

  double mutation_weight = 0.0, crossover_weight = 0.0;
  for (std::size_t k = 0; k < kOpCount; ++k) {
    OpKind op = static_cast<OpKind>(k);
    double r = cfg_.moves.rates[k];
    if (r < 0.0) throw std::invalid_argument("run config: operator rates must be >= 0");
    if (r == 0.0) continue;
    if (op_needs_continuous(op) && discrete)
      throw std::invalid_argument(std::string("run config: ") + op_name(op) +
                                  " needs a continuous sample space");
    if (op == OpKind::kGibbs && binary == nullptr)
      throw std::invalid_argument("run config: gibbs needs a binary-lattice problem");
    if (op_is_mutation(op)) {
      mutation_ops_.push_back(op);
      mutation_weights_.push_back(r);
      mutation_weight += r;
    } else {
      if (cfg_.kappa < 2)
        throw std::invalid_argument(std::string("run config: ") + op_name(op) +
                                    " needs kappa >= 2");
      if (cfg_.mode == RunMode::kPsaa)
        throw std::invalid_argument("run config: PSAA chains are independent; "
                                    "crossover rates must be 0");
      crossover_ops_.push_back(op);
      crossover_weights_.push_back(r);
      crossover_weight += r;
    }
  }
  if (mutation_ops_.empty())
    throw std::invalid_argument("run config: at least one mutation operator is required");
  if (cfg_.moves.rate(OpKind::kKPointMutation) > 0.0 &&
      (cfg_.moves.k_mutation < 1 || cfg_.moves.k_mutation >= d))
    throw std::invalid_argument("run config: k-point mutation needs 1 <= k < dimension");
  if (cfg_.moves.rate(OpKind::kKPointCrossover) > 0.0 &&
      (cfg_.moves.k_crossover < 1 || cfg_.moves.k_crossover > d - 1))
    throw std::invalid_argument("run config: k-point crossover needs 1 <= k <= dimension-1");

  if (cfg_.moves.crossover_attempts >= 0) {
    crossover_attempts_ = static_cast<std::uint64_t>(cfg_.moves.crossover_attempts);
  } else if (!crossover_ops_.empty()) {
    double per_sweep = static_cast<double>(cfg_.kappa) * crossover_weight / mutation_weight;
    crossover_attempts_ = static_cast<std::uint64_t>(std::llround(per_sweep));
    crossover_attempts_ = std::max<std::uint64_t>(crossover_attempts_, 1);
  }
  if (crossover_ops_.empty()) crossover_attempts_ = 0;

  for (auto& s : scales_) {
    s.log_var = cfg_.moves.initial_log_scale;
    s.target_rate = 0.234;
    s.frozen = false;
  }
  double pilot = cfg_.moves.pilot_fraction * static_cast<double>(cfg_.iterations);
  pilot_end_ = std::min<std::uint64_t>(static_cast<std::uint64_t>(pilot), cfg_.moves.pilot_cap);
  if (pilot_end_ == 0)
    for (auto& s : scales_) s.frozen = true;

  thetas_.assign(cfg_.mode == RunMode::kPsaa ? cfg_.kappa : 1,
                 ThetaState::zeros(partition_.size()));

  chain_rngs_.reserve(cfg_.kappa);
  for (std::size_t i = 0; i < cfg_.kappa; ++i)
    chain_rngs_.push_back(Rng::stream(cfg_.seed, kStreamRoleChain, base_stream_ + i));
  cross_rng_ = Rng::stream(cfg_.seed, kStreamRoleCross, base_stream_);

  trace_.problem = problem.name();
  trace_.mode = cfg_.mode;
  trace_.kappa = cfg_.kappa;
  trace_.m = partition_.size();
  trace_.iterations = cfg_.iterations;
  trace_.seed = cfg_.seed;
  trace_.beta = cfg_.gain.beta;
  for (OpKind op : mutation_ops_) trace_.ops.push_back(op);
  for (OpKind op : crossover_ops_) trace_.ops.push_back(op);

  init_population();
  if (cfg_.warm_start.enabled) warm_start_prelude();
  maybe_record(true);
}

void Sampler::init_population() {
  const Problem& problem = *cfg_.problem;
  const auto* binary = dynamic_cast<const BinaryProblem*>(&problem);
  chains_.resize(cfg_.kappa);
  for (std::size_t i = 0; i < cfg_.kappa; ++i) {
    Rng init_rng = Rng::stream(cfg_.seed, kStreamRoleInit, base_stream_ + i);
    ChainState& c = chains_[i];
    for (int tries = 0;; ++tries) {
      c.x = problem.sample_uniform(init_rng);
      if (binary) {
        c.counts = binary->counts(c.x);
        c.energy = binary->energy_from_counts(c.counts);
      } else {
        c.energy = problem.energy(c.x);
      }
      if (std::isfinite(c.energy)) break;
      if (tries > 1000)
        throw std::runtime_error("initialisation: no finite-energy start found");
    }
    ++trace_.init_evals;
    c.index = partition_.subregion(c.energy);
    theta_for_chain(i).mark_nonempty(c.index);
    best_.offer(c.x, c.energy);
  }
  trace_.total_evals += trace_.init_evals;
}

void Sampler::warm_start_prelude() {
  // Short random-walk pass at a flat, fixed temperature so chains spread
  // out before the anneal starts.
  const Problem& problem = *cfg_.problem;
  Partition flat{std::vector<double>{}};
  std::vector<double> zero{0.0};
  TargetView view{&flat, std::span<const double>(zero), cfg_.warm_start.tau0};
  ProposalScale scale;
  scale.log_var = cfg_.moves.initial_log_scale;
  scale.frozen = true;
  std::uint64_t evals = 0;
  for (std::uint64_t sweep = 0; sweep < cfg_.warm_start.sweeps; ++sweep) {
    for (std::size_t i = 0; i < cfg_.kappa; ++i) {
      ChainState warm{chains_[i].x, chains_[i].energy, 0, chains_[i].counts};
      MoveOutcome out =
          metropolis_mutation(problem, warm, scale, 1.0, view, chain_rngs_[i], best_);
      evals += out.evals;
      if (out.accepted) {
        chains_[i].x = std::move(warm.x);
        chains_[i].energy = warm.energy;
        chains_[i].index = partition_.subregion(warm.energy);
        theta_for_chain(i).mark_nonempty(chains_[i].index);
      }
    }
  }
  trace_.init_evals += evals;
  trace_.total_evals += evals;
}

ThetaState& Sampler::theta_for_chain(std::size_t chain) {
  return thetas_[cfg_.mode == RunMode::kPsaa ? chain : 0];
}

const ThetaState& Sampler::theta_state(std::size_t chain) const {
  return thetas_[cfg_.mode == RunMode::kPsaa ? chain : 0];
}

TargetView Sampler::view_for_chain(std::size_t chain, double tau) const {
  const ThetaState& th = thetas_[cfg_.mode == RunMode::kPsaa ? chain : 0];
  return TargetView{&partition_, std::span<const double>(th.theta), tau};
}

void Sampler::mutate_chain(std::size_t chain, double tau, MutationSlot& slot) {
  Rng& rng = chain_rngs_[chain];
  OpKind op = mutation_ops_.size() == 1
                  ? mutation_ops_[0]
                  : mutation_ops_[rng.categorical(mutation_weights_)];
  slot.op = op;
  slot.local_best.energy = best_.energy;  // offers fire only on true improvement
  slot.local_best.point.clear();

  const Problem& problem = *cfg_.problem;
  TargetView view = view_for_chain(chain, tau);
  double mult = 1.0;
  if (cfg_.moves.subregion_scaling) {
    mult = static_cast<double>(chains_[chain].index + 1) /
           static_cast<double>(partition_.size() + 1);
  }

  switch (op) {
    case OpKind::kMetropolis:
      slot.outcome = metropolis_mutation(problem, chains_[chain],
                                         scales_[static_cast<std::size_t>(op)], mult, view,
                                         rng, slot.local_best);
      break;
    case OpKind::kHitAndRun:
      slot.outcome = hit_and_run_mutation(problem, chains_[chain],
                                          scales_[static_cast<std::size_t>(op)], mult, view,
                                          rng, slot.local_best);
      break;
    case OpKind::kKPointMutation:
      slot.outcome = kpoint_mutation(problem, chains_[chain], cfg_.moves.k_mutation,
                                     scales_[static_cast<std::size_t>(op)], mult, view, rng,
                                     slot.local_best);
      break;
    case OpKind::kGibbs:
      slot.outcome = gibbs_site_mutation(*static_cast<const BinaryProblem*>(&problem),
                                         chains_[chain], view, rng, slot.local_best);
      break;
    default:
      throw std::logic_error("mutation phase drew a crossover operator");
  }
}

void Sampler::register_outcome(OpKind op, const MoveOutcome& outcome, std::size_t theta_slot) {
  std::size_t k = static_cast<std::size_t>(op);
  ++trace_.attempts[k];
  trace_.accepts[k] += outcome.accepted;
  trace_.op_evals[k] += outcome.evals;
  trace_.total_evals += outcome.evals;
  ++window_attempts_[k];
  window_accepts_[k] += outcome.accepted;
  ++batch_attempts_[k];
  batch_accepts_[k] += outcome.accepted;
  for (std::size_t p = 0; p < outcome.n_proposals; ++p)
    thetas_[theta_slot].mark_nonempty(outcome.proposed_index[p]);
}

void Sampler::step() {
  ++t_;
  const double tau = cfg_.temperature.at(t_);
  const double gamma = cfg_.gain.at(t_);
  const std::size_t kappa = cfg_.kappa;

  // Sampling update, mutation phase. Chains are independent given the
  // frozen theta snapshot, so this phase may run on several threads;
  // results are registered in chain order to keep traces identical at any
  // thread count.
  std::vector<MutationSlot> slots(kappa);
  unsigned workers = std::min<unsigned>(cfg_.threads, static_cast<unsigned>(kappa));
  if (workers <= 1) {
    for (std::size_t i = 0; i < kappa; ++i) mutate_chain(i, tau, slots[i]);
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < kappa; i += workers) mutate_chain(i, tau, slots[i]);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < kappa; ++i) {
    std::size_t slot_idx = cfg_.mode == RunMode::kPsaa ? i : 0;
    register_outcome(slots[i].op, slots[i].outcome, slot_idx);
    best_.merge(slots[i].local_best);
  }

  // Sampling update, crossover phase (serial; operators touch several chains).
  crossover_phase(tau);

  // Weight update and truncation.
  if (cfg_.mode == RunMode::kPisaa) {
    std::vector<std::size_t> indices = current_indices();
    weight_update(thetas_[0], indices, pi_, gamma);
    truncate_theta(thetas_[0], cfg_.truncation);
  } else if (cfg_.mode == RunMode::kPsaa) {
    for (std::size_t i = 0; i < kappa; ++i) {
      std::size_t idx = chains_[i].index;
      weight_update(thetas_[i], std::span<const std::size_t>(&idx, 1), pi_, gamma);
      truncate_theta(thetas_[i], cfg_.truncation);
    }
  }

  adapt_if_pilot();
  maybe_record(false);
}

void Sampler::crossover_phase(double tau) {
  if (crossover_attempts_ == 0) return;
  TargetView view = view_for_chain(0, tau);
  std::span<ChainState> pop(chains_);
  for (std::uint64_t a = 0; a < crossover_attempts_; ++a) {
    OpKind op = crossover_ops_.size() == 1
                    ? crossover_ops_[0]
                    : crossover_ops_[cross_rng_.categorical(crossover_weights_)];
    MoveOutcome out;
    switch (op) {
      case OpKind::kKPointCrossover:
        out = kpoint_crossover(*cfg_.problem, pop, cfg_.moves.k_crossover,
                               cfg_.moves.selection_temps, view, cross_rng_, best_,
                               cfg_.moves.literal_pair_selection);
        break;
      case OpKind::kSnookerCrossover:
        out = snooker_crossover(*cfg_.problem, pop,
                                scales_[static_cast<std::size_t>(op)],
                                cfg_.moves.selection_temps, view, cross_rng_, best_,
                                cfg_.moves.literal_pair_selection);
        break;
      case OpKind::kLinearCrossover:
        out = linear_crossover(*cfg_.problem, pop, cfg_.moves.selection_temps, view,
                               cross_rng_, best_, cfg_.moves.literal_pair_selection);
        break;
      default:
        throw std::logic_error("crossover phase drew a mutation operator");
    }
    register_outcome(op, out, 0);
  }
}

void Sampler::adapt_if_pilot() {
  if (t_ > pilot_end_) return;
  if (t_ % cfg_.moves.pilot_batch == 0) {
    for (std::size_t k = 0; k < kOpCount; ++k) {
      if (!op_has_scale(static_cast<OpKind>(k))) continue;
      if (batch_attempts_[k] == 0) continue;
      double rate = static_cast<double>(batch_accepts_[k]) /
                    static_cast<double>(batch_attempts_[k]);
      scales_[k] = adapt_scale(scales_[k], rate);
    }
    batch_attempts_.fill(0);
    batch_accepts_.fill(0);
  }
  if (t_ == pilot_end_)
    for (auto& s : scales_) s.frozen = true;
}

std::vector<std::size_t> Sampler::current_indices() const {
  std::vector<std::size_t> idx(chains_.size());
  for (std::size_t i = 0; i < chains_.size(); ++i) idx[i] = chains_[i].index;
  return idx;
}

void Sampler::maybe_record(bool force) {
  if (!force && t_ % cfg_.trace_stride != 0) return;
  TraceRecord rec;
  rec.t = t_;
  rec.tau = t_ == 0 ? cfg_.temperature.at(1) : cfg_.temperature.at(t_);
  rec.gamma = t_ == 0 ? cfg_.gain.at(1) : cfg_.gain.at(t_);
  rec.best_energy = best_.energy;
  rec.accept_rate.resize(trace_.ops.size());
  for (std::size_t o = 0; o < trace_.ops.size(); ++o) {
    std::size_t k = static_cast<std::size_t>(trace_.ops[o]);
    rec.accept_rate[o] = window_attempts_[k] == 0
                             ? std::numeric_limits<double>::quiet_NaN()
                             : static_cast<double>(window_accepts_[k]) /
                                   static_cast<double>(window_attempts_[k]);
  }
  window_attempts_.fill(0);
  window_accepts_.fill(0);

  if (records_since_theta_ == 0) {
    rec.visit = visit_proportion(current_indices(), partition_.size());
    rec.theta = thetas_[0].theta;
  }
  records_since_theta_ = (records_since_theta_ + 1) % cfg_.theta_stride;
  trace_.records.push_back(std::move(rec));
}

void Sampler::run_all() {
  while (t_ < cfg_.iterations) step();
}

Trace Sampler::finish() {
  // The final record always carries theta and visits.
  if (!trace_.records.empty() && trace_.records.back().t == t_) {
    TraceRecord& last = trace_.records.back();
    if (last.theta.empty()) {
      last.visit = visit_proportion(current_indices(), partition_.size());
      last.theta = thetas_[0].theta;
    }
  } else {
    records_since_theta_ = 0;
    maybe_record(true);
  }

  trace_.final_theta = thetas_[0].theta;
  if (cfg_.mode != RunMode::kSa) {
    normalize_theta(trace_.final_theta, cfg_.normalization, &pi_.pi);
  }
  trace_.best_energy = best_.energy;
  trace_.best_point = best_.point;
  return trace_;
}

void Sampler::validate_cache() const {
  const Problem& problem = *cfg_.problem;
  const auto* binary = dynamic_cast<const BinaryProblem*>(&problem);
  for (const ChainState& c : chains_) {
    double e;
    if (binary) {
      auto counts = binary->counts(c.x);
      if (counts != c.counts) throw std::logic_error("cache check: count mismatch");
      e = binary->energy_from_counts(counts);
      if (e != c.energy) throw std::logic_error("cache check: discrete energy mismatch");
    } else {
      e = problem.energy(c.x);
      double denom = std::max(1.0, std::abs(e));
      if (std::abs(e - c.energy) / denom > 1e-9)
        throw std::logic_error("cache check: continuous energy mismatch");
    }
    if (partition_.subregion(c.energy) != c.index)
      throw std::logic_error("cache check: subregion index mismatch");
  }
}

void Sampler::save_checkpoint(std::ostream& os) const {
  put_u64(os, kCheckpointMagic);
  put_u64(os, kCheckpointVersion);
  put_u64(os, t_);
  put_u64(os, chains_.size());
  for (const ChainState& c : chains_) {
    put_vec(os, c.x);
    put_f64(os, c.energy);
    put_u64(os, c.index);
    put_u64(os, static_cast<std::uint64_t>(c.counts[0]));
    put_u64(os, static_cast<std::uint64_t>(c.counts[1]));
  }
  put_u64(os, thetas_.size());
  for (const ThetaState& th : thetas_) {
    put_vec(os, th.theta);
    put_vec(os, th.theta_reset);
    put_u64(os, th.nonempty.size());
    for (auto b : th.nonempty) os.put(static_cast<char>(b));
    put_u64(os, static_cast<std::uint64_t>(th.trunc_count));
  }
  for (const Rng& r : chain_rngs_) r.save(os);
  cross_rng_.save(os);
  put_f64(os, best_.energy);
  put_vec(os, best_.point);
  for (const auto& s : scales_) {
    put_f64(os, s.log_var);
    os.put(s.frozen ? 1 : 0);
  }
  for (auto v : window_attempts_) put_u64(os, v);
  for (auto v : window_accepts_) put_u64(os, v);
  for (auto v : batch_attempts_) put_u64(os, v);
  for (auto v : batch_accepts_) put_u64(os, v);
  put_u64(os, records_since_theta_);
  for (auto v : trace_.attempts) put_u64(os, v);
  for (auto v : trace_.accepts) put_u64(os, v);
  for (auto v : trace_.op_evals) put_u64(os, v);
  put_u64(os, trace_.init_evals);
  put_u64(os, trace_.total_evals);
}

Sampler Sampler::load_checkpoint(std::istream& is, RunConfig cfg, std::size_t base_stream) {
  if (get_u64(is) != kCheckpointMagic) throw std::runtime_error("checkpoint: bad magic");
  if (get_u64(is) != kCheckpointVersion) throw std::runtime_error("checkpoint: bad version");
  Sampler s(std::move(cfg), base_stream);
  s.t_ = get_u64(is);
  std::size_t kappa = get_u64(is);
  if (kappa != s.chains_.size()) throw std::runtime_error("checkpoint: population size mismatch");
  for (ChainState& c : s.chains_) {
    c.x = get_vec(is);
    c.energy = get_f64(is);
    c.index = get_u64(is);
    c.counts[0] = static_cast<long long>(get_u64(is));
    c.counts[1] = static_cast<long long>(get_u64(is));
  }
  std::size_t n_thetas = get_u64(is);
  if (n_thetas != s.thetas_.size()) throw std::runtime_error("checkpoint: theta count mismatch");
  for (ThetaState& th : s.thetas_) {
    th.theta = get_vec(is);
    th.theta_reset = get_vec(is);
    th.nonempty.assign(get_u64(is), 0);
    for (auto& b : th.nonempty) b = static_cast<std::uint8_t>(is.get());
    th.trunc_count = static_cast<long>(get_u64(is));
  }
  for (Rng& r : s.chain_rngs_) r = Rng::load(is);
  s.cross_rng_ = Rng::load(is);
  s.best_.energy = get_f64(is);
  s.best_.point = get_vec(is);
  for (auto& sc : s.scales_) {
    sc.log_var = get_f64(is);
    sc.frozen = is.get() != 0;
  }
  for (auto& v : s.window_attempts_) v = get_u64(is);
  for (auto& v : s.window_accepts_) v = get_u64(is);
  for (auto& v : s.batch_attempts_) v = get_u64(is);
  for (auto& v : s.batch_accepts_) v = get_u64(is);
  s.records_since_theta_ = get_u64(is);
  for (auto& v : s.trace_.attempts) v = get_u64(is);
  for (auto& v : s.trace_.accepts) v = get_u64(is);
  for (auto& v : s.trace_.op_evals) v = get_u64(is);
  s.trace_.init_evals = get_u64(is);
  s.trace_.total_evals = get_u64(is);
  s.trace_.records.clear();  // resumed traces carry rows from here on
  if (!is) throw std::runtime_error("checkpoint: truncated stream");
  return s;
}

Trace run(const RunConfig& cfg) {
  Sampler s(cfg);
  s.run_all();
  return s.finish();
}

Trace run(const RunConfig& cfg, const std::string& checkpoint_path) {
  if (cfg.checkpoint_stride == 0 || checkpoint_path.empty()) return run(cfg);
  Sampler s(cfg);
  auto snapshot = [&] {
    std::ofstream out(checkpoint_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write checkpoint: " + checkpoint_path);
    s.save_checkpoint(out);
  };
  while (s.t() < cfg.iterations) {
    s.step();
    if (s.t() % cfg.checkpoint_stride == 0) snapshot();
  }
  snapshot();
  return s.finish();
}

Trace run_single_chain(RunConfig cfg, std::size_t base_stream) {
  cfg.kappa = 1;
  Sampler s(std::move(cfg), base_stream);
  s.run_all();
  return s.finish();
}

}  // namespace pisaa
