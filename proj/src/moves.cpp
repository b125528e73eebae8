#include "pisaa/moves.hpp"

#include <algorithm>
#include <stdexcept>

namespace pisaa {

namespace {

// Accept decision; one uniform is always consumed for in-support proposals.
bool metropolis_accept(double log_ratio, Rng& rng) {
  double u = rng.uniform();
  return u < std::exp(std::min(0.0, log_ratio));
}

// Softmax probabilities of exp(-energy / temp), computed with max-shift.
// Entries at `exclude` (if given) are forced to zero and the rest renormalised.
std::vector<double> energy_softmax(std::span<const double> energies, double temp,
                                   std::size_t exclude = static_cast<std::size_t>(-1)) {
  std::vector<double> w(energies.size());
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (i == exclude) continue;
    hi = std::max(hi, -energies[i] / temp);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    w[i] = i == exclude ? 0.0 : std::exp(-energies[i] / temp - hi);
    total += w[i];
  }
  for (double& v : w) v /= total;
  return w;
}

// log sum_{l != exclude} exp(-e_l / temp), max-shifted.
double lse_energies(std::span<const double> energies, double temp,
                    std::size_t exclude = static_cast<std::size_t>(-1)) {
  double hi = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (i == exclude) continue;
    hi = std::max(hi, -energies[i] / temp);
  }
  double s = 0.0;
  for (std::size_t i = 0; i < energies.size(); ++i) {
    if (i == exclude) continue;
    s += std::exp(-energies[i] / temp - hi);
  }
  return hi + std::log(s);
}

// log of w1(i) * w2(j|i) for one ordering of the selected pair.
double log_pair_component(std::span<const double> energies, std::size_t i, std::size_t j,
                          double temp, bool literal_secondary) {
  double lw_first = -energies[i] / temp - lse_energies(energies, temp);
  double num = literal_secondary ? -energies[i] / temp : -energies[j] / temp;
  double lw_second = num - lse_energies(energies, temp, i);
  return lw_first + lw_second;
}

double log_pair_selection_prob(std::span<const double> energies, std::size_t i, std::size_t j,
                               double temp, bool literal_secondary) {
  double a = log_pair_component(energies, i, j, temp, literal_secondary);
  double b = log_pair_component(energies, j, i, temp, literal_secondary);
  double hi = std::max(a, b);
  return hi + std::log(std::exp(a - hi) + std::exp(b - hi));
}

// Floyd's sampling of k distinct values from {0, ..., n-1}.
void sample_distinct(std::size_t k, std::size_t n, Rng& rng, std::vector<std::size_t>& out) {
  out.clear();
  for (std::size_t i = n - k; i < n; ++i) {
    std::size_t t = rng.uniform_index(i + 1);
    if (std::find(out.begin(), out.end(), t) != out.end())
      out.push_back(i);
    else
      out.push_back(t);
  }
}

}  // namespace

const char* op_name(OpKind op) {
  switch (op) {
    case OpKind::kMetropolis: return "metropolis";
    case OpKind::kHitAndRun: return "hit_and_run";
    case OpKind::kKPointMutation: return "kpoint_mutation";
    case OpKind::kGibbs: return "gibbs";
    case OpKind::kKPointCrossover: return "kpoint_crossover";
    case OpKind::kSnookerCrossover: return "snooker_crossover";
    case OpKind::kLinearCrossover: return "linear_crossover";
  }
  return "?";
}

bool op_is_mutation(OpKind op) {
  return op == OpKind::kMetropolis || op == OpKind::kHitAndRun ||
         op == OpKind::kKPointMutation || op == OpKind::kGibbs;
}

bool op_has_scale(OpKind op) {
  return op == OpKind::kMetropolis || op == OpKind::kHitAndRun ||
         op == OpKind::kKPointMutation || op == OpKind::kSnookerCrossover;
}

bool op_needs_continuous(OpKind op) { return op != OpKind::kGibbs && op != OpKind::kKPointCrossover; }

ProposalScale adapt_scale(ProposalScale scale, double observed_accept) {
  if (scale.frozen) return scale;
  scale.log_var += observed_accept - scale.target_rate;
  return scale;
}

std::vector<double> unit_sphere_direction(std::size_t d, Rng& rng) {
  if (d == 1) return {rng.normal() < 0.0 ? -1.0 : 1.0};
  std::vector<double> dir(d);
  double norm2 = 0.0;
  do {
    norm2 = 0.0;
    for (double& v : dir) {
      v = rng.normal();
      norm2 += v * v;
    }
  } while (norm2 == 0.0);
  double inv_norm = 1.0 / std::sqrt(norm2);
  for (double& v : dir) v *= inv_norm;
  return dir;
}

void swap_segments(std::span<double> a, std::span<double> b,
                   std::span<const std::size_t> sorted_points) {
  const std::size_t d = a.size();
  for (std::size_t s = 0; s < sorted_points.size(); s += 2) {
    std::size_t from = sorted_points[s];
    std::size_t to = s + 1 < sorted_points.size() ? sorted_points[s + 1] : d;
    for (std::size_t c = from; c < to; ++c) std::swap(a[c], b[c]);
  }
}

MoveOutcome metropolis_mutation(const Problem& problem, ChainState& chain,
                                const ProposalScale& scale, double scale_mult,
                                const TargetView& target, Rng& rng, BestTracker& best) {
  MoveOutcome out;
  const std::size_t d = problem.dimension();
  const double step = scale.step() * scale_mult;
  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) y[i] = chain.x[i] + step * rng.normal();
  if (!problem.constrain(y)) return out;

  double e = problem.energy(y);
  out.evals = 1;
  std::size_t j = target.subregion(e);
  out.add_proposal(j, e);
  best.offer(y, e);

  double log_ratio = target.log_density(e, j) - target.log_density(chain.energy, chain.index);
  if (metropolis_accept(log_ratio, rng)) {
    chain.x = std::move(y);
    chain.energy = e;
    chain.index = j;
    out.accepted = true;
  }
  return out;
}

MoveOutcome hit_and_run_mutation(const Problem& problem, ChainState& chain,
                                 const ProposalScale& scale, double scale_mult,
                                 const TargetView& target, Rng& rng, BestTracker& best) {
  MoveOutcome out;
  const std::size_t d = problem.dimension();
  const double step = scale.step() * scale_mult;

  double r = rng.normal();
  std::vector<double> dir = unit_sphere_direction(d, rng);

  std::vector<double> y(d);
  for (std::size_t i = 0; i < d; ++i) y[i] = chain.x[i] + step * r * dir[i];
  if (!problem.constrain(y)) return out;

  double e = problem.energy(y);
  out.evals = 1;
  std::size_t j = target.subregion(e);
  out.add_proposal(j, e);
  best.offer(y, e);

  double log_ratio = target.log_density(e, j) - target.log_density(chain.energy, chain.index);
  if (metropolis_accept(log_ratio, rng)) {
    chain.x = std::move(y);
    chain.energy = e;
    chain.index = j;
    out.accepted = true;
  }
  return out;
}

MoveOutcome kpoint_mutation(const Problem& problem, ChainState& chain, std::size_t k,
                            const ProposalScale& scale, double scale_mult,
                            const TargetView& target, Rng& rng, BestTracker& best) {
  const std::size_t d = problem.dimension();
  if (k < 1 || k >= d)
    throw std::invalid_argument("kpoint_mutation: need 1 <= k < dimension");

  MoveOutcome out;
  const double step = scale.step() * scale_mult;
  double r = rng.normal();
  std::vector<std::size_t> coords;
  sample_distinct(k, d, rng, coords);

  std::vector<double> y(chain.x);
  for (std::size_t c : coords) y[c] += step * r;
  if (!problem.constrain(y)) return out;

  double e = problem.energy(y);
  out.evals = 1;
  std::size_t j = target.subregion(e);
  out.add_proposal(j, e);
  best.offer(y, e);

  double log_ratio = target.log_density(e, j) - target.log_density(chain.energy, chain.index);
  if (metropolis_accept(log_ratio, rng)) {
    chain.x = std::move(y);
    chain.energy = e;
    chain.index = j;
    out.accepted = true;
  }
  return out;
}

double gibbs_conditional_prob(const BinaryProblem& problem, const ChainState& chain,
                              std::size_t site, const TargetView& target) {
  // Candidate counts for the site set to its current value vs flipped.
  auto delta = problem.flip_count_delta(chain.x, site);
  std::array<long long, 2> flipped{chain.counts[0] + delta[0], chain.counts[1] + delta[1]};

  double e_cur = chain.energy;
  double e_flip = problem.energy_from_counts(flipped);
  double e1 = chain.x[site] == 1.0 ? e_cur : e_flip;
  double e0 = chain.x[site] == 1.0 ? e_flip : e_cur;

  double lf1 = target.log_density(e1);
  double lf0 = target.log_density(e0);
  // w = (1 + f0/f1)^-1, evaluated in log space.
  return 1.0 / (1.0 + std::exp(lf0 - lf1));
}

MoveOutcome gibbs_site_mutation(const BinaryProblem& problem, ChainState& chain,
                                const TargetView& target, Rng& rng, BestTracker& best) {
  MoveOutcome out;
  const std::size_t d = problem.dimension();
  std::size_t site = rng.uniform_index(d);

  auto delta = problem.flip_count_delta(chain.x, site);
  std::array<long long, 2> flipped{chain.counts[0] + delta[0], chain.counts[1] + delta[1]};
  double e_flip = problem.energy_from_counts(flipped);
  out.evals = 1;
  std::size_t j_flip = target.subregion(e_flip);
  out.add_proposal(j_flip, e_flip);
  if (e_flip < best.energy) {
    std::vector<double> y(chain.x);
    y[site] = 1.0 - y[site];
    best.offer(y, e_flip);
  }

  double e1 = chain.x[site] == 1.0 ? chain.energy : e_flip;
  double e0 = chain.x[site] == 1.0 ? e_flip : chain.energy;
  double w = 1.0 / (1.0 + std::exp(target.log_density(e0) - target.log_density(e1)));

  double bit = rng.uniform() < w ? 1.0 : 0.0;
  if (bit != chain.x[site]) {
    chain.x[site] = bit;
    chain.counts = flipped;
    chain.energy = e_flip;
    chain.index = j_flip;
  }
  out.accepted = true;  // Gibbs draws are always accepted
  return out;
}

PairChoice select_pair(std::span<const double> energies, double temp, Rng& rng,
                       bool literal_secondary) {
  if (energies.size() < 2) throw std::invalid_argument("select_pair: need at least 2 chains");
  PairChoice pc;
  std::vector<double> p1 = energy_softmax(energies, temp);
  pc.i = rng.categorical(p1);
  pc.j = select_partner(energies, pc.i, temp, rng, literal_secondary);
  pc.forward_prob =
      std::exp(log_pair_component(energies, pc.i, pc.j, temp, literal_secondary));
  pc.reverse_prob =
      std::exp(log_pair_component(energies, pc.j, pc.i, temp, literal_secondary));
  return pc;
}

double pair_selection_prob(std::span<const double> energies, std::size_t i, std::size_t j,
                           double temp, bool literal_secondary) {
  return std::exp(log_pair_selection_prob(energies, i, j, temp, literal_secondary));
}

std::size_t select_partner(std::span<const double> energies, std::size_t i, double temp,
                           Rng& rng, bool literal_secondary) {
  if (energies.size() < 2) throw std::invalid_argument("select_partner: need at least 2 chains");
  if (literal_secondary) {
    // As printed the conditional weight does not depend on the candidate,
    // so the draw is uniform over the remaining chains.
    std::size_t r = rng.uniform_index(energies.size() - 1);
    return r < i ? r : r + 1;
  }
  std::vector<double> w = energy_softmax(energies, temp, i);
  return rng.categorical(w);
}

MoveOutcome kpoint_crossover(const Problem& problem, std::span<ChainState> population,
                             std::size_t k, const SelectionTemps& temps,
                             const TargetView& target, Rng& rng, BestTracker& best,
                             bool literal_secondary) {
  const std::size_t kappa = population.size();
  const std::size_t d = problem.dimension();
  if (kappa < 2) throw std::invalid_argument("kpoint_crossover: population too small");
  if (k < 1 || k > d - 1) throw std::invalid_argument("kpoint_crossover: need 1 <= k <= d-1");

  MoveOutcome out;
  std::vector<double> energies(kappa);
  for (std::size_t i = 0; i < kappa; ++i) energies[i] = population[i].energy;
  PairChoice pc = select_pair(energies, temps.kc, rng, literal_secondary);
  ChainState& a = population[pc.i];
  ChainState& b = population[pc.j];

  // Sorted crossover points in {1, ..., d-1}; point p is the boundary
  // before 0-based coordinate p. Segments between each odd point and the
  // following even point are swapped; a trailing odd point swaps to the end.
  std::vector<std::size_t> points;
  sample_distinct(k, d - 1, rng, points);
  for (std::size_t& p : points) p += 1;
  std::sort(points.begin(), points.end());

  std::vector<double> ya(a.x), yb(b.x);
  swap_segments(ya, yb, points);

  double ea, eb;
  std::array<long long, 2> ca{0, 0}, cb{0, 0};
  if (const auto* bin = dynamic_cast<const BinaryProblem*>(&problem)) {
    ca = bin->counts(ya);
    cb = bin->counts(yb);
    ea = bin->energy_from_counts(ca);
    eb = bin->energy_from_counts(cb);
  } else {
    ea = problem.energy(ya);
    eb = problem.energy(yb);
  }
  out.evals = 2;
  std::size_t ja = target.subregion(ea);
  std::size_t jb = target.subregion(eb);
  out.add_proposal(ja, ea);
  out.add_proposal(jb, eb);
  best.offer(ya, ea);
  best.offer(yb, eb);

  std::vector<double> proposed(energies);
  proposed[pc.i] = ea;
  proposed[pc.j] = eb;
  double log_num = log_pair_selection_prob(proposed, pc.i, pc.j, temps.kc, literal_secondary);
  double log_den = log_pair_selection_prob(energies, pc.i, pc.j, temps.kc, literal_secondary);

  double log_ratio = target.log_density(ea, ja) + target.log_density(eb, jb) -
                     target.log_density(a.energy, a.index) -
                     target.log_density(b.energy, b.index) + log_num - log_den;
  if (metropolis_accept(log_ratio, rng)) {
    a.x = std::move(ya);
    a.energy = ea;
    a.index = ja;
    a.counts = ca;
    b.x = std::move(yb);
    b.energy = eb;
    b.index = jb;
    b.counts = cb;
    out.accepted = true;
  }
  return out;
}

MoveOutcome snooker_crossover(const Problem& problem, std::span<ChainState> population,
                              const ProposalScale& scale, const SelectionTemps& temps,
                              const TargetView& target, Rng& rng, BestTracker& best,
                              bool literal_secondary) {
  const std::size_t kappa = population.size();
  if (kappa < 2) throw std::invalid_argument("snooker_crossover: population too small");

  MoveOutcome out;
  std::size_t i = rng.uniform_index(kappa);
  std::vector<double> energies(kappa);
  for (std::size_t n = 0; n < kappa; ++n) energies[n] = population[n].energy;
  std::size_t j = select_partner(energies, i, temps.sc, rng, literal_secondary);

  ChainState& a = population[i];
  const ChainState& b = population[j];
  const std::size_t d = problem.dimension();

  double norm2 = 0.0;
  for (std::size_t c = 0; c < d; ++c) {
    double diff = b.x[c] - a.x[c];
    norm2 += diff * diff;
  }
  if (norm2 == 0.0) return out;  // coincident pair: skipped, counts as rejection

  double r = rng.normal();
  double coef = scale.step() * r / std::sqrt(norm2);
  std::vector<double> y(d);
  for (std::size_t c = 0; c < d; ++c) y[c] = a.x[c] + coef * (b.x[c] - a.x[c]);
  if (!problem.constrain(y)) return out;

  double e = problem.energy(y);
  out.evals = 1;
  std::size_t jj = target.subregion(e);
  out.add_proposal(jj, e);
  best.offer(y, e);

  double log_ratio = target.log_density(e, jj) - target.log_density(a.energy, a.index);
  if (metropolis_accept(log_ratio, rng)) {
    a.x = std::move(y);
    a.energy = e;
    a.index = jj;
    out.accepted = true;
  }
  return out;
}

MoveOutcome linear_crossover(const Problem& problem, std::span<ChainState> population,
                             const SelectionTemps& temps, const TargetView& target, Rng& rng,
                             BestTracker& best, bool literal_secondary) {
  const std::size_t kappa = population.size();
  if (kappa < 2) throw std::invalid_argument("linear_crossover: population too small");

  MoveOutcome out;
  std::size_t i = rng.uniform_index(kappa);
  std::vector<double> energies(kappa);
  for (std::size_t n = 0; n < kappa; ++n) energies[n] = population[n].energy;
  std::size_t j = select_partner(energies, i, temps.lc, rng, literal_secondary);

  ChainState& a = population[i];
  const ChainState& b = population[j];
  const std::size_t d = problem.dimension();

  double r = rng.symmetric_open();
  std::vector<double> y(d);
  for (std::size_t c = 0; c < d; ++c) y[c] = a.x[c] + r * b.x[c];
  if (!problem.constrain(y)) return out;

  double e = problem.energy(y);
  out.evals = 1;
  std::size_t jj = target.subregion(e);
  out.add_proposal(jj, e);
  best.offer(y, e);

  double log_ratio = target.log_density(e, jj) - target.log_density(a.energy, a.index);
  if (metropolis_accept(log_ratio, rng)) {
    a.x = std::move(y);
    a.energy = e;
    a.index = jj;
    out.accepted = true;
  }
  return out;
}

}  // namespace pisaa
