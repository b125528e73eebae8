#include "pisaa/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pisaa {

namespace {

// Streaming log-sum-exp accumulator, one per subregion.
struct LogAccumulator {
  double hi = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double log_term) {
    if (log_term == -std::numeric_limits<double>::infinity()) return;
    if (log_term > hi) {
      sum = sum * std::exp(hi - log_term) + 1.0;
      hi = log_term;
    } else {
      sum += std::exp(log_term - hi);
    }
  }
  bool touched() const { return sum > 0.0; }
  double value() const { return hi + std::log(sum); }
};

// Raw per-subregion log integrals of exp(-U/tau) at one grid resolution.
struct RawIntegrals {
  std::vector<double> log_integral;
  std::vector<std::uint8_t> nonempty;
};

// One grid cell's contribution. The cell volume is spread linearly over the
// corner energy range [ulo, uhi]; the exponential integrates in closed form
// over each overlapped subregion, which keeps the scheme second-order even
// though the subregion indicators are discontinuous.
void add_cell(std::vector<LogAccumulator>& acc, const Partition& partition, double tau,
              double log_volume, double ulo, double uhi) {
  if (ulo == uhi) {
    acc[partition.subregion(ulo)].add(log_volume - ulo / tau);
    return;
  }
  const auto& grid = partition.grid();
  std::size_t j_lo = partition.subregion(ulo);
  std::size_t j_hi = partition.subregion(uhi);
  double log_density = log_volume - std::log(uhi - ulo);
  for (std::size_t j = j_lo; j <= j_hi; ++j) {
    double a = std::max(ulo, j == 0 ? -std::numeric_limits<double>::infinity() : grid[j - 1]);
    double b = std::min(uhi, j < grid.size() ? grid[j] : std::numeric_limits<double>::infinity());
    if (!(a < b)) continue;
    // integral of exp(-u/tau) over [a, b]: tau e^{-a/tau} (1 - e^{-(b-a)/tau})
    double log_int = std::log(tau) - a / tau + std::log(-std::expm1(-(b - a) / tau));
    acc[j].add(log_density + log_int);
  }
}

RawIntegrals quadrature_integrals(const Problem& problem, const BoxSpace& box,
                                  const Partition& partition, double tau,
                                  std::size_t cells_per_axis) {
  const std::size_t d = box.dimension();
  const std::size_t m = partition.size();
  const std::size_t n = cells_per_axis;
  std::vector<LogAccumulator> acc(m);

  auto node_coord = [&](std::size_t axis, std::size_t i) {
    return box.lower[axis] +
           (box.upper[axis] - box.lower[axis]) * static_cast<double>(i) / static_cast<double>(n);
  };

  std::vector<double> x(d);
  if (d == 1) {
    double h = (box.upper[0] - box.lower[0]) / static_cast<double>(n);
    double log_volume = std::log(h);
    std::vector<double> u(n + 1);
    for (std::size_t i = 0; i <= n; ++i) {
      x[0] = node_coord(0, i);
      u[i] = problem.energy(x);
    }
    for (std::size_t i = 0; i < n; ++i)
      add_cell(acc, partition, tau, log_volume, std::min(u[i], u[i + 1]),
               std::max(u[i], u[i + 1]));
  } else {
    double hx = (box.upper[0] - box.lower[0]) / static_cast<double>(n);
    double hy = (box.upper[1] - box.lower[1]) / static_cast<double>(n);
    double log_volume = std::log(hx) + std::log(hy);
    std::vector<double> prev(n + 1), curr(n + 1);
    for (std::size_t k = 0; k <= n; ++k) {
      x[0] = node_coord(0, 0);
      x[1] = node_coord(1, k);
      prev[k] = problem.energy(x);
    }
    for (std::size_t i = 1; i <= n; ++i) {
      x[0] = node_coord(0, i);
      for (std::size_t k = 0; k <= n; ++k) {
        x[1] = node_coord(1, k);
        curr[k] = problem.energy(x);
      }
      for (std::size_t k = 0; k < n; ++k) {
        double ulo = std::min(std::min(prev[k], prev[k + 1]), std::min(curr[k], curr[k + 1]));
        double uhi = std::max(std::max(prev[k], prev[k + 1]), std::max(curr[k], curr[k + 1]));
        add_cell(acc, partition, tau, log_volume, ulo, uhi);
      }
      std::swap(prev, curr);
    }
  }

  RawIntegrals out;
  out.log_integral.resize(m, 0.0);
  out.nonempty.resize(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    if (acc[j].touched()) {
      out.nonempty[j] = 1;
      out.log_integral[j] = acc[j].value();
    }
  }
  return out;
}

RawIntegrals enumeration_integrals(const BinaryProblem& problem, const Partition& partition,
                                   double tau) {
  const std::size_t d = problem.dimension();
  const std::size_t m = partition.size();
  std::vector<LogAccumulator> acc(m);
  std::vector<double> x(d, 0.0);
  const std::uint64_t states = 1ull << d;
  for (std::uint64_t s = 0; s < states; ++s) {
    for (std::size_t i = 0; i < d; ++i) x[i] = (s >> i) & 1 ? 1.0 : 0.0;
    double u = problem.energy(x);
    acc[partition.subregion(u)].add(-u / tau);
  }
  RawIntegrals out;
  out.log_integral.resize(m, 0.0);
  out.nonempty.resize(m, 0);
  for (std::size_t j = 0; j < m; ++j) {
    if (acc[j].touched()) {
      out.nonempty[j] = 1;
      out.log_integral[j] = acc[j].value();
    }
  }
  return out;
}

// Weights from raw integrals: subtract log(pi_j + pi_e) and gauge-fix on
// the support.
void finalize_weights(const RawIntegrals& raw, const DesiredProbability& pi,
                      ThetaNormalization mode, OracleWeights& out) {
  const std::size_t m = raw.log_integral.size();
  out.nonempty = raw.nonempty;
  out.w.assign(m, 0.0);

  std::size_t support = 0;
  double empty_mass = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    if (raw.nonempty[j]) ++support;
    else empty_mass += pi.pi[j];
  }
  if (support == 0) throw std::runtime_error("oracle_weights: no subregion has mass");
  out.pi_extra = empty_mass / static_cast<double>(support);

  std::vector<double> restricted;
  restricted.reserve(support);
  for (std::size_t j = 0; j < m; ++j)
    if (raw.nonempty[j])
      restricted.push_back(raw.log_integral[j] - std::log(pi.pi[j] + out.pi_extra));

  std::vector<double> pi_restricted;
  if (mode == ThetaNormalization::kPiWeighted) {
    for (std::size_t j = 0; j < m; ++j)
      if (raw.nonempty[j]) pi_restricted.push_back(pi.pi[j]);
  }
  normalize_theta(restricted, mode,
                  mode == ThetaNormalization::kPiWeighted ? &pi_restricted : nullptr);

  std::size_t k = 0;
  for (std::size_t j = 0; j < m; ++j)
    if (raw.nonempty[j]) out.w[j] = restricted[k++];
}

}  // namespace

OracleWeights oracle_weights(const Problem& problem, const Partition& partition,
                             const DesiredProbability& pi, double tau,
                             const OracleOptions& options) {
  if (pi.size() != partition.size())
    throw std::invalid_argument("oracle_weights: pi/partition size mismatch");
  if (!(tau > 0.0)) throw std::invalid_argument("oracle_weights: tau must be positive");

  OracleWeights out;
  out.tau = tau;

  if (const auto* binary = dynamic_cast<const BinaryProblem*>(&problem)) {
    if (binary->dimension() > 20)
      throw std::runtime_error("oracle_weights: discrete problem too large to enumerate");
    RawIntegrals raw = enumeration_integrals(*binary, partition, tau);
    finalize_weights(raw, pi, options.normalization, out);
    out.max_refinement_delta = 0.0;
    out.grid_points = 1ull << binary->dimension();
    return out;
  }

  const BoxSpace* box = problem.integration_box();
  if (box == nullptr || problem.dimension() > 2)
    throw std::runtime_error(
        "oracle_weights: unsupported problem (needs an integration box and d <= 2)");

  std::size_t nodes = options.initial_grid;
  RawIntegrals prev = quadrature_integrals(problem, *box, partition, tau, nodes);
  for (;;) {
    std::size_t next = nodes * 2;
    if (next > options.max_grid)
      throw std::runtime_error("oracle_weights: quadrature did not reach the convergence gate");
    RawIntegrals curr = quadrature_integrals(problem, *box, partition, tau, next);

    bool same_support = curr.nonempty == prev.nonempty;
    double delta = 0.0;
    if (same_support) {
      OracleWeights a, b;
      finalize_weights(prev, pi, options.normalization, a);
      finalize_weights(curr, pi, options.normalization, b);
      for (std::size_t j = 0; j < a.w.size(); ++j)
        if (curr.nonempty[j]) delta = std::max(delta, std::abs(a.w[j] - b.w[j]));
      if (delta < options.convergence_gate) {
        out = std::move(b);
        out.tau = tau;
        out.max_refinement_delta = delta;
        out.grid_points = next;
        return out;
      }
    }
    prev = std::move(curr);
    nodes = next;
  }
}

double l2_distance(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) throw std::invalid_argument("l2_distance: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

double theta_mse(std::span<const double> theta, const OracleWeights& oracle,
                 ThetaNormalization mode, const std::vector<double>* pi) {
  if (theta.size() != oracle.size())
    throw std::invalid_argument("theta_mse: theta/oracle size mismatch");

  std::vector<double> th, wr, pir;
  for (std::size_t j = 0; j < theta.size(); ++j) {
    if (!oracle.nonempty[j]) continue;
    th.push_back(theta[j]);
    wr.push_back(oracle.w[j]);
    if (pi) pir.push_back((*pi)[j]);
  }
  const std::vector<double>* pi_arg = pi ? &pir : nullptr;
  normalize_theta(th, mode, pi_arg);
  normalize_theta(wr, mode, pi_arg);
  return l2_distance(th, wr);
}

double relative_efficiency(std::span<const double> errors_kappa,
                           std::span<const double> errors_single,
                           const EfficiencyOptions& options) {
  if (errors_kappa.empty() || errors_single.empty())
    throw std::invalid_argument("relative_efficiency: empty replicate set");
  auto xform = [&](double e) { return options.squared ? e * e : e; };

  if (options.mean_of_ratios) {
    if (errors_kappa.size() != errors_single.size())
      throw std::invalid_argument("relative_efficiency: unpaired replicates");
    double s = 0.0;
    for (std::size_t i = 0; i < errors_kappa.size(); ++i) {
      if (xform(errors_single[i]) == 0.0)
        throw std::domain_error("relative_efficiency: zero denominator");
      s += xform(errors_kappa[i]) / xform(errors_single[i]);
    }
    return s / static_cast<double>(errors_kappa.size());
  }

  double num = 0.0, den = 0.0;
  for (double e : errors_kappa) num += xform(e);
  for (double e : errors_single) den += xform(e);
  num /= static_cast<double>(errors_kappa.size());
  den /= static_cast<double>(errors_single.size());
  if (den == 0.0) throw std::domain_error("relative_efficiency: zero denominator");
  return num / den;
}

double fit_slope(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_slope: need matched samples, n >= 2");
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0.0) throw std::invalid_argument("fit_slope: degenerate x range");
  return sxy / sxx;
}

ReplicateSummary summarize_replicates(const std::vector<Trace>& traces) {
  if (traces.empty()) throw std::invalid_argument("summarize_replicates: no traces");
  const std::size_t n_rec = traces[0].records.size();
  for (const Trace& tr : traces) {
    if (tr.records.size() != n_rec)
      throw std::logic_error("summarize_replicates: trace length mismatch");
    for (std::size_t k = 0; k < n_rec; ++k)
      if (tr.records[k].t != traces[0].records[k].t)
        throw std::logic_error("summarize_replicates: trace stride mismatch");
  }

  const double r = static_cast<double>(traces.size());
  ReplicateSummary s;
  s.t.resize(n_rec);
  s.mean.resize(n_rec);
  s.se.resize(n_rec);
  s.min.resize(n_rec);
  s.max.resize(n_rec);
  for (std::size_t k = 0; k < n_rec; ++k) {
    s.t[k] = traces[0].records[k].t;
    double mean = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const Trace& tr : traces) {
      double v = tr.records[k].best_energy;
      mean += v;
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
    mean /= r;
    double var = 0.0;
    for (const Trace& tr : traces) {
      double d = tr.records[k].best_energy - mean;
      var += d * d;
    }
    s.mean[k] = mean;
    s.se[k] = traces.size() > 1 ? std::sqrt(var / (r - 1.0) / r) : 0.0;
    s.min[k] = lo;
    s.max[k] = hi;
  }
  for (const Trace& tr : traces) s.terminal_best.push_back(tr.best_energy);
  return s;
}

}  // namespace pisaa
