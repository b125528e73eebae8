#include <cmath>

#include "doctest.h"
#include "pisaa/ab_protein.hpp"
#include "pisaa/diagnostics.hpp"
#include "pisaa/ising.hpp"
#include "pisaa/problems.hpp"

using namespace pisaa;

namespace {

// d = 1 identity energy U(x) = x on [0, 1]: subregion masses are interval
// lengths in the high-temperature limit.
class IdentityEnergy final : public Problem {
 public:
  std::string name() const override { return "identity"; }
  std::size_t dimension() const override { return 1; }
  double energy(std::span<const double> x) const override { return x[0]; }
  std::vector<double> sample_uniform(Rng& rng) const override { return {rng.uniform()}; }
  bool constrain(std::span<double> x) const override { return box_.contains(x); }
  const BoxSpace* integration_box() const override { return &box_; }

 private:
  BoxSpace box_ = BoxSpace::cube(1, 0.0, 1.0);
};

}  // namespace

TEST_CASE("oracle: constant integrand gives equal weights on equal volumes") {
  IdentityEnergy flat;
  Partition part({0.5});
  auto pi = DesiredProbability::geometric(0.0, 2);
  OracleWeights w = oracle_weights(flat, part, pi, /*tau=*/1e9);
  CHECK(w.nonempty[0] == 1);
  CHECK(w.nonempty[1] == 1);
  CHECK(w.w[0] == doctest::Approx(w.w[1]).epsilon(1e-9));
  // unit-sum gauge: both weights are -log 2
  CHECK(w.w[0] == doctest::Approx(-std::log(2.0)).epsilon(1e-6));
}

TEST_CASE("oracle: quadratic quadrature converges and matches closed forms") {
  QuadraticBowl bowl(1);
  Partition part({0.25});  // |x| <= 0.5 vs the rest
  auto pi = DesiredProbability::geometric(0.0, 2);
  OracleWeights w = oracle_weights(bowl, part, pi, 1.0);
  CHECK(w.max_refinement_delta < 1e-4);

  // difference of unnormalised weights survives the gauge fix:
  // w_0 - w_1 = log I_0 - log I_1 with I_j = int_{E_j} exp(-x^2) dx
  // (erf-based closed form; pi terms cancel for uniform pi)
  double i0 = std::sqrt(M_PI) * std::erf(0.5);
  double i1 = std::sqrt(M_PI) * (std::erf(1.0) - std::erf(0.5));
  CHECK(w.w[0] - w.w[1] == doctest::Approx(std::log(i0 / i1)).epsilon(1e-5));
}

TEST_CASE("oracle: empty subregions are flagged and their mass redistributed") {
  QuadraticBowl bowl(1);  // U in [0, 1] on the unit box
  Partition part({0.25, 0.5, 2.0});
  auto pi = DesiredProbability::geometric(0.0, 4);
  OracleWeights w = oracle_weights(bowl, part, pi, 1.0);
  CHECK(w.nonempty[0] == 1);
  CHECK(w.nonempty[1] == 1);
  CHECK(w.nonempty[2] == 1);
  CHECK(w.nonempty[3] == 0);  // U never exceeds 2
  CHECK(w.pi_extra == doctest::Approx(0.25 / 3.0).epsilon(1e-12));
  CHECK(w.w[3] == 0.0);
}

TEST_CASE("oracle: discrete enumeration and size guard") {
  BinaryImage y;
  y.height = 1;
  y.width = 3;
  y.pixels = {1.0, 0.0, 1.0};
  IsingRestoration small(y, 1.1, 0.9);
  Partition part({-3.0, -1.5});
  auto pi = DesiredProbability::geometric(0.1, 3);
  OracleWeights w = oracle_weights(small, part, pi, 0.7);
  CHECK(w.grid_points == 8);

  // exact check against a hand enumeration
  double sums[3] = {0.0, 0.0, 0.0};
  for (int s = 0; s < 8; ++s) {
    std::vector<double> x{double(s & 1), double((s >> 1) & 1), double((s >> 2) & 1)};
    double u = small.energy(x);
    sums[part.subregion(u)] += std::exp(-u / 0.7);
  }
  for (int j = 0; j < 3; ++j) {
    if (sums[j] == 0.0) {
      CHECK(w.nonempty[j] == 0);
      continue;
    }
    double expect = std::log(sums[j]) - std::log(pi.pi[j] + w.pi_extra);
    // compare gauge-invariant differences against subregion 0
    if (j > 0 && w.nonempty[0]) {
      double got = w.w[j] - w.w[0];
      double want = expect - (std::log(sums[0]) - std::log(pi.pi[0] + w.pi_extra));
      CHECK(got == doctest::Approx(want).epsilon(1e-10));
    }
  }

  AbProtein2d big(21);
  CHECK_THROWS_AS(oracle_weights(big, part, pi, 1.0), std::runtime_error);
}

TEST_CASE("theta_mse: gauge invariance and unit perturbation") {
  QuadraticBowl bowl(1);
  Partition part({0.25, 0.5});
  auto pi = DesiredProbability::geometric(0.0, 3);
  OracleWeights oracle = oracle_weights(bowl, part, pi, 1.0);

  std::vector<double> exact = oracle.w;
  CHECK(theta_mse(exact, oracle) == doctest::Approx(0.0).epsilon(1e-12));

  std::vector<double> shifted = oracle.w;
  for (double& v : shifted) v += 3.7;
  CHECK(theta_mse(shifted, oracle) == doctest::Approx(0.0).epsilon(1e-10));

  std::vector<double> bumped = oracle.w;
  bumped[0] += 1.0;
  CHECK(l2_distance(bumped, oracle.w) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(theta_mse(bumped, oracle) > 0.1);

  std::vector<double> wrong_m{0.0, 0.0};
  CHECK_THROWS_AS(theta_mse(wrong_m, oracle), std::invalid_argument);
}

TEST_CASE("relative efficiency: definitions and failure modes") {
  std::vector<double> same{0.5, 0.5};
  CHECK(relative_efficiency(same, same) == doctest::Approx(1.0));

  std::vector<double> ek{0.2, 0.4};
  std::vector<double> e1{0.4, 0.8};
  // squared ratio-of-means: (0.04+0.16)/(0.16+0.64) = 0.25
  CHECK(relative_efficiency(ek, e1) == doctest::Approx(0.25).epsilon(1e-12));
  EfficiencyOptions plain;
  plain.squared = false;
  CHECK(relative_efficiency(ek, e1, plain) == doctest::Approx(0.5).epsilon(1e-12));
  EfficiencyOptions paired;
  paired.mean_of_ratios = true;
  CHECK(relative_efficiency(ek, e1, paired) == doctest::Approx(0.25).epsilon(1e-12));

  std::vector<double> zero{0.0};
  CHECK_THROWS_AS(relative_efficiency(ek, zero), std::domain_error);
}

TEST_CASE("fit_slope recovers a known line") {
  std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  std::vector<double> y{1.0, 0.55, 0.1, -0.35};
  CHECK(fit_slope(x, y) == doctest::Approx(-0.45).epsilon(1e-12));
}

TEST_CASE("replicate summaries: midpoints, zero SE, monotone means") {
  Trace a, b;
  for (std::uint64_t t = 0; t <= 3; ++t) {
    TraceRecord ra, rb;
    ra.t = rb.t = t * 10;
    ra.best_energy = 4.0 - static_cast<double>(t);
    rb.best_energy = 2.0 - static_cast<double>(t) * 0.5;
    a.records.push_back(ra);
    b.records.push_back(rb);
  }
  a.best_energy = a.records.back().best_energy;
  b.best_energy = b.records.back().best_energy;

  ReplicateSummary one = summarize_replicates({a, a});
  for (double se : one.se) CHECK(se == 0.0);

  ReplicateSummary two = summarize_replicates({a, b});
  CHECK(two.mean[0] == doctest::Approx(3.0));
  CHECK(two.min[0] == 2.0);
  CHECK(two.max[0] == 4.0);
  for (std::size_t k = 1; k < two.mean.size(); ++k) CHECK(two.mean[k] <= two.mean[k - 1]);
  CHECK(two.terminal_best.size() == 2);

  Trace shorter = a;
  shorter.records.pop_back();
  CHECK_THROWS_AS(summarize_replicates({a, shorter}), std::logic_error);
}

TEST_CASE("oracle: single subregion collapses to the gauge fixed point") {
  QuadraticBowl bowl(1);
  Partition single{std::vector<double>{}};
  DesiredProbability pi;
  pi.pi = {1.0};
  OracleWeights w = oracle_weights(bowl, single, pi, 1.0);
  CHECK(w.size() == 1);
  CHECK(w.nonempty[0] == 1);
  CHECK(w.w[0] == doctest::Approx(0.0).epsilon(1e-12));  // sum exp(w) = 1
}
