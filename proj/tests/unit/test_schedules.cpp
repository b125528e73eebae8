#include <cmath>
#include <vector>

#include "doctest.h"
#include "pisaa/rng.hpp"
#include "pisaa/schedules.hpp"

using namespace pisaa;

TEST_CASE("gain factor formula") {
  CHECK(GainSchedule{100, 0.55}.at(50) == 1.0);
  CHECK(GainSchedule{100, 0.5}.at(400) == doctest::Approx(0.5).epsilon(1e-14));
  // direct evaluation of (0.1)^0.55
  CHECK(GainSchedule{100000, 0.55}.at(1000000) ==
        doctest::Approx(std::pow(0.1, 0.55)).epsilon(1e-14));
}

TEST_CASE("temperature ladder formula") {
  CHECK(TemperatureLadder{1.0, 1, 0.01}.at(1) == doctest::Approx(1.01).epsilon(1e-14));
  CHECK(TemperatureLadder{1.0, 1, 0.01}.at(4) == doctest::Approx(0.51).epsilon(1e-14));
  // terminal temperature of the tempering setup: tau_h sqrt(1/n) + 1 - tau_h sqrt(1/n) = 1
  double n = 1e6;
  TemperatureLadder l{5.0, 1, 1.0 - 5.0 / std::sqrt(n)};
  CHECK(l.at(1000000) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("schedules are non-increasing") {
  GainSchedule g{1000, 0.55};
  TemperatureLadder l{2.0, 100, 0.05};
  double pg = g.at(1), pl = l.at(1);
  for (std::uint64_t t = 2; t < 20000; t += 7) {
    double cg = g.at(t), cl = l.at(t);
    CHECK(cg <= pg);
    CHECK(cl <= pl);
    CHECK(cg > 0.0);
    CHECK(cg <= 1.0);
    pg = cg;
    pl = cl;
  }
  CHECK(l.at(1u << 30) == doctest::Approx(0.05).epsilon(1e-3));
}

TEST_CASE("temperature decrement vanishes faster than the gain") {
  // condition: tau_t - tau_{t+1} = o(gamma_t) for the default pairing
  GainSchedule g{100, 0.55};
  TemperatureLadder l{1.0, 1, 0.01};
  double prev_ratio = 1e300;
  for (double te = 1; te <= 7; te += 1) {
    auto t = static_cast<std::uint64_t>(std::pow(10.0, te));
    double ratio = (l.at(t) - l.at(t + 1)) / g.at(t);
    CHECK(ratio < prev_ratio);
    prev_ratio = ratio;
  }
  CHECK(prev_ratio < 1e-4);
}

TEST_CASE("desired probability: uniform, geometric, limit") {
  auto uniform = DesiredProbability::geometric(0.0, 5);
  for (double p : uniform.pi) CHECK(p == doctest::Approx(0.2).epsilon(1e-14));

  auto geo = DesiredProbability::geometric(0.1, 3);
  // normalize (1, e^-0.1, e^-0.2) by hand
  double z = 1.0 + std::exp(-0.1) + std::exp(-0.2);
  CHECK(geo.pi[0] == doctest::Approx(1.0 / z).epsilon(1e-12));
  CHECK(geo.pi[1] == doctest::Approx(std::exp(-0.1) / z).epsilon(1e-12));
  CHECK(geo.pi[2] == doctest::Approx(std::exp(-0.2) / z).epsilon(1e-12));
  CHECK(geo.pi[0] == doctest::Approx(0.36717).epsilon(1e-4));
  CHECK(geo.pi[1] == doctest::Approx(0.33223).epsilon(1e-4));
  CHECK(geo.pi[2] == doctest::Approx(0.30060).epsilon(1e-4));

  auto extreme = DesiredProbability::geometric(50.0, 2);
  CHECK(extreme.pi[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(extreme.pi[1] < 1e-20);

  CHECK_THROWS_AS(DesiredProbability::geometric(0.1, 1), std::invalid_argument);
  CHECK_THROWS_AS(DesiredProbability::geometric(-0.1, 3), std::invalid_argument);
}

TEST_CASE("desired probability sums to 1 and decreases when lambda > 0") {
  for (double lambda : {0.05, 0.1, 0.9, 3.0}) {
    auto d = DesiredProbability::geometric(lambda, 23);
    double sum = 0.0;
    for (std::size_t j = 0; j < d.size(); ++j) {
      sum += d.pi[j];
      if (j > 0) CHECK(d.pi[j] < d.pi[j - 1]);
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("subregion index: boundaries and interior") {
  Partition p({0.0, 1.0, 2.0});
  CHECK(p.size() == 4);
  CHECK(p.subregion(-5.0) == 0);
  CHECK(p.subregion(1.0) == 1);  // right-closed intervals
  CHECK(p.subregion(7.0) == 3);
  CHECK(p.subregion(0.0) == 0);
  CHECK(p.subregion(1.5) == 2);
}

TEST_CASE("subregion index partitions the line and is monotone") {
  Rng rng(17);
  std::vector<double> grid;
  double g = -3.0;
  for (int i = 0; i < 12; ++i) {
    g += rng.uniform(0.01, 1.0);
    grid.push_back(g);
  }
  Partition p(grid);
  double prev_e = -1e9;
  std::size_t prev_j = 0;
  for (int i = 0; i < 5000; ++i) {
    double e = prev_e + rng.uniform(0.0, 0.01);
    std::size_t j = p.subregion(e);
    CHECK(j >= prev_j);
    CHECK(j < p.size());
    // membership: u_{j-1} < e <= u_j with absorbing ends
    if (j > 0) CHECK(e > grid[j - 1]);
    if (j < grid.size()) CHECK(e <= grid[j]);
    prev_e = e;
    prev_j = j;
  }
}

TEST_CASE("uniform partition spans the endpoints") {
  Partition p = Partition::uniform(0.0, 9.0, 19);
  CHECK(p.size() == 19);
  CHECK(p.grid().size() == 18);
  CHECK(p.grid().front() == 0.0);
  CHECK(p.grid().back() == 9.0);
  CHECK_THROWS_AS(Partition({1.0, 1.0}), std::invalid_argument);
}

TEST_CASE("truncation bounds escalate geometrically") {
  TruncationBounds b{10.0, 100.0};
  CHECK(b.bound(0) == 10.0);
  CHECK(b.bound(1) == doctest::Approx(1000.0));
  CHECK(b.bound(2) == doctest::Approx(100000.0));
  TruncationBounds dflt;
  CHECK(dflt.bound(0) == doctest::Approx(1e100));
  CHECK(dflt.bound(1) == doctest::Approx(1e110));
}
