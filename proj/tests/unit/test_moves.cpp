#include <cmath>
#include <set>

#include "doctest.h"
#include "pisaa/ising.hpp"
#include "pisaa/moves.hpp"
#include "pisaa/problems.hpp"

using namespace pisaa;

namespace {

// Flat cost surface on a huge box: every in-box proposal has ratio 1.
class ConstantProblem final : public Problem {
 public:
  explicit ConstantProblem(std::size_t d, double level = 5.0, double half = 1e9)
      : box_(BoxSpace::cube(d, -half, half)), level_(level) {}
  std::string name() const override { return "constant"; }
  std::size_t dimension() const override { return box_.dimension(); }
  double energy(std::span<const double>) const override { return level_; }
  std::vector<double> sample_uniform(Rng& rng) const override { return box_.sample(rng); }
  bool constrain(std::span<double> x) const override { return box_.contains(x); }

 private:
  BoxSpace box_;
  double level_;
};

struct Fixture {
  Partition part{std::vector<double>{0.25, 0.5, 0.75}};
  std::vector<double> theta{0.1, -0.2, 0.3, 0.0};
  TargetView view() { return TargetView{&part, theta, 1.0}; }
};

ChainState make_chain(const Problem& p, const TargetView& view, std::vector<double> x) {
  ChainState c;
  c.x = std::move(x);
  c.energy = p.energy(c.x);
  c.index = view.subregion(c.energy);
  return c;
}

}  // namespace

TEST_CASE("metropolis accepts ratio-1 proposals and rejects out-of-box ones") {
  ConstantProblem flat(2);
  Fixture f;
  TargetView view = f.view();
  Rng rng(1);
  BestTracker best;
  ChainState c = make_chain(flat, view, {0.0, 0.0});

  ProposalScale scale;  // step 1
  for (int i = 0; i < 200; ++i) {
    MoveOutcome out = metropolis_mutation(flat, c, scale, 1.0, view, rng, best);
    CHECK(out.accepted);
    CHECK(out.evals == 1);
  }

  // tiny box: nearly every unit-scale proposal leaves it
  ConstantProblem narrow(2, 5.0, 1e-6);
  ChainState n = make_chain(narrow, view, {0.0, 0.0});
  int rejected_without_eval = 0;
  for (int i = 0; i < 50; ++i) {
    MoveOutcome out = metropolis_mutation(narrow, n, scale, 1.0, view, rng, best);
    if (!out.accepted && out.evals == 0) ++rejected_without_eval;
  }
  CHECK(rejected_without_eval > 0);
  CHECK(n.x == std::vector<double>{0.0, 0.0});
}

TEST_CASE("rejected moves never mutate state") {
  QuadraticBowl bowl(3);
  Partition part({0.2, 0.5});
  std::vector<double> theta{0.0, 0.4, -0.3};
  TargetView view{&part, theta, 0.05};  // cold: plenty of rejections
  Rng rng(7);
  BestTracker best;
  ChainState c = make_chain(bowl, view, {0.1, -0.2, 0.3});
  ProposalScale scale;
  scale.log_var = std::log(0.5);

  int rejections = 0;
  for (int i = 0; i < 3000; ++i) {
    ChainState before = c;
    MoveOutcome out;
    switch (i % 3) {
      case 0: out = metropolis_mutation(bowl, c, scale, 1.0, view, rng, best); break;
      case 1: out = hit_and_run_mutation(bowl, c, scale, 1.0, view, rng, best); break;
      case 2: out = kpoint_mutation(bowl, c, 2, scale, 1.0, view, rng, best); break;
    }
    if (!out.accepted) {
      ++rejections;
      CHECK(c.x == before.x);
      CHECK(c.energy == before.energy);
      CHECK(c.index == before.index);
    } else {
      CHECK(c.energy == bowl.energy(c.x));
      CHECK(c.index == view.subregion(c.energy));
    }
  }
  CHECK(rejections > 100);
}

TEST_CASE("unit sphere directions have unit norm; 1-d reduces to a sign") {
  Rng rng(3);
  for (std::size_t d : {2, 10, 105}) {
    for (int i = 0; i < 50; ++i) {
      auto e = unit_sphere_direction(d, rng);
      double n2 = 0.0;
      for (double v : e) n2 += v * v;
      CHECK(std::abs(std::sqrt(n2) - 1.0) < 1e-12);
    }
  }
  for (int i = 0; i < 20; ++i) {
    auto e = unit_sphere_direction(1, rng);
    CHECK(std::abs(e[0]) == 1.0);
  }
}

TEST_CASE("k-point mutation touches exactly k coordinates") {
  ConstantProblem flat(7);
  Fixture f;
  TargetView view = f.view();
  Rng rng(5);
  BestTracker best;
  ProposalScale scale;
  for (std::size_t k : {1, 3, 6}) {
    ChainState c = make_chain(flat, view, std::vector<double>(7, 0.0));
    for (int i = 0; i < 100; ++i) {
      std::vector<double> before = c.x;
      MoveOutcome out = kpoint_mutation(flat, c, k, scale, 1.0, view, rng, best);
      CHECK(out.accepted);  // flat target
      std::size_t changed = 0;
      double delta = 0.0;
      for (std::size_t i2 = 0; i2 < 7; ++i2) {
        if (c.x[i2] != before[i2]) {
          ++changed;
          delta = c.x[i2] - before[i2];
        } else {
          CHECK(c.x[i2] == before[i2]);  // untouched coordinates are bit-identical
        }
      }
      CHECK(changed == k);
      for (std::size_t i2 = 0; i2 < 7; ++i2)
        if (c.x[i2] != before[i2])  // shared scalar deviate, up to one rounding
          CHECK(c.x[i2] - before[i2] == doctest::Approx(delta).epsilon(1e-12));
    }
  }
  ChainState c = make_chain(flat, view, std::vector<double>(7, 0.0));
  CHECK_THROWS_AS(kpoint_mutation(flat, c, 7, scale, 1.0, view, rng, best),
                  std::invalid_argument);
  ConstantProblem line(1);
  ChainState c1 = make_chain(line, view, std::vector<double>(1, 0.0));
  CHECK_THROWS_AS(kpoint_mutation(line, c1, 1, scale, 1.0, view, rng, best),
                  std::invalid_argument);
}

TEST_CASE("pair selection probabilities sum to one over ordered pairs") {
  Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::size_t kappa = 2 + rng.uniform_index(6);
    std::vector<double> energies(kappa);
    for (auto& e : energies) e = rng.uniform(-50.0, 50.0);
    double temp = rng.uniform(0.05, 10.0);
    double total = 0.0;
    for (std::size_t i = 0; i < kappa; ++i)
      for (std::size_t j = i + 1; j < kappa; ++j)
        total += pair_selection_prob(energies, i, j, temp);
    CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("pair selection: equal energies give uniform draws") {
  Rng rng(13);
  std::vector<double> energies(4, 2.5);
  std::vector<int> count_i(4, 0);
  for (int n = 0; n < 40000; ++n) {
    PairChoice pc = select_pair(energies, 0.1, rng);
    CHECK(pc.i != pc.j);
    ++count_i[pc.i];
    CHECK(pc.forward_prob == doctest::Approx(0.25 / 3.0).epsilon(1e-12));
  }
  for (int c : count_i) CHECK(c > 9200);  // ~10000 each
}

TEST_CASE("pair selection: a dominant low energy wins at low temperature") {
  Rng rng(17);
  std::vector<double> energies{0.0, 10.0};
  // softmax weight of the first: 1 / (1 + e^{-100})
  for (int n = 0; n < 1000; ++n) {
    PairChoice pc = select_pair(energies, 0.1, rng);
    CHECK(pc.i == 0);
    CHECK(pc.j == 1);
  }
  // enormous gaps must not produce NaNs or zero-weight throws
  std::vector<double> extreme{0.0, 1e6};
  PairChoice pc = select_pair(extreme, 0.1, rng);
  CHECK(pc.i == 0);
  CHECK(std::isfinite(std::log(pair_selection_prob(extreme, pc.i, pc.j, 0.1))));

  // infinite selection temperature flattens any energy vector to uniform
  std::vector<double> uneven{0.0, 3.0, -2.0, 7.0};
  std::vector<int> hot_counts(4, 0);
  for (int n = 0; n < 40000; ++n) ++hot_counts[select_pair(uneven, 1e18, rng).i];
  for (int c : hot_counts) CHECK(c > 9200);
}

TEST_CASE("segment swap is an involution and k=1,d=2 exchanges the tail") {
  Rng rng(19);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t d = 2 + rng.uniform_index(12);
    std::size_t k = 1 + rng.uniform_index(d - 1);
    std::vector<double> a(d), b(d);
    for (std::size_t i = 0; i < d; ++i) {
      a[i] = rng.uniform(-1.0, 1.0);
      b[i] = rng.uniform(-1.0, 1.0);
    }
    std::vector<double> a0 = a, b0 = b;
    std::set<std::size_t> pts;
    while (pts.size() < k) pts.insert(1 + rng.uniform_index(d - 1));
    std::vector<std::size_t> points(pts.begin(), pts.end());
    swap_segments(a, b, points);
    swap_segments(a, b, points);
    CHECK(a == a0);
    CHECK(b == b0);
  }
  std::vector<double> a{1.0, 2.0}, b{10.0, 20.0};
  std::vector<std::size_t> pt{1};
  swap_segments(a, b, pt);
  CHECK(a == std::vector<double>{1.0, 20.0});
  CHECK(b == std::vector<double>{10.0, 2.0});
}

TEST_CASE("k-point crossover: identical parents are an accepted fixed point") {
  QuadraticBowl bowl(3);
  Fixture f;
  TargetView view = f.view();
  Rng rng(23);
  BestTracker best;
  std::vector<ChainState> pop;
  pop.push_back(make_chain(bowl, view, {0.3, -0.1, 0.2}));
  pop.push_back(pop[0]);
  std::vector<ChainState> before = pop;
  MoveOutcome out =
      kpoint_crossover(bowl, pop, 2, SelectionTemps{}, view, rng, best);
  CHECK(out.accepted);
  CHECK(out.evals == 2);
  CHECK(pop[0].x == before[0].x);
  CHECK(pop[1].x == before[1].x);
}

TEST_CASE("k-point crossover on a flat target: d=2 exchanges coordinates") {
  ConstantProblem flat(2);
  Fixture f;
  TargetView view = f.view();
  Rng rng(29);
  BestTracker best;
  std::vector<ChainState> pop;
  pop.push_back(make_chain(flat, view, {1.0, 2.0}));
  pop.push_back(make_chain(flat, view, {10.0, 20.0}));
  MoveOutcome out = kpoint_crossover(flat, pop, 1, SelectionTemps{}, view, rng, best);
  CHECK(out.accepted);
  bool swapped_tail = (pop[0].x == std::vector<double>{1.0, 20.0} &&
                       pop[1].x == std::vector<double>{10.0, 2.0}) ||
                      (pop[0].x == std::vector<double>{10.0, 2.0} &&
                       pop[1].x == std::vector<double>{1.0, 20.0});
  CHECK(swapped_tail);
  // applying the move again restores the parents (point is always 1)
  kpoint_crossover(flat, pop, 1, SelectionTemps{}, view, rng, best);
  bool restored = pop[0].x == std::vector<double>{1.0, 2.0} ||
                  pop[0].x == std::vector<double>{10.0, 20.0};
  CHECK(restored);
}

TEST_CASE("crossover rejections leave the whole population untouched") {
  QuadraticBowl bowl(4);
  Partition part({0.3, 0.9});
  std::vector<double> theta{0.0, 1.0, 2.5};
  TargetView view{&part, theta, 0.03};
  Rng rng(31);
  BestTracker best;
  std::vector<ChainState> pop;
  for (int i = 0; i < 4; ++i) {
    std::vector<double> x(4);
    for (auto& v : x) v = rng.uniform(-0.9, 0.9);
    pop.push_back(make_chain(bowl, view, x));
  }
  ProposalScale scale;
  int rejections = 0;
  for (int n = 0; n < 2000; ++n) {
    std::vector<ChainState> before = pop;
    MoveOutcome out;
    switch (n % 3) {
      case 0: out = kpoint_crossover(bowl, pop, 2, SelectionTemps{}, view, rng, best); break;
      case 1: out = snooker_crossover(bowl, pop, scale, SelectionTemps{}, view, rng, best); break;
      case 2: out = linear_crossover(bowl, pop, SelectionTemps{}, view, rng, best); break;
    }
    std::size_t changed = 0;
    for (std::size_t i = 0; i < pop.size(); ++i)
      if (pop[i].x != before[i].x) ++changed;
    if (!out.accepted) {
      ++rejections;
      CHECK(changed == 0);
    } else {
      CHECK(changed <= 2);
      if (n % 3 != 0) CHECK(changed <= 1);  // snooker/linear move one chain
    }
  }
  CHECK(rejections > 100);
}

TEST_CASE("snooker: coincident pair is skipped as a rejection") {
  QuadraticBowl bowl(2);
  Fixture f;
  TargetView view = f.view();
  Rng rng(37);
  BestTracker best;
  std::vector<ChainState> pop(2, make_chain(bowl, view, {0.1, 0.1}));
  ProposalScale scale;
  MoveOutcome out = snooker_crossover(bowl, pop, scale, SelectionTemps{}, view, rng, best);
  CHECK_FALSE(out.accepted);
  CHECK(out.evals == 0);
}

TEST_CASE("linear crossover: zero partner leaves the chain fixed and accepted") {
  ConstantProblem flat(2);
  Fixture f;
  TargetView view = f.view();
  Rng rng(41);
  BestTracker best;
  std::vector<ChainState> pop(2, make_chain(flat, view, {0.0, 0.0}));
  for (int i = 0; i < 50; ++i) {
    MoveOutcome out = linear_crossover(flat, pop, SelectionTemps{}, view, rng, best);
    CHECK(out.accepted);
    CHECK(pop[0].x == std::vector<double>{0.0, 0.0});
    CHECK(pop[1].x == std::vector<double>{0.0, 0.0});
  }
}

TEST_CASE("adapt_scale follows the 0.234 rule and freezes") {
  ProposalScale s;
  s.log_var = 1.0;
  ProposalScale same = adapt_scale(s, 0.234);
  CHECK(same.log_var == doctest::Approx(1.0).epsilon(1e-15));
  ProposalScale up = adapt_scale(s, 1.0);
  CHECK(up.log_var == doctest::Approx(1.766).epsilon(1e-12));
  ProposalScale down = adapt_scale(s, 0.0);
  CHECK(down.log_var == doctest::Approx(0.766).epsilon(1e-12));
  s.frozen = true;
  ProposalScale frozen = adapt_scale(s, 1.0);
  CHECK(frozen.log_var == 1.0);
}

TEST_CASE("gibbs conditional: equal densities give 1/2; strong gaps saturate") {
  // 1x2 image with a == b: flipping pixel 0 trades the match for a pair,
  // leaving the energy unchanged.
  BinaryImage y;
  y.height = 1;
  y.width = 2;
  y.pixels = {1.0, 0.0};
  IsingRestoration balanced(y, 0.7, 0.7);
  Partition single{std::vector<double>{}};
  std::vector<double> theta{0.0};
  TargetView view{&single, theta, 1.0};

  ChainState c;
  c.x = {1.0, 0.0};
  c.counts = balanced.counts(c.x);
  c.energy = balanced.energy_from_counts(c.counts);
  c.index = 0;
  CHECK(gibbs_conditional_prob(balanced, c, 0, view) == doctest::Approx(0.5).epsilon(1e-12));

  // all-ones image with big a: the conditional for staying 1 saturates
  BinaryImage ones;
  ones.height = 2;
  ones.width = 2;
  ones.pixels.assign(4, 1.0);
  IsingRestoration sharp(ones, 30.0, 0.9);
  ChainState c2;
  c2.x.assign(4, 1.0);
  c2.counts = sharp.counts(c2.x);
  c2.energy = sharp.energy_from_counts(c2.counts);
  c2.index = 0;
  CHECK(gibbs_conditional_prob(sharp, c2, 0, view) > 1.0 - 1e-12);
}

TEST_CASE("gibbs site update is always accepted and keeps counts exact") {
  BinaryImage y;
  y.height = 3;
  y.width = 3;
  y.pixels = {1, 0, 1, 0, 1, 0, 1, 0, 1};
  IsingRestoration prob(y, 1.1, 0.9);
  Partition part({-12.0, -6.0});
  std::vector<double> theta{0.2, -0.1, 0.0};
  TargetView view{&part, theta, 0.8};
  Rng rng(43);
  BestTracker best;

  ChainState c;
  c.x.assign(9, 0.0);
  c.counts = prob.counts(c.x);
  c.energy = prob.energy_from_counts(c.counts);
  c.index = view.subregion(c.energy);
  for (int i = 0; i < 2000; ++i) {
    MoveOutcome out = gibbs_site_mutation(prob, c, view, rng, best);
    CHECK(out.accepted);
    CHECK(out.evals == 1);
  }
  CHECK(c.counts == prob.counts(c.x));
  CHECK(c.energy == prob.energy_from_counts(c.counts));
  CHECK(c.index == view.subregion(c.energy));
}
