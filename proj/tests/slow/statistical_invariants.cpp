// Statistical properties that need replicate batteries rather than unit
// assertions: population-size monotonicity of the mean best value, and the
// fixed-iteration MSE ordering of the bias-weight estimates. One PASS/FAIL
// line per property.

#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "pisaa/config.hpp"
#include "pisaa/diagnostics.hpp"
#include "pisaa/engine.hpp"
#include "pisaa/problems.hpp"

using namespace pisaa;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double se_of(const std::vector<double>& v) {
  double m = mean_of(v);
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  var /= static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

bool best_value_monotonicity(std::string& detail) {
  // 10-d rotated Rastrigin at a fixed iteration count: mean best value over
  // 48 seeds must be non-increasing in kappa up to one pooled SE.
  std::string out;
  double prev_mean = 0.0, prev_se = 0.0;
  bool first = true, ok = true;
  for (std::size_t kappa : {1, 5, 14, 30}) {
    std::vector<double> bests;
    for (std::size_t rep = 0; rep < 48; ++rep) {
      RunConfig cfg;
      cfg.problem = std::make_shared<RotatedRastrigin>(10, salomon_rotation(10, 3));
      cfg.kappa = kappa;
      cfg.iterations = 20000;
      cfg.seed = derive_seed(31, "rastrigin_d10", kappa, 0.55, rep);
      cfg.partition = Partition::uniform(-0.01, 200.0, 200);
      cfg.lambda = 0.1;
      cfg.gain = GainSchedule{2000, 0.55};
      cfg.temperature = TemperatureLadder{1.0, 100, 0.01};
      for (OpKind op : {OpKind::kMetropolis, OpKind::kHitAndRun, OpKind::kKPointMutation})
        cfg.moves.rate(op) = 1.0;
      if (kappa >= 2)
        for (OpKind op : {OpKind::kKPointCrossover, OpKind::kSnookerCrossover,
                          OpKind::kLinearCrossover})
          cfg.moves.rate(op) = 1.0;
      cfg.moves.k_mutation = 1;
      cfg.moves.k_crossover = 2;
      cfg.trace_stride = 20000;
      bests.push_back(run(cfg).best_energy);
    }
    double m = mean_of(bests), s = se_of(bests);
    out += "kappa=" + std::to_string(kappa) + ": " + std::to_string(m) + " (se " +
           std::to_string(s) + "); ";
    if (!first && m > prev_mean + std::sqrt(prev_se * prev_se + s * s)) ok = false;
    prev_mean = m;
    prev_se = s;
    first = false;
  }
  detail = out;
  return ok;
}

bool fixed_iteration_mse_monotonicity(std::string& detail) {
  // Surrogate mixture at a common iteration count: mean theta MSE
  // non-increasing over kappa in {1, 10, 30} up to one pooled SE.
  auto mix = std::make_shared<GaussianMixture>(
      std::vector<GaussianMixture::Component>{{0.5, -3.0, -3.0}, {0.5, 3.0, 3.0}}, 0.5,
      BoxSpace::cube(2, -8.0, 8.0));
  Partition part = Partition::uniform(2.0, 9.0, 19);
  auto pi = DesiredProbability::geometric(0.0, 19);
  OracleOptions opt;
  opt.initial_grid = 512;
  opt.max_grid = 1 << 13;
  OracleWeights oracle = oracle_weights(*mix, part, pi, 1.0, opt);

  std::string out;
  double prev_mean = 0.0, prev_se = 0.0;
  bool first = true, ok = true;
  for (std::size_t kappa : {1, 10, 30}) {
    std::vector<double> errs;
    for (std::size_t rep = 0; rep < 16; ++rep) {
      RunConfig cfg;
      cfg.problem = mix;
      cfg.kappa = kappa;
      cfg.iterations = 20000;
      cfg.seed = derive_seed(32, "surrogate", kappa, 0.55, rep);
      cfg.partition = part;
      cfg.lambda = 0.0;
      cfg.gain = GainSchedule{100, 0.55};
      cfg.temperature = TemperatureLadder{0.1, 1, 1.0};
      cfg.moves.rate(OpKind::kMetropolis) = 1.0;
      cfg.moves.pilot_fraction = 0.0;
      cfg.moves.initial_log_scale = std::log(1.5);
      cfg.trace_stride = 20000;
      Trace tr = run(cfg);
      errs.push_back(theta_mse(tr.final_theta, oracle));
    }
    double m = mean_of(errs), s = se_of(errs);
    out += "kappa=" + std::to_string(kappa) + ": " + std::to_string(m) + " (se " +
           std::to_string(s) + "); ";
    if (!first && m > prev_mean + std::sqrt(prev_se * prev_se + s * s)) ok = false;
    prev_mean = m;
    prev_se = s;
    first = false;
  }
  detail = out;
  return ok;
}

}  // namespace

int main() {
  bool all_ok = true;
  std::string detail;

  bool a = best_value_monotonicity(detail);
  std::printf("%s best-value monotonicity in kappa (48 seeds) — %s\n", a ? "PASS" : "FAIL",
              detail.c_str());
  all_ok = all_ok && a;

  bool b = fixed_iteration_mse_monotonicity(detail);
  std::printf("%s fixed-iteration MSE monotonicity in kappa — %s\n", b ? "PASS" : "FAIL",
              detail.c_str());
  all_ok = all_ok && b;

  return all_ok ? 0 : 1;
}
