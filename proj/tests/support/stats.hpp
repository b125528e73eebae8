#pragma once

// Small statistics helpers for the test suites: chi-square goodness of fit
// (via the regularized incomplete gamma function) and batch-means standard
// errors for correlated chain output.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace teststat {

inline double gamma_series_p(double a, double x) {
  double ap = a;
  double sum = 1.0 / a;
  double del = sum;
  for (int n = 0; n < 1000; ++n) {
    ap += 1.0;
    del *= x / ap;
    sum += del;
    if (std::fabs(del) < std::fabs(sum) * 1e-15) break;
  }
  return sum * std::exp(-x + a * std::log(x) - std::lgamma(a));
}

inline double gamma_cf_q(double a, double x) {
  double b = x + 1.0 - a;
  double c = 1e300;
  double d = 1.0 / b;
  double h = d;
  for (int i = 1; i < 1000; ++i) {
    double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < 1e-300) d = 1e-300;
    c = b + an / c;
    if (std::fabs(c) < 1e-300) c = 1e-300;
    d = 1.0 / d;
    double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < 1e-15) break;
  }
  return std::exp(-x + a * std::log(x) - std::lgamma(a)) * h;
}

/// Q(a, x) = 1 - P(a, x), the regularized upper incomplete gamma.
inline double gammq(double a, double x) {
  if (x < 0.0 || a <= 0.0) return std::nan("");
  if (x == 0.0) return 1.0;
  if (x < a + 1.0) return 1.0 - gamma_series_p(a, x);
  return gamma_cf_q(a, x);
}

/// Upper-tail p-value of a chi-square statistic.
inline double chi2_pvalue(double stat, double df) { return gammq(df / 2.0, stat / 2.0); }

/// Pearson statistic of observed counts against expected probabilities.
/// Callers should pass supports without structural zeros.
inline double chi2_statistic(std::span<const std::uint64_t> observed,
                             std::span<const double> expected_prob) {
  double n = 0.0;
  for (auto o : observed) n += static_cast<double>(o);
  double stat = 0.0;
  for (std::size_t i = 0; i < observed.size(); ++i) {
    double e = expected_prob[i] * n;
    if (e <= 0.0) continue;
    double d = static_cast<double>(observed[i]) - e;
    stat += d * d / e;
  }
  return stat;
}

/// Batch-means standard error of the mean of a correlated sequence.
inline double batch_means_se(std::span<const double> series, std::size_t batches = 100) {
  if (series.size() < batches * 2) batches = series.size() / 2;
  std::size_t len = series.size() / batches;
  std::vector<double> means;
  for (std::size_t b = 0; b < batches; ++b) {
    double s = 0.0;
    for (std::size_t i = b * len; i < (b + 1) * len; ++i) s += series[i];
    means.push_back(s / static_cast<double>(len));
  }
  double grand = 0.0;
  for (double m : means) grand += m;
  grand /= static_cast<double>(means.size());
  double var = 0.0;
  for (double m : means) var += (m - grand) * (m - grand);
  var /= static_cast<double>(means.size() - 1);
  return std::sqrt(var / static_cast<double>(means.size()));
}

}  // namespace teststat
