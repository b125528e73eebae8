#include "pisaa/target.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pisaa {

ThetaState ThetaState::zeros(std::size_t m) {
  ThetaState st;
  st.theta.assign(m, 0.0);
  st.nonempty.assign(m, 0);
  st.theta_reset.assign(m, 0.0);
  st.trunc_count = 0;
  return st;
}

std::size_t ThetaState::nonempty_count() const {
  std::size_t n = 0;
  for (auto b : nonempty) n += b != 0;
  return n;
}

double ThetaState::restricted_norm() const {
  double s = 0.0;
  for (std::size_t j = 0; j < theta.size(); ++j)
    if (nonempty[j]) s += theta[j] * theta[j];
  return std::sqrt(s);
}

std::vector<double> visit_proportion(std::span<const std::size_t> indices, std::size_t m) {
  std::vector<double> p(m, 0.0);
  if (indices.empty()) return p;
  double w = 1.0 / static_cast<double>(indices.size());
  for (std::size_t j : indices) p.at(j) += w;
  return p;
}

void weight_update(ThetaState& state, std::span<const std::size_t> indices,
                   const DesiredProbability& pi, double gamma) {
  std::size_t m = state.size();
  if (pi.size() != m) throw std::invalid_argument("weight_update: pi/theta size mismatch");
  for (std::size_t j : indices) state.mark_nonempty(j);
  std::vector<double> p = visit_proportion(indices, m);
  for (std::size_t j = 0; j < m; ++j) {
    if (state.nonempty[j]) state.theta[j] += gamma * (p[j] - pi.pi[j]);
  }
}

bool truncate_theta(ThetaState& state, const TruncationBounds& bounds) {
  if (state.restricted_norm() <= bounds.bound(state.trunc_count)) return false;
  state.theta = state.theta_reset;
  ++state.trunc_count;
  return true;
}

double log_sum_exp(std::span<const double> v) {
  double hi = -std::numeric_limits<double>::infinity();
  for (double x : v) hi = std::max(hi, x);
  if (!std::isfinite(hi)) return hi;
  double s = 0.0;
  for (double x : v) s += std::exp(x - hi);
  return hi + std::log(s);
}

void normalize_theta(std::vector<double>& theta, ThetaNormalization mode,
                     const std::vector<double>* pi) {
  double z;
  if (mode == ThetaNormalization::kUnitSum) {
    z = -log_sum_exp(theta);
  } else {
    if (pi == nullptr || pi->size() != theta.size())
      throw std::invalid_argument("normalize_theta: pi required for pi-weighted mode");
    std::vector<double> terms(theta.size());
    for (std::size_t j = 0; j < theta.size(); ++j) terms[j] = std::log((*pi)[j]) + theta[j];
    z = -log_sum_exp(terms);
  }
  for (double& t : theta) t += z;
}

}  // namespace pisaa
