#include "pisaa/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pisaa {

Partition::Partition(std::vector<double> grid) : grid_(std::move(grid)), m_(grid_.size() + 1) {
  for (std::size_t i = 0; i + 1 < grid_.size(); ++i) {
    if (!(grid_[i] < grid_[i + 1]))
      throw std::invalid_argument("Partition: grid must be strictly increasing");
  }
  for (double u : grid_) {
    if (!std::isfinite(u)) throw std::invalid_argument("Partition: grid entries must be finite");
  }
}

Partition Partition::uniform(double lo, double hi, std::size_t m) {
  if (m < 1) throw std::invalid_argument("Partition: need at least one subregion");
  if (m == 1) return Partition(std::vector<double>{});
  if (!(lo < hi)) throw std::invalid_argument("Partition: lo must be < hi");
  // m-1 thresholds spanning [lo, hi]; the first and last land exactly on
  // the endpoints. m == 2 degenerates to a single threshold at the midpoint.
  std::vector<double> grid(m - 1);
  if (m == 2) {
    grid[0] = 0.5 * (lo + hi);
  } else {
    for (std::size_t j = 0; j < m - 1; ++j)
      grid[j] = lo + (hi - lo) * static_cast<double>(j) / static_cast<double>(m - 2);
    grid.front() = lo;
    grid.back() = hi;
  }
  return Partition(std::move(grid));
}

std::size_t Partition::subregion(double energy) const {
  auto it = std::lower_bound(grid_.begin(), grid_.end(), energy);
  return static_cast<std::size_t>(it - grid_.begin());
}

DesiredProbability DesiredProbability::geometric(double lambda, std::size_t m) {
  if (m < 2) throw std::invalid_argument("DesiredProbability: partition must have m >= 2");
  if (lambda < 0.0) throw std::invalid_argument("DesiredProbability: lambda must be >= 0");
  DesiredProbability d;
  d.lambda = lambda;
  d.pi.resize(m);
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    d.pi[j] = std::exp(-lambda * static_cast<double>(j));
    total += d.pi[j];
  }
  for (double& p : d.pi) p /= total;
  return d;
}

double GainSchedule::at(std::uint64_t t) const {
  double denom = static_cast<double>(std::max(t, n_gamma));
  return std::pow(static_cast<double>(n_gamma) / denom, beta);
}

double TemperatureLadder::at(std::uint64_t t) const {
  double denom = static_cast<double>(std::max(t, n_tau));
  return tau_h * std::sqrt(static_cast<double>(n_tau) / denom) + tau_star;
}

double TruncationBounds::bound(long count) const {
  return m0 * std::pow(growth, static_cast<double>(count));
}

}  // namespace pisaa
