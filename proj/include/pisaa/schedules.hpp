#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace pisaa {

/// Energy-space partition: an ordered grid of m-1 thresholds splits the
/// real line into m subregions. Subregion j (0-based) covers
/// (grid[j-1], grid[j]], with the first and last subregions absorbing
/// everything below/above the grid. Immutable after construction.
class Partition {
 public:
  /// Explicit grid; must be strictly increasing.
  explicit Partition(std::vector<double> grid);

  /// Uniformly spaced grid of m-1 thresholds spanning [lo, hi].
  static Partition uniform(double lo, double hi, std::size_t m);

  std::size_t size() const { return m_; }
  const std::vector<double>& grid() const { return grid_; }

  /// 0-based index of the subregion containing `energy` (binary search).
  /// Ties at a threshold go to the lower-indexed subregion.
  std::size_t subregion(double energy) const;

 private:
  std::vector<double> grid_;
  std::size_t m_;
};

/// Desired sampling probabilities, geometric in the subregion index:
/// pi_j proportional to exp(-lambda * j), j = 0..m-1.
struct DesiredProbability {
  std::vector<double> pi;
  double lambda = 0.0;

  static DesiredProbability geometric(double lambda, std::size_t m);
  std::size_t size() const { return pi.size(); }
};

/// Gain factor gamma_t = (n_gamma / max(t, n_gamma))^beta, non-increasing,
/// flat at 1 until t reaches n_gamma.
struct GainSchedule {
  std::uint64_t n_gamma = 100;
  double beta = 0.55;

  double at(std::uint64_t t) const;
};

/// Temperature ladder tau_t = tau_h * sqrt(n_tau / max(t, n_tau)) + tau_star;
/// square-root cooling limiting to tau_star.
struct TemperatureLadder {
  double tau_h = 1.0;
  std::uint64_t n_tau = 1;
  double tau_star = 0.01;

  double at(std::uint64_t t) const;
};

/// Escalating truncation bounds M_c = growth^c * m0.
struct TruncationBounds {
  double m0 = 1e100;
  double growth = 1e10;

  double bound(long count) const;
};

}  // namespace pisaa
