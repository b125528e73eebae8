#pragma once

#include <string>

#include "pisaa/problems.hpp"

namespace pisaa {

/// Binary image on an H x W lattice, stored row-major as 0/1 values.
struct BinaryImage {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<double> pixels;

  std::size_t size() const { return height * width; }

  /// Load a plain-text 0/1 grid (one row per line, optional spaces).
  static BinaryImage load_text(const std::string& path);
  /// Load an 8-bit PGM (P2 or P5) and threshold it: value >= threshold -> 1.
  static BinaryImage load_pgm(const std::string& path, int threshold = 128);

  void save_text(const std::string& path) const;
};

/// Negative log posterior of the Ising image restoration model:
/// U(x) = -(a * #{x_i = y_i} + b * #{x_i = x_j over neighbouring pairs}),
/// with the 8-neighbourhood and each unordered pair counted once
/// (count_pairs_twice doubles the prior term instead). The energy is a
/// fixed function of the two integer counts, so single-site flips can be
/// applied incrementally with no floating-point drift.
class IsingRestoration final : public BinaryProblem {
 public:
  IsingRestoration(BinaryImage observed, double a, double b, bool count_pairs_twice = false);

  std::string name() const override { return "ising"; }
  std::size_t dimension() const override { return observed_.size(); }
  double energy(std::span<const double> x) const override;
  std::vector<double> sample_uniform(Rng& rng) const override;
  bool constrain(std::span<double>) const override { return true; }

  std::array<long long, 2> counts(std::span<const double> x) const override;
  double energy_from_counts(const std::array<long long, 2>& c) const override;
  std::array<long long, 2> flip_count_delta(std::span<const double> x,
                                            std::size_t site) const override;

  /// Energy change caused by flipping one pixel; equals the difference of
  /// two full evaluations exactly (both reduce to the same count formula).
  double energy_delta(std::span<const double> x, std::size_t site) const;

  const BinaryImage& observed() const { return observed_; }
  std::size_t height() const { return observed_.height; }
  std::size_t width() const { return observed_.width; }
  double a() const { return a_; }
  double b() const { return b_; }

 private:
  BinaryImage observed_;
  double a_;
  double b_;
  bool pairs_twice_;
};

}  // namespace pisaa
