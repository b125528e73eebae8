#pragma once

#include <array>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pisaa/rng.hpp"

namespace pisaa {

/// Axis-aligned box sample space.
struct BoxSpace {
  std::vector<double> lower;
  std::vector<double> upper;

  BoxSpace() = default;
  BoxSpace(std::vector<double> lo, std::vector<double> hi);
  static BoxSpace cube(std::size_t d, double lo, double hi);

  std::size_t dimension() const { return lower.size(); }
  bool contains(std::span<const double> x) const;
  std::vector<double> sample(Rng& rng) const;
};

/// A cost function together with its sample space. Energy evaluation is
/// pure and reentrant; instances are safe to share across chains.
class Problem {
 public:
  virtual ~Problem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual bool discrete() const { return false; }
  virtual double energy(std::span<const double> x) const = 0;

  /// Draw a point uniformly on the sample space.
  virtual std::vector<double> sample_uniform(Rng& rng) const = 0;

  /// Bring a mutation proposal back into the sample space, either by
  /// rejecting it (return false) or by wrapping coordinates in place.
  virtual bool constrain(std::span<double> x) const = 0;

  /// Integration region for quadrature oracles, when one exists.
  virtual const BoxSpace* integration_box() const { return nullptr; }
};

/// Binary-lattice problems additionally expose exact integer bookkeeping:
/// the energy is a fixed function of a two-component count vector, so
/// incremental updates reproduce full re-evaluation bitwise.
class BinaryProblem : public Problem {
 public:
  bool discrete() const override { return true; }

  virtual std::array<long long, 2> counts(std::span<const double> x) const = 0;
  virtual double energy_from_counts(const std::array<long long, 2>& c) const = 0;

  /// Count change caused by flipping one site, computed from its
  /// neighbourhood only.
  virtual std::array<long long, 2> flip_count_delta(std::span<const double> x,
                                                    std::size_t site) const = 0;
};

/// d-dimensional quadratic bowl U(x) = sum x_i^2 on a box; the standard
/// desk-scale test problem for oracle and stationarity checks.
class QuadraticBowl final : public Problem {
 public:
  explicit QuadraticBowl(std::size_t d, double half_width = 1.0);

  std::string name() const override { return "quadratic"; }
  std::size_t dimension() const override { return box_.dimension(); }
  double energy(std::span<const double> x) const override;
  std::vector<double> sample_uniform(Rng& rng) const override { return box_.sample(rng); }
  bool constrain(std::span<double> x) const override { return box_.contains(x); }
  const BoxSpace* integration_box() const override { return &box_; }
  const BoxSpace& box() const { return box_; }

 private:
  BoxSpace box_;
};

/// Two-dimensional Gaussian mixture energy U(x) = -log sum_i w_i N2(x | mu_i, var I),
/// evaluated in log space so it stays finite anywhere in the box.
class GaussianMixture final : public Problem {
 public:
  struct Component {
    double weight;
    double mx;
    double my;
  };

  GaussianMixture(std::vector<Component> components, double var, BoxSpace box);

  std::string name() const override { return "gaussian_mixture"; }
  std::size_t dimension() const override { return 2; }
  double energy(std::span<const double> x) const override;
  std::vector<double> sample_uniform(Rng& rng) const override { return box_.sample(rng); }
  bool constrain(std::span<double> x) const override { return box_.contains(x); }

  const BoxSpace* integration_box() const override { return &box_; }
  const std::vector<Component>& components() const { return components_; }
  double variance() const { return var_; }
  const BoxSpace& box() const { return box_; }

  /// Parse a CSV of rows `weight,mean_x,mean_y` (header optional).
  static std::vector<Component> load_components_csv(const std::string& path);

 private:
  std::vector<Component> components_;
  std::vector<double> log_weight_;
  double var_;
  BoxSpace box_;
};

/// Orthogonal rotation built as a product of random-angle Givens rotations
/// over randomly ordered axis pairs; deterministic in the seed.
struct RotationMatrix {
  std::size_t d = 0;
  std::uint64_t seed = 0;
  std::vector<double> r;  // row-major d x d

  void apply(std::span<const double> x, std::span<double> y) const;
};

RotationMatrix salomon_rotation(std::size_t d, std::uint64_t seed);
RotationMatrix identity_rotation(std::size_t d);

/// Rotated Rastrigin Ra(Rx) on [-5.12, 5.12]^d; global minimum 0 at the origin.
class RotatedRastrigin final : public Problem {
 public:
  RotatedRastrigin(std::size_t d, RotationMatrix rotation);

  std::string name() const override { return "rastrigin"; }
  std::size_t dimension() const override { return box_.dimension(); }
  double energy(std::span<const double> x) const override;
  std::vector<double> sample_uniform(Rng& rng) const override { return box_.sample(rng); }
  bool constrain(std::span<double> x) const override { return box_.contains(x); }
  const BoxSpace* integration_box() const override { return &box_; }
  const RotationMatrix& rotation() const { return rotation_; }

 private:
  RotationMatrix rotation_;
  BoxSpace box_;
};

double rastrigin(std::span<const double> y);

}  // namespace pisaa
