#pragma once

#include <string>

#include "pisaa/problems.hpp"

namespace pisaa {

/// Lennard-Jones style pair term 4 (r^-12 - C r^-6) from a squared
/// distance; coincident beads (r2 = 0) yield the +infinity sentinel.
double ab_pair_energy(double r2, double coeff);

/// Monomer sequence of the AB model, built recursively from S0 = "A",
/// S1 = "B", Si = S(i-2) + S(i-1). Throws unless n is a Fibonacci length >= 3.
std::string fibonacci_sequence(std::size_t n);

/// 2D off-lattice AB chain of N monomers with unit bonds. Decision vector:
/// bond direction angles theta_2..theta_{N-1} (theta_1 = 0 fixed), so
/// d = N - 2. Angles wrap modulo 2 pi.
class AbProtein2d final : public Problem {
 public:
  explicit AbProtein2d(std::size_t n_monomers);

  std::string name() const override { return "ab2d"; }
  std::size_t dimension() const override { return n_ - 2; }
  double energy(std::span<const double> angles) const override;
  std::vector<double> sample_uniform(Rng& rng) const override;
  bool constrain(std::span<double> angles) const override;

  std::size_t monomers() const { return n_; }
  const std::string& sequence() const { return seq_; }

  /// Bead positions implied by the angles; 2 doubles per monomer.
  std::vector<double> positions(std::span<const double> angles) const;

 private:
  std::size_t n_;
  std::string seq_;
};

/// 3D off-lattice AB chain. Decision vector: theta_2..theta_{N-1} followed
/// by phi_3..phi_{N-1} (theta_1 = phi_1 = phi_2 = 0 fixed), so d = 2N - 5.
/// Azimuthal angles wrap modulo 2 pi; polar angles reflect at [0, pi].
class AbProtein3d final : public Problem {
 public:
  explicit AbProtein3d(std::size_t n_monomers);

  std::string name() const override { return "ab3d"; }
  std::size_t dimension() const override { return 2 * n_ - 5; }
  double energy(std::span<const double> angles) const override;
  std::vector<double> sample_uniform(Rng& rng) const override;
  bool constrain(std::span<double> angles) const override;

  std::size_t monomers() const { return n_; }
  const std::string& sequence() const { return seq_; }

  /// Bead positions implied by the angles; 3 doubles per monomer.
  std::vector<double> positions(std::span<const double> angles) const;

 private:
  std::size_t n_;
  std::string seq_;
};

}  // namespace pisaa
