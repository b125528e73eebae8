#include "pisaa/ab_protein.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace pisaa {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  return a;
}

double reflect_polar(double a) {
  a = std::fmod(a, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a > std::numbers::pi) a = kTwoPi - a;
  return a;
}

// Lennard-Jones pair term 4 (r^-12 - C r^-6) from the squared distance.
// Powers are formed by multiplication so dyadic distances stay exact.
double lennard_jones(double r2, double c) {
  if (r2 == 0.0) return std::numeric_limits<double>::infinity();
  double inv = 1.0 / r2;
  double inv3 = inv * inv * inv;
  return 4.0 * (inv3 * inv3 - c * inv3);
}

double pair_coeff_2d(char a, char b) {
  if (a == 'A' && b == 'A') return 1.0;
  if (a == 'B' && b == 'B') return 0.5;
  return -0.5;
}

double pair_coeff_3d(char a, char b) { return (a == 'A' && b == 'A') ? 1.0 : 0.5; }

}  // namespace

double ab_pair_energy(double r2, double coeff) { return lennard_jones(r2, coeff); }

std::string fibonacci_sequence(std::size_t n) {
  if (n < 3) throw std::invalid_argument("fibonacci_sequence: need n >= 3");
  std::string prev = "A";  // S0
  std::string curr = "B";  // S1
  while (curr.size() < n) {
    std::string next = prev + curr;
    prev = std::move(curr);
    curr = std::move(next);
  }
  if (curr.size() != n)
    throw std::invalid_argument("fibonacci_sequence: length is not a Fibonacci number");
  return curr;
}

AbProtein2d::AbProtein2d(std::size_t n_monomers)
    : n_(n_monomers), seq_(fibonacci_sequence(n_monomers)) {}

std::vector<double> AbProtein2d::positions(std::span<const double> angles) const {
  std::vector<double> p(2 * n_, 0.0);
  double x = 0.0, y = 0.0;
  for (std::size_t i = 1; i < n_; ++i) {
    double theta = (i == 1) ? 0.0 : angles[i - 2];
    x += std::cos(theta);
    y += std::sin(theta);
    p[2 * i] = x;
    p[2 * i + 1] = y;
  }
  return p;
}

double AbProtein2d::energy(std::span<const double> angles) const {
  // Bond direction unit vectors u_1..u_{N-1}; u_1 is fixed along +x.
  std::vector<double> ux(n_ - 1), uy(n_ - 1);
  ux[0] = 1.0;
  uy[0] = 0.0;
  for (std::size_t i = 1; i < n_ - 1; ++i) {
    ux[i] = std::cos(angles[i - 1]);
    uy[i] = std::sin(angles[i - 1]);
  }

  double bend = 0.0;
  for (std::size_t i = 0; i + 1 < n_ - 1; ++i)
    bend += 0.25 * (1.0 - (ux[i] * ux[i + 1] + uy[i] * uy[i + 1]));

  std::vector<double> px(n_), py(n_);
  px[0] = 0.0;
  py[0] = 0.0;
  for (std::size_t i = 1; i < n_; ++i) {
    px[i] = px[i - 1] + ux[i - 1];
    py[i] = py[i - 1] + uy[i - 1];
  }

  double lj = 0.0;
  for (std::size_t i = 0; i + 2 < n_; ++i) {
    for (std::size_t j = i + 2; j < n_; ++j) {
      double dx = px[i] - px[j];
      double dy = py[i] - py[j];
      lj += lennard_jones(dx * dx + dy * dy, pair_coeff_2d(seq_[i], seq_[j]));
    }
  }
  return bend + lj;
}

std::vector<double> AbProtein2d::sample_uniform(Rng& rng) const {
  std::vector<double> a(dimension());
  for (double& v : a) v = rng.uniform(0.0, kTwoPi);
  return a;
}

bool AbProtein2d::constrain(std::span<double> angles) const {
  for (double& a : angles) a = wrap_angle(a);
  return true;
}

AbProtein3d::AbProtein3d(std::size_t n_monomers)
    : n_(n_monomers), seq_(fibonacci_sequence(n_monomers)) {}

std::vector<double> AbProtein3d::positions(std::span<const double> angles) const {
  std::vector<double> p(3 * n_, 0.0);
  double x = 0.0, y = 0.0, z = 0.0;
  for (std::size_t i = 1; i < n_; ++i) {
    // Gauge: theta_1 = phi_1 = phi_2 = 0, so the first two bonds point
    // along the pole. theta indexes angles[0..N-3], phi indexes the tail.
    double theta = (i == 1) ? 0.0 : angles[i - 2];
    double phi = (i <= 2) ? 0.0 : angles[n_ - 2 + i - 3];
    x += std::cos(theta) * std::sin(phi);
    y += std::sin(theta) * std::sin(phi);
    z += std::cos(phi);
    p[3 * i] = x;
    p[3 * i + 1] = y;
    p[3 * i + 2] = z;
  }
  return p;
}

double AbProtein3d::energy(std::span<const double> angles) const {
  std::vector<double> ux(n_ - 1), uy(n_ - 1), uz(n_ - 1);
  for (std::size_t i = 0; i < n_ - 1; ++i) {
    std::size_t bond = i + 1;  // 1-based bond label
    double theta = (bond == 1) ? 0.0 : angles[bond - 2];
    double phi = (bond <= 2) ? 0.0 : angles[n_ - 2 + bond - 3];
    ux[i] = std::cos(theta) * std::sin(phi);
    uy[i] = std::sin(theta) * std::sin(phi);
    uz[i] = std::cos(phi);
  }

  double bend = 0.0;
  for (std::size_t i = 0; i + 1 < n_ - 1; ++i)
    bend += ux[i] * ux[i + 1] + uy[i] * uy[i + 1] + uz[i] * uz[i + 1];

  double torsion = 0.0;
  for (std::size_t i = 0; i + 2 < n_ - 1; ++i)
    torsion += -0.5 * (ux[i] * ux[i + 2] + uy[i] * uy[i + 2] + uz[i] * uz[i + 2]);

  std::vector<double> px(n_), py(n_), pz(n_);
  px[0] = py[0] = pz[0] = 0.0;
  for (std::size_t i = 1; i < n_; ++i) {
    px[i] = px[i - 1] + ux[i - 1];
    py[i] = py[i - 1] + uy[i - 1];
    pz[i] = pz[i - 1] + uz[i - 1];
  }

  double lj = 0.0;
  for (std::size_t i = 0; i + 2 < n_; ++i) {
    for (std::size_t j = i + 2; j < n_; ++j) {
      double dx = px[i] - px[j];
      double dy = py[i] - py[j];
      double dz = pz[i] - pz[j];
      lj += lennard_jones(dx * dx + dy * dy + dz * dz, pair_coeff_3d(seq_[i], seq_[j]));
    }
  }
  return bend + torsion + lj;
}

std::vector<double> AbProtein3d::sample_uniform(Rng& rng) const {
  std::vector<double> a(dimension());
  std::size_t n_theta = n_ - 2;
  for (std::size_t i = 0; i < n_theta; ++i) a[i] = rng.uniform(0.0, kTwoPi);
  for (std::size_t i = n_theta; i < a.size(); ++i) a[i] = rng.uniform(0.0, std::numbers::pi);
  return a;
}

bool AbProtein3d::constrain(std::span<double> angles) const {
  std::size_t n_theta = n_ - 2;
  for (std::size_t i = 0; i < n_theta; ++i) angles[i] = wrap_angle(angles[i]);
  for (std::size_t i = n_theta; i < angles.size(); ++i) angles[i] = reflect_polar(angles[i]);
  return true;
}

}  // namespace pisaa
