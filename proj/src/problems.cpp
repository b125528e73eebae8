#include "pisaa/problems.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace pisaa {

BoxSpace::BoxSpace(std::vector<double> lo, std::vector<double> hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("BoxSpace: bound dimension mismatch");
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (!(lower[i] < upper[i]))
      throw std::invalid_argument("BoxSpace: lower must be < upper componentwise");
}

BoxSpace BoxSpace::cube(std::size_t d, double lo, double hi) {
  return BoxSpace(std::vector<double>(d, lo), std::vector<double>(d, hi));
}

bool BoxSpace::contains(std::span<const double> x) const {
  for (std::size_t i = 0; i < lower.size(); ++i)
    if (x[i] < lower[i] || x[i] > upper[i]) return false;
  return true;
}

std::vector<double> BoxSpace::sample(Rng& rng) const {
  std::vector<double> x(lower.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = rng.uniform(lower[i], upper[i]);
  return x;
}

QuadraticBowl::QuadraticBowl(std::size_t d, double half_width)
    : box_(BoxSpace::cube(d, -half_width, half_width)) {
  if (d == 0) throw std::invalid_argument("QuadraticBowl: dimension must be positive");
}

double QuadraticBowl::energy(std::span<const double> x) const {
  double s = 0.0;
  for (double v : x) s += v * v;
  return s;
}

GaussianMixture::GaussianMixture(std::vector<Component> components, double var, BoxSpace box)
    : components_(std::move(components)), var_(var), box_(std::move(box)) {
  if (components_.empty()) throw std::invalid_argument("GaussianMixture: no components");
  if (!(var_ > 0.0)) throw std::invalid_argument("GaussianMixture: variance must be positive");
  if (box_.dimension() != 2) throw std::invalid_argument("GaussianMixture: box must be 2-d");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.weight > 0.0)) throw std::invalid_argument("GaussianMixture: weights must be positive");
    total += c.weight;
  }
  log_weight_.reserve(components_.size());
  for (const auto& c : components_) log_weight_.push_back(std::log(c.weight / total));
}

double GaussianMixture::energy(std::span<const double> x) const {
  // -log sum_i exp(log w_i - log(2 pi var) - |x - mu_i|^2 / (2 var))
  const double log_norm = std::log(2.0 * std::numbers::pi * var_);
  double hi = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components_.size());
  for (std::size_t i = 0; i < components_.size(); ++i) {
    double dx = x[0] - components_[i].mx;
    double dy = x[1] - components_[i].my;
    terms[i] = log_weight_[i] - log_norm - (dx * dx + dy * dy) / (2.0 * var_);
    hi = std::max(hi, terms[i]);
  }
  double s = 0.0;
  for (double t : terms) s += std::exp(t - hi);
  return -(hi + std::log(s));
}

std::vector<GaussianMixture::Component> GaussianMixture::load_components_csv(
    const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open mixture components file: " + path);
  std::vector<Component> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream ss(line);
    Component c{};
    if (!(ss >> c.weight >> c.mx >> c.my)) {
      if (out.empty()) continue;  // header row
      throw std::runtime_error("malformed mixture component row: " + line);
    }
    out.push_back(c);
  }
  if (out.empty()) throw std::runtime_error("mixture components file is empty: " + path);
  return out;
}

void RotationMatrix::apply(std::span<const double> x, std::span<double> y) const {
  for (std::size_t i = 0; i < d; ++i) {
    double s = 0.0;
    const double* row = &r[i * d];
    for (std::size_t j = 0; j < d; ++j) s += row[j] * x[j];
    y[i] = s;
  }
}

RotationMatrix identity_rotation(std::size_t d) {
  RotationMatrix m;
  m.d = d;
  m.r.assign(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m.r[i * d + i] = 1.0;
  return m;
}

RotationMatrix salomon_rotation(std::size_t d, std::uint64_t seed) {
  if (d < 2) throw std::invalid_argument("salomon_rotation: no rotation needed for d < 2");
  RotationMatrix m = identity_rotation(d);
  m.seed = seed;

  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  pairs.reserve(d * (d - 1) / 2);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = i + 1; j < d; ++j) pairs.emplace_back(i, j);

  Rng rng = Rng::stream(seed, /*role=*/0x526f74ull, 0);  // "Rot"
  for (std::size_t k = pairs.size(); k > 1; --k)
    std::swap(pairs[k - 1], pairs[rng.uniform_index(k)]);

  for (auto [i, j] : pairs) {
    double phi = rng.uniform(0.0, 2.0 * std::numbers::pi);
    double c = std::cos(phi), s = std::sin(phi);
    // Left-multiply by the Givens rotation acting on rows i and j.
    for (std::size_t col = 0; col < d; ++col) {
      double a = m.r[i * d + col];
      double b = m.r[j * d + col];
      m.r[i * d + col] = c * a - s * b;
      m.r[j * d + col] = s * a + c * b;
    }
  }

  // Construction invariant: R^T R = I.
  for (std::size_t i = 0; i < d; ++i) {
    for (std::size_t j = 0; j < d; ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < d; ++k) s += m.r[k * d + i] * m.r[k * d + j];
      double expect = (i == j) ? 1.0 : 0.0;
      if (std::abs(s - expect) > 1e-10)
        throw std::logic_error("salomon_rotation: orthogonality check failed");
    }
  }
  return m;
}

RotatedRastrigin::RotatedRastrigin(std::size_t d, RotationMatrix rotation)
    : rotation_(std::move(rotation)), box_(BoxSpace::cube(d, -5.12, 5.12)) {
  if (d == 0) throw std::invalid_argument("RotatedRastrigin: dimension must be positive");
  if (rotation_.d != d) throw std::invalid_argument("RotatedRastrigin: rotation dimension mismatch");
}

double rastrigin(std::span<const double> y) {
  const double two_pi = 2.0 * std::numbers::pi;
  double s = 10.0 * static_cast<double>(y.size());
  for (double v : y) s += v * v - 10.0 * std::cos(two_pi * v);
  return s;
}

double RotatedRastrigin::energy(std::span<const double> x) const {
  const std::size_t d = rotation_.d;
  const double two_pi = 2.0 * std::numbers::pi;
  double s = 10.0 * static_cast<double>(d);
  for (std::size_t i = 0; i < d; ++i) {
    double yi = 0.0;
    const double* row = &rotation_.r[i * d];
    for (std::size_t j = 0; j < d; ++j) yi += row[j] * x[j];
    s += yi * yi - 10.0 * std::cos(two_pi * yi);
  }
  return s;
}

}  // namespace pisaa
