#pragma once

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <stdexcept>
#include <vector>

namespace pisaa {

/// Counter-based random stream. Each stream is a keyed hash of an
/// incrementing counter, so streams derived from distinct (seed, role,
/// index) triples are independent and the full generator state is two
/// integers plus the Box-Muller spare. That makes checkpointing and
/// reproducible parallelism trivial: a stream never shares state with
/// any other stream.
class Rng {
 public:
  Rng() : Rng(0) {}
  explicit Rng(std::uint64_t key) : key_(key) {}

  /// Derive the stream key for (seed, role, index). Used by the engine to
  /// hand one stream to each individual plus dedicated streams for
  /// initialisation and the crossover phase.
  static std::uint64_t stream_key(std::uint64_t seed, std::uint64_t role,
                                  std::uint64_t index) {
    std::uint64_t k = mix(seed + 0x9E3779B97F4A7C15ull);
    k = mix(k ^ mix(role + 0xBF58476D1CE4E5B9ull));
    k = mix(k ^ mix(index + 0x94D049BB133111EBull));
    return k;
  }

  static Rng stream(std::uint64_t seed, std::uint64_t role, std::uint64_t index) {
    return Rng(stream_key(seed, role, index));
  }

  std::uint64_t next_u64() {
    std::uint64_t c = ctr_++;
    return mix(key_ ^ mix(c + 0x9E3779B97F4A7C15ull));
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1): zero draws are rejected.
  double uniform_open() {
    double u;
    do {
      u = uniform();
    } while (u == 0.0);
    return u;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Uniform on the open interval (-1, 1); endpoints never produced.
  double symmetric_open() {
    double u = 2.0 * uniform() - 1.0;
    while (u == -1.0) u = 2.0 * uniform() - 1.0;
    return u;
  }

  /// Index uniform on {0, ..., n-1} by rejection (no modulo bias).
  std::uint64_t uniform_index(std::uint64_t n) {
    if (n == 0) throw std::invalid_argument("uniform_index: n must be positive");
    std::uint64_t threshold = (0 - n) % n;
    for (;;) {
      std::uint64_t r = next_u64();
      if (r >= threshold) return r % n;
    }
  }

  /// Standard normal via Box-Muller; the spare deviate is cached and is
  /// part of the stream state for checkpointing purposes.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform_open();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  void fill_normal(std::span<double> out) {
    for (double& v : out) v = normal();
  }

  /// Draw an index with probability proportional to weights[i] (weights
  /// need not be normalised; all must be >= 0 with a positive sum).
  std::size_t categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (!(total > 0.0)) throw std::invalid_argument("categorical: zero weight sum");
    double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t i = 0; i < weights.size(); ++i) {
      if (weights[i] > 0.0) last_positive = i;
      acc += weights[i];
      if (u < acc) return i;
    }
    return last_positive;  // rounding fallback; never lands on a zero weight
  }

  void save(std::ostream& os) const {
    write_u64(os, key_);
    write_u64(os, ctr_);
    os.put(has_spare_ ? 1 : 0);
    write_double(os, spare_);
  }

  static Rng load(std::istream& is) {
    Rng r;
    r.key_ = read_u64(is);
    r.ctr_ = read_u64(is);
    r.has_spare_ = is.get() != 0;
    r.spare_ = read_double(is);
    return r;
  }

  friend bool operator==(const Rng& a, const Rng& b) {
    return a.key_ == b.key_ && a.ctr_ == b.ctr_ && a.has_spare_ == b.has_spare_ &&
           (!a.has_spare_ || a.spare_ == b.spare_);
  }

  /// 64-bit finaliser (SplitMix64 / Stafford mix13).
  static std::uint64_t mix(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ull;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBull;
    z ^= z >> 31;
    return z;
  }

 private:
  static void write_u64(std::ostream& os, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) os.put(static_cast<char>((v >> (8 * i)) & 0xFF));
  }
  static std::uint64_t read_u64(std::istream& is) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(is.get())) << (8 * i);
    return v;
  }
  static void write_double(std::ostream& os, double d) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(d));
    __builtin_memcpy(&bits, &d, sizeof(bits));
    write_u64(os, bits);
  }
  static double read_double(std::istream& is) {
    std::uint64_t bits = read_u64(is);
    double d;
    __builtin_memcpy(&d, &bits, sizeof(d));
    return d;
  }

  std::uint64_t key_ = 0;
  std::uint64_t ctr_ = 0;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace pisaa
