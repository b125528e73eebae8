#include "pisaa/ising.hpp"

#include <cctype>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace pisaa {

BinaryImage BinaryImage::load_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open image file: " + path);
  BinaryImage img;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<double> row;
    for (char c : line) {
      if (c == '0') row.push_back(0.0);
      else if (c == '1') row.push_back(1.0);
      else if (std::isspace(static_cast<unsigned char>(c))) continue;
      else throw std::runtime_error("unexpected character in 0/1 grid: " + path);
    }
    if (row.empty()) continue;
    if (img.width == 0) img.width = row.size();
    if (row.size() != img.width) throw std::runtime_error("ragged 0/1 grid: " + path);
    img.pixels.insert(img.pixels.end(), row.begin(), row.end());
    ++img.height;
  }
  if (img.size() == 0) throw std::runtime_error("empty 0/1 grid: " + path);
  return img;
}

namespace {

// Reads the next PGM header token, skipping whitespace and # comments.
std::string pgm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {}
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  if (tok.empty()) throw std::runtime_error("truncated PGM header");
  return tok;
}

}  // namespace

BinaryImage BinaryImage::load_pgm(const std::string& path, int threshold) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open image file: " + path);
  std::string magic = pgm_token(in);
  if (magic != "P2" && magic != "P5") throw std::runtime_error("not an 8-bit PGM: " + path);
  std::size_t w = std::stoul(pgm_token(in));
  std::size_t h = std::stoul(pgm_token(in));
  unsigned long maxval = std::stoul(pgm_token(in));
  if (maxval == 0 || maxval > 255) throw std::runtime_error("unsupported PGM maxval: " + path);

  BinaryImage img;
  img.width = w;
  img.height = h;
  img.pixels.resize(w * h);
  if (magic == "P5") {
    std::vector<unsigned char> raw(w * h);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size())
      throw std::runtime_error("truncated PGM payload: " + path);
    for (std::size_t i = 0; i < raw.size(); ++i)
      img.pixels[i] = raw[i] >= threshold ? 1.0 : 0.0;
  } else {
    for (std::size_t i = 0; i < img.pixels.size(); ++i) {
      long v = std::stol(pgm_token(in));
      img.pixels[i] = v >= threshold ? 1.0 : 0.0;
    }
  }
  return img;
}

void BinaryImage::save_text(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write image file: " + path);
  for (std::size_t r = 0; r < height; ++r) {
    for (std::size_t c = 0; c < width; ++c)
      out.put(pixels[r * width + c] != 0.0 ? '1' : '0');
    out.put('\n');
  }
}

IsingRestoration::IsingRestoration(BinaryImage observed, double a, double b,
                                   bool count_pairs_twice)
    : observed_(std::move(observed)), a_(a), b_(b), pairs_twice_(count_pairs_twice) {
  if (observed_.size() == 0) throw std::invalid_argument("IsingRestoration: empty image");
  if (!(a_ > 0.0) || !(b_ > 0.0))
    throw std::invalid_argument("IsingRestoration: a and b must be positive");
}

std::array<long long, 2> IsingRestoration::counts(std::span<const double> x) const {
  const std::size_t h = observed_.height, w = observed_.width;
  long long match = 0, pairs = 0;
  for (std::size_t r = 0; r < h; ++r) {
    for (std::size_t c = 0; c < w; ++c) {
      std::size_t i = r * w + c;
      match += x[i] == observed_.pixels[i];
      // Forward half of the 8-neighbourhood so each unordered pair is
      // visited exactly once: E, SW, S, SE.
      if (c + 1 < w) pairs += x[i] == x[i + 1];
      if (r + 1 < h) {
        if (c > 0) pairs += x[i] == x[i + w - 1];
        pairs += x[i] == x[i + w];
        if (c + 1 < w) pairs += x[i] == x[i + w + 1];
      }
    }
  }
  return {match, pairs};
}

double IsingRestoration::energy_from_counts(const std::array<long long, 2>& c) const {
  double prior = b_ * static_cast<double>(pairs_twice_ ? 2 * c[1] : c[1]);
  return -(a_ * static_cast<double>(c[0]) + prior);
}

double IsingRestoration::energy(std::span<const double> x) const {
  return energy_from_counts(counts(x));
}

std::array<long long, 2> IsingRestoration::flip_count_delta(std::span<const double> x,
                                                            std::size_t site) const {
  const std::size_t h = observed_.height, w = observed_.width;
  const std::size_t r = site / w, c = site % w;
  long long dm = x[site] == observed_.pixels[site] ? -1 : +1;
  long long dp = 0;
  for (int dr = -1; dr <= 1; ++dr) {
    for (int dc = -1; dc <= 1; ++dc) {
      if (dr == 0 && dc == 0) continue;
      std::size_t rr = r + static_cast<std::size_t>(dr);
      std::size_t cc = c + static_cast<std::size_t>(dc);
      if (rr >= h || cc >= w) continue;  // unsigned wrap handles r==0/c==0
      bool equal = x[site] == x[rr * w + cc];
      dp += equal ? -1 : +1;
    }
  }
  return {dm, dp};
}

double IsingRestoration::energy_delta(std::span<const double> x, std::size_t site) const {
  auto base = counts(x);
  auto d = flip_count_delta(x, site);
  std::array<long long, 2> flipped{base[0] + d[0], base[1] + d[1]};
  return energy_from_counts(flipped) - energy_from_counts(base);
}

std::vector<double> IsingRestoration::sample_uniform(Rng& rng) const {
  std::vector<double> x(observed_.size());
  for (double& v : x) v = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return x;
}

}  // namespace pisaa
