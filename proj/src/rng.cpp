#include "inmc/rng.hpp"

#include <cmath>
#include <numbers>

namespace inmc {

namespace {

// splitmix64 step (Vigna); full-period 64-bit mixer.
uint64_t splitmix_next(uint64_t& s) {
  uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(uint64_t seed) : state_(seed) {
  // Warm up so that small seeds do not produce correlated early output.
  splitmix_next(state_);
  splitmix_next(state_);
}

RngStream RngStream::keyed(uint64_t seed, std::string_view purpose, uint64_t index) {
  uint64_t s = seed;
  uint64_t a = splitmix_next(s);
  s = a ^ fnv1a(purpose);
  uint64_t b = splitmix_next(s);
  s = b ^ (index * 0xd1342543de82ef95ULL + 0x2545f4914f6cdd1dULL);
  RngStream r(0);
  r.state_ = s;
  splitmix_next(r.state_);
  return r;
}

uint64_t RngStream::next_u64() { return splitmix_next(state_); }

double RngStream::next_uniform() {
  // 53 high bits -> double in [0, 1).
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::next_gaussian() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_gaussian_;
  }
  // Box-Muller on (0,1] x [0,1).
  double u1 = 1.0 - next_uniform();
  double u2 = next_uniform();
  double r = std::sqrt(-2.0 * std::log(u1));
  double theta = 2.0 * std::numbers::pi * u2;
  cached_gaussian_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

void RngStream::fill_gaussian(std::span<double> out) {
  for (double& x : out) x = next_gaussian();
}

uint64_t RngStream::next_below(uint64_t n) {
  // Rejection sampling to avoid modulo bias.
  uint64_t limit = ~uint64_t{0} - (~uint64_t{0} % n);
  uint64_t v;
  do {
    v = next_u64();
  } while (v >= limit);
  return v % n;
}

}  // namespace inmc
