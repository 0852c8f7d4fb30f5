#pragma once

#include <cstdint>
#include <span>
#include <string_view>

namespace inmc {

// Deterministic splittable random stream. Streams are derived by mixing
// (seed, purpose, index), so adding chains or reordering purposes never
// perturbs the draws of an existing stream. All sampling in the library
// goes through this type; nothing uses std:: distributions, which keeps
// output reproducible across standard library implementations.
class RngStream {
 public:
  explicit RngStream(uint64_t seed);

  // Stream keyed by a purpose label and an index (e.g. "chain", 17).
  static RngStream keyed(uint64_t seed, std::string_view purpose, uint64_t index = 0);

  uint64_t next_u64();

  // Uniform in [0, 1).
  double next_uniform();

  // Standard normal via Box-Muller; the second value of each pair is cached.
  double next_gaussian();

  void fill_gaussian(std::span<double> out);

  // Uniform integer in [0, n).
  uint64_t next_below(uint64_t n);

 private:
  uint64_t state_;
  double cached_gaussian_ = 0.0;
  bool has_cached_ = false;
};

}  // namespace inmc
