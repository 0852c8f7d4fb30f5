#pragma once

#include <string>
#include <vector>

#include "inmc/tape.hpp"
#include "inmc/vec.hpp"

namespace inmc {

// Named flat segments of 64-bit floats, one segment per layer. The segment
// list is fixed at network construction; values are snapshots that can be
// shared read-only across threads.
class Parameters {
 public:
  int add_segment(std::string name, Vec64 values);

  int segment_count() const { return static_cast<int>(segs_.size()); }
  size_t total_size() const;
  const std::string& name(int i) const { return names_[static_cast<size_t>(i)]; }
  const Vec64& seg(int i) const { return segs_[static_cast<size_t>(i)]; }
  Vec64& seg(int i) { return segs_[static_cast<size_t>(i)]; }
  int find(const std::string& name) const;  // -1 if absent

  // Zero-valued copy with the same layout.
  Parameters zeros_like() const;

 private:
  std::vector<std::string> names_;
  std::vector<Vec64> segs_;
};

// One tape leaf per parameter segment. Reusing the same Var for every use
// of a segment makes the backward pass accumulate its adjoint additively.
struct BoundParams {
  std::vector<Var> vars;

  static BoundParams bind(Tape& tape, const Parameters& p);
  Var var(int seg) const { return vars[static_cast<size_t>(seg)]; }
};

// Extract d(root)/d(segment) for every segment after tape.backward().
// Segments not used on the tape get zero gradients.
Parameters gradients(const Tape& tape, const Parameters& shape, const BoundParams& bound);

enum class StepDirection { kDescend, kAscend };

struct RmsPropConfig {
  double lr = 5e-5;
  double decay = 0.9;
  double eps = 1e-8;
};

// Per-parameter squared-gradient accumulator, laid out like the parameters.
struct RmsPropState {
  Parameters accum;

  static RmsPropState init(const Parameters& shape) { return {shape.zeros_like()}; }
};

// accum <- decay*accum + (1-decay)*grad^2; param -+= lr*grad/sqrt(accum+eps).
void rmsprop_step(Parameters& params, const Parameters& grads, RmsPropState& state,
                  const RmsPropConfig& cfg, StepDirection dir);

// Clamp every entry into [-w, w].
void clamp_weights(Parameters& params, double w);

}  // namespace inmc
