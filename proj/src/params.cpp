#include "inmc/params.hpp"

#include <algorithm>
#include <cmath>

#include "inmc/errors.hpp"

namespace inmc {

int Parameters::add_segment(std::string name, Vec64 values) {
  names_.push_back(std::move(name));
  segs_.push_back(std::move(values));
  return static_cast<int>(segs_.size()) - 1;
}

size_t Parameters::total_size() const {
  size_t n = 0;
  for (const auto& s : segs_) n += s.size();
  return n;
}

int Parameters::find(const std::string& name) const {
  for (size_t i = 0; i < names_.size(); ++i)
    if (names_[i] == name) return static_cast<int>(i);
  return -1;
}

Parameters Parameters::zeros_like() const {
  Parameters out;
  for (size_t i = 0; i < segs_.size(); ++i)
    out.add_segment(names_[i], Vec64(segs_[i].size(), 0.0));
  return out;
}

BoundParams BoundParams::bind(Tape& tape, const Parameters& p) {
  BoundParams b;
  b.vars.reserve(static_cast<size_t>(p.segment_count()));
  for (int i = 0; i < p.segment_count(); ++i) b.vars.push_back(tape.input(p.seg(i)));
  return b;
}

Parameters gradients(const Tape& tape, const Parameters& shape, const BoundParams& bound) {
  Parameters g = shape.zeros_like();
  for (int i = 0; i < shape.segment_count(); ++i) {
    auto a = tape.adjoint(bound.var(i));
    std::copy(a.begin(), a.end(), g.seg(i).begin());
  }
  return g;
}

void rmsprop_step(Parameters& params, const Parameters& grads, RmsPropState& state,
                  const RmsPropConfig& cfg, StepDirection dir) {
  if (params.segment_count() != grads.segment_count())
    throw ShapeError("rmsprop: parameter/gradient segment count mismatch");
  double sign = dir == StepDirection::kAscend ? 1.0 : -1.0;
  for (int i = 0; i < params.segment_count(); ++i) {
    Vec64& p = params.seg(i);
    const Vec64& g = grads.seg(i);
    Vec64& a = state.accum.seg(i);
    if (p.size() != g.size()) throw ShapeError("rmsprop: segment size mismatch");
    for (size_t k = 0; k < p.size(); ++k) {
      a[k] = cfg.decay * a[k] + (1.0 - cfg.decay) * g[k] * g[k];
      p[k] += sign * cfg.lr * g[k] / std::sqrt(a[k] + cfg.eps);
    }
  }
}

void clamp_weights(Parameters& params, double w) {
  for (int i = 0; i < params.segment_count(); ++i)
    for (double& x : params.seg(i)) x = std::clamp(x, -w, w);
}

}  // namespace inmc
