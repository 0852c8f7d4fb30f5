#include "inmc/mlp.hpp"

#include <cmath>

#include "inmc/errors.hpp"

namespace inmc {

Mlp Mlp::create(Parameters& store, const std::string& prefix, const std::vector<int>& widths,
                RngStream& rng, FinalInit final_init) {
  if (widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  Mlp m;
  m.prefix_ = prefix;
  m.widths_ = widths;
  size_t layers = widths.size() - 1;
  for (size_t l = 0; l < layers; ++l) {
    int in = widths[l], out = widths[l + 1];
    Vec64 w(static_cast<size_t>(in) * out, 0.0);
    bool last = l + 1 == layers;
    if (!(last && final_init == FinalInit::kZero)) {
      double bound = 1.0 / std::sqrt(static_cast<double>(in));
      for (double& x : w) x = (2.0 * rng.next_uniform() - 1.0) * bound;
    }
    m.w_segs_.push_back(store.add_segment(prefix + ".w" + std::to_string(l), std::move(w)));
    m.b_segs_.push_back(
        store.add_segment(prefix + ".b" + std::to_string(l), Vec64(static_cast<size_t>(out), 0.0)));
  }
  return m;
}

Mlp Mlp::create_uniform(Parameters& store, const std::string& prefix,
                        const std::vector<int>& widths, RngStream& rng, double bound) {
  if (widths.size() < 2) throw ShapeError("mlp needs at least input and output widths");
  Mlp m;
  m.prefix_ = prefix;
  m.widths_ = widths;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    int in = widths[l], out = widths[l + 1];
    Vec64 w(static_cast<size_t>(in) * out);
    Vec64 b(static_cast<size_t>(out));
    for (double& x : w) x = (2.0 * rng.next_uniform() - 1.0) * bound;
    for (double& x : b) x = (2.0 * rng.next_uniform() - 1.0) * bound;
    m.w_segs_.push_back(store.add_segment(prefix + ".w" + std::to_string(l), std::move(w)));
    m.b_segs_.push_back(store.add_segment(prefix + ".b" + std::to_string(l), std::move(b)));
  }
  return m;
}

Mlp Mlp::attach(const Parameters& store, const std::string& prefix,
                const std::vector<int>& widths) {
  Mlp m;
  m.prefix_ = prefix;
  m.widths_ = widths;
  for (size_t l = 0; l + 1 < widths.size(); ++l) {
    int w = store.find(prefix + ".w" + std::to_string(l));
    int b = store.find(prefix + ".b" + std::to_string(l));
    if (w < 0 || b < 0) throw ShapeError("mlp attach: missing segment for " + prefix);
    size_t expect = static_cast<size_t>(widths[l]) * widths[l + 1];
    if (store.seg(w).size() != expect || store.seg(b).size() != static_cast<size_t>(widths[l + 1]))
      throw ShapeError("mlp attach: segment size mismatch for " + prefix);
    m.w_segs_.push_back(w);
    m.b_segs_.push_back(b);
  }
  return m;
}

Vec64 Mlp::forward(const Parameters& store, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != in_dim()) throw ShapeError("mlp forward: bad input length");
  Vec64 cur(x.begin(), x.end());
  for (size_t l = 0; l < w_segs_.size(); ++l) {
    int in = widths_[l], out = widths_[l + 1];
    const Vec64& w = store.seg(w_segs_[l]);
    const Vec64& b = store.seg(b_segs_[l]);
    Vec64 next(static_cast<size_t>(out));
    for (int r = 0; r < out; ++r) {
      double s = b[static_cast<size_t>(r)];
      const double* wr = w.data() + static_cast<size_t>(r) * in;
      for (int c = 0; c < in; ++c) s += wr[c] * cur[static_cast<size_t>(c)];
      next[static_cast<size_t>(r)] = s;
    }
    bool last = l + 1 == w_segs_.size();
    if (!last)
      for (double& v : next) v = v > 0.0 ? v : 0.0;
    cur = std::move(next);
  }
  return cur;
}

Var Mlp::forward(Tape& tape, const BoundParams& bound, Var x) const {
  Var cur = x;
  for (size_t l = 0; l < w_segs_.size(); ++l) {
    int in = widths_[l], out = widths_[l + 1];
    Var z = tape.matvec(bound.var(w_segs_[l]), cur, out, in);
    z = tape.add(z, bound.var(b_segs_[l]));
    bool last = l + 1 == w_segs_.size();
    cur = last ? z : tape.relu(z);
  }
  return cur;
}

}  // namespace inmc
