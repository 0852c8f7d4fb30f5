#include "inmc/invertible_net.hpp"

#include <algorithm>

#include "inmc/errors.hpp"

namespace inmc {

namespace {

void check_partition(const CouplingLayer& l, int dim) {
  std::vector<bool> seen(static_cast<size_t>(dim), false);
  auto mark = [&](const std::vector<int>& idx) {
    for (int i : idx) {
      if (i < 0 || i >= dim || seen[static_cast<size_t>(i)])
        throw ShapeError("coupling partition is not a partition of 0..dim-1");
      seen[static_cast<size_t>(i)] = true;
    }
  };
  mark(l.keep);
  mark(l.shift);
  if (static_cast<int>(l.keep.size() + l.shift.size()) != dim)
    throw ShapeError("coupling partition does not cover all coordinates");
  if (l.net.in_dim() != static_cast<int>(l.keep.size()) ||
      l.net.out_dim() != static_cast<int>(l.shift.size()))
    throw ShapeError("coupling shift net shape does not match partition");
}

void check_perm(const std::vector<int>& perm, int dim) {
  if (static_cast<int>(perm.size()) != dim) throw ShapeError("permutation length != dim");
  std::vector<bool> seen(perm.size(), false);
  for (int i : perm) {
    if (i < 0 || i >= dim || seen[static_cast<size_t>(i)])
      throw ShapeError("not a permutation");
    seen[static_cast<size_t>(i)] = true;
  }
}

}  // namespace

InvertibleNet::InvertibleNet(int dim) : dim_(dim) {
  if (dim <= 0) throw ShapeError("invertible net dim must be positive");
}

void InvertibleNet::add_coupling(Parameters& store, const std::string& prefix, bool shift_odd,
                                 int hidden_mult, RngStream& rng) {
  if (dim_ % 2 != 0) throw ShapeError("coupling layers need an even dimension");
  CouplingLayer l{.keep = {}, .shift = {}, .net = Mlp()};
  for (int i = 0; i < dim_; ++i) {
    bool odd = (i % 2) == 1;
    (odd == shift_odd ? l.shift : l.keep).push_back(i);
  }
  int half = dim_ / 2;
  l.net = Mlp::create(store, prefix, {half, hidden_mult * half, half}, rng, Mlp::FinalInit::kZero);
  add_coupling(std::move(l));
}

void InvertibleNet::add_coupling(CouplingLayer layer) {
  if (dim_ % 2 != 0) throw ShapeError("coupling layers need an even dimension");
  check_partition(layer, dim_);
  layers_.push_back(std::move(layer));
}

void InvertibleNet::add_permutation(std::vector<int> perm) {
  check_perm(perm, dim_);
  layers_.push_back(PermutationLayer{std::move(perm)});
}

Vec64 InvertibleNet::forward(const Parameters& store, std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw ShapeError("invertible forward: bad length");
  Vec64 cur(x.begin(), x.end());
  Vec64 tmp(cur.size());
  Vec64 a;
  for (const auto& layer : layers_) {
    if (const auto* c = std::get_if<CouplingLayer>(&layer)) {
      a.resize(c->keep.size());
      for (size_t i = 0; i < c->keep.size(); ++i) a[i] = cur[static_cast<size_t>(c->keep[i])];
      Vec64 m = c->net.forward(store, a);
      for (size_t i = 0; i < c->shift.size(); ++i) cur[static_cast<size_t>(c->shift[i])] += m[i];
    } else {
      const auto& p = std::get<PermutationLayer>(layer).perm;
      for (size_t i = 0; i < p.size(); ++i) tmp[i] = cur[static_cast<size_t>(p[i])];
      std::swap(cur, tmp);
    }
  }
  return cur;
}

Vec64 InvertibleNet::inverse(const Parameters& store, std::span<const double> y) const {
  if (static_cast<int>(y.size()) != dim_) throw ShapeError("invertible inverse: bad length");
  Vec64 cur(y.begin(), y.end());
  Vec64 tmp(cur.size());
  Vec64 a;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (const auto* c = std::get_if<CouplingLayer>(&*it)) {
      a.resize(c->keep.size());
      for (size_t i = 0; i < c->keep.size(); ++i) a[i] = cur[static_cast<size_t>(c->keep[i])];
      Vec64 m = c->net.forward(store, a);
      for (size_t i = 0; i < c->shift.size(); ++i) cur[static_cast<size_t>(c->shift[i])] -= m[i];
    } else {
      const auto& p = std::get<PermutationLayer>(*it).perm;
      for (size_t i = 0; i < p.size(); ++i) tmp[static_cast<size_t>(p[i])] = cur[i];
      std::swap(cur, tmp);
    }
  }
  return cur;
}

namespace {

// Tape-side gather/scatter for one coupling layer. Reorders to
// [keep..., shift...], applies the shift on the second half, and restores
// the original coordinate order.
Var coupling_tape(Tape& tape, const BoundParams& bound, const CouplingLayer& c, Var x,
                  bool invert) {
  std::vector<int> order = c.keep;
  order.insert(order.end(), c.shift.begin(), c.shift.end());
  Var packed = tape.permute(x, order);
  int nk = static_cast<int>(c.keep.size());
  int ns = static_cast<int>(c.shift.size());
  Var a = tape.slice(packed, 0, nk);
  Var b = tape.slice(packed, nk, ns);
  Var m = c.net.forward(tape, bound, a);
  Var b2 = invert ? tape.sub(b, m) : tape.add(b, m);
  Var joined = tape.concat(a, b2);
  return tape.permute(joined, inverse_permutation(order));
}

}  // namespace

Var InvertibleNet::forward(Tape& tape, const BoundParams& bound, Var x) const {
  Var cur = x;
  for (const auto& layer : layers_) {
    if (const auto* c = std::get_if<CouplingLayer>(&layer)) {
      cur = coupling_tape(tape, bound, *c, cur, /*invert=*/false);
    } else {
      cur = tape.permute(cur, std::get<PermutationLayer>(layer).perm);
    }
  }
  return cur;
}

Var InvertibleNet::inverse(Tape& tape, const BoundParams& bound, Var y) const {
  Var cur = y;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
    if (const auto* c = std::get_if<CouplingLayer>(&*it)) {
      cur = coupling_tape(tape, bound, *c, cur, /*invert=*/true);
    } else {
      cur = tape.permute(cur, inverse_permutation(std::get<PermutationLayer>(*it).perm));
    }
  }
  return cur;
}

std::vector<int> sample_permutation(int n, RngStream& rng) {
  std::vector<int> p(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) p[static_cast<size_t>(i)] = i;
  for (int i = n - 1; i > 0; --i) {
    int j = static_cast<int>(rng.next_below(static_cast<uint64_t>(i) + 1));
    std::swap(p[static_cast<size_t>(i)], p[static_cast<size_t>(j)]);
  }
  return p;
}

std::vector<int> inverse_permutation(const std::vector<int>& perm) {
  std::vector<int> inv(perm.size());
  for (size_t i = 0; i < perm.size(); ++i) inv[static_cast<size_t>(perm[i])] = static_cast<int>(i);
  return inv;
}

}  // namespace inmc
