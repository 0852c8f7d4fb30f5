#include "inmc/involutive_net.hpp"

#include <algorithm>
#include <cmath>

#include "inmc/errors.hpp"

namespace inmc {

namespace {

void check_involutive_perm(const std::vector<int>& sigma) {
  int n = static_cast<int>(sigma.size());
  for (int i = 0; i < n; ++i) {
    int j = sigma[static_cast<size_t>(i)];
    if (j < 0 || j >= n) throw ShapeError("sigma out of range");
    if (sigma[static_cast<size_t>(j)] != i)
      throw ShapeError("sigma is not an involutive permutation");
  }
}

}  // namespace

BlockPtr make_function_block(InvertibleNet g) {
  auto b = std::make_unique<Block>();
  b->dim = 2 * g.dim();
  b->node = FunctionBlock{std::move(g)};
  return b;
}

BlockPtr make_permutation_block(std::vector<int> sigma) {
  check_involutive_perm(sigma);
  auto b = std::make_unique<Block>();
  b->dim = static_cast<int>(sigma.size());
  b->node = PermutationBlock{std::move(sigma)};
  return b;
}

BlockPtr make_matrix_block(Parameters& store, const std::string& prefix, Vec64 v, Vec64 w) {
  if (v.size() != w.size() || v.empty()) throw ShapeError("matrix block vectors must match");
  double nv = two_norm(v), nw = two_norm(w);
  if (nv == 0.0 || nw == 0.0) throw DomainError("matrix block vectors must be nonzero");
  double vw = dot(v, w);
  if (std::abs(vw) < 1e-8 * nv * nw)
    throw DomainError("matrix block vectors are too close to orthogonal");
  for (double& x : w) x /= nw;
  auto b = std::make_unique<Block>();
  b->dim = static_cast<int>(v.size());
  int vs = store.add_segment(prefix + ".v", std::move(v));
  int ws = store.add_segment(prefix + ".w", std::move(w));
  b->node = MatrixBlock{vs, ws};
  return b;
}

BlockPtr make_identity_block(int dim) {
  if (dim <= 0) throw ShapeError("identity block dim must be positive");
  auto b = std::make_unique<Block>();
  b->dim = dim;
  b->node = IdentityBlock{};
  return b;
}

BlockPtr make_sandwich(BlockPtr outer, BlockPtr inner) {
  if (!outer || !inner) throw ShapeError("sandwich needs two blocks");
  if (outer->dim != inner->dim) throw ShapeError("sandwich dimension mismatch");
  auto b = std::make_unique<Block>();
  b->dim = outer->dim;
  b->node = Sandwich{std::move(outer), std::move(inner)};
  return b;
}

BlockPtr make_conjugate(InvertibleNet g, BlockPtr inner) {
  if (!inner) throw ShapeError("conjugate needs an inner block");
  if (g.dim() != inner->dim) throw ShapeError("conjugate dimension mismatch");
  auto b = std::make_unique<Block>();
  b->dim = inner->dim;
  b->node = Conjugate{std::move(g), std::move(inner)};
  return b;
}

namespace {

Vec64 apply_plain(const Block& b, const Parameters& store, std::span<const double> x);

struct PlainVisitor {
  const Parameters& store;
  std::span<const double> x;
  int dim;

  Vec64 operator()(const FunctionBlock& f) const {
    int n = dim / 2;
    Vec64 hi = f.g.inverse(store, x.subspan(static_cast<size_t>(n)));
    Vec64 lo = f.g.forward(store, x.subspan(0, static_cast<size_t>(n)));
    return concat(hi, lo);
  }
  Vec64 operator()(const PermutationBlock& p) const {
    Vec64 out(static_cast<size_t>(dim));
    for (int i = 0; i < dim; ++i) out[static_cast<size_t>(i)] = x[static_cast<size_t>(p.sigma[static_cast<size_t>(i)])];
    return out;
  }
  Vec64 operator()(const MatrixBlock& m) const {
    const Vec64& v = store.seg(m.v_seg);
    const Vec64& w = store.seg(m.w_seg);
    double c = 2.0 * dot(w, x) / dot(v, w);
    Vec64 out(x.begin(), x.end());
    for (int i = 0; i < dim; ++i) out[static_cast<size_t>(i)] -= c * v[static_cast<size_t>(i)];
    return out;
  }
  Vec64 operator()(const IdentityBlock&) const { return Vec64(x.begin(), x.end()); }
  Vec64 operator()(const Sandwich& s) const {
    Vec64 t = apply_plain(*s.outer, store, x);
    t = apply_plain(*s.inner, store, t);
    return apply_plain(*s.outer, store, t);
  }
  Vec64 operator()(const Conjugate& c) const {
    Vec64 t = c.g.forward(store, x);
    t = apply_plain(*c.inner, store, t);
    return c.g.inverse(store, t);
  }
};

Vec64 apply_plain(const Block& b, const Parameters& store, std::span<const double> x) {
  return std::visit(PlainVisitor{store, x, b.dim}, b.node);
}

Var apply_tape(const Block& b, Tape& tape, const BoundParams& bound, Var x);

struct TapeVisitor {
  Tape& tape;
  const BoundParams& bound;
  Var x;
  int dim;

  Var operator()(const FunctionBlock& f) const {
    int n = dim / 2;
    Var lo = tape.slice(x, 0, n);
    Var hi = tape.slice(x, n, n);
    Var a = f.g.inverse(tape, bound, hi);
    Var b = f.g.forward(tape, bound, lo);
    return tape.concat(a, b);
  }
  Var operator()(const PermutationBlock& p) const { return tape.permute(x, p.sigma); }
  Var operator()(const MatrixBlock& m) const {
    Var v = bound.var(m.v_seg);
    Var w = bound.var(m.w_seg);
    Var wx = tape.sum(tape.mul(w, x));
    Var vw = tape.sum(tape.mul(v, w));
    Var coeff = tape.div(tape.scale(wx, 2.0), vw);
    return tape.sub(x, tape.mul_scalar(v, coeff));
  }
  Var operator()(const IdentityBlock&) const { return x; }
  Var operator()(const Sandwich& s) const {
    Var t = apply_tape(*s.outer, tape, bound, x);
    t = apply_tape(*s.inner, tape, bound, t);
    return apply_tape(*s.outer, tape, bound, t);
  }
  Var operator()(const Conjugate& c) const {
    Var t = c.g.forward(tape, bound, x);
    t = apply_tape(*c.inner, tape, bound, t);
    return c.g.inverse(tape, bound, t);
  }
};

Var apply_tape(const Block& b, Tape& tape, const BoundParams& bound, Var x) {
  return std::visit(TapeVisitor{tape, bound, x, b.dim}, b.node);
}

bool block_volume_preserving(const Block& b) {
  return std::visit(
      [](const auto& n) -> bool {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, Sandwich>)
          return block_volume_preserving(*n.outer) && block_volume_preserving(*n.inner);
        else if constexpr (std::is_same_v<T, Conjugate>)
          return block_volume_preserving(*n.inner);
        else
          return true;  // all leaf blocks preserve volume
      },
      b.node);
}

void renorm_blocks(Block& b, Parameters& store) {
  std::visit(
      [&](auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, MatrixBlock>) {
          Vec64& w = store.seg(n.w_seg);
          double nw = two_norm(w);
          if (nw == 0.0) throw DomainError("matrix block w collapsed to zero");
          for (double& x : w) x /= nw;
        } else if constexpr (std::is_same_v<T, Sandwich>) {
          renorm_blocks(*n.outer, store);
          renorm_blocks(*n.inner, store);
        } else if constexpr (std::is_same_v<T, Conjugate>) {
          renorm_blocks(*n.inner, store);
        }
      },
      b.node);
}

}  // namespace

InvolutiveNetwork::InvolutiveNetwork(Parameters store, BlockPtr root)
    : params_(std::move(store)), root_(std::move(root)) {
  if (!root_) throw ShapeError("involutive network needs a root block");
}

Vec64 InvolutiveNetwork::apply(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim()) throw ShapeError("involutive apply: bad length");
  return apply_plain(*root_, params_, x);
}

Var InvolutiveNetwork::apply(Tape& tape, const BoundParams& bound, Var x) const {
  return apply_tape(*root_, tape, bound, x);
}

bool InvolutiveNetwork::volume_preserving() const { return block_volume_preserving(*root_); }

void InvolutiveNetwork::renormalize_matrix_blocks() { renorm_blocks(*root_, params_); }

double count_involutions(int n) {
  double a = 1.0, b = 1.0;  // I(0), I(1)
  if (n == 0) return 1.0;
  for (int k = 2; k <= n; ++k) {
    double c = b + (k - 1) * a;
    a = b;
    b = c;
  }
  return b;
}

std::vector<int> sample_involutive_permutation(int n, RngStream& rng) {
  if (n < 1) throw ShapeError("involutive permutation needs n >= 1");
  std::vector<double> inv_count(static_cast<size_t>(n) + 1);
  for (int k = 0; k <= n; ++k) inv_count[static_cast<size_t>(k)] = count_involutions(k);

  std::vector<int> sigma(static_cast<size_t>(n));
  std::vector<int> free;
  free.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) free.push_back(i);

  while (!free.empty()) {
    int k = static_cast<int>(free.size());
    int e = free.back();
    if (k == 1) {
      sigma[static_cast<size_t>(e)] = e;
      free.pop_back();
      continue;
    }
    // e is a fixed point with probability I(k-1)/I(k); otherwise it pairs
    // uniformly with one of the other k-1 elements.
    double p_fixed = inv_count[static_cast<size_t>(k) - 1] / inv_count[static_cast<size_t>(k)];
    if (rng.next_uniform() < p_fixed) {
      sigma[static_cast<size_t>(e)] = e;
      free.pop_back();
    } else {
      size_t j = static_cast<size_t>(rng.next_below(static_cast<uint64_t>(k) - 1));
      int partner = free[j];
      sigma[static_cast<size_t>(e)] = partner;
      sigma[static_cast<size_t>(partner)] = e;
      free.pop_back();
      free.erase(free.begin() + static_cast<std::ptrdiff_t>(j));
    }
  }
  return sigma;
}

double log_abs_det_jacobian_numeric(const std::function<Vec64(std::span<const double>)>& f,
                                    std::span<const double> x, double h) {
  int n = static_cast<int>(x.size());
  if (n > 16) throw DimensionTooLarge("numeric Jacobian limited to dim <= 16");
  std::vector<Vec64> jac(static_cast<size_t>(n));
  Vec64 xp(x.begin(), x.end());
  for (int j = 0; j < n; ++j) {
    xp[static_cast<size_t>(j)] = x[static_cast<size_t>(j)] + h;
    Vec64 fp = f(xp);
    xp[static_cast<size_t>(j)] = x[static_cast<size_t>(j)] - h;
    Vec64 fm = f(xp);
    xp[static_cast<size_t>(j)] = x[static_cast<size_t>(j)];
    jac[static_cast<size_t>(j)].resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      jac[static_cast<size_t>(j)][static_cast<size_t>(i)] =
          (fp[static_cast<size_t>(i)] - fm[static_cast<size_t>(i)]) / (2.0 * h);
  }
  // LU with partial pivoting on column-major storage; log|det| = sum log|U_ii|.
  std::vector<Vec64>& a = jac;  // a[col][row]
  double log_det = 0.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(a[static_cast<size_t>(k)][static_cast<size_t>(k)]);
    for (int r = k + 1; r < n; ++r) {
      double cand = std::abs(a[static_cast<size_t>(k)][static_cast<size_t>(r)]);
      if (cand > best) {
        best = cand;
        piv = r;
      }
    }
    if (best == 0.0) throw DomainError("numeric Jacobian is singular");
    if (piv != k)
      for (int c = 0; c < n; ++c)
        std::swap(a[static_cast<size_t>(c)][static_cast<size_t>(k)],
                  a[static_cast<size_t>(c)][static_cast<size_t>(piv)]);
    double pivot = a[static_cast<size_t>(k)][static_cast<size_t>(k)];
    log_det += std::log(std::abs(pivot));
    for (int r = k + 1; r < n; ++r) {
      double m = a[static_cast<size_t>(k)][static_cast<size_t>(r)] / pivot;
      if (m == 0.0) continue;
      for (int c = k + 1; c < n; ++c)
        a[static_cast<size_t>(c)][static_cast<size_t>(r)] -=
            m * a[static_cast<size_t>(c)][static_cast<size_t>(k)];
    }
  }
  return log_det;
}

namespace {

InvertibleNet build_coupled_net(Parameters& store, const std::string& prefix, int dim,
                                int hidden_mult, RngStream& rng) {
  InvertibleNet net(dim);
  net.add_coupling(store, prefix + ".c0", /*shift_odd=*/true, hidden_mult, rng);
  net.add_coupling(store, prefix + ".c1", /*shift_odd=*/false, hidden_mult, rng);
  net.add_permutation(sample_permutation(dim, rng));
  net.add_coupling(store, prefix + ".c2", /*shift_odd=*/true, hidden_mult, rng);
  net.add_coupling(store, prefix + ".c3", /*shift_odd=*/false, hidden_mult, rng);
  return net;
}

}  // namespace

InvolutiveNetwork build_default_generator(int state_dim, int aux_dim, int hidden_mult,
                                          RngStream& rng) {
  int dim = state_dim + aux_dim;
  if (dim % 2 != 0 || dim < 4) throw ShapeError("generator needs an even dimension >= 4");
  Parameters store;
  std::vector<int> sigma = sample_involutive_permutation(dim, rng);
  InvertibleNet g = build_coupled_net(store, "g", dim / 2, hidden_mult, rng);
  InvertibleNet h = build_coupled_net(store, "h", dim / 2, hidden_mult, rng);
  BlockPtr inner = make_sandwich(make_permutation_block(sigma), make_function_block(std::move(h)));
  BlockPtr root = make_sandwich(make_function_block(std::move(g)), std::move(inner));
  return InvolutiveNetwork(std::move(store), std::move(root));
}

}  // namespace inmc
