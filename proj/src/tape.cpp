#include "inmc/tape.hpp"

#include <algorithm>
#include <cmath>

#include "inmc/errors.hpp"

namespace inmc {

namespace {

double stable_sigmoid(double x) {
  if (x >= 0.0) {
    return 1.0 / (1.0 + std::exp(-x));
  }
  double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Tape::push(Op op, int32_t a, int32_t b, int len) {
  Node n;
  n.op = op;
  n.a = a;
  n.b = b;
  n.off = static_cast<int32_t>(buf_.size());
  n.len = len;
  buf_.resize(buf_.size() + static_cast<size_t>(len));
  nodes_.push_back(std::move(n));
  adjoints_valid_ = false;
  return Var{static_cast<int32_t>(nodes_.size()) - 1};
}

std::span<double> Tape::val(int32_t id) {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return {buf_.data() + n.off, static_cast<size_t>(n.len)};
}

std::span<const double> Tape::val(int32_t id) const {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return {buf_.data() + n.off, static_cast<size_t>(n.len)};
}

std::span<double> Tape::adj(int32_t id) {
  const Node& n = nodes_[static_cast<size_t>(id)];
  return {adj_.data() + n.off, static_cast<size_t>(n.len)};
}

const Tape::Node& Tape::node(Var v) const {
  if (!v.valid() || static_cast<size_t>(v.id) >= nodes_.size())
    throw ShapeError("invalid tape handle");
  return nodes_[static_cast<size_t>(v.id)];
}

Var Tape::input(std::span<const double> v) {
  Var out = push(Op::kInput, -1, -1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), val(out.id).begin());
  return out;
}

Var Tape::constant(std::span<const double> v) {
  Var out = push(Op::kConstant, -1, -1, static_cast<int>(v.size()));
  std::copy(v.begin(), v.end(), val(out.id).begin());
  return out;
}

Var Tape::constant_scalar(double x) { return constant(std::span<const double>(&x, 1)); }

Var Tape::add(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.len != nb.len) throw ShapeError("add: length mismatch");
  Var out = push(Op::kAdd, a.id, b.id, na.len);
  auto x = val(a.id), y = val(b.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = x[i] + y[i];
  return out;
}

Var Tape::sub(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.len != nb.len) throw ShapeError("sub: length mismatch");
  Var out = push(Op::kSub, a.id, b.id, na.len);
  auto x = val(a.id), y = val(b.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = x[i] - y[i];
  return out;
}

Var Tape::mul(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.len != nb.len) throw ShapeError("mul: length mismatch");
  Var out = push(Op::kMul, a.id, b.id, na.len);
  auto x = val(a.id), y = val(b.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = x[i] * y[i];
  return out;
}

Var Tape::div(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  if (na.len != nb.len) throw ShapeError("div: length mismatch");
  for (double y : val(b.id))
    if (y == 0.0) throw DomainError("div: division by zero");
  Var out = push(Op::kDiv, a.id, b.id, na.len);
  auto x = val(a.id), y = val(b.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = x[i] / y[i];
  return out;
}

Var Tape::matvec(Var weights, Var x, int rows, int cols) {
  const Node& nw = node(weights);
  const Node& nx = node(x);
  if (nw.len != rows * cols) throw ShapeError("matvec: weight length != rows*cols");
  if (nx.len != cols) throw ShapeError("matvec: vector length != cols");
  Var out = push(Op::kMatVec, weights.id, x.id, rows);
  nodes_.back().i0 = rows;
  nodes_.back().i1 = cols;
  auto w = val(weights.id);
  auto v = val(x.id);
  auto o = val(out.id);
  for (int r = 0; r < rows; ++r) {
    double s = 0.0;
    const double* wr = w.data() + static_cast<size_t>(r) * cols;
    for (int c = 0; c < cols; ++c) s += wr[c] * v[c];
    o[r] = s;
  }
  return out;
}

Var Tape::concat(Var a, Var b) {
  const Node& na = node(a);
  const Node& nb = node(b);
  Var out = push(Op::kConcat, a.id, b.id, na.len + nb.len);
  auto x = val(a.id), y = val(b.id);
  auto o = val(out.id);
  std::copy(x.begin(), x.end(), o.begin());
  std::copy(y.begin(), y.end(), o.begin() + na.len);
  return out;
}

Var Tape::slice(Var a, int offset, int len) {
  const Node& na = node(a);
  if (offset < 0 || len < 0 || offset + len > na.len) throw ShapeError("slice: out of range");
  Var out = push(Op::kSlice, a.id, -1, len);
  nodes_.back().i0 = offset;
  auto x = val(a.id);
  auto o = val(out.id);
  std::copy(x.begin() + offset, x.begin() + offset + len, o.begin());
  return out;
}

Var Tape::permute(Var a, std::span<const int> perm) {
  const Node& na = node(a);
  if (static_cast<int>(perm.size()) != na.len) throw ShapeError("permute: length mismatch");
  std::vector<int32_t> p(perm.begin(), perm.end());
  std::vector<bool> seen(p.size(), false);
  for (int32_t i : p) {
    if (i < 0 || i >= na.len || seen[static_cast<size_t>(i)])
      throw ShapeError("permute: not a permutation");
    seen[static_cast<size_t>(i)] = true;
  }
  Var out = push(Op::kPermute, a.id, -1, na.len);
  nodes_.back().perm = std::move(p);
  auto x = val(a.id);
  auto o = val(out.id);
  const auto& pp = nodes_.back().perm;
  for (int i = 0; i < na.len; ++i) o[i] = x[pp[static_cast<size_t>(i)]];
  return out;
}

Var Tape::relu(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kRelu, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = x[i] > 0.0 ? x[i] : 0.0;
  return out;
}

Var Tape::sigmoid(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kSigmoid, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = stable_sigmoid(x[i]);
  return out;
}

Var Tape::tanh(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kTanh, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = std::tanh(x[i]);
  return out;
}

Var Tape::exp(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kExp, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = std::exp(x[i]);
  return out;
}

Var Tape::log(Var a) {
  const Node& na = node(a);
  for (double x : val(a.id))
    if (!(x > 0.0)) throw DomainError("log: nonpositive input");
  Var out = push(Op::kLog, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = std::log(x[i]);
  return out;
}

Var Tape::min_with_one(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kMinWithOne, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = x[i] < 1.0 ? x[i] : 1.0;
  return out;
}

Var Tape::negate(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kNegate, a.id, -1, na.len);
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = -x[i];
  return out;
}

Var Tape::scale(Var a, double s) {
  const Node& na = node(a);
  Var out = push(Op::kScale, a.id, -1, na.len);
  nodes_.back().s = s;
  auto x = val(a.id);
  auto o = val(out.id);
  for (int i = 0; i < na.len; ++i) o[i] = s * x[i];
  return out;
}

Var Tape::sum(Var a) {
  const Node& na = node(a);
  Var out = push(Op::kSum, a.id, -1, 1);
  auto x = val(a.id);
  double s = 0.0;
  for (int i = 0; i < na.len; ++i) s += x[i];
  val(out.id)[0] = s;
  return out;
}

Var Tape::mean(Var a) {
  const Node& na = node(a);
  if (na.len == 0) throw ShapeError("mean of empty vector");
  Var out = push(Op::kMean, a.id, -1, 1);
  auto x = val(a.id);
  double s = 0.0;
  for (int i = 0; i < na.len; ++i) s += x[i];
  val(out.id)[0] = s / na.len;
  return out;
}

Var Tape::logsumexp(Var a) {
  const Node& na = node(a);
  if (na.len == 0) throw ShapeError("logsumexp of empty vector");
  Var out = push(Op::kLogSumExp, a.id, -1, 1);
  auto x = val(a.id);
  double m = x[0];
  for (int i = 1; i < na.len; ++i) m = std::max(m, x[i]);
  double s = 0.0;
  for (int i = 0; i < na.len; ++i) s += std::exp(x[i] - m);
  val(out.id)[0] = m + std::log(s);
  return out;
}

Var Tape::mul_scalar(Var x, Var t) {
  const Node& nx = node(x);
  const Node& nt = node(t);
  if (nt.len != 1) throw ShapeError("mul_scalar: second operand must be scalar");
  Var out = push(Op::kMulScalar, x.id, t.id, nx.len);
  auto xv = val(x.id);
  double tv = val(t.id)[0];
  auto o = val(out.id);
  for (int i = 0; i < nx.len; ++i) o[i] = xv[i] * tv;
  return out;
}

std::span<const double> Tape::value(Var v) const {
  node(v);  // validate handle
  return val(v.id);
}

double Tape::scalar(Var v) const {
  const Node& n = node(v);
  if (n.len != 1) throw ShapeError("scalar() on non-scalar node");
  return buf_[static_cast<size_t>(n.off)];
}

void Tape::backward(Var root) {
  const Node& r = node(root);
  if (r.len != 1) throw ShapeError("backward: root must be scalar");
  adj_.assign(buf_.size(), 0.0);
  adj_[static_cast<size_t>(r.off)] = 1.0;
  for (int32_t id = static_cast<int32_t>(nodes_.size()) - 1; id >= 0; --id) {
    const Node& n = nodes_[static_cast<size_t>(id)];
    auto g = adj(id);
    switch (n.op) {
      case Op::kInput:
      case Op::kConstant:
        break;
      case Op::kAdd: {
        auto ga = adj(n.a), gb = adj(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] += g[i];
        }
        break;
      }
      case Op::kSub: {
        auto ga = adj(n.a), gb = adj(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i];
          gb[i] -= g[i];
        }
        break;
      }
      case Op::kMul: {
        auto ga = adj(n.a), gb = adj(n.b);
        auto xa = val(n.a), xb = val(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i] * xb[i];
          gb[i] += g[i] * xa[i];
        }
        break;
      }
      case Op::kDiv: {
        auto ga = adj(n.a), gb = adj(n.b);
        auto xa = val(n.a), xb = val(n.b);
        for (int i = 0; i < n.len; ++i) {
          ga[i] += g[i] / xb[i];
          gb[i] -= g[i] * xa[i] / (xb[i] * xb[i]);
        }
        break;
      }
      case Op::kMatVec: {
        int rows = n.i0, cols = n.i1;
        auto gw = adj(n.a);
        auto gx = adj(n.b);
        auto w = val(n.a);
        auto x = val(n.b);
        for (int r2 = 0; r2 < rows; ++r2) {
          double gr = g[r2];
          if (gr == 0.0) continue;
          double* gwr = gw.data() + static_cast<size_t>(r2) * cols;
          const double* wr = w.data() + static_cast<size_t>(r2) * cols;
          for (int c = 0; c < cols; ++c) {
            gwr[c] += gr * x[c];
            gx[c] += gr * wr[c];
          }
        }
        break;
      }
      case Op::kConcat: {
        auto ga = adj(n.a), gb = adj(n.b);
        int la = static_cast<int>(ga.size());
        for (int i = 0; i < la; ++i) ga[i] += g[i];
        for (int i = 0; i < static_cast<int>(gb.size()); ++i) gb[i] += g[la + i];
        break;
      }
      case Op::kSlice: {
        auto ga = adj(n.a);
        for (int i = 0; i < n.len; ++i) ga[n.i0 + i] += g[i];
        break;
      }
      case Op::kPermute: {
        auto ga = adj(n.a);
        for (int i = 0; i < n.len; ++i) ga[n.perm[static_cast<size_t>(i)]] += g[i];
        break;
      }
      case Op::kRelu: {
        auto ga = adj(n.a);
        auto x = val(n.a);
        for (int i = 0; i < n.len; ++i)
          if (x[i] > 0.0) ga[i] += g[i];
        break;
      }
      case Op::kSigmoid: {
        auto ga = adj(n.a);
        auto y = val(id);
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      }
      case Op::kTanh: {
        auto ga = adj(n.a);
        auto y = val(id);
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
      }
      case Op::kExp: {
        auto ga = adj(n.a);
        auto y = val(id);
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] * y[i];
        break;
      }
      case Op::kLog: {
        auto ga = adj(n.a);
        auto x = val(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += g[i] / x[i];
        break;
      }
      case Op::kMinWithOne: {
        // Kink at exactly 1 resolves to the clipped side (zero slope).
        auto ga = adj(n.a);
        auto x = val(n.a);
        for (int i = 0; i < n.len; ++i)
          if (x[i] < 1.0) ga[i] += g[i];
        break;
      }
      case Op::kNegate: {
        auto ga = adj(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] -= g[i];
        break;
      }
      case Op::kScale: {
        auto ga = adj(n.a);
        for (int i = 0; i < n.len; ++i) ga[i] += n.s * g[i];
        break;
      }
      case Op::kSum: {
        auto ga = adj(n.a);
        double gr = g[0];
        for (double& v : ga) v += gr;
        break;
      }
      case Op::kMean: {
        auto ga = adj(n.a);
        double gr = g[0] / static_cast<double>(ga.size());
        for (double& v : ga) v += gr;
        break;
      }
      case Op::kLogSumExp: {
        auto ga = adj(n.a);
        auto x = val(n.a);
        double y = val(id)[0];
        double gr = g[0];
        for (size_t i = 0; i < ga.size(); ++i) ga[i] += gr * std::exp(x[i] - y);
        break;
      }
      case Op::kMulScalar: {
        auto gx = adj(n.a);
        auto gt = adj(n.b);
        auto x = val(n.a);
        double t = val(n.b)[0];
        for (int i = 0; i < n.len; ++i) {
          gx[i] += g[i] * t;
          gt[0] += g[i] * x[i];
        }
        break;
      }
    }
  }
  adjoints_valid_ = true;
}

std::span<const double> Tape::adjoint(Var v) const {
  if (!adjoints_valid_) throw ShapeError("adjoint() before backward()");
  const Node& n = node(v);
  return {adj_.data() + n.off, static_cast<size_t>(n.len)};
}

void Tape::reset() {
  nodes_.clear();
  buf_.clear();
  adj_.clear();
  adjoints_valid_ = false;
}

}  // namespace inmc
