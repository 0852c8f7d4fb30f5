#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "inmc/vec.hpp"

namespace inmc {

// Handle to a node on a Tape.
struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

// Reverse-mode differentiation tape over dense vector operations.
//
// Nodes are appended in evaluation order, so the node list is already a
// topological order and the backward pass is a single reverse sweep that
// visits each node exactly once. Values and adjoints live in flat arenas
// that are reused across reset() calls; a tape is rebuilt per training
// step rather than kept as a persistent graph.
//
// Spans returned by value()/adjoint() are invalidated by the next
// operation pushed onto the tape.
class Tape {
 public:
  Tape() = default;

  // Leaves. input() marks a differentiable leaf (parameters, states);
  // constant() marks a leaf whose adjoint is never read.
  Var input(std::span<const double> v);
  Var constant(std::span<const double> v);
  Var constant_scalar(double x);

  // Elementwise binary.
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);
  Var div(Var a, Var b);  // DomainError on division by zero

  // weights is a row-major (rows x cols) matrix stored flat; x has length cols.
  Var matvec(Var weights, Var x, int rows, int cols);

  Var concat(Var a, Var b);
  Var slice(Var a, int offset, int len);
  // y[i] = x[perm[i]]; perm must be a permutation of 0..len-1.
  Var permute(Var a, std::span<const int> perm);

  // Elementwise unary.
  Var relu(Var a);          // subgradient 0 at the kink
  Var sigmoid(Var a);
  Var tanh(Var a);
  Var exp(Var a);
  Var log(Var a);           // DomainError on nonpositive input
  Var min_with_one(Var a);  // min(x, 1); adjoint 0 where x >= 1
  Var negate(Var a);
  Var scale(Var a, double s);

  // Reductions to a scalar (length-1) node.
  Var sum(Var a);
  Var mean(Var a);
  Var logsumexp(Var a);  // stable; adjoint is softmax(a)

  // y[i] = x[i] * t where t is a scalar node.
  Var mul_scalar(Var x, Var t);

  std::span<const double> value(Var v) const;
  double scalar(Var v) const;  // value of a length-1 node

  // Reverse sweep from a scalar root. May be called repeatedly on the same
  // tape (adjoints are re-zeroed each time).
  void backward(Var root);
  std::span<const double> adjoint(Var v) const;

  void reset();
  size_t node_count() const { return nodes_.size(); }

 private:
  enum class Op : uint8_t {
    kInput,
    kConstant,
    kAdd,
    kSub,
    kMul,
    kDiv,
    kMatVec,
    kConcat,
    kSlice,
    kPermute,
    kRelu,
    kSigmoid,
    kTanh,
    kExp,
    kLog,
    kMinWithOne,
    kNegate,
    kScale,
    kSum,
    kMean,
    kLogSumExp,
    kMulScalar,
  };

  struct Node {
    Op op;
    int32_t a = -1;
    int32_t b = -1;
    int32_t off = 0;
    int32_t len = 0;
    int32_t i0 = 0;  // op-specific (slice offset, matvec rows)
    int32_t i1 = 0;  // op-specific (matvec cols)
    double s = 0.0;
    std::vector<int32_t> perm;
  };

  Var push(Op op, int32_t a, int32_t b, int len);
  std::span<double> val(int32_t id);
  std::span<const double> val(int32_t id) const;
  std::span<double> adj(int32_t id);
  const Node& node(Var v) const;

  std::vector<Node> nodes_;
  std::vector<double> buf_;
  std::vector<double> adj_;
  bool adjoints_valid_ = false;
};

}  // namespace inmc
