#pragma once

#include <functional>
#include <memory>
#include <variant>
#include <vector>

#include "inmc/invertible_net.hpp"
#include "inmc/params.hpp"
#include "inmc/rng.hpp"
#include "inmc/tape.hpp"
#include "inmc/vec.hpp"

namespace inmc {

struct Block;
using BlockPtr = std::unique_ptr<Block>;

// x -> g^{-1}(x_hi) ⌢ g(x_lo); dim is twice the dimension of g.
struct FunctionBlock {
  InvertibleNet g;
};

// x -> sigma(x) for an involutive permutation sigma.
struct PermutationBlock {
  std::vector<int> sigma;
};

// x -> x - 2 (w.x)/(v.w) v, the reflection Id - 2 v⊗w/(v.w). The parameter
// vectors live as segments in the owning network's store (w is kept at unit
// norm). Unit-magnitude determinant by the matrix determinant lemma.
struct MatrixBlock {
  int v_seg;
  int w_seg;
};

// Exposed for tests only; the identity is involutive but not a matrix block.
struct IdentityBlock {};

// outer ∘ inner ∘ outer, both involutive.
struct Sandwich {
  BlockPtr outer;
  BlockPtr inner;
};

// g^{-1} ∘ inner ∘ g for an invertible net g.
struct Conjugate {
  InvertibleNet g;
  BlockPtr inner;
};

// One node of the closure-grammar composition tree. Only the five grammar
// productions are constructible, so every tree induces an involution; the
// constructors reject ill-formed pieces (non-involutive sigma, dimension
// mismatches, near-orthogonal matrix-block vectors).
struct Block {
  int dim = 0;
  std::variant<IdentityBlock, FunctionBlock, PermutationBlock, MatrixBlock, Sandwich, Conjugate>
      node;
};

BlockPtr make_function_block(InvertibleNet g);
BlockPtr make_permutation_block(std::vector<int> sigma);
// Rejects (v, w) with |v.w| < 1e-8 |v||w|; w is normalized to unit length.
BlockPtr make_matrix_block(Parameters& store, const std::string& prefix, Vec64 v, Vec64 w);
BlockPtr make_identity_block(int dim);
BlockPtr make_sandwich(BlockPtr outer, BlockPtr inner);
BlockPtr make_conjugate(InvertibleNet g, BlockPtr inner);

// A deep, exactly involutive, volume-preserving network: a composition tree
// over the three block types plus its parameter store.
class InvolutiveNetwork {
 public:
  InvolutiveNetwork(Parameters store, BlockPtr root);

  int dim() const { return root_->dim; }
  const Block& root() const { return *root_; }
  Parameters& params() { return params_; }
  const Parameters& params() const { return params_; }

  Vec64 apply(std::span<const double> x) const;
  Var apply(Tape& tape, const BoundParams& bound, Var x) const;

  // True when every leaf is volume-preserving (always holds for trees built
  // through the public constructors; kernels require the certificate).
  bool volume_preserving() const;

  // Restore |w| = 1 on every matrix block (call after optimizer updates).
  void renormalize_matrix_blocks();

 private:
  Parameters params_;
  BlockPtr root_;
};

// Uniformly random involutive permutation of {0..n-1}, via the fixed-point /
// transposition split of the involution-counting recurrence
// I(n) = I(n-1) + (n-1) I(n-2).
std::vector<int> sample_involutive_permutation(int n, RngStream& rng);

// Number of involutions of {1..n} (exact for n <= 170 in doubles).
double count_involutions(int n);

// Finite-difference estimate of log |det J_f| at x. Dense Jacobian plus LU;
// rejects dim > 16 (DimensionTooLarge).
double log_abs_det_jacobian_numeric(const std::function<Vec64(std::span<const double>)>& f,
                                    std::span<const double> x, double h = 1e-5);

// The experiment architecture: symmetric composition F(g) ∘ P(sigma) ∘ F(h)
// ∘ P(sigma) ∘ F(g) over state_dim + aux_dim coordinates, with sigma a
// uniformly random involutive permutation fixed at initialization and g, h
// each built from two coupling pairs around a random permutation. Shift nets
// start at zero, so the initial network is a pure permutation.
InvolutiveNetwork build_default_generator(int state_dim, int aux_dim, int hidden_mult,
                                          RngStream& rng);

}  // namespace inmc
