#pragma once

#include <string>
#include <variant>
#include <vector>

#include "inmc/mlp.hpp"
#include "inmc/params.hpp"
#include "inmc/rng.hpp"
#include "inmc/tape.hpp"
#include "inmc/vec.hpp"

namespace inmc {

// Additive coupling layer: coordinates in `keep` pass through unchanged and
// feed the shift net; coordinates in `shift` receive the net output.
// The Jacobian is unit-determinant by construction and the inverse simply
// subtracts the same shift.
struct CouplingLayer {
  std::vector<int> keep;
  std::vector<int> shift;
  Mlp net;
};

// Fixed permutation layer: y[i] = x[perm[i]].
struct PermutationLayer {
  std::vector<int> perm;
};

using InvertibleLayer = std::variant<CouplingLayer, PermutationLayer>;

// Volume-preserving bijection built from additive coupling layers and fixed
// permutations, with an exact inverse. Immutable once built; forward and
// inverse are reentrant.
class InvertibleNet {
 public:
  explicit InvertibleNet(int dim);

  // Standard coupling layer on the even/odd index split. shift_odd selects
  // which half is shifted; consecutive layers alternate it. Shift net has
  // one hidden layer of width hidden_mult * (dim/2), ReLU, and a
  // zero-initialized output layer so the net starts as the identity.
  void add_coupling(Parameters& store, const std::string& prefix, bool shift_odd, int hidden_mult,
                    RngStream& rng);
  void add_coupling(CouplingLayer layer);
  void add_permutation(std::vector<int> perm);

  int dim() const { return dim_; }
  const std::vector<InvertibleLayer>& layers() const { return layers_; }

  Vec64 forward(const Parameters& store, std::span<const double> x) const;
  Vec64 inverse(const Parameters& store, std::span<const double> y) const;
  Var forward(Tape& tape, const BoundParams& bound, Var x) const;
  Var inverse(Tape& tape, const BoundParams& bound, Var y) const;

 private:
  int dim_;
  std::vector<InvertibleLayer> layers_;
};

// Uniformly random permutation of {0..n-1} (Fisher-Yates).
std::vector<int> sample_permutation(int n, RngStream& rng);

std::vector<int> inverse_permutation(const std::vector<int>& perm);

}  // namespace inmc
