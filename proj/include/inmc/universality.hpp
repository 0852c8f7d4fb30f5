#pragma once

#include <functional>
#include <vector>

#include "inmc/rng.hpp"
#include "inmc/vec.hpp"

namespace inmc::universality {

// A target transition kernel phi' = transition(phi, noise) with a single
// scalar noise input, mapping into a bounded set.
using Transition = std::function<Vec64(std::span<const double> phi, double noise)>;

// Parameters of the exact gated-coupling construction that realizes an
// arbitrary continuous transition as a volume-preserving involution on
// 2n + 6 coordinates. eps controls both the auxiliary scaling and the
// accuracy of the realized kernel.
struct Params {
  int state_dim = 1;
  double eps = 0.1;
  Transition transition;

  int full_dim() const { return 2 * state_dim + 6; }
  int aux_dim() const { return state_dim + 6; }
};

// Gated displacement toward the transition target. Input has n + 3
// coordinates; the gate q = x[n+2] - x[n+1] (0-based) selects between zero,
// a linear ramp of (transition - phi), and the full displacement.
Vec64 displacement_ramp(const Params& p, std::span<const double> x);

// Gated pass-through of the first n coordinates, same gate as above.
Vec64 state_ramp(int state_dim, std::span<const double> x);

// Affine embedding: scales the auxiliary block by eps and plants the two
// gate offsets; embed_inverse undoes it exactly.
Vec64 embed(const Params& p, std::span<const double> x);
Vec64 embed_inverse(const Params& p, std::span<const double> x);

// Additive coupling over the two (n+3)-blocks built from the two ramps.
Vec64 coupling(const Params& p, std::span<const double> x);
Vec64 coupling_inverse(const Params& p, std::span<const double> x);

// The gate-transposing involutive permutation used inside the sandwich.
std::vector<int> gate_swap_permutation(int state_dim);

// The full involution: embed_inverse ∘ coupling_inverse ∘ gate swap ∘
// coupling ∘ embed. Exactly involutive everywhere, unit Jacobian magnitude.
Vec64 involution(const Params& p, std::span<const double> x);

// The high-probability auxiliary event on which the gates fully open and
// the involution reduces to transition(phi, pi[0]) + eps * pi[3..n+3):
// pi[2]-pi[1] > -1/(2 eps), pi[n+5]-pi[n+4] > -1/(2 eps), |pi| < 1/eps
// (Euclidean norm, 0-based indices).
bool gates_open(const Params& p, std::span<const double> pi);

// Two-sample Kolmogorov-Smirnov statistic between sorted samples.
double ks_statistic(Vec64 a, Vec64 b);

// Draws n_samples of the first output coordinate of the involution at a
// fixed phi and of the transition itself, and returns their KS statistic.
// state_dim must be 1.
double ks_vs_transition(const Params& p, std::span<const double> phi, int n_samples,
                        RngStream& rng);

struct SweepRow {
  double eps;
  double p_gates_open;        // empirical P(A)
  double ks;                  // KS statistic vs the transition
  double involution_residual; // max double-application residual observed
};

// Runs the diagnostic sweep over a list of eps values.
std::vector<SweepRow> sweep(const Params& base, std::span<const double> eps_values, int n_samples,
                            uint64_t seed);

// Default demonstration transition: phi' = 0.5 tanh(noise), independent of
// phi, with range inside [-0.5, 0.5].
Transition bounded_tanh_transition();

}  // namespace inmc::universality
