#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "inmc/invertible_net.hpp"
#include "inmc/involutive_net.hpp"
#include "inmc/rng.hpp"
#include "inmc/targets.hpp"
#include "inmc/vec.hpp"

namespace inmc {

struct TransitionRecord {
  Vec64 from;        // state before the step
  Vec64 proposal;    // proposed state
  double log_ratio;  // raw log acceptance ratio (before the min)
  bool accepted;
};

// Per-chain mutable state: the current point, the chain's private random
// stream, and running statistics. Evolution is a deterministic function of
// (initial state, stream, kernel).
struct KernelState {
  Vec64 phi;
  RngStream rng;
  uint64_t steps = 0;
  uint64_t accepted = 0;
  uint64_t nonfinite_proposals = 0;
  double involution_residual_max = 0.0;

  KernelState(Vec64 init, RngStream stream) : phi(std::move(init)), rng(stream) {}
  double acceptance_rate() const {
    return steps == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(steps);
  }
};

// Metropolis-Hastings transition built from a volume-preserving involutive
// map f on the enlarged space: draw pi, apply f to (phi ⌢ pi), accept with
// min(1, exp(log f_Phi(phi') + log f_Y(pi') - log f_Phi(phi) - log f_Y(pi))),
// all in log space. Volume preservation means no Jacobian correction.
class InvolutiveKernel {
 public:
  InvolutiveKernel(std::string name, int state_dim, int aux_dim,
                   std::function<Vec64(std::span<const double>)> map,
                   std::shared_ptr<const TargetDensity> target,
                   std::shared_ptr<const TargetDensity> aux, bool volume_preserving);

  const std::string& name() const { return name_; }
  int state_dim() const { return state_dim_; }
  int aux_dim() const { return aux_dim_; }
  const TargetDensity& target() const { return *target_; }
  const TargetDensity& aux() const { return *aux_; }
  Vec64 apply_map(std::span<const double> x) const { return map_(x); }

  // Involution monitor: every monitor_every-th step re-applies the map and
  // records the double-application residual into the chain state. 0 disables.
  void set_monitor_every(uint64_t n) { monitor_every_ = n; }

  // One transition. Proposals with NaN or -inf target log-density are
  // rejected and counted in state.nonfinite_proposals.
  TransitionRecord step(KernelState& state) const;

  std::vector<TransitionRecord> run_chain(KernelState& state, int steps) const;

 private:
  std::string name_;
  int state_dim_;
  int aux_dim_;
  std::function<Vec64(std::span<const double>)> map_;
  std::shared_ptr<const TargetDensity> target_;
  std::shared_ptr<const TargetDensity> aux_;
  uint64_t monitor_every_ = 100;
};

// Random-walk proposal as an involution: (phi, pi) -> (phi + pi, -pi) with
// pi ~ N(0, sd^2 Id).
InvolutiveKernel gaussian_shift_kernel(std::shared_ptr<const TargetDensity> target, double sd);

// Leapfrog Hamiltonian dynamics followed by momentum negation; involutive
// because leapfrog is time-reversible, volume-preserving because symplectic.
InvolutiveKernel hmc_kernel(std::shared_ptr<const TargetDensity> target, double step_size,
                            int leapfrog_steps);

// Invertible net with its own parameter store (self-contained model).
struct InvertibleModel {
  Parameters params;
  InvertibleNet net;
};

// Symmetric proposal from an invertible net: apply the net when the scalar
// auxiliary is positive, its inverse otherwise, and negate the auxiliary.
InvolutiveKernel nice_symmetric_kernel(std::shared_ptr<const InvertibleModel> model,
                                       std::shared_ptr<const TargetDensity> target);

// Kernel wrapping a learned involutive generator. Throws NotVolumePreserving
// unless the network carries the volume-preserving certificate.
InvolutiveKernel neural_kernel(std::shared_ptr<const InvolutiveNetwork> gen,
                               std::shared_ptr<const TargetDensity> target,
                               std::shared_ptr<const TargetDensity> aux);

// Leapfrog integrator (exposed for tests): L steps of size eps on
// H(q, p) = -log target(q) + |p|^2 / 2, without the final negation.
void leapfrog(const TargetDensity& target, double eps, int steps, Vec64& q, Vec64& p);

}  // namespace inmc
