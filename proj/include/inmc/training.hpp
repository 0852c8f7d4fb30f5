#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "inmc/chain_dp.hpp"
#include "inmc/involutive_net.hpp"
#include "inmc/mlp.hpp"
#include "inmc/params.hpp"
#include "inmc/rng.hpp"
#include "inmc/targets.hpp"

namespace inmc {

struct TrainingConfig {
  std::string target_name = "mix2";
  TargetOptions target_opts;

  int aux_dim = 31;     // state_dim + aux_dim must be even
  int hidden_mult = 8;  // coupling shift-net hidden width multiplier
  int disc_hidden = 64;

  int b = 4;  // chain length during training
  int training_steps = 4000;
  int batch = 64;  // parallel chains per training step

  double clip_w = 0.01;  // WGAN clamp bound for the discriminator
  RmsPropConfig d_opt{.lr = 5e-5, .decay = 0.9, .eps = 1e-8};
  RmsPropConfig g_opt{.lr = 5e-5, .decay = 0.9, .eps = 1e-8};

  double init_sd = 2.0;  // initial-state distribution X = N(0, init_sd^2 Id)
  uint64_t seed = 1;
  int checkpoint_every = 500;

  void validate() const;
};

// Discriminator: a dense net over the state space with its own store.
struct Discriminator {
  Parameters params;
  Mlp net;

  static Discriminator create(int state_dim, int hidden, double clip_w, RngStream& rng);
  double score(std::span<const double> x) const;
};

// Differentiable linear-path rollout with fresh auxiliaries fixed for the
// step: states[i] are the tape nodes of phi_0..phi_b, acceptances[i] the
// per-edge acceptance probabilities min(1, ratio) computed in log space.
struct Rollout {
  std::vector<Var> states;
  std::vector<Var> acceptances;
};

Rollout rollout_fixed_aux(Tape& tape, const InvolutiveNetwork& gen, const BoundParams& gen_bound,
                          const TargetDensity& target, const TargetDensity& aux,
                          std::span<const double> phi0, int b, RngStream& rng);

struct StepStats {
  double d_loss = 0.0;
  double g_loss = 0.0;
  double mean_acceptance = 0.0;
  bool skipped = false;
};

// One Algorithm-style alternating update: even steps ascend the
// discriminator objective D(true) - E_{i~P}[D(phi_i)] and clamp, odd steps
// ascend the generator objective E_{i~P}[D(phi_i)]. Non-finite losses skip
// the update and report skipped=true.
StepStats training_step(InvolutiveNetwork& gen, Discriminator& disc, RmsPropState& g_state,
                        RmsPropState& d_state, const TrainingConfig& cfg,
                        const TargetDensity& target, const TargetDensity& aux, int step_index,
                        std::vector<RngStream>& chain_streams, Tape& tape);

struct TrainHooks {
  std::function<void(int step, const InvolutiveNetwork& gen)> on_checkpoint;
  std::ostream* log_csv = nullptr;
};

struct TrainResult {
  std::shared_ptr<InvolutiveNetwork> generator;
  std::shared_ptr<const TargetDensity> target;
  std::shared_ptr<const TargetDensity> aux;
  int skipped_steps = 0;
};

TrainResult train(const TrainingConfig& cfg, const TrainHooks& hooks = {});

}  // namespace inmc
