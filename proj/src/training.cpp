#include "inmc/training.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "inmc/errors.hpp"

namespace inmc {

void TrainingConfig::validate() const {
  if (b < 1) throw ConfigError("train.b must be >= 1");
  if (batch < 1) throw ConfigError("train.batch must be >= 1");
  if (training_steps < 1) throw ConfigError("train.steps must be >= 1");
  if (clip_w <= 0.0) throw ConfigError("train.clip_w must be > 0");
  if (aux_dim < 1) throw ConfigError("train.aux_dim must be >= 1");
  if (init_sd <= 0.0) throw ConfigError("train.init_sd must be > 0");
}

Discriminator Discriminator::create(int state_dim, int hidden, double clip_w, RngStream& rng) {
  Discriminator d;
  d.net = Mlp::create_uniform(d.params, "disc", {state_dim, hidden, 1}, rng, clip_w);
  return d;
}

double Discriminator::score(std::span<const double> x) const {
  return net.forward(params, x)[0];
}

namespace {

// min(0, t) with subgradient 0 on the clipped side, written as -relu(-t)
// so the kink convention matches min_with_one.
Var min_with_zero(Tape& tape, Var t) { return tape.negate(tape.relu(tape.negate(t))); }

}  // namespace

Rollout rollout_fixed_aux(Tape& tape, const InvolutiveNetwork& gen, const BoundParams& gen_bound,
                          const TargetDensity& target, const TargetDensity& aux,
                          std::span<const double> phi0, int b, RngStream& rng) {
  if (b < 1) throw ShapeError("rollout needs b >= 1");
  int n = target.dim();
  int m = aux.dim();
  if (gen.dim() != n + m) throw ShapeError("rollout: generator dim != state + aux");

  Rollout out;
  Var cur = tape.input(phi0);
  out.states.push_back(cur);
  Var log_t_cur = target.log_density(tape, cur);

  Vec64 pi(static_cast<size_t>(m));
  for (int i = 0; i < b; ++i) {
    aux.sample(rng, pi);
    Var pi_var = tape.constant(pi);
    Var x = tape.concat(cur, pi_var);
    Var y = gen.apply(tape, gen_bound, x);
    Var next = tape.slice(y, 0, n);
    Var pi_new = tape.slice(y, n, m);

    Var log_t_next = target.log_density(tape, next);
    Var log_a_cur = aux.log_density(tape, pi_var);
    Var log_a_new = aux.log_density(tape, pi_new);
    Var log_ratio = tape.sub(tape.add(log_t_next, log_a_new), tape.add(log_t_cur, log_a_cur));
    out.acceptances.push_back(tape.exp(min_with_zero(tape, log_ratio)));

    out.states.push_back(next);
    cur = next;
    log_t_cur = log_t_next;
  }
  return out;
}

StepStats training_step(InvolutiveNetwork& gen, Discriminator& disc, RmsPropState& g_state,
                        RmsPropState& d_state, const TrainingConfig& cfg,
                        const TargetDensity& target, const TargetDensity& aux, int step_index,
                        std::vector<RngStream>& chain_streams, Tape& tape) {
  tape.reset();
  int n = target.dim();
  BoundParams gen_bound = BoundParams::bind(tape, gen.params());
  BoundParams disc_bound = BoundParams::bind(tape, disc.params);

  Var chain_exp{};   // per-chain E_{i~P}[D(phi_i)], concatenated
  Var chain_true{};  // per-chain D(true posterior sample), concatenated
  double acc_sum = 0.0;
  int acc_count = 0;

  Vec64 truth(static_cast<size_t>(n));
  Vec64 phi0(static_cast<size_t>(n));
  for (int c = 0; c < cfg.batch; ++c) {
    RngStream& rng = chain_streams[static_cast<size_t>(c)];
    target.sample(rng, truth);
    for (double& v : phi0) v = cfg.init_sd * rng.next_gaussian();

    Rollout roll = rollout_fixed_aux(tape, gen, gen_bound, target, aux, phi0, cfg.b, rng);
    std::vector<Var> p = chain_distribution(tape, roll.acceptances);

    Var e{};
    for (size_t i = 0; i < roll.states.size(); ++i) {
      Var d = disc.net.forward(tape, disc_bound, roll.states[i]);
      Var term = tape.mul(p[i], d);
      e = i == 0 ? term : tape.add(e, term);
    }
    Var dt = disc.net.forward(tape, disc_bound, tape.constant(truth));

    chain_exp = c == 0 ? e : tape.concat(chain_exp, e);
    chain_true = c == 0 ? dt : tape.concat(chain_true, dt);
    for (Var a : roll.acceptances) {
      acc_sum += tape.scalar(a);
      ++acc_count;
    }
  }

  Var gen_term = tape.mean(chain_exp);   // E over batch of E_{i~P}[D(phi_i)]
  Var true_term = tape.mean(chain_true);
  Var d_loss = tape.sub(true_term, gen_term);

  StepStats stats;
  stats.d_loss = tape.scalar(d_loss);
  stats.g_loss = tape.scalar(gen_term);
  stats.mean_acceptance = acc_count == 0 ? 0.0 : acc_sum / acc_count;

  if (!std::isfinite(stats.d_loss) || !std::isfinite(stats.g_loss) ||
      !std::isfinite(stats.mean_acceptance)) {
    stats.skipped = true;
    return stats;
  }

  if (step_index % 2 == 0) {
    tape.backward(d_loss);
    Parameters grads = gradients(tape, disc.params, disc_bound);
    rmsprop_step(disc.params, grads, d_state, cfg.d_opt, StepDirection::kAscend);
    clamp_weights(disc.params, cfg.clip_w);
  } else {
    tape.backward(gen_term);
    Parameters grads = gradients(tape, gen.params(), gen_bound);
    rmsprop_step(gen.params(), grads, g_state, cfg.g_opt, StepDirection::kAscend);
    gen.renormalize_matrix_blocks();
  }
  return stats;
}

TrainResult train(const TrainingConfig& cfg, const TrainHooks& hooks) {
  cfg.validate();
  auto target = make_target(cfg.target_name, cfg.target_opts);
  if (!target->has_exact_sampler())
    throw ConfigError("training requires a target with an exact sampler");
  int n = target->dim();
  if ((n + cfg.aux_dim) % 2 != 0)
    throw ConfigError("state_dim + aux_dim must be even for the generator");
  auto aux = standard_normal(cfg.aux_dim);

  RngStream init_rng = RngStream::keyed(cfg.seed, "init");
  auto gen = std::make_shared<InvolutiveNetwork>(
      build_default_generator(n, cfg.aux_dim, cfg.hidden_mult, init_rng));
  Discriminator disc = Discriminator::create(n, cfg.disc_hidden, cfg.clip_w, init_rng);

  RmsPropState g_state = RmsPropState::init(gen->params());
  RmsPropState d_state = RmsPropState::init(disc.params);

  std::vector<RngStream> chain_streams;
  chain_streams.reserve(static_cast<size_t>(cfg.batch));
  for (int c = 0; c < cfg.batch; ++c)
    chain_streams.push_back(RngStream::keyed(cfg.seed, "train-chain", static_cast<uint64_t>(c)));

  if (hooks.log_csv) *hooks.log_csv << "step,d_loss,g_loss,mean_acceptance\n";

  TrainResult result{gen, target, aux, 0};
  Tape tape;
  char buf[128];
  for (int step = 0; step < cfg.training_steps; ++step) {
    StepStats s;
    try {
      s = training_step(*gen, disc, g_state, d_state, cfg, *target, *aux, step, chain_streams,
                        tape);
    } catch (const NonFiniteDensity&) {
      s.skipped = true;
    }
    if (s.skipped) ++result.skipped_steps;
    if (hooks.log_csv) {
      std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g\n", step, s.d_loss, s.g_loss,
                    s.mean_acceptance);
      *hooks.log_csv << buf;
    }
    if (hooks.on_checkpoint && cfg.checkpoint_every > 0 && (step + 1) % cfg.checkpoint_every == 0)
      hooks.on_checkpoint(step + 1, *gen);
  }
  if (hooks.on_checkpoint) hooks.on_checkpoint(cfg.training_steps, *gen);
  return result;
}

}  // namespace inmc
