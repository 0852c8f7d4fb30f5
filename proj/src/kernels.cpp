#include "inmc/kernels.hpp"

#include <cmath>
#include <limits>

#include "inmc/errors.hpp"

namespace inmc {

InvolutiveKernel::InvolutiveKernel(std::string name, int state_dim, int aux_dim,
                                   std::function<Vec64(std::span<const double>)> map,
                                   std::shared_ptr<const TargetDensity> target,
                                   std::shared_ptr<const TargetDensity> aux,
                                   bool volume_preserving)
    : name_(std::move(name)),
      state_dim_(state_dim),
      aux_dim_(aux_dim),
      map_(std::move(map)),
      target_(std::move(target)),
      aux_(std::move(aux)) {
  if (!volume_preserving)
    throw NotVolumePreserving("kernel '" + name_ + "' requires a volume-preserving map");
  if (target_->dim() != state_dim_) throw ShapeError("kernel target dim mismatch");
  if (aux_->dim() != aux_dim_) throw ShapeError("kernel auxiliary dim mismatch");
}

TransitionRecord InvolutiveKernel::step(KernelState& state) const {
  if (static_cast<int>(state.phi.size()) != state_dim_)
    throw ShapeError("kernel step: state length mismatch");

  Vec64 x(static_cast<size_t>(state_dim_ + aux_dim_));
  std::copy(state.phi.begin(), state.phi.end(), x.begin());
  std::span<double> pi(x.data() + state_dim_, static_cast<size_t>(aux_dim_));
  aux_->sample(state.rng, pi);

  double log_t_cur = target_->log_density(state.phi);
  double log_a_cur = aux_->log_density(pi);

  Vec64 y = map_(x);
  std::span<const double> phi_new(y.data(), static_cast<size_t>(state_dim_));
  std::span<const double> pi_new(y.data() + state_dim_, static_cast<size_t>(aux_dim_));

  double log_t_new = target_->log_density(phi_new);
  double log_a_new = aux_->log_density(pi_new);

  double log_ratio = log_t_new + log_a_new - log_t_cur - log_a_cur;

  // Uniform draw always consumed so the stream advances identically
  // whatever the densities evaluate to.
  double u = state.rng.next_uniform();

  bool finite = !std::isnan(log_t_new) && log_t_new > -std::numeric_limits<double>::infinity() &&
                std::isfinite(log_a_new);
  if (!finite) {
    ++state.nonfinite_proposals;
    log_ratio = -std::numeric_limits<double>::infinity();
  }
  bool accepted = finite && (log_ratio >= 0.0 || std::log(u) < log_ratio);

  if (monitor_every_ != 0 && state.steps % monitor_every_ == 0) {
    Vec64 z = map_(y);
    state.involution_residual_max = std::max(state.involution_residual_max, max_abs_diff(z, x));
  }

  TransitionRecord rec{state.phi, Vec64(phi_new.begin(), phi_new.end()), log_ratio, accepted};
  ++state.steps;
  if (accepted) {
    ++state.accepted;
    state.phi.assign(phi_new.begin(), phi_new.end());
  }
  return rec;
}

std::vector<TransitionRecord> InvolutiveKernel::run_chain(KernelState& state, int steps) const {
  if (steps < 1) throw ShapeError("run_chain needs at least one step");
  std::vector<TransitionRecord> records;
  records.reserve(static_cast<size_t>(steps));
  for (int i = 0; i < steps; ++i) records.push_back(step(state));
  return records;
}

InvolutiveKernel gaussian_shift_kernel(std::shared_ptr<const TargetDensity> target, double sd) {
  if (sd <= 0.0) throw DomainError("gaussian shift needs sd > 0");
  int n = target->dim();
  auto aux = std::make_shared<GaussianMixture>(std::vector<Vec64>{Vec64(static_cast<size_t>(n))},
                                               std::vector<double>{sd}, std::vector<double>{1.0});
  auto map = [n](std::span<const double> x) {
    Vec64 y(x.size());
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(i)] = x[static_cast<size_t>(i)] + x[static_cast<size_t>(n + i)];
    for (int i = 0; i < n; ++i) y[static_cast<size_t>(n + i)] = -x[static_cast<size_t>(n + i)];
    return y;
  };
  return InvolutiveKernel("gaussian_shift", n, n, map, std::move(target), std::move(aux),
                          /*volume_preserving=*/true);
}

void leapfrog(const TargetDensity& target, double eps, int steps, Vec64& q, Vec64& p) {
  Vec64 grad(q.size());
  target.grad_log_density(q, grad);
  for (size_t i = 0; i < p.size(); ++i) p[i] += 0.5 * eps * grad[i];
  for (int s = 0; s < steps; ++s) {
    for (size_t i = 0; i < q.size(); ++i) q[i] += eps * p[i];
    target.grad_log_density(q, grad);
    double half = s + 1 == steps ? 0.5 : 1.0;
    for (size_t i = 0; i < p.size(); ++i) p[i] += half * eps * grad[i];
  }
}

InvolutiveKernel hmc_kernel(std::shared_ptr<const TargetDensity> target, double step_size,
                            int leapfrog_steps) {
  if (step_size <= 0.0) throw DomainError("hmc needs step_size > 0");
  if (leapfrog_steps < 1) throw DomainError("hmc needs at least one leapfrog step");
  int n = target->dim();
  auto aux = std::make_shared<StdNormal>(n);
  auto t = target;
  auto map = [t, step_size, leapfrog_steps, n](std::span<const double> x) {
    Vec64 q(x.begin(), x.begin() + n);
    Vec64 p(x.begin() + n, x.end());
    leapfrog(*t, step_size, leapfrog_steps, q, p);
    for (double& v : p) v = -v;
    return concat(q, p);
  };
  return InvolutiveKernel("hmc", n, n, map, std::move(target), std::move(aux),
                          /*volume_preserving=*/true);
}

InvolutiveKernel nice_symmetric_kernel(std::shared_ptr<const InvertibleModel> model,
                                       std::shared_ptr<const TargetDensity> target) {
  int n = target->dim();
  if (model->net.dim() != n) throw ShapeError("nice symmetric kernel: net/target dim mismatch");
  auto aux = std::make_shared<StdNormal>(1);
  auto map = [model, n](std::span<const double> x) {
    std::span<const double> phi = x.subspan(0, static_cast<size_t>(n));
    double pi = x[static_cast<size_t>(n)];
    Vec64 out = pi > 0.0 ? model->net.forward(model->params, phi)
                         : model->net.inverse(model->params, phi);
    out.push_back(-pi);
    return out;
  };
  return InvolutiveKernel("nice_symmetric", n, 1, map, std::move(target), std::move(aux),
                          /*volume_preserving=*/true);
}

InvolutiveKernel neural_kernel(std::shared_ptr<const InvolutiveNetwork> gen,
                               std::shared_ptr<const TargetDensity> target,
                               std::shared_ptr<const TargetDensity> aux) {
  int n = target->dim();
  int m = aux->dim();
  if (gen->dim() != n + m) throw ShapeError("neural kernel: generator dim != state + aux");
  bool vp = gen->volume_preserving();
  auto map = [gen](std::span<const double> x) { return gen->apply(x); };
  return InvolutiveKernel("neural", n, m, map, std::move(target), std::move(aux), vp);
}

}  // namespace inmc
