#include "inmc/targets.hpp"

#include <cmath>
#include <numbers>

#include "inmc/errors.hpp"

namespace inmc {

namespace {
constexpr double kLog2Pi = 1.8378770664093454836;  // log(2*pi)
}

void TargetDensity::sample(RngStream&, std::span<double>) const {
  throw DomainError("target has no exact sampler");
}

GaussianMixture::GaussianMixture(std::vector<Vec64> means, std::vector<double> sds,
                                 std::vector<double> weights)
    : means_(std::move(means)), sds_(std::move(sds)) {
  if (means_.empty() || means_.size() != sds_.size() || means_.size() != weights.size())
    throw ShapeError("mixture needs matching means/sds/weights");
  dim_ = static_cast<int>(means_.front().size());
  double total = 0.0;
  for (double w : weights) {
    if (w <= 0.0) throw DomainError("mixture weights must be positive");
    total += w;
  }
  double cum = 0.0;
  for (size_t k = 0; k < weights.size(); ++k) {
    if (static_cast<int>(means_[k].size()) != dim_) throw ShapeError("mixture mean dim mismatch");
    if (sds_[k] <= 0.0) throw DomainError("mixture sds must be positive");
    log_weights_.push_back(std::log(weights[k] / total));
    cum += weights[k] / total;
    cum_weights_.push_back(cum);
  }
  cum_weights_.back() = 1.0;
}

double GaussianMixture::log_density(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw ShapeError("mixture log_density: bad length");
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> comps(means_.size());
  for (size_t k = 0; k < means_.size(); ++k) {
    double q = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double d = x[static_cast<size_t>(i)] - means_[k][static_cast<size_t>(i)];
      q += d * d;
    }
    double s2 = sds_[k] * sds_[k];
    comps[k] = log_weights_[k] - 0.5 * q / s2 - 0.5 * dim_ * (kLog2Pi + std::log(s2));
    best = std::max(best, comps[k]);
  }
  double acc = 0.0;
  for (double c : comps) acc += std::exp(c - best);
  return best + std::log(acc);
}

void GaussianMixture::grad_log_density(std::span<const double> x, std::span<double> out) const {
  if (static_cast<int>(x.size()) != dim_ || out.size() != x.size())
    throw ShapeError("mixture grad: bad length");
  // Responsibility-weighted component gradients.
  std::vector<double> comps(means_.size());
  double best = -std::numeric_limits<double>::infinity();
  for (size_t k = 0; k < means_.size(); ++k) {
    double q = 0.0;
    for (int i = 0; i < dim_; ++i) {
      double d = x[static_cast<size_t>(i)] - means_[k][static_cast<size_t>(i)];
      q += d * d;
    }
    double s2 = sds_[k] * sds_[k];
    comps[k] = log_weights_[k] - 0.5 * q / s2 - 0.5 * dim_ * (kLog2Pi + std::log(s2));
    best = std::max(best, comps[k]);
  }
  double z = 0.0;
  for (double c : comps) z += std::exp(c - best);
  for (double& g : out) g = 0.0;
  for (size_t k = 0; k < means_.size(); ++k) {
    double r = std::exp(comps[k] - best) / z;
    double s2 = sds_[k] * sds_[k];
    for (int i = 0; i < dim_; ++i)
      out[static_cast<size_t>(i)] +=
          r * (means_[k][static_cast<size_t>(i)] - x[static_cast<size_t>(i)]) / s2;
  }
}

Var GaussianMixture::log_density(Tape& tape, Var x) const {
  Var comps{};
  for (size_t k = 0; k < means_.size(); ++k) {
    Var mu = tape.constant(means_[k]);
    Var d = tape.sub(x, mu);
    double s2 = sds_[k] * sds_[k];
    Var q = tape.scale(tape.sum(tape.mul(d, d)), -0.5 / s2);
    double c = log_weights_[k] - 0.5 * dim_ * (kLog2Pi + std::log(s2));
    Var comp = tape.add(q, tape.constant_scalar(c));
    comps = k == 0 ? comp : tape.concat(comps, comp);
  }
  return tape.logsumexp(comps);
}

void GaussianMixture::sample(RngStream& rng, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_) throw ShapeError("mixture sample: bad length");
  double u = rng.next_uniform();
  size_t k = 0;
  while (k + 1 < cum_weights_.size() && u >= cum_weights_[k]) ++k;
  for (int i = 0; i < dim_; ++i)
    out[static_cast<size_t>(i)] =
        means_[k][static_cast<size_t>(i)] + sds_[k] * rng.next_gaussian();
}

StdNormal::StdNormal(int dim) : dim_(dim) {
  if (dim < 1) throw ShapeError("std normal needs dim >= 1");
}

double StdNormal::log_density(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw ShapeError("std normal log_density: bad length");
  double q = 0.0;
  for (double v : x) q += v * v;
  return -0.5 * q - 0.5 * dim_ * kLog2Pi;
}

void StdNormal::grad_log_density(std::span<const double> x, std::span<double> out) const {
  if (x.size() != out.size() || static_cast<int>(x.size()) != dim_)
    throw ShapeError("std normal grad: bad length");
  for (size_t i = 0; i < x.size(); ++i) out[i] = -x[i];
}

Var StdNormal::log_density(Tape& tape, Var x) const {
  Var q = tape.scale(tape.sum(tape.mul(x, x)), -0.5);
  return tape.add(q, tape.constant_scalar(-0.5 * dim_ * kLog2Pi));
}

void StdNormal::sample(RngStream& rng, std::span<double> out) const {
  if (static_cast<int>(out.size()) != dim_) throw ShapeError("std normal sample: bad length");
  rng.fill_gaussian(out);
}

std::shared_ptr<const TargetDensity> two_gaussian_mixture_1d() {
  return std::make_shared<GaussianMixture>(std::vector<Vec64>{{0.5}, {-0.5}},
                                           std::vector<double>{0.05, 0.05},
                                           std::vector<double>{0.5, 0.5});
}

std::shared_ptr<const TargetDensity> gaussian_ring_2d(int k, double radius, double sd) {
  if (k < 1) throw ShapeError("ring mixture needs k >= 1");
  std::vector<Vec64> means;
  for (int i = 0; i < k; ++i) {
    double angle = 2.0 * std::numbers::pi * i / k;
    means.push_back({radius * std::cos(angle), radius * std::sin(angle)});
  }
  return std::make_shared<GaussianMixture>(std::move(means), std::vector<double>(k, sd),
                                           std::vector<double>(k, 1.0 / k));
}

std::shared_ptr<const TargetDensity> standard_normal(int dim) {
  return std::make_shared<StdNormal>(dim);
}

std::shared_ptr<const TargetDensity> make_target(const std::string& name,
                                                 const TargetOptions& opts) {
  if (name == "mix2") return two_gaussian_mixture_1d();
  if (name == "mog6") return gaussian_ring_2d(opts.ring_components, opts.ring_radius, opts.ring_sd);
  if (name == "std_normal") return standard_normal(opts.normal_dim);
  throw ConfigError("unknown target '" + name + "'");
}

}  // namespace inmc
