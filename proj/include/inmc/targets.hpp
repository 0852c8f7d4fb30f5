#pragma once

#include <memory>
#include <string>
#include <vector>

#include "inmc/rng.hpp"
#include "inmc/tape.hpp"
#include "inmc/vec.hpp"

namespace inmc {

// Differentiable unnormalized log-density with an optional exact sampler.
// log_density values returned here are normalized for the built-in targets
// (log_norm_const() reports the offset otherwise); Metropolis-Hastings only
// ever uses ratios, the normalization matters for NLL diagnostics.
class TargetDensity {
 public:
  virtual ~TargetDensity() = default;

  virtual int dim() const = 0;
  virtual double log_density(std::span<const double> x) const = 0;
  virtual void grad_log_density(std::span<const double> x, std::span<double> out) const = 0;
  // Tape node carrying the same value, differentiable w.r.t. x.
  virtual Var log_density(Tape& tape, Var x) const = 0;

  virtual bool has_exact_sampler() const { return false; }
  virtual void sample(RngStream& rng, std::span<double> out) const;

  // log Z such that log_density - log Z is the normalized log pdf.
  virtual double log_norm_const() const { return 0.0; }

  // Component means for multi-modal targets (empty otherwise); used by the
  // mode-assignment diagnostics.
  virtual std::vector<Vec64> modes() const { return {}; }
};

// Equal-dimension isotropic Gaussian mixture. Handles both experiment
// targets: the 1-D pair of narrow Gaussians and the 2-D ring of six.
class GaussianMixture final : public TargetDensity {
 public:
  GaussianMixture(std::vector<Vec64> means, std::vector<double> sds, std::vector<double> weights);

  int dim() const override { return dim_; }
  double log_density(std::span<const double> x) const override;
  void grad_log_density(std::span<const double> x, std::span<double> out) const override;
  Var log_density(Tape& tape, Var x) const override;
  bool has_exact_sampler() const override { return true; }
  void sample(RngStream& rng, std::span<double> out) const override;
  std::vector<Vec64> modes() const override { return means_; }

 private:
  int dim_;
  std::vector<Vec64> means_;
  std::vector<double> sds_;
  std::vector<double> log_weights_;
  std::vector<double> cum_weights_;
};

class StdNormal final : public TargetDensity {
 public:
  explicit StdNormal(int dim);

  int dim() const override { return dim_; }
  double log_density(std::span<const double> x) const override;
  void grad_log_density(std::span<const double> x, std::span<double> out) const override;
  Var log_density(Tape& tape, Var x) const override;
  bool has_exact_sampler() const override { return true; }
  void sample(RngStream& rng, std::span<double> out) const override;

 private:
  int dim_;
};

// The auxiliary distribution is always a standard normal.
using AuxiliaryDensity = StdNormal;

// Equal-weight mixture of N(+0.5, 0.05^2) and N(-0.5, 0.05^2) on the line.
std::shared_ptr<const TargetDensity> two_gaussian_mixture_1d();

// k equal-weight isotropic Gaussians with means on a circle.
std::shared_ptr<const TargetDensity> gaussian_ring_2d(int k, double radius, double sd);

std::shared_ptr<const TargetDensity> standard_normal(int dim);

struct TargetOptions {
  double ring_radius = 5.0;
  double ring_sd = 0.5;
  int ring_components = 6;
  int normal_dim = 2;
};

// Lookup by config name: "mix2", "mog6", "std_normal".
std::shared_ptr<const TargetDensity> make_target(const std::string& name,
                                                 const TargetOptions& opts = {});

}  // namespace inmc
