#include <doctest.h>

#include <cmath>
#include <numbers>

#include "inmc/diagnostics.hpp"
#include "inmc/rng.hpp"
#include "inmc/targets.hpp"

using namespace inmc;

namespace {

double fd_grad_mismatch(const TargetDensity& t, RngStream& rng, double scale) {
  double worst = 0.0;
  Vec64 x(static_cast<size_t>(t.dim()));
  Vec64 g(x.size());
  for (int rep = 0; rep < 100; ++rep) {
    for (double& v : x) v = scale * rng.next_gaussian();
    t.grad_log_density(x, g);
    for (size_t i = 0; i < x.size(); ++i) {
      double h = 1e-5;
      double orig = x[i];
      x[i] = orig + h;
      double fp = t.log_density(x);
      x[i] = orig - h;
      double fm = t.log_density(x);
      x[i] = orig;
      double fd = (fp - fm) / (2 * h);
      double rel = std::abs(g[i] - fd) / std::max(std::abs(g[i]) + std::abs(fd), 1e-8);
      worst = std::max(worst, rel);
    }
  }
  return worst;
}

}  // namespace

TEST_CASE("two-Gaussian mixture: symmetry and direct evaluation") {
  auto t = two_gaussian_mixture_1d();
  Vec64 a = {0.5}, b = {-0.5}, zero = {0.0};
  CHECK(t->log_density(a) == doctest::Approx(t->log_density(b)).epsilon(1e-14));

  // density(0) = 2 * (1/2) * N(0; 0.5, 0.05^2) by symmetry of the two terms
  double sd = 0.05;
  double expected = std::exp(-0.5 * 0.25 / (sd * sd)) / (sd * std::sqrt(2 * std::numbers::pi));
  CHECK(std::exp(t->log_density(zero)) == doctest::Approx(expected).epsilon(1e-12));

  // density(0)/density(0.5): the cross term at 0.5 is exp(-200), negligible.
  double ratio = std::exp(t->log_density(zero) - t->log_density(a));
  CHECK(ratio == doctest::Approx(2.0 * std::exp(-0.5 * std::pow(0.5 / 0.05, 2)) / (1.0 + std::exp(-200.0))).epsilon(1e-10));
}

TEST_CASE("two-Gaussian mixture sampler has zero mean") {
  auto t = two_gaussian_mixture_1d();
  RngStream rng(5);
  double sum = 0.0;
  constexpr int kN = 1000000;
  Vec64 x(1);
  for (int i = 0; i < kN; ++i) {
    t->sample(rng, x);
    sum += x[0];
  }
  double mean = sum / kN;
  // sd of the mean: component means +-0.5 dominate -> sd ~ 0.5 / sqrt(N)
  double sd_mean = std::sqrt(0.25 + 0.05 * 0.05) / std::sqrt(static_cast<double>(kN));
  CHECK(std::abs(mean) < 3.0 * sd_mean);
}

TEST_CASE("ring mixture: log density invariant under 60 degree rotation") {
  auto t = gaussian_ring_2d(6, 5.0, 0.5);
  RngStream rng(9);
  double c = std::cos(std::numbers::pi / 3.0), s = std::sin(std::numbers::pi / 3.0);
  for (int rep = 0; rep < 50; ++rep) {
    Vec64 x = {3.0 * rng.next_gaussian(), 3.0 * rng.next_gaussian()};
    Vec64 r = {c * x[0] - s * x[1], s * x[0] + c * x[1]};
    CHECK(t->log_density(x) == doctest::Approx(t->log_density(r)).epsilon(1e-9));
  }
}

TEST_CASE("ring mixture: density at a mean matches the single-component value") {
  auto t = gaussian_ring_2d(6, 5.0, 0.5);
  Vec64 mu = t->modes()[0];
  double sd = 0.5;
  double single = (1.0 / 6.0) / (2 * std::numbers::pi * sd * sd);
  // Cross terms: nearest other mean is 5.0 (ring chord at 60 degrees), so
  // the correction is at most 5 exp(-25/(2*0.25))/6 per component.
  CHECK(std::exp(t->log_density(mu)) == doctest::Approx(single).epsilon(1e-10));
}

TEST_CASE("ring mixture sampler: component frequencies are uniform") {
  auto t = gaussian_ring_2d(6, 5.0, 0.5);
  auto assign = nearest_mode_assignment(t->modes());
  RngStream rng(21);
  std::vector<int> counts(6, 0);
  constexpr int kN = 100000;
  Vec64 x(2);
  for (int i = 0; i < kN; ++i) {
    t->sample(rng, x);
    ++counts[static_cast<size_t>(assign(x))];
  }
  double chi2 = 0.0;
  for (int c : counts) chi2 += (c - kN / 6.0) * (c - kN / 6.0) / (kN / 6.0);
  CHECK(chi2 < 15.09);  // 99% quantile, 5 dof
}

TEST_CASE("standard normal: mode value, gradient, covariance") {
  auto t = standard_normal(3);
  Vec64 zero = {0.0, 0.0, 0.0};
  CHECK(t->log_density(zero) ==
        doctest::Approx(-1.5 * std::log(2 * std::numbers::pi)).epsilon(1e-14));

  Vec64 x = {0.7, -1.1, 0.3}, g(3);
  t->grad_log_density(x, g);
  for (int i = 0; i < 3; ++i) CHECK(g[static_cast<size_t>(i)] == -x[static_cast<size_t>(i)]);

  RngStream rng(33);
  double cov[3][3] = {};
  constexpr int kN = 1000000;
  for (int s = 0; s < kN; ++s) {
    t->sample(rng, x);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) cov[i][j] += x[static_cast<size_t>(i)] * x[static_cast<size_t>(j)];
  }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double c = cov[i][j] / kN;
      CHECK(std::abs(c - (i == j ? 1.0 : 0.0)) < 0.01);
    }
}

TEST_CASE("gradients match finite differences for every target") {
  RngStream rng(55);
  CHECK(fd_grad_mismatch(*two_gaussian_mixture_1d(), rng, 0.7) <= 1e-4);
  CHECK(fd_grad_mismatch(*gaussian_ring_2d(6, 5.0, 0.5), rng, 3.0) <= 1e-4);
  CHECK(fd_grad_mismatch(*standard_normal(4), rng, 1.0) <= 1e-4);
}

TEST_CASE("tape log density equals the plain value and differentiates to the gradient") {
  auto targets = {two_gaussian_mixture_1d(), gaussian_ring_2d(6, 5.0, 0.5), standard_normal(2)};
  RngStream rng(77);
  for (const auto& t : targets) {
    Vec64 x(static_cast<size_t>(t->dim()));
    for (double& v : x) v = 2.0 * rng.next_gaussian();
    Tape tape;
    Var in = tape.input(x);
    Var lp = t->log_density(tape, in);
    CHECK(tape.scalar(lp) == doctest::Approx(t->log_density(x)).epsilon(1e-12));
    tape.backward(lp);
    Vec64 g(x.size());
    t->grad_log_density(x, g);
    for (size_t i = 0; i < x.size(); ++i)
      CHECK(tape.adjoint(in)[i] == doctest::Approx(g[i]).epsilon(1e-10));
  }
}

TEST_CASE("exact sampler matches its density in TV over a fine histogram") {
  auto t = two_gaussian_mixture_1d();
  RngStream rng(91);
  Vec64 samples(1000000);
  Vec64 x(1);
  for (double& s : samples) {
    t->sample(rng, x);
    s = x[0];
  }
  double tv = tv_distance_histogram(samples, *t, 200, -1.0, 1.0);
  CHECK(tv <= 0.01);
}

TEST_CASE("unknown target names are rejected") {
  CHECK_THROWS_AS((void)make_target("nope"), ConfigError);
}
