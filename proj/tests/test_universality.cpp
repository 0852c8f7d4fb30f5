#include <doctest.h>

#include <cmath>

#include "inmc/involutive_net.hpp"
#include "inmc/rng.hpp"
#include "inmc/universality.hpp"
#include "inmc/vec.hpp"

using namespace inmc;
namespace uni = inmc::universality;

namespace {

uni::Params make_params(double eps) {
  uni::Params p;
  p.state_dim = 1;
  p.eps = eps;
  p.transition = uni::bounded_tanh_transition();
  return p;
}

}  // namespace

TEST_CASE("displacement ramp branches") {
  uni::Params p = make_params(0.1);
  // n = 1: input is (phi, noise*eps, gate_a, gate_b).
  Vec64 below = {0.3, 0.05, 1.0, 0.0};  // q = -1
  CHECK(uni::displacement_ramp(p, below) == Vec64{0.0, 0.0, 0.0, 0.0});

  // Fixed-point transition: T(phi, pi) = phi makes the top branch zero too.
  uni::Params fixed = p;
  fixed.transition = [](std::span<const double> phi, double) {
    return Vec64(phi.begin(), phi.end());
  };
  Vec64 above = {0.3, 0.05, 0.0, 1.0};  // q = +1
  CHECK(uni::displacement_ramp(fixed, above) == Vec64{0.0, 0.0, 0.0, 0.0});

  // Ramp midpoint q = 0 gives exactly half the top-branch displacement.
  Vec64 mid = {0.3, 0.05, 0.7, 0.7};
  Vec64 top = {0.3, 0.05, 0.0, 1.0};
  Vec64 rm = uni::displacement_ramp(p, mid);
  Vec64 rt = uni::displacement_ramp(p, top);
  CHECK(rm[0] == doctest::Approx(0.5 * rt[0]).epsilon(1e-15));
}

TEST_CASE("state ramp branches and contraction bound") {
  Vec64 below = {2.0, 1.0, 3.0, 2.0};  // q = -1
  CHECK(uni::state_ramp(1, below) == Vec64{0.0, 0.0, 0.0, 0.0});
  Vec64 above = {2.0, 1.0, 0.0, 1.0};  // q = +1
  CHECK(uni::state_ramp(1, above) == Vec64{2.0, 0.0, 0.0, 0.0});

  // |S(x)| <= |x| everywhere (the ramp weight is in [0,1]).
  RngStream rng(5);
  Vec64 x(4);
  for (int rep = 0; rep < 10000; ++rep) {
    rng.fill_gaussian(x);
    CHECK(two_norm(uni::state_ramp(1, x)) <= two_norm(x) + 1e-15);
  }
}

TEST_CASE("embedding: shift vector at zero and exact round trip") {
  uni::Params p = make_params(0.25);
  Vec64 zero(8, 0.0);
  Vec64 shifted = uni::embed(p, zero);
  Vec64 expect(8, 0.0);
  expect[3] = 1.0;  // first gate offset at index n+2
  expect[7] = 1.0;  // second gate offset at the last coordinate
  CHECK(shifted == expect);

  RngStream rng(7);
  Vec64 x(8);
  for (int rep = 0; rep < 1000; ++rep) {
    rng.fill_gaussian(x);
    Vec64 rt = uni::embed_inverse(p, uni::embed(p, x));
    CHECK(max_abs_diff(rt, x) <= 1e-12);
  }
}

TEST_CASE("coupling round trip and unit jacobian") {
  uni::Params p = make_params(0.2);
  RngStream rng(9);
  Vec64 x(8);
  double worst = 0.0;
  for (int rep = 0; rep < 10000; ++rep) {
    rng.fill_gaussian(x);
    Vec64 rt = uni::coupling_inverse(p, uni::coupling(p, x));
    worst = std::max(worst, max_abs_diff(rt, x));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("coupling reduces to the identity when both gates are shut") {
  uni::Params p = make_params(0.1);
  // Both gate differences far below -1/2 keep R and S on the zero branch.
  Vec64 x = {0.4, 0.02, 5.0, 0.0, 0.7, -0.1, 5.0, 0.0};
  CHECK(uni::coupling(p, x) == x);
}

TEST_CASE("full involution: double application over random points") {
  for (double eps : {0.5, 0.1, 0.02}) {
    uni::Params p = make_params(eps);
    RngStream rng(11);
    Vec64 x(8);
    double worst = 0.0;
    for (int rep = 0; rep < 10000; ++rep) {
      rng.fill_gaussian(x);
      Vec64 y = uni::involution(p, x);
      worst = std::max(worst, max_abs_diff(uni::involution(p, y), x));
    }
    CHECK(worst <= 1e-9);
  }
}

TEST_CASE("conditioned identity on the open-gate event") {
  uni::Params p = make_params(0.1);
  RngStream rng(13);
  Vec64 x(8);
  double worst = 0.0;
  int found = 0;
  while (found < 10000) {
    x[0] = rng.next_gaussian();
    std::span<double> pi(x.data() + 1, 7);
    rng.fill_gaussian(pi);
    if (!uni::gates_open(p, pi)) continue;
    ++found;
    double lhs = uni::involution(p, x)[0];
    double rhs = 0.5 * std::tanh(pi[0]) + p.eps * pi[3];
    worst = std::max(worst, std::abs(lhs - rhs));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("gate event matches its definition") {
  uni::Params p = make_params(0.5);
  // bound = 1/(2 eps) = 1; norm bound = 2.
  Vec64 pi = {0.1, 0.0, 0.0, 0.1, 0.0, 0.0, 0.1};
  CHECK(uni::gates_open(p, pi));
  Vec64 bad_gate = pi;
  bad_gate[1] = 1.5;  // pi[2] - pi[1] = -1.5 < -1
  CHECK_FALSE(uni::gates_open(p, bad_gate));
  Vec64 bad_norm = pi;
  bad_norm[3] = 2.5;  // |pi| > 2
  CHECK_FALSE(uni::gates_open(p, bad_norm));
  Vec64 bad_second = pi;
  bad_second[5] = 1.5;  // pi[6] - pi[5] = -1.4 < -1
  CHECK_FALSE(uni::gates_open(p, bad_second));
}

TEST_CASE("volume preservation of the full involution at n = 1") {
  uni::Params p = make_params(0.3);
  auto f = [&](std::span<const double> x) { return uni::involution(p, x); };
  RngStream rng(17);
  Vec64 x(8);
  for (int rep = 0; rep < 10; ++rep) {
    rng.fill_gaussian(x);
    // Numeric jacobian needs the map smooth near x; skip points whose gates
    // sit near a branch boundary after embedding.
    Vec64 e = uni::embed(p, x);
    double q1 = e[3] - e[2];
    Vec64 mid = uni::coupling(p, e);
    double q2 = mid[7] - mid[6];
    if (std::min(std::abs(std::abs(q1) - 0.5), std::abs(std::abs(q2) - 0.5)) < 0.05) continue;
    CHECK(std::abs(log_abs_det_jacobian_numeric(f, x, 1e-6)) <= 1e-5);
  }
}

TEST_CASE("ks statistic: identical samples give zero") {
  Vec64 a = {0.1, 0.5, -0.2, 0.9};
  CHECK(uni::ks_statistic(a, a) == 0.0);
  Vec64 b = {10.0, 11.0, 12.0, 13.0};
  CHECK(uni::ks_statistic(a, b) == 1.0);
}

TEST_CASE("ks against the transition shrinks with eps") {
  uni::Params p = make_params(0.01);
  RngStream rng = RngStream::keyed(19, "ks");
  Vec64 phi = {0.0};
  double ks = uni::ks_vs_transition(p, phi, 10000, rng);
  CHECK(ks <= 0.05);

  Vec64 eps_values = {0.5, 0.1, 0.02};
  auto rows = uni::sweep(make_params(0.1), eps_values, 4000, 23);
  CHECK(rows[0].p_gates_open < rows[1].p_gates_open);
  CHECK(rows[1].p_gates_open < rows[2].p_gates_open);
  CHECK(rows[2].p_gates_open > 0.99);
  // KS improves from coarse to fine eps (allowing sampling noise).
  CHECK(rows[2].ks <= rows[0].ks + 0.02);
}
