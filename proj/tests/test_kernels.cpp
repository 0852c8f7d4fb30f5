#include <doctest.h>

#include <cmath>

#include "inmc/diagnostics.hpp"
#include "inmc/errors.hpp"
#include "inmc/kernels.hpp"
#include "inmc/rng.hpp"

using namespace inmc;

TEST_CASE("gaussian shift map is an exact involution and its ratio drops the auxiliary") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.3);
  RngStream rng(3);
  for (int rep = 0; rep < 100; ++rep) {
    Vec64 x = {rng.next_gaussian(), 0.3 * rng.next_gaussian()};
    Vec64 y = k.apply_map(x);
    CHECK(y[0] == x[0] + x[1]);
    CHECK(y[1] == -x[1]);
    Vec64 z = k.apply_map(y);
    CHECK(z[0] == x[0] + x[1] - x[1]);  // exact arithmetic on doubles
    CHECK(z[1] == x[1]);

    // Acceptance reduces to the target ratio since the auxiliary density is
    // symmetric under negation.
    double lr = k.target().log_density(std::span<const double>(y.data(), 1)) -
                k.target().log_density(std::span<const double>(x.data(), 1));
    double la = k.aux().log_density(std::span<const double>(y.data() + 1, 1)) -
                k.aux().log_density(std::span<const double>(x.data() + 1, 1));
    CHECK(la == 0.0);
    (void)lr;
  }
}

TEST_CASE("identity map accepts with probability exactly one") {
  auto mix2 = two_gaussian_mixture_1d();
  auto aux = standard_normal(1);
  auto id_map = [](std::span<const double> x) { return Vec64(x.begin(), x.end()); };
  InvolutiveKernel k("identity", 1, 1, id_map, mix2, aux, true);
  KernelState st(Vec64{0.4}, RngStream::keyed(1, "t"));
  for (int i = 0; i < 50; ++i) {
    TransitionRecord r = k.step(st);
    CHECK(r.log_ratio == 0.0);
    CHECK(r.accepted);
  }
  CHECK(st.acceptance_rate() == 1.0);
}

TEST_CASE("run_chain determinism and bookkeeping") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.3);

  KernelState a(Vec64{0.5}, RngStream::keyed(7, "chain", 0));
  KernelState b(Vec64{0.5}, RngStream::keyed(7, "chain", 0));
  auto ra = k.run_chain(a, 500);
  auto rb = k.run_chain(b, 500);
  REQUIRE(ra.size() == rb.size());
  uint64_t accepted = 0;
  for (size_t i = 0; i < ra.size(); ++i) {
    CHECK(ra[i].accepted == rb[i].accepted);
    CHECK(ra[i].log_ratio == rb[i].log_ratio);
    CHECK(ra[i].proposal == rb[i].proposal);
    accepted += ra[i].accepted ? 1 : 0;
  }
  CHECK(accepted == a.accepted);
  CHECK(a.steps == 500);

  // b = 1 reproduces exactly one step.
  KernelState c(Vec64{0.5}, RngStream::keyed(7, "chain", 0));
  auto rc = k.run_chain(c, 1);
  REQUIRE(rc.size() == 1);
  CHECK(rc[0].log_ratio == ra[0].log_ratio);
}

TEST_CASE("vanishing shift scale drives acceptance to one") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 1e-7);
  KernelState st(Vec64{0.5}, RngStream::keyed(9, "t"));
  k.run_chain(st, 1000);
  CHECK(st.acceptance_rate() > 0.999);
}

TEST_CASE("acceptance computed two ways agrees to 1e-12 relative") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.4);
  RngStream rng(11);
  for (int rep = 0; rep < 200; ++rep) {
    Vec64 x = {0.5 + 0.2 * rng.next_gaussian(), 0.4 * rng.next_gaussian()};
    Vec64 y = k.apply_map(x);
    std::span<const double> phi(x.data(), 1), pi(x.data() + 1, 1);
    std::span<const double> phi2(y.data(), 1), pi2(y.data() + 1, 1);
    double log_sum = k.target().log_density(phi2) + k.aux().log_density(pi2) -
                     k.target().log_density(phi) - k.aux().log_density(pi);
    double p_log = std::exp(std::min(0.0, log_sum));
    double p_lin =
        std::min(1.0, (std::exp(k.target().log_density(phi2)) * std::exp(k.aux().log_density(pi2))) /
                          (std::exp(k.target().log_density(phi)) * std::exp(k.aux().log_density(pi))));
    CHECK(std::abs(p_log - p_lin) <= 1e-12 * std::max(p_log, p_lin));
  }
}

TEST_CASE("transition reversal: the map sends records back") {
  // Surrogate for the delta-kernel symmetry: f(phi' ⌢ pi') = phi ⌢ pi.
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.3);
  RngStream rng(13);
  for (int rep = 0; rep < 1000; ++rep) {
    Vec64 x = {rng.next_gaussian(), 0.3 * rng.next_gaussian()};
    Vec64 y = k.apply_map(x);
    Vec64 back = k.apply_map(y);
    CHECK(max_abs_diff(back, x) <= 1e-9);
  }
}

TEST_CASE("hmc: leapfrog with negation is involutive to 1e-9") {
  auto normal = standard_normal(3);
  InvolutiveKernel k = hmc_kernel(normal, 0.1, 10);
  RngStream rng(17);
  Vec64 x(6);
  double worst = 0.0;
  for (int rep = 0; rep < 500; ++rep) {
    rng.fill_gaussian(x);
    Vec64 y = k.apply_map(k.apply_map(x));
    worst = std::max(worst, max_abs_diff(y, x));
  }
  CHECK(worst <= 1e-9);
}

TEST_CASE("hmc: energy error scales as the square of the step size") {
  auto normal = standard_normal(2);
  Vec64 q0 = {1.3, -0.6}, p0 = {0.7, 0.4};
  auto h_of = [&](const Vec64& q, const Vec64& p) {
    return -normal->log_density(q) + 0.5 * dot(p, p);
  };
  Vec64 errs;
  Vec64 epss = {0.2, 0.1, 0.05, 0.025};
  for (double eps : epss) {
    int steps = static_cast<int>(std::lround(1.0 / eps));
    Vec64 q = q0, p = p0;
    leapfrog(*normal, eps, steps, q, p);
    errs.push_back(std::abs(h_of(q, p) - h_of(q0, p0)));
  }
  // Least-squares slope of log|dH| against log eps.
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (size_t i = 0; i < epss.size(); ++i) {
    double lx = std::log(epss[i]), ly = std::log(errs[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  double n = static_cast<double>(epss.size());
  double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  CHECK(slope == doctest::Approx(2.0).epsilon(0.2));
  // Halving the step cuts |dH| by roughly 4.
  CHECK(errs[0] / errs[1] == doctest::Approx(4.0).epsilon(0.5));
}

TEST_CASE("nice symmetric kernel: case split is involutive and identity net never moves") {
  auto model = std::make_shared<InvertibleModel>(InvertibleModel{Parameters{}, InvertibleNet(2)});
  RngStream rng(23);
  {
    auto& m = *model;
    m.net.add_coupling(m.params, "c0", true, 4, rng);
    // Perturb so forward != inverse.
    for (int s = 0; s < m.params.segment_count(); ++s)
      for (double& v : m.params.seg(s)) v += 0.3 * rng.next_gaussian();
  }
  auto normal = standard_normal(2);
  InvolutiveKernel k = nice_symmetric_kernel(model, normal);
  for (int rep = 0; rep < 200; ++rep) {
    Vec64 x = {rng.next_gaussian(), rng.next_gaussian(), rng.next_gaussian()};
    if (x[2] == 0.0) continue;
    Vec64 y = k.apply_map(k.apply_map(x));
    CHECK(max_abs_diff(y, x) <= 1e-9);
  }

  auto id_model = std::make_shared<InvertibleModel>(InvertibleModel{Parameters{}, InvertibleNet(1)});
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel ki = nice_symmetric_kernel(id_model, mix2);
  KernelState st(Vec64{0.25}, RngStream::keyed(29, "t"));
  for (int i = 0; i < 100; ++i) {
    TransitionRecord r = ki.step(st);
    CHECK(r.accepted);
    CHECK(r.proposal == Vec64{0.25});
  }
}

TEST_CASE("nice symmetric kernel keeps a normal target stationary") {
  auto model = std::make_shared<InvertibleModel>(InvertibleModel{Parameters{}, InvertibleNet(2)});
  RngStream rng(31);
  {
    auto& m = *model;
    m.net.add_coupling(m.params, "c0", true, 4, rng);
    m.net.add_coupling(m.params, "c1", false, 4, rng);
    for (int s = 0; s < m.params.segment_count(); ++s)
      for (double& v : m.params.seg(s)) v += 0.2 * rng.next_gaussian();
  }
  auto normal = standard_normal(2);
  InvolutiveKernel k = nice_symmetric_kernel(model, normal);
  KernelState st(Vec64{0.0, 0.0}, RngStream::keyed(37, "t"));
  Vec64 first_coord;
  for (int i = 0; i < 60000; ++i) {
    k.step(st);
    if (i >= 2000) first_coord.push_back(st.phi[0]);
  }
  auto normal1 = standard_normal(1);
  double tv = tv_distance_histogram(first_coord, *normal1, 40, -4.0, 4.0);
  CHECK(tv <= 0.08);
}

TEST_CASE("neural kernel: zero-initialized generator yields a valid deterministic chain") {
  RngStream rng(41);
  auto gen = std::make_shared<InvolutiveNetwork>(build_default_generator(1, 7, 4, rng));
  auto mix2 = two_gaussian_mixture_1d();
  auto aux = standard_normal(7);
  InvolutiveKernel k = neural_kernel(gen, mix2, aux);
  k.set_monitor_every(1);
  KernelState st(Vec64{0.3}, RngStream::keyed(43, "t"));
  auto records = k.run_chain(st, 500);
  CHECK(st.involution_residual_max <= 1e-9);
  for (const auto& r : records) CHECK(std::isfinite(r.log_ratio));
  CHECK(st.nonfinite_proposals == 0);
}

TEST_CASE("kernel construction rejects non-volume-preserving maps") {
  auto mix2 = two_gaussian_mixture_1d();
  auto aux = standard_normal(1);
  auto id_map = [](std::span<const double> x) { return Vec64(x.begin(), x.end()); };
  CHECK_THROWS_AS(InvolutiveKernel("bad", 1, 1, id_map, mix2, aux, false), NotVolumePreserving);
}

TEST_CASE("nonfinite proposals are rejected and counted") {
  auto mix2 = two_gaussian_mixture_1d();
  auto aux = standard_normal(1);
  auto nan_map = [](std::span<const double> x) {
    Vec64 y(x.begin(), x.end());
    y[0] = std::numeric_limits<double>::quiet_NaN();
    return y;
  };
  InvolutiveKernel k("nan", 1, 1, nan_map, mix2, aux, true);
  k.set_monitor_every(0);
  KernelState st(Vec64{0.5}, RngStream::keyed(47, "t"));
  auto records = k.run_chain(st, 10);
  CHECK(st.nonfinite_proposals == 10);
  for (const auto& r : records) {
    CHECK_FALSE(r.accepted);
    CHECK(r.log_ratio == -std::numeric_limits<double>::infinity());
  }
  CHECK(st.phi == Vec64{0.5});
}
