#include <doctest.h>

#include <cmath>
#include <sstream>

#include "inmc/diagnostics.hpp"
#include "inmc/errors.hpp"
#include "inmc/kernels.hpp"
#include "inmc/rng.hpp"

using namespace inmc;

namespace {

// Archive from explicit 1-D sequences (first entry is the initial state).
ChainArchive archive_from(const std::vector<Vec64>& chains) {
  ChainArchive a;
  for (const auto& chain : chains) {
    std::vector<TransitionRecord> recs;
    for (size_t t = 1; t < chain.size(); ++t)
      recs.push_back({{chain[t - 1]}, {chain[t]}, 0.0, true});
    a.add_chain({chain[0]}, recs);
  }
  return a;
}

}  // namespace

TEST_CASE("autocorrelation: iid sequence decorrelates, lag 0 is one") {
  RngStream rng(3);
  Vec64 seq(20001);
  for (double& v : seq) v = rng.next_gaussian();
  ChainArchive a = archive_from({seq});
  Vec64 ac = autocorrelation(a, 0, 5);
  CHECK(ac[0] == 1.0);
  for (size_t k = 1; k < ac.size(); ++k)
    CHECK(std::abs(ac[k]) <= 3.0 / std::sqrt(static_cast<double>(seq.size())));
}

TEST_CASE("autocorrelation: alternating signs give lag-1 near -1") {
  Vec64 seq(1000);
  for (size_t i = 0; i < seq.size(); ++i) seq[i] = (i % 2 == 0) ? 1.0 : -1.0;
  ChainArchive a = archive_from({seq});
  Vec64 ac = autocorrelation(a, 0, 2);
  CHECK(ac[1] == doctest::Approx(-1.0).epsilon(0.01));
  CHECK(ac[2] == doctest::Approx(1.0).epsilon(0.01));
}

TEST_CASE("autocorrelation: AR(1) with rho 0.9 decays geometrically") {
  RngStream rng(7);
  Vec64 seq(200001);
  double x = 0.0;
  double rho = 0.9;
  double noise_sd = std::sqrt(1.0 - rho * rho);
  for (double& v : seq) {
    x = rho * x + noise_sd * rng.next_gaussian();
    v = x;
  }
  ChainArchive a = archive_from({seq});
  Vec64 ac = autocorrelation(a, 0, 10);
  for (int k = 1; k <= 10; ++k)
    CHECK(ac[static_cast<size_t>(k)] == doctest::Approx(std::pow(rho, k)).epsilon(0.05));
}

TEST_CASE("autocorrelation rejects constant chains") {
  ChainArchive a = archive_from({Vec64(100, 1.0)});
  CHECK_THROWS_AS((void)autocorrelation(a, 0, 3), DegenerateVariance);
}

TEST_CASE("expected nll: exact samples match the reference and mode sits below") {
  auto mix2 = two_gaussian_mixture_1d();
  RngStream rng(11);
  // Chains whose every state is an exact posterior sample.
  std::vector<Vec64> chains;
  Vec64 draw(1);
  for (int c = 0; c < 64; ++c) {
    Vec64 chain(41);
    for (double& v : chain) {
      mix2->sample(rng, draw);
      v = draw[0];
    }
    chains.push_back(chain);
  }
  ChainArchive a = archive_from(chains);
  NllCurve curve = expected_nll(a, *mix2, 200000, 5);
  double se = 1.0 / std::sqrt(64.0);  // loose per-step bound
  for (double v : curve.nll_by_step) CHECK(std::abs(v - curve.reference) < 3.0 * se);

  // All mass at a mode scores below (better than) the reference NLL.
  ChainArchive mode = archive_from({Vec64(100, 0.5)});
  NllCurve mode_curve = expected_nll(mode, *mix2, 200000, 5);
  CHECK(mode_curve.nll_by_step.back() < mode_curve.reference);
}

TEST_CASE("expected nll decreases along a converging chain started in the tail") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.1);
  ChainArchive a;
  for (int c = 0; c < 256; ++c) {
    KernelState st(Vec64{3.0}, RngStream::keyed(13, "chain", static_cast<uint64_t>(c)));
    auto recs = k.run_chain(st, 60);
    a.add_chain(Vec64{3.0}, recs);
  }
  NllCurve curve = expected_nll(a, *mix2, 100000, 5);
  CHECK(curve.nll_by_step.front() > curve.nll_by_step.back());
  CHECK(curve.nll_by_step.back() < curve.nll_by_step.front() * 0.2);
}

TEST_CASE("tv distance: point mass against a continuous target") {
  auto mix2 = two_gaussian_mixture_1d();
  Vec64 point(10000, 0.5);
  double tv = tv_distance_histogram(point, *mix2, 50, -1.0, 1.0);
  // Everything sits in one bin; TV tends to 1 - (target mass of that bin).
  double width = 2.0 / 50;
  int bin = static_cast<int>((0.5 + 1.0) / width);
  double lo = -1.0 + bin * width, hi = lo + width;
  // Normal CDF via erf for the +0.5 component; the -0.5 component is negligible there.
  auto ncdf = [](double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); };
  double mass = 0.5 * (ncdf((hi - 0.5) / 0.05) - ncdf((lo - 0.5) / 0.05)) +
                0.5 * (ncdf((hi + 0.5) / 0.05) - ncdf((lo + 0.5) / 0.05));
  CHECK(tv == doctest::Approx(1.0 - mass).epsilon(1e-6));
}

TEST_CASE("tv distance input validation") {
  auto mix2 = two_gaussian_mixture_1d();
  Vec64 empty;
  CHECK_THROWS_AS((void)tv_distance_histogram(empty, *mix2, 50, -1.0, 1.0), ShapeError);
  Vec64 ok = {0.0};
  CHECK_THROWS_AS((void)tv_distance_histogram(ok, *mix2, 5, -1.0, 1.0), ShapeError);
}

TEST_CASE("cross-mode rate: single-mode and alternating chains") {
  auto sign_mode = sign_mode_assignment();
  ChainArchive single = archive_from({Vec64(100, 0.5)});
  CHECK(cross_mode_rate(single, sign_mode) == 0.0);

  Vec64 alt(100);
  for (size_t i = 0; i < alt.size(); ++i) alt[i] = (i % 2 == 0) ? 0.5 : -0.5;
  ChainArchive alternating = archive_from({alt});
  CHECK(cross_mode_rate(alternating, sign_mode) == 1.0);
}

TEST_CASE("low-variance gaussian shift almost never crosses modes") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.05);
  KernelState st(Vec64{0.5}, RngStream::keyed(17, "chain"));
  auto recs = k.run_chain(st, 100000);
  ChainArchive a;
  a.add_chain(Vec64{0.5}, recs);
  CHECK(cross_mode_rate(a, sign_mode_assignment()) < 1e-3);
}

TEST_CASE("csv round trip preserves the archive and rejects malformed rows") {
  auto mix2 = two_gaussian_mixture_1d();
  InvolutiveKernel k = gaussian_shift_kernel(mix2, 0.3);
  ChainArchive a;
  for (int c = 0; c < 3; ++c) {
    KernelState st(Vec64{0.1 * c}, RngStream::keyed(19, "chain", static_cast<uint64_t>(c)));
    a.add_chain(st.phi, k.run_chain(st, 20));
  }
  std::ostringstream os;
  a.write_csv(os);
  std::istringstream is(os.str());
  ChainArchive b = ChainArchive::read_csv(is);
  REQUIRE(b.chain_count() == 3);
  REQUIRE(b.step_count() == 20);
  for (int c = 0; c < 3; ++c)
    for (int t = 0; t <= 20; ++t)
      CHECK(b.states[static_cast<size_t>(c)][static_cast<size_t>(t)] ==
            a.states[static_cast<size_t>(c)][static_cast<size_t>(t)]);

  std::istringstream bad("chain,step,accepted,log_ratio,x0\n0,0,1,0.0\n");
  bool threw = false;
  try {
    (void)ChainArchive::read_csv(bad);
  } catch (const ShapeError& e) {
    threw = true;
    CHECK(std::string(e.what()).find("line 2") != std::string::npos);
  }
  CHECK(threw);
}

TEST_CASE("diagnostics are pure functions of the archive") {
  RngStream rng(23);
  Vec64 seq(5001);
  for (double& v : seq) v = rng.next_gaussian();
  ChainArchive a = archive_from({seq});
  Vec64 ac1 = autocorrelation(a, 0, 10);
  Vec64 ac2 = autocorrelation(a, 0, 10);
  CHECK(ac1 == ac2);
  auto normal1 = standard_normal(1);
  double tv1 = tv_distance_histogram(seq, *normal1, 40, -4.0, 4.0);
  double tv2 = tv_distance_histogram(seq, *normal1, 40, -4.0, 4.0);
  CHECK(tv1 == tv2);
}
