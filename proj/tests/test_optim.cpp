#include <doctest.h>

#include <cmath>

#include "inmc/params.hpp"

using namespace inmc;

namespace {

Parameters single_param(double v) {
  Parameters p;
  p.add_segment("w", Vec64{v});
  return p;
}

}  // namespace

TEST_CASE("rmsprop leaves parameters unchanged under zero gradient") {
  Parameters p;
  p.add_segment("a", Vec64{1.0, -2.0, 3.0});
  Parameters g = p.zeros_like();
  RmsPropState st = RmsPropState::init(p);
  Parameters before = p;
  rmsprop_step(p, g, st, {.lr = 1e-3, .decay = 0.9, .eps = 1e-8}, StepDirection::kDescend);
  for (size_t i = 0; i < 3; ++i) CHECK(p.seg(0)[i] == before.seg(0)[i]);
}

TEST_CASE("rmsprop first step from zero accumulator") {
  Parameters p = single_param(0.0);
  Parameters g = single_param(1.0);
  RmsPropState st = RmsPropState::init(p);
  RmsPropConfig cfg{.lr = 1e-4, .decay = 0.9, .eps = 1e-8};
  rmsprop_step(p, g, st, cfg, StepDirection::kDescend);
  double expected = -1e-4 / std::sqrt(0.1 + 1e-8);
  CHECK(p.seg(0)[0] == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("constant gradient drives the step size toward lr * sign(g)") {
  Parameters p = single_param(0.0);
  Parameters g = single_param(-2.5);
  RmsPropState st = RmsPropState::init(p);
  RmsPropConfig cfg{.lr = 1e-3, .decay = 0.9, .eps = 1e-12};
  double prev = 0.0;
  double step = 0.0;
  for (int i = 0; i < 400; ++i) {
    rmsprop_step(p, g, st, cfg, StepDirection::kDescend);
    step = p.seg(0)[0] - prev;
    prev = p.seg(0)[0];
  }
  // Accumulator converges to g^2, so the step approaches lr * sign(g).
  CHECK(step == doctest::Approx(cfg.lr).epsilon(1e-6));
}

TEST_CASE("ascent flips the direction") {
  Parameters p = single_param(0.0);
  Parameters g = single_param(1.0);
  RmsPropState st = RmsPropState::init(p);
  rmsprop_step(p, g, st, {.lr = 1e-4, .decay = 0.9, .eps = 1e-8}, StepDirection::kAscend);
  CHECK(p.seg(0)[0] > 0.0);
}

TEST_CASE("clamp_weights") {
  Parameters p;
  p.add_segment("a", Vec64{-0.5, 0.005, 2.0});
  clamp_weights(p, 0.01);
  CHECK(p.seg(0) == Vec64{-0.01, 0.005, 0.01});

  Parameters z;
  z.add_segment("a", Vec64{0.0, 0.0});
  clamp_weights(z, 0.3);
  CHECK(z.seg(0) == Vec64{0.0, 0.0});

  Parameters inside;
  inside.add_segment("a", Vec64{-0.01, 0.003, 0.01});
  Parameters before = inside;
  clamp_weights(inside, 0.01);
  for (size_t i = 0; i < 3; ++i) CHECK(inside.seg(0)[i] == before.seg(0)[i]);
}

TEST_CASE("gradient extraction leaves unused segments at zero") {
  Parameters p;
  p.add_segment("used", Vec64{2.0});
  p.add_segment("unused", Vec64{3.0});
  Tape t;
  BoundParams bp = BoundParams::bind(t, p);
  Var loss = t.sum(t.mul(bp.var(0), bp.var(0)));
  t.backward(loss);
  Parameters g = gradients(t, p, bp);
  CHECK(g.seg(0)[0] == doctest::Approx(4.0));
  CHECK(g.seg(1)[0] == 0.0);
}

TEST_CASE("shape mismatch raises") {
  Parameters p = single_param(0.0);
  Parameters g;
  g.add_segment("w", Vec64{1.0, 2.0});
  RmsPropState st = RmsPropState::init(p);
  CHECK_THROWS_AS(rmsprop_step(p, g, st, {}, StepDirection::kDescend), ShapeError);
}
