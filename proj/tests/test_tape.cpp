#include <doctest.h>

#include <cmath>

#include "inmc/errors.hpp"
#include "inmc/mlp.hpp"
#include "inmc/rng.hpp"
#include "inmc/tape.hpp"

using namespace inmc;

namespace {

Vec64 to_vec(std::span<const double> s) { return Vec64(s.begin(), s.end()); }

}  // namespace

TEST_CASE("elementwise forward values") {
  Tape t;
  Var a = t.input(Vec64{1.0, 2.0});
  Var b = t.input(Vec64{3.0, 4.0});
  CHECK(to_vec(t.value(t.add(a, b))) == Vec64{4.0, 6.0});
  CHECK(to_vec(t.value(t.sub(b, a))) == Vec64{2.0, 2.0});
  CHECK(to_vec(t.value(t.mul(a, b))) == Vec64{3.0, 8.0});
  std::vector<int> swap12 = {1, 0, 2};
  Var c = t.input(Vec64{10.0, 20.0, 30.0});
  CHECK(to_vec(t.value(t.permute(c, swap12))) == Vec64{20.0, 10.0, 30.0});
}

TEST_CASE("min_with_one clips and has zero adjoint on the clipped branch") {
  Tape t;
  Var x = t.input(Vec64{2.5});
  Var y = t.min_with_one(x);
  CHECK(t.scalar(y) == 1.0);
  t.backward(y);
  CHECK(t.adjoint(x)[0] == 0.0);

  // Tie-break at exactly 1 goes to the clipped side.
  Tape t2;
  Var x2 = t2.input(Vec64{1.0});
  Var y2 = t2.min_with_one(x2);
  t2.backward(y2);
  CHECK(t2.adjoint(x2)[0] == 0.0);

  Tape t3;
  Var x3 = t3.input(Vec64{0.3});
  Var y3 = t3.min_with_one(x3);
  t3.backward(y3);
  CHECK(t3.adjoint(x3)[0] == 1.0);
}

TEST_CASE("simple gradients") {
  // d/dx sum(x*x) = 2x
  Tape t;
  Var x = t.input(Vec64{1.0, 2.0});
  Var loss = t.sum(t.mul(x, x));
  t.backward(loss);
  CHECK(to_vec(t.adjoint(x)) == Vec64{2.0, 4.0});

  // sigmoid'(0) = 0.25
  Tape t2;
  Var z = t2.input(Vec64{0.0});
  Var s = t2.sigmoid(z);
  t2.backward(s);
  CHECK(t2.adjoint(z)[0] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("shared subexpressions accumulate additively") {
  // loss = sum(y + y) with y = x*x must match the duplicated-subgraph
  // construction loss = sum(x*x) + sum(x*x).
  Vec64 x0 = {0.7, -1.3, 2.2};
  Tape t;
  Var x = t.input(x0);
  Var y = t.mul(x, x);
  Var loss = t.sum(t.add(y, y));
  t.backward(loss);
  Vec64 shared = to_vec(t.adjoint(x));

  Tape t2;
  Var x2 = t2.input(x0);
  Var y_a = t2.mul(x2, x2);
  Var y_b = t2.mul(x2, x2);
  Var loss2 = t2.add(t2.sum(y_a), t2.sum(y_b));
  t2.backward(loss2);
  Vec64 duplicated = to_vec(t2.adjoint(x2));

  for (size_t i = 0; i < x0.size(); ++i)
    CHECK(shared[i] == doctest::Approx(duplicated[i]).epsilon(1e-15));
}

TEST_CASE("three layer dense net gradient matches finite differences") {
  RngStream rng(17);
  Parameters store;
  Mlp net = Mlp::create(store, "net", {4, 6, 6, 1}, rng, Mlp::FinalInit::kFanIn);
  Vec64 x(4);
  rng.fill_gaussian(x);

  auto loss_value = [&](const Parameters& p) {
    Tape t;
    BoundParams bp = BoundParams::bind(t, p);
    return t.scalar(net.forward(t, bp, t.input(x)));
  };

  Tape t;
  BoundParams bp = BoundParams::bind(t, store);
  Var out = net.forward(t, bp, t.input(x));
  t.backward(out);
  Parameters grads = gradients(t, store, bp);

  double h = 1e-5;
  double worst = 0.0;
  for (int s = 0; s < store.segment_count(); ++s) {
    for (size_t k = 0; k < store.seg(s).size(); ++k) {
      Parameters p = store;
      p.seg(s)[k] += h;
      double fp = loss_value(p);
      p.seg(s)[k] -= 2 * h;
      double fm = loss_value(p);
      double fd = (fp - fm) / (2 * h);
      double ad = grads.seg(s)[k];
      double rel = std::abs(ad - fd) / std::max(std::abs(ad) + std::abs(fd), 1e-8);
      worst = std::max(worst, rel);
    }
  }
  CHECK(worst <= 1e-4);
}

TEST_CASE("domain and shape errors") {
  Tape t;
  Var a = t.input(Vec64{1.0, 2.0});
  Var b = t.input(Vec64{1.0, 2.0, 3.0});
  CHECK_THROWS_AS((void)t.add(a, b), ShapeError);
  CHECK_THROWS_AS((void)t.log(t.input(Vec64{-1.0})), DomainError);
  CHECK_THROWS_AS((void)t.div(a, t.input(Vec64{1.0, 0.0})), DomainError);
  CHECK_THROWS_AS((void)t.slice(a, 1, 5), ShapeError);
  CHECK_THROWS_AS(t.backward(a), ShapeError);  // root not scalar
  std::vector<int> bad = {0, 0};
  CHECK_THROWS_AS((void)t.permute(a, bad), ShapeError);
}

TEST_CASE("matvec values and logsumexp stability") {
  Tape t;
  // 2x3 matrix [[1,2,3],[4,5,6]] times [1,1,1]
  Var w = t.input(Vec64{1, 2, 3, 4, 5, 6});
  Var x = t.input(Vec64{1, 1, 1});
  CHECK(to_vec(t.value(t.matvec(w, x, 2, 3))) == Vec64{6.0, 15.0});

  Var big = t.input(Vec64{1000.0, 1000.0});
  CHECK(t.scalar(t.logsumexp(big)) == doctest::Approx(1000.0 + std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("relu subgradient is zero at the kink") {
  Tape t;
  Var x = t.input(Vec64{0.0});
  Var y = t.relu(x);
  t.backward(y);
  CHECK(t.adjoint(x)[0] == 0.0);
}
