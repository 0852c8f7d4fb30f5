#include "inmc/verify.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "inmc/chain_dp.hpp"
#include "inmc/diagnostics.hpp"
#include "inmc/errors.hpp"
#include "inmc/kernels.hpp"
#include "inmc/targets.hpp"
#include "inmc/training.hpp"

namespace inmc {

namespace {

CheckResult make_result(std::string name, double measured, double threshold, bool higher_is_better,
                        std::string detail = "") {
  CheckResult r;
  r.name = std::move(name);
  r.measured = measured;
  r.threshold = threshold;
  r.higher_is_better = higher_is_better;
  r.passed = higher_is_better ? measured >= threshold : measured <= threshold;
  r.detail = std::move(detail);
  return r;
}

InvertibleNet random_invertible_net(Parameters& store, const std::string& prefix, int dim,
                                    RngStream& rng) {
  InvertibleNet net(dim);
  if (dim % 2 == 0 && dim >= 2) {
    int half = dim / 2;
    int hidden = std::min(2 * half, 16);
    CouplingLayer c0{.keep = {}, .shift = {}, .net = Mlp()};
    for (int i = 0; i < dim; ++i) ((i % 2 == 0) ? c0.keep : c0.shift).push_back(i);
    c0.net = Mlp::create(store, prefix + ".c0", {half, hidden, half}, rng, Mlp::FinalInit::kFanIn);
    net.add_coupling(std::move(c0));
    net.add_permutation(sample_permutation(dim, rng));
    CouplingLayer c1{.keep = {}, .shift = {}, .net = Mlp()};
    for (int i = 0; i < dim; ++i) ((i % 2 == 1) ? c1.keep : c1.shift).push_back(i);
    c1.net = Mlp::create(store, prefix + ".c1", {half, hidden, half}, rng, Mlp::FinalInit::kFanIn);
    net.add_coupling(std::move(c1));
  } else {
    net.add_permutation(sample_permutation(dim, rng));
  }
  return net;
}

BlockPtr random_leaf(Parameters& store, int dim, RngStream& rng, int& counter) {
  int pick = static_cast<int>(rng.next_below(dim % 2 == 0 ? 3 : 2));
  std::string prefix = "rb" + std::to_string(counter++);
  if (pick == 0) {
    return make_permutation_block(sample_involutive_permutation(dim, rng));
  }
  if (pick == 1) {
    Vec64 v(static_cast<size_t>(dim)), w(static_cast<size_t>(dim));
    // Keep |v.w| well away from zero: the double-application residual of a
    // reflection grows like eps * (|v||w| / |v.w|)^2.
    for (int attempt = 0;; ++attempt) {
      rng.fill_gaussian(v);
      rng.fill_gaussian(w);
      if (std::abs(dot(v, w)) >= 0.01 * two_norm(v) * two_norm(w)) break;
      if (attempt > 1000) throw DomainError("could not sample matrix block vectors");
    }
    return make_matrix_block(store, prefix, std::move(v), std::move(w));
  }
  return make_function_block(random_invertible_net(store, prefix, dim / 2, rng));
}

BlockPtr random_tree(Parameters& store, int dim, int leaves, RngStream& rng, int& counter) {
  if (leaves <= 1) return random_leaf(store, dim, rng, counter);
  // Keep the doubled (outer) side of sandwiches small so apply cost stays
  // linear in the leaf count.
  if (rng.next_below(2) == 0) {
    BlockPtr outer = random_leaf(store, dim, rng, counter);
    BlockPtr inner = random_tree(store, dim, leaves - 1, rng, counter);
    return make_sandwich(std::move(outer), std::move(inner));
  }
  std::string prefix = "rc" + std::to_string(counter++);
  InvertibleNet g = random_invertible_net(store, prefix, dim, rng);
  BlockPtr inner = random_tree(store, dim, leaves - 1, rng, counter);
  return make_conjugate(std::move(g), std::move(inner));
}

}  // namespace

InvolutiveNetwork random_grammar_network(int dim, int max_leaves, RngStream& rng) {
  Parameters store;
  int counter = 0;
  int leaves = 1 + static_cast<int>(rng.next_below(static_cast<uint64_t>(max_leaves)));
  BlockPtr root = random_tree(store, dim, leaves, rng, counter);
  return InvolutiveNetwork(std::move(store), std::move(root));
}

std::vector<CheckResult> verify_involution(uint64_t seed) {
  RngStream rng = RngStream::keyed(seed, "verify-involution");
  constexpr int kNets = 50;
  constexpr int kInputs = 10000;
  double max_residual = 0.0;
  for (int t = 0; t < kNets; ++t) {
    int dim = 4 + static_cast<int>(rng.next_below(61));  // 4..64
    InvolutiveNetwork net = random_grammar_network(dim, 7, rng);
    Vec64 x(static_cast<size_t>(dim));
    for (int i = 0; i < kInputs; ++i) {
      rng.fill_gaussian(x);
      Vec64 y = net.apply(net.apply(x));
      max_residual = std::max(max_residual, max_abs_diff(y, x));
    }
  }
  return {make_result("involution.double_apply_residual", max_residual, 1e-9, false,
                      "50 grammar networks, 1e4 inputs each")};
}

std::vector<CheckResult> verify_volume(uint64_t seed) {
  RngStream rng = RngStream::keyed(seed, "verify-volume");
  constexpr int kNets = 20;
  constexpr int kPoints = 20;
  double max_residual = 0.0;
  for (int t = 0; t < kNets; ++t) {
    int dim = 2 * (2 + static_cast<int>(rng.next_below(4)));  // 4, 6, 8, 10
    InvolutiveNetwork net = (t == 0)
                                ? build_default_generator(2, 6, 2, rng)
                                : random_grammar_network(dim, 5, rng);
    auto f = [&net](std::span<const double> x) { return net.apply(x); };
    Vec64 x(static_cast<size_t>(net.dim()));
    for (int p = 0; p < kPoints; ++p) {
      rng.fill_gaussian(x);
      double ld = log_abs_det_jacobian_numeric(f, x, 1e-5);
      max_residual = std::max(max_residual, std::abs(ld));
    }
  }
  return {make_result("volume.log_abs_det_residual", max_residual, 1e-5, false,
                      "20 volume-preserving networks, dims <= 10")};
}

namespace {

// Max relative mismatch between tape adjoints and central finite differences
// for a scalar function of a flat input vector.
double fd_gradient_mismatch(const std::function<Var(Tape&, Var)>& build, const Vec64& x0,
                            double h = 1e-5) {
  Tape tape;
  Var in = tape.input(x0);
  Var out = build(tape, in);
  tape.backward(out);
  Vec64 grad(tape.adjoint(in).begin(), tape.adjoint(in).end());

  double worst = 0.0;
  Vec64 x = x0;
  for (size_t i = 0; i < x.size(); ++i) {
    Tape tp, tm;
    x[i] = x0[i] + h;
    double fp = tp.scalar(build(tp, tp.input(x)));
    x[i] = x0[i] - h;
    double fm = tm.scalar(build(tm, tm.input(x)));
    x[i] = x0[i];
    double fd = (fp - fm) / (2.0 * h);
    double rel = std::abs(grad[i] - fd) / std::max(std::abs(grad[i]) + std::abs(fd), 1e-8);
    worst = std::max(worst, rel);
  }
  return worst;
}

double end_to_end_gradient_mismatch(uint64_t seed, bool check_generator);

}  // namespace

std::vector<CheckResult> verify_grad(uint64_t seed) {
  RngStream rng = RngStream::keyed(seed, "verify-grad");
  constexpr int kPoints = 100;
  constexpr int kLen = 5;

  auto gaussian = [&rng](size_t n) {
    Vec64 v(n);
    rng.fill_gaussian(v);
    return v;
  };
  // Random linear functional to scalarize vector-valued primitives.
  auto reduce = [](Tape& t, Var v, const Vec64& r) { return t.sum(t.mul(v, t.constant(r))); };

  struct Primitive {
    std::string name;
    std::function<double(RngStream&)> run;  // returns mismatch at one random point
  };

  std::vector<Primitive> prims;
  auto add_unary = [&](const std::string& name, auto op, auto sampler) {
    prims.push_back({name, [=](RngStream& r2) mutable {
                       Vec64 x(kLen);
                       for (double& v : x) v = sampler(r2);
                       Vec64 w(kLen);
                       r2.fill_gaussian(w);
                       return fd_gradient_mismatch(
                           [&](Tape& t, Var in) { return reduce(t, op(t, in), w); }, x);
                     }});
  };
  auto std_gauss = [](RngStream& r2) { return r2.next_gaussian(); };

  add_unary("relu", [](Tape& t, Var v) { return t.relu(v); },
            [](RngStream& r2) {
              double v;
              do v = r2.next_gaussian();
              while (std::abs(v) < 0.05);
              return v;
            });
  add_unary("sigmoid", [](Tape& t, Var v) { return t.sigmoid(v); }, std_gauss);
  add_unary("tanh", [](Tape& t, Var v) { return t.tanh(v); }, std_gauss);
  add_unary("exp", [](Tape& t, Var v) { return t.exp(v); }, std_gauss);
  add_unary("log", [](Tape& t, Var v) { return t.log(v); },
            [](RngStream& r2) { return 0.1 + std::abs(r2.next_gaussian()); });
  add_unary("min_with_one", [](Tape& t, Var v) { return t.min_with_one(v); },
            [](RngStream& r2) {
              double v;
              do v = r2.next_gaussian();
              while (std::abs(v - 1.0) < 0.05);
              return v;
            });
  add_unary("negate", [](Tape& t, Var v) { return t.negate(v); }, std_gauss);
  add_unary("scale", [](Tape& t, Var v) { return t.scale(v, 1.7); }, std_gauss);
  add_unary("permute", [](Tape& t, Var v) {
    std::vector<int> p = {3, 0, 4, 1, 2};
    return t.permute(v, p);
  }, std_gauss);

  // Scalar-valued reductions get a scale so the root stays a single node.
  auto add_scalar_op = [&](const std::string& name, auto op) {
    prims.push_back({name, [op](RngStream& r2) {
                       Vec64 x(kLen);
                       r2.fill_gaussian(x);
                       return fd_gradient_mismatch(
                           [&op](Tape& t, Var in) { return t.scale(op(t, in), 1.3); }, x);
                     }});
  };
  add_scalar_op("sum", [](Tape& t, Var v) { return t.sum(v); });
  add_scalar_op("mean", [](Tape& t, Var v) { return t.mean(v); });
  add_scalar_op("logsumexp", [](Tape& t, Var v) { return t.logsumexp(v); });
  prims.push_back({"slice", [](RngStream& r2) {
                     Vec64 x(kLen);
                     r2.fill_gaussian(x);
                     Vec64 w3(3);
                     r2.fill_gaussian(w3);
                     return fd_gradient_mismatch(
                         [&w3](Tape& t, Var in) {
                           return t.sum(t.mul(t.slice(in, 1, 3), t.constant(w3)));
                         },
                         x);
                   }});

  // Binary / structured primitives over a packed input vector.
  auto add_packed = [&](const std::string& name, size_t n,
                        std::function<Var(Tape&, Var)> build,
                        std::function<Vec64(RngStream&)> sampler) {
    prims.push_back({name, [=](RngStream& r2) mutable {
                       Vec64 x = sampler(r2);
                       (void)n;
                       return fd_gradient_mismatch(build, x);
                     }});
  };
  {
    Vec64 w = gaussian(kLen);
    add_packed("add", 2 * kLen,
               [w](Tape& t, Var in) {
                 Var a = t.slice(in, 0, kLen), b = t.slice(in, kLen, kLen);
                 return t.sum(t.mul(t.add(a, b), t.constant(w)));
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(2 * kLen);
                 r2.fill_gaussian(x);
                 return x;
               });
    add_packed("sub", 2 * kLen,
               [w](Tape& t, Var in) {
                 Var a = t.slice(in, 0, kLen), b = t.slice(in, kLen, kLen);
                 return t.sum(t.mul(t.sub(a, b), t.constant(w)));
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(2 * kLen);
                 r2.fill_gaussian(x);
                 return x;
               });
    add_packed("mul", 2 * kLen,
               [w](Tape& t, Var in) {
                 Var a = t.slice(in, 0, kLen), b = t.slice(in, kLen, kLen);
                 return t.sum(t.mul(t.mul(a, b), t.constant(w)));
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(2 * kLen);
                 r2.fill_gaussian(x);
                 return x;
               });
    add_packed("div", 2 * kLen,
               [w](Tape& t, Var in) {
                 Var a = t.slice(in, 0, kLen), b = t.slice(in, kLen, kLen);
                 return t.sum(t.mul(t.div(a, b), t.constant(w)));
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(2 * kLen);
                 for (size_t i = 0; i < kLen; ++i) x[i] = r2.next_gaussian();
                 for (size_t i = kLen; i < 2 * kLen; ++i) {
                   double v = r2.next_gaussian();
                   x[i] = (v >= 0.0 ? 1.0 : -1.0) * (0.5 + std::abs(v));
                 }
                 return x;
               });
    add_packed("concat", 2 * kLen,
               [](Tape& t, Var in) {
                 Var a = t.slice(in, 0, kLen), b = t.slice(in, kLen, kLen);
                 return t.sum(t.concat(t.negate(a), t.scale(b, 2.0)));
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(2 * kLen);
                 r2.fill_gaussian(x);
                 return x;
               });
    add_packed("matvec", 12 + 3,
               [](Tape& t, Var in) {
                 Var wm = t.slice(in, 0, 12);
                 Var xv = t.slice(in, 12, 3);
                 Var y = t.matvec(wm, xv, 4, 3);
                 return t.mean(y);
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(15);
                 r2.fill_gaussian(x);
                 return x;
               });
    add_packed("mul_scalar", kLen + 1,
               [](Tape& t, Var in) {
                 Var xv = t.slice(in, 0, kLen);
                 Var s = t.slice(in, kLen, 1);
                 return t.sum(t.mul_scalar(xv, s));
               },
               [=](RngStream& r2) mutable {
                 Vec64 x(kLen + 1);
                 r2.fill_gaussian(x);
                 return x;
               });
  }

  double worst = 0.0;
  std::string worst_name = "-";
  for (auto& p : prims) {
    for (int i = 0; i < kPoints; ++i) {
      double m = p.run(rng);
      if (m > worst) {
        worst = m;
        worst_name = p.name;
      }
    }
  }

  double e2e_g = end_to_end_gradient_mismatch(seed, /*check_generator=*/true);
  double e2e_d = end_to_end_gradient_mismatch(seed, /*check_generator=*/false);

  return {
      make_result("grad.primitive_fd_mismatch", worst, 1e-4, false, "worst: " + worst_name),
      make_result("grad.end_to_end_generator", e2e_g, 1e-3, false, "G_loss vs finite differences"),
      make_result("grad.end_to_end_discriminator", e2e_d, 1e-3, false,
                  "D_loss vs finite differences"),
  };
}

namespace {

// Small fixed training computation whose losses are a deterministic function
// of the parameters; compares tape gradients against central differences on
// a sample of coordinates.
double end_to_end_gradient_mismatch(uint64_t seed, bool check_generator) {
  auto target = two_gaussian_mixture_1d();
  auto aux = standard_normal(7);
  RngStream init = RngStream::keyed(seed, "verify-e2e-init");
  InvolutiveNetwork gen = build_default_generator(1, 7, 2, init);
  Discriminator disc = Discriminator::create(1, 16, 0.01, init);
  // Nudge every parameter off the identity start so no relu or min kink
  // sits exactly at a sampled point.
  RngStream nudge = RngStream::keyed(seed, "verify-e2e-nudge");
  for (int s = 0; s < gen.params().segment_count(); ++s)
    for (double& v : gen.params().seg(s)) v += 0.03 * nudge.next_gaussian();
  for (int s = 0; s < disc.params.segment_count(); ++s)
    for (double& v : disc.params.seg(s)) v += 0.002 * nudge.next_gaussian();

  constexpr int kB = 3;
  constexpr int kChains = 2;

  auto eval = [&](Tape& tape, const Parameters& gp, const Parameters& dp, bool want_g) {
    tape.reset();
    // Rebind a temporary network view by copying parameter values in.
    Parameters saved_g = gen.params();
    Parameters saved_d = disc.params;
    gen.params() = gp;
    disc.params = dp;
    BoundParams gb = BoundParams::bind(tape, gen.params());
    BoundParams db = BoundParams::bind(tape, disc.params);
    Var chain_exp{}, chain_true{};
    for (int c = 0; c < kChains; ++c) {
      RngStream rng = RngStream::keyed(seed, "verify-e2e-chain", static_cast<uint64_t>(c));
      Vec64 truth(1), phi0(1);
      target->sample(rng, truth);
      phi0[0] = 1.5 * rng.next_gaussian();
      Rollout roll = rollout_fixed_aux(tape, gen, gb, *target, *aux, phi0, kB, rng);
      std::vector<Var> p = chain_distribution(tape, roll.acceptances);
      Var e{};
      for (size_t i = 0; i < roll.states.size(); ++i) {
        Var term = tape.mul(p[i], disc.net.forward(tape, db, roll.states[i]));
        e = i == 0 ? term : tape.add(e, term);
      }
      Var dt = disc.net.forward(tape, db, tape.constant(truth));
      chain_exp = c == 0 ? e : tape.concat(chain_exp, e);
      chain_true = c == 0 ? dt : tape.concat(chain_true, dt);
    }
    Var g_loss = tape.mean(chain_exp);
    Var d_loss = tape.sub(tape.mean(chain_true), g_loss);
    gen.params() = saved_g;
    disc.params = saved_d;
    struct R {
      Var root;
      BoundParams gb, db;
    };
    return R{want_g ? g_loss : d_loss, gb, db};
  };

  Tape tape;
  auto base = eval(tape, gen.params(), disc.params, check_generator);
  tape.backward(base.root);
  Parameters grads = check_generator ? gradients(tape, gen.params(), base.gb)
                                     : gradients(tape, disc.params, base.db);

  const Parameters& subject = check_generator ? gen.params() : disc.params;
  RngStream pick = RngStream::keyed(seed, "verify-e2e-pick", check_generator ? 1 : 0);
  double h = 1e-5;
  double worst = 0.0;
  int checked = 0;
  while (checked < 12) {
    int s = static_cast<int>(pick.next_below(static_cast<uint64_t>(subject.segment_count())));
    if (subject.seg(s).empty()) continue;
    size_t k = static_cast<size_t>(pick.next_below(subject.seg(s).size()));
    Parameters gp = gen.params();
    Parameters dp = disc.params;
    Parameters& mod = check_generator ? gp : dp;
    double orig = mod.seg(s)[k];
    Tape t2;
    mod.seg(s)[k] = orig + h;
    double fp = t2.scalar(eval(t2, gp, dp, check_generator).root);
    mod.seg(s)[k] = orig - h;
    double fm = t2.scalar(eval(t2, gp, dp, check_generator).root);
    double fd = (fp - fm) / (2.0 * h);
    double ad = grads.seg(s)[k];
    double rel = std::abs(ad - fd) / std::max(std::abs(ad) + std::abs(fd), 1e-7);
    worst = std::max(worst, rel);
    ++checked;
  }
  return worst;
}

}  // namespace

std::vector<CheckResult> verify_chi(uint64_t seed) {
  RngStream rng = RngStream::keyed(seed, "verify-chi");
  double max_diff = 0.0;
  double max_norm_err = 0.0;
  for (int b = 1; b <= 10; ++b) {
    for (int rep = 0; rep < 20; ++rep) {
      Vec64 a(static_cast<size_t>(b));
      for (double& v : a) {
        if (rep < 2) {
          // mix in exact 0/1 edge probabilities
          uint64_t r = rng.next_below(4);
          v = r == 0 ? 0.0 : r == 1 ? 1.0 : rng.next_uniform();
        } else {
          v = rng.next_uniform();
        }
      }
      Vec64 p = chain_distribution(a);
      // Brute force over all 2^b accept/reject sequences on the linear path.
      Vec64 bf(static_cast<size_t>(b) + 1, 0.0);
      for (uint64_t mask = 0; mask < (uint64_t{1} << b); ++mask) {
        int pos = 0;
        double prob = 1.0;
        for (int s = 0; s < b; ++s) {
          if (mask & (uint64_t{1} << s)) {
            prob *= a[static_cast<size_t>(pos)];
            ++pos;
          } else {
            prob *= 1.0 - a[static_cast<size_t>(pos)];
          }
        }
        bf[static_cast<size_t>(pos)] += prob;
      }
      max_diff = std::max(max_diff, max_abs_diff(p, bf));
      double total = 0.0;
      for (double v : p) total += v;
      max_norm_err = std::max(max_norm_err, std::abs(total - 1.0));
    }
  }
  return {
      make_result("chi.dp_vs_enumeration", max_diff, 1e-12, false, "b <= 10, 200 random vectors"),
      make_result("chi.normalization", max_norm_err, 1e-12, false),
  };
}

namespace {

// Null-calibrated binned reversibility statistic: z-scores of the flux
// asymmetry per bin pair, compared against the max-z distribution obtained
// by resampling each pair total as Binomial(m, 1/2).
struct ReversibilityStat {
  double z_max;
  double null_mean;
  double null_sd;
};

ReversibilityStat binned_reversibility(const std::vector<int>& bins, int n_bins, uint64_t seed) {
  std::vector<std::vector<uint64_t>> count(
      static_cast<size_t>(n_bins), std::vector<uint64_t>(static_cast<size_t>(n_bins), 0));
  for (size_t t = 0; t + 1 < bins.size(); ++t)
    ++count[static_cast<size_t>(bins[t])][static_cast<size_t>(bins[t + 1])];

  struct Pair {
    uint64_t m;
    uint64_t nij;
  };
  std::vector<Pair> pairs;
  double z_max = 0.0;
  for (int i = 0; i < n_bins; ++i) {
    for (int j = i + 1; j < n_bins; ++j) {
      uint64_t nij = count[static_cast<size_t>(i)][static_cast<size_t>(j)];
      uint64_t nji = count[static_cast<size_t>(j)][static_cast<size_t>(i)];
      uint64_t m = nij + nji;
      if (m == 0) continue;
      pairs.push_back({m, nij});
      double z = std::abs(static_cast<double>(nij) - static_cast<double>(nji)) /
                 std::sqrt(static_cast<double>(m));
      z_max = std::max(z_max, z);
    }
  }

  RngStream rng = RngStream::keyed(seed, "reversibility-null");
  constexpr int kResamples = 200;
  double sum = 0.0, sum2 = 0.0;
  for (int r = 0; r < kResamples; ++r) {
    double zr = 0.0;
    for (const auto& p : pairs) {
      uint64_t k;
      if (p.m > 256) {
        double draw = 0.5 * static_cast<double>(p.m) +
                      0.5 * std::sqrt(static_cast<double>(p.m)) * rng.next_gaussian();
        draw = std::clamp(draw, 0.0, static_cast<double>(p.m));
        k = static_cast<uint64_t>(std::llround(draw));
      } else {
        k = 0;
        for (uint64_t t = 0; t < p.m; ++t) k += rng.next_uniform() < 0.5 ? 1 : 0;
      }
      double z = std::abs(2.0 * static_cast<double>(k) - static_cast<double>(p.m)) /
                 std::sqrt(static_cast<double>(p.m));
      zr = std::max(zr, z);
    }
    sum += zr;
    sum2 += zr * zr;
  }
  double mean = sum / kResamples;
  double var = std::max(0.0, sum2 / kResamples - mean * mean);
  return {z_max, mean, std::sqrt(var)};
}

}  // namespace

std::vector<CheckResult> verify_balance(uint64_t seed) {
  std::vector<CheckResult> out;
  auto mix2 = two_gaussian_mixture_1d();

  // Stationarity of the Gaussian-shift involutive kernel on the two-Gaussian
  // mixture: long-run histogram close in TV.
  {
    InvolutiveKernel kernel = gaussian_shift_kernel(mix2, 0.3);
    kernel.set_monitor_every(1000);
    KernelState state(Vec64{0.5}, RngStream::keyed(seed, "balance-chain"));
    constexpr int kSteps = 100000;
    constexpr int kBurn = 2000;
    Vec64 samples;
    samples.reserve(kSteps - kBurn);
    for (int t = 0; t < kSteps; ++t) {
      kernel.step(state);
      if (t >= kBurn) samples.push_back(state.phi[0]);
    }
    double tv = tv_distance_histogram(samples, *mix2, 50, -1.0, 1.0);
    out.push_back(make_result("balance.mix2_tv", tv, 0.05, false,
                              "gaussian shift sd 0.3, 1e5 steps, 50 bins"));
    out.push_back(make_result("balance.shift_involution_residual",
                              state.involution_residual_max, 1e-9, false));
  }

  // Empirical detailed balance: binned flux asymmetry within 3 Monte-Carlo
  // standard errors of its null (reversible) max-z distribution.
  {
    InvolutiveKernel kernel = gaussian_shift_kernel(mix2, 0.3);
    kernel.set_monitor_every(0);
    KernelState state(Vec64{0.5}, RngStream::keyed(seed, "balance-flux"));
    constexpr int kSteps = 1000000;
    constexpr int kBins = 64;
    std::vector<int> bins;
    bins.reserve(kSteps + 1);
    auto bin_of = [&](double x) {
      int b = static_cast<int>((x + 1.0) / 2.0 * kBins);
      return std::clamp(b, 0, kBins - 1);
    };
    bins.push_back(bin_of(state.phi[0]));
    for (int t = 0; t < kSteps; ++t) {
      kernel.step(state);
      bins.push_back(bin_of(state.phi[0]));
    }
    ReversibilityStat stat = binned_reversibility(bins, kBins, seed);
    double threshold = stat.null_mean + 3.0 * stat.null_sd;
    char detail[128];
    std::snprintf(detail, sizeof detail, "null max-z %.3f +- %.3f over 1e6 transitions",
                  stat.null_mean, stat.null_sd);
    out.push_back(make_result("balance.reversibility_max_z", stat.z_max, threshold, false,
                              detail));
  }

  // HMC on a standard normal: first and second moments within 3 standard
  // errors (batch-means errors, since draws are autocorrelated).
  {
    auto normal2 = standard_normal(2);
    InvolutiveKernel kernel = hmc_kernel(normal2, 0.1, 10);
    kernel.set_monitor_every(1000);
    KernelState state(Vec64{1.0, -1.0}, RngStream::keyed(seed, "balance-hmc"));
    constexpr int kSteps = 100000;
    constexpr int kBatches = 100;
    constexpr int kPerBatch = kSteps / kBatches;
    double worst_z = 0.0;
    std::vector<Vec64> mean_batches(2, Vec64()), var_batches(2, Vec64());
    Vec64 cur_m(2, 0.0), cur_v(2, 0.0);
    int in_batch = 0;
    for (int t = 0; t < kSteps; ++t) {
      kernel.step(state);
      for (int d = 0; d < 2; ++d) {
        cur_m[static_cast<size_t>(d)] += state.phi[static_cast<size_t>(d)];
        cur_v[static_cast<size_t>(d)] +=
            state.phi[static_cast<size_t>(d)] * state.phi[static_cast<size_t>(d)];
      }
      if (++in_batch == kPerBatch) {
        for (int d = 0; d < 2; ++d) {
          mean_batches[static_cast<size_t>(d)].push_back(cur_m[static_cast<size_t>(d)] / kPerBatch);
          var_batches[static_cast<size_t>(d)].push_back(cur_v[static_cast<size_t>(d)] / kPerBatch);
          cur_m[static_cast<size_t>(d)] = cur_v[static_cast<size_t>(d)] = 0.0;
        }
        in_batch = 0;
      }
    }
    auto z_score = [](const Vec64& batches, double target_value) {
      double m = 0.0;
      for (double v : batches) m += v;
      m /= static_cast<double>(batches.size());
      double s2 = 0.0;
      for (double v : batches) s2 += (v - m) * (v - m);
      s2 /= static_cast<double>(batches.size()) * (static_cast<double>(batches.size()) - 1.0);
      return std::abs(m - target_value) / std::sqrt(s2);
    };
    for (int d = 0; d < 2; ++d) {
      worst_z = std::max(worst_z, z_score(mean_batches[static_cast<size_t>(d)], 0.0));
      worst_z = std::max(worst_z, z_score(var_batches[static_cast<size_t>(d)], 1.0));
    }
    out.push_back(make_result("balance.hmc_moments_z", worst_z, 3.0, false,
                              "standard normal, step 0.1 x 10 leapfrogs, 1e5 draws"));
    out.push_back(make_result("balance.hmc_involution_residual", state.involution_residual_max,
                              1e-9, false));
  }
  return out;
}

std::vector<CheckResult> verify_universality(uint64_t seed,
                                             std::vector<universality::SweepRow>* rows_out) {
  namespace uni = inmc::universality;
  uni::Params params;
  params.state_dim = 1;
  params.transition = uni::bounded_tanh_transition();

  std::vector<CheckResult> out;
  Vec64 eps_values = {0.5, 0.1, 0.02, 0.01};
  std::vector<uni::SweepRow> rows = uni::sweep(params, eps_values, 10000, seed);
  if (rows_out) *rows_out = rows;

  double max_involution = 0.0;
  for (const auto& r : rows) max_involution = std::max(max_involution, r.involution_residual);
  out.push_back(make_result("universality.involution_residual", max_involution, 1e-9, false,
                            "eps in {0.5, 0.1, 0.02, 0.01}, 1e4 points each"));

  // Conditioned identity on the open-gate event: output head equals
  // transition(phi, pi[0]) + eps * pi[3] (state_dim 1).
  {
    uni::Params p = params;
    p.eps = 0.1;
    RngStream rng = RngStream::keyed(seed, "universality-conditioned");
    double worst = 0.0;
    int found = 0;
    Vec64 x(static_cast<size_t>(p.full_dim()));
    while (found < 10000) {
      x[0] = rng.next_gaussian();
      std::span<double> pi(x.data() + 1, static_cast<size_t>(p.aux_dim()));
      rng.fill_gaussian(pi);
      if (!uni::gates_open(p, pi)) continue;
      ++found;
      double lhs = uni::involution(p, x)[0];
      double rhs = p.transition(std::span<const double>(x.data(), 1), pi[0])[0] + p.eps * pi[3];
      worst = std::max(worst, std::abs(lhs - rhs));
    }
    out.push_back(make_result("universality.conditioned_identity", worst, 1e-9, false,
                              "1e4 open-gate points at eps 0.1"));
  }

  out.push_back(make_result("universality.ks_at_eps_0.01", rows.back().ks, 0.05, false,
                            "1e4 samples vs the transition"));

  bool increasing = rows[0].p_gates_open < rows[1].p_gates_open &&
                    rows[1].p_gates_open < rows[2].p_gates_open && rows[2].p_gates_open > 0.99;
  char detail[128];
  std::snprintf(detail, sizeof detail, "P(open) = %.4f, %.4f, %.4f at eps 0.5, 0.1, 0.02",
                rows[0].p_gates_open, rows[1].p_gates_open, rows[2].p_gates_open);
  out.push_back(make_result("universality.gate_probability_to_one", increasing ? 1.0 : 0.0, 1.0,
                            true, detail));
  return out;
}

std::vector<CheckResult> run_verify_suite(const std::string& suite, uint64_t seed) {
  if (suite == "involution") return verify_involution(seed);
  if (suite == "volume") return verify_volume(seed);
  if (suite == "grad") return verify_grad(seed);
  if (suite == "chi") return verify_chi(seed);
  if (suite == "balance") return verify_balance(seed);
  if (suite == "universality") return verify_universality(seed);
  if (suite == "all") {
    std::vector<CheckResult> all;
    for (const char* s : {"involution", "volume", "grad", "chi", "balance", "universality"}) {
      auto part = run_verify_suite(s, seed);
      all.insert(all.end(), part.begin(), part.end());
    }
    return all;
  }
  throw ConfigError("unknown verify suite '" + suite +
                    "' (expected involution|volume|grad|chi|balance|universality|all)");
}

bool print_results(const std::vector<CheckResult>& results, std::ostream& os) {
  bool all_passed = true;
  char line[256];
  for (const auto& r : results) {
    std::snprintf(line, sizeof line, "%-40s %12.5g (%s %.5g) %s", r.name.c_str(), r.measured,
                  r.higher_is_better ? ">=" : "<=", r.threshold, r.passed ? "PASS" : "FAIL");
    os << line;
    if (!r.detail.empty()) os << "  [" << r.detail << "]";
    os << "\n";
    all_passed = all_passed && r.passed;
  }
  return all_passed;
}

}  // namespace inmc
