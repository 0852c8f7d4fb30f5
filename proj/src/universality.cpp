#include "inmc/universality.hpp"

#include <algorithm>
#include <cmath>

#include "inmc/errors.hpp"

namespace inmc::universality {

namespace {

// Branch weight of the gate q: 0 below -1/2, q + 1/2 on the ramp, 1 above
// +1/2. The boundaries fall on the ramp branch; the three branches agree
// there, so the function is continuous.
double gate_weight(double q) {
  if (q < -0.5) return 0.0;
  if (q > 0.5) return 1.0;
  return q + 0.5;
}

}  // namespace

Vec64 displacement_ramp(const Params& p, std::span<const double> x) {
  int n = p.state_dim;
  if (static_cast<int>(x.size()) != n + 3) throw ShapeError("displacement_ramp: bad length");
  double q = x[static_cast<size_t>(n + 2)] - x[static_cast<size_t>(n + 1)];
  Vec64 out(static_cast<size_t>(n) + 3, 0.0);
  double wq = gate_weight(q);
  if (wq == 0.0) return out;
  double noise = x[static_cast<size_t>(n)] / p.eps;
  Vec64 t = p.transition(x.subspan(0, static_cast<size_t>(n)), noise);
  if (static_cast<int>(t.size()) != n) throw ShapeError("transition output has wrong length");
  for (int i = 0; i < n; ++i)
    out[static_cast<size_t>(i)] = wq * (t[static_cast<size_t>(i)] - x[static_cast<size_t>(i)]);
  return out;
}

Vec64 state_ramp(int state_dim, std::span<const double> x) {
  int n = state_dim;
  if (static_cast<int>(x.size()) != n + 3) throw ShapeError("state_ramp: bad length");
  double q = x[static_cast<size_t>(n + 2)] - x[static_cast<size_t>(n + 1)];
  Vec64 out(static_cast<size_t>(n) + 3, 0.0);
  double wq = gate_weight(q);
  if (wq == 0.0) return out;
  for (int i = 0; i < n; ++i) out[static_cast<size_t>(i)] = wq * x[static_cast<size_t>(i)];
  return out;
}

Vec64 embed(const Params& p, std::span<const double> x) {
  int n = p.state_dim;
  int d = p.full_dim();
  if (static_cast<int>(x.size()) != d) throw ShapeError("embed: bad length");
  Vec64 y(x.begin(), x.end());
  for (int i = n; i < d; ++i) y[static_cast<size_t>(i)] *= p.eps;
  y[static_cast<size_t>(n + 2)] += 1.0;  // first gate offset
  y[static_cast<size_t>(d - 1)] += 1.0;  // second gate offset
  return y;
}

Vec64 embed_inverse(const Params& p, std::span<const double> x) {
  int n = p.state_dim;
  int d = p.full_dim();
  if (static_cast<int>(x.size()) != d) throw ShapeError("embed_inverse: bad length");
  Vec64 y(x.begin(), x.end());
  y[static_cast<size_t>(n + 2)] -= 1.0;
  y[static_cast<size_t>(d - 1)] -= 1.0;
  for (int i = n; i < d; ++i) y[static_cast<size_t>(i)] /= p.eps;
  return y;
}

Vec64 coupling(const Params& p, std::span<const double> x) {
  int n = p.state_dim;
  int half = n + 3;
  if (static_cast<int>(x.size()) != 2 * half) throw ShapeError("coupling: bad length");
  std::span<const double> lo = x.subspan(0, static_cast<size_t>(half));
  std::span<const double> hi = x.subspan(static_cast<size_t>(half));
  Vec64 r = displacement_ramp(p, lo);
  Vec64 v(static_cast<size_t>(half));
  for (int i = 0; i < half; ++i) v[static_cast<size_t>(i)] = hi[static_cast<size_t>(i)] + r[static_cast<size_t>(i)];
  Vec64 s = state_ramp(n, v);
  Vec64 out(static_cast<size_t>(2 * half));
  for (int i = 0; i < half; ++i) out[static_cast<size_t>(i)] = lo[static_cast<size_t>(i)] + s[static_cast<size_t>(i)];
  std::copy(v.begin(), v.end(), out.begin() + half);
  return out;
}

Vec64 coupling_inverse(const Params& p, std::span<const double> x) {
  int n = p.state_dim;
  int half = n + 3;
  if (static_cast<int>(x.size()) != 2 * half) throw ShapeError("coupling_inverse: bad length");
  std::span<const double> lo = x.subspan(0, static_cast<size_t>(half));
  std::span<const double> hi = x.subspan(static_cast<size_t>(half));
  Vec64 s = state_ramp(n, hi);
  Vec64 w(static_cast<size_t>(half));
  for (int i = 0; i < half; ++i) w[static_cast<size_t>(i)] = lo[static_cast<size_t>(i)] - s[static_cast<size_t>(i)];
  Vec64 r = displacement_ramp(p, w);
  Vec64 out(static_cast<size_t>(2 * half));
  std::copy(w.begin(), w.end(), out.begin());
  for (int i = 0; i < half; ++i)
    out[static_cast<size_t>(half + i)] = hi[static_cast<size_t>(i)] - r[static_cast<size_t>(i)];
  return out;
}

std::vector<int> gate_swap_permutation(int state_dim) {
  int n = state_dim;
  int d = 2 * n + 6;
  std::vector<int> perm(static_cast<size_t>(d));
  for (int i = 0; i < d; ++i) perm[static_cast<size_t>(i)] = i;
  std::swap(perm[static_cast<size_t>(n + 1)], perm[static_cast<size_t>(n + 2)]);
  std::swap(perm[static_cast<size_t>(d - 2)], perm[static_cast<size_t>(d - 1)]);
  return perm;
}

Vec64 involution(const Params& p, std::span<const double> x) {
  Vec64 y = embed(p, x);
  y = coupling(p, y);
  std::vector<int> perm = gate_swap_permutation(p.state_dim);
  Vec64 z(y.size());
  for (size_t i = 0; i < y.size(); ++i) z[i] = y[static_cast<size_t>(perm[i])];
  z = coupling_inverse(p, z);
  return embed_inverse(p, z);
}

bool gates_open(const Params& p, std::span<const double> pi) {
  int n = p.state_dim;
  if (static_cast<int>(pi.size()) != p.aux_dim()) throw ShapeError("gates_open: bad length");
  double bound = 1.0 / (2.0 * p.eps);
  if (!(pi[2] - pi[1] > -bound)) return false;
  if (!(pi[static_cast<size_t>(n + 5)] - pi[static_cast<size_t>(n + 4)] > -bound)) return false;
  return two_norm(pi) < 1.0 / p.eps;
}

double ks_statistic(Vec64 a, Vec64 b) {
  if (a.empty() || b.empty()) throw ShapeError("ks_statistic needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    if (a[i] < b[j]) {
      ++i;
    } else if (b[j] < a[i]) {
      ++j;
    } else {
      double v = a[i];
      while (i < a.size() && a[i] == v) ++i;
      while (j < b.size() && b[j] == v) ++j;
    }
    double fa = static_cast<double>(i) / static_cast<double>(a.size());
    double fb = static_cast<double>(j) / static_cast<double>(b.size());
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

double ks_vs_transition(const Params& p, std::span<const double> phi, int n_samples,
                        RngStream& rng) {
  if (p.state_dim != 1) throw ShapeError("ks_vs_transition requires state_dim == 1");
  Vec64 ours(static_cast<size_t>(n_samples));
  Vec64 reference(static_cast<size_t>(n_samples));
  Vec64 x(static_cast<size_t>(p.full_dim()));
  for (int s = 0; s < n_samples; ++s) {
    std::copy(phi.begin(), phi.end(), x.begin());
    for (int i = p.state_dim; i < p.full_dim(); ++i) x[static_cast<size_t>(i)] = rng.next_gaussian();
    ours[static_cast<size_t>(s)] = involution(p, x)[0];
    reference[static_cast<size_t>(s)] = p.transition(phi, rng.next_gaussian())[0];
  }
  return ks_statistic(std::move(ours), std::move(reference));
}

std::vector<SweepRow> sweep(const Params& base, std::span<const double> eps_values, int n_samples,
                            uint64_t seed) {
  std::vector<SweepRow> rows;
  Vec64 phi(static_cast<size_t>(base.state_dim), 0.0);
  for (double eps : eps_values) {
    Params p = base;
    p.eps = eps;
    RngStream rng = RngStream::keyed(seed, "universality-sweep",
                                     static_cast<uint64_t>(rows.size()));
    int open = 0;
    double max_residual = 0.0;
    Vec64 x(static_cast<size_t>(p.full_dim()));
    for (int s = 0; s < n_samples; ++s) {
      std::copy(phi.begin(), phi.end(), x.begin());
      std::span<double> pi(x.data() + p.state_dim, static_cast<size_t>(p.aux_dim()));
      rng.fill_gaussian(pi);
      if (gates_open(p, pi)) ++open;
      Vec64 y = involution(p, x);
      Vec64 z = involution(p, y);
      max_residual = std::max(max_residual, max_abs_diff(z, x));
    }
    RngStream ks_rng = RngStream::keyed(seed, "universality-ks",
                                        static_cast<uint64_t>(rows.size()));
    double ks = ks_vs_transition(p, phi, n_samples, ks_rng);
    rows.push_back({eps, static_cast<double>(open) / n_samples, ks, max_residual});
  }
  return rows;
}

Transition bounded_tanh_transition() {
  return [](std::span<const double> phi, double noise) {
    Vec64 out(phi.size(), 0.0);
    out[0] = 0.5 * std::tanh(noise);
    return out;
  };
}

}  // namespace inmc::universality
