#include "inmc/diagnostics.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "inmc/errors.hpp"
#include "inmc/rng.hpp"

namespace inmc {

int ChainArchive::step_count() const {
  return states.empty() ? 0 : static_cast<int>(states.front().size()) - 1;
}

int ChainArchive::state_dim() const {
  return states.empty() || states.front().empty() ? 0
                                                  : static_cast<int>(states.front().front().size());
}

void ChainArchive::add_chain(const Vec64& init, const std::vector<TransitionRecord>& records) {
  std::vector<Vec64> st;
  std::vector<uint8_t> acc;
  Vec64 lr;
  st.reserve(records.size() + 1);
  st.push_back(init);
  acc.push_back(1);
  lr.push_back(0.0);
  Vec64 cur = init;
  for (const auto& r : records) {
    if (r.accepted) cur = r.proposal;
    st.push_back(cur);
    acc.push_back(r.accepted ? 1 : 0);
    lr.push_back(r.log_ratio);
  }
  if (!states.empty() && st.size() != states.front().size())
    throw ShapeError("archive chains must have equal length");
  states.push_back(std::move(st));
  accepted.push_back(std::move(acc));
  log_ratios.push_back(std::move(lr));
}

double ChainArchive::acceptance_rate() const {
  uint64_t total = 0, acc = 0;
  for (const auto& chain : accepted)
    for (size_t t = 1; t < chain.size(); ++t) {
      ++total;
      acc += chain[t];
    }
  return total == 0 ? 0.0 : static_cast<double>(acc) / static_cast<double>(total);
}

void ChainArchive::write_csv(std::ostream& os) const {
  int dim = state_dim();
  os << "chain,step,accepted,log_ratio";
  for (int i = 0; i < dim; ++i) os << ",x" << i;
  os << "\n";
  char buf[40];
  for (size_t c = 0; c < states.size(); ++c) {
    for (size_t t = 0; t < states[c].size(); ++t) {
      os << c << ',' << t << ',' << static_cast<int>(accepted[c][t]) << ',';
      std::snprintf(buf, sizeof buf, "%.17g", log_ratios[c][t]);
      os << buf;
      for (double x : states[c][t]) {
        std::snprintf(buf, sizeof buf, "%.17g", x);
        os << ',' << buf;
      }
      os << "\n";
    }
  }
}

ChainArchive ChainArchive::read_csv(std::istream& is) {
  ChainArchive a;
  std::string line;
  size_t line_no = 0;
  int dim = -1;
  // chain index -> rows; rows must arrive in step order per chain
  std::vector<std::vector<Vec64>>& states = a.states;
  auto fail = [&](const std::string& why) {
    throw ShapeError("archive csv line " + std::to_string(line_no) + ": " + why);
  };
  while (std::getline(is, line)) {
    ++line_no;
    if (line.empty()) continue;
    if (line_no == 1) {
      if (line.rfind("chain,step,accepted,log_ratio", 0) != 0) fail("bad header");
      continue;
    }
    std::vector<double> fields;
    const char* p = line.data();
    const char* end = line.data() + line.size();
    while (p < end) {
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc()) fail("unparseable number");
      fields.push_back(v);
      p = next;
      if (p < end) {
        if (*p != ',') fail("expected comma");
        ++p;
      }
    }
    if (fields.size() < 5) fail("too few columns");
    int row_dim = static_cast<int>(fields.size()) - 4;
    if (dim == -1) dim = row_dim;
    if (row_dim != dim) fail("inconsistent state dimension");
    auto chain = static_cast<size_t>(fields[0]);
    auto step = static_cast<size_t>(fields[1]);
    if (chain >= states.size()) {
      if (chain != states.size()) fail("chains must be contiguous");
      states.emplace_back();
      a.accepted.emplace_back();
      a.log_ratios.emplace_back();
    }
    if (step != states[chain].size()) fail("steps must be contiguous per chain");
    states[chain].emplace_back(fields.begin() + 4, fields.end());
    a.accepted[chain].push_back(fields[2] != 0.0 ? 1 : 0);
    a.log_ratios[chain].push_back(fields[3]);
  }
  if (states.empty()) throw ShapeError("archive csv: no data rows");
  for (size_t c = 1; c < states.size(); ++c)
    if (states[c].size() != states[0].size())
      throw ShapeError("archive csv: ragged chain lengths");
  return a;
}

Vec64 ChainArchive::states_at_step(int step, int coord) const {
  Vec64 out;
  out.reserve(states.size());
  for (const auto& chain : states) out.push_back(chain.at(static_cast<size_t>(step))[static_cast<size_t>(coord)]);
  return out;
}

Vec64 ChainArchive::pooled_states(int from_step, int to_step, int coord) const {
  Vec64 out;
  for (const auto& chain : states)
    for (int t = from_step; t <= to_step; ++t)
      out.push_back(chain.at(static_cast<size_t>(t))[static_cast<size_t>(coord)]);
  return out;
}

Vec64 autocorrelation(const ChainArchive& archive, int coordinate, int max_lag) {
  int n = archive.step_count() + 1;
  if (n <= max_lag) throw ShapeError("autocorrelation: chain length must exceed max_lag");
  Vec64 avg(static_cast<size_t>(max_lag) + 1, 0.0);
  for (const auto& chain : archive.states) {
    Vec64 x(chain.size());
    for (size_t t = 0; t < chain.size(); ++t) x[t] = chain[t][static_cast<size_t>(coordinate)];
    double mean = 0.0;
    for (double v : x) mean += v;
    mean /= static_cast<double>(x.size());
    for (double& v : x) v -= mean;
    double c0 = 0.0;
    for (double v : x) c0 += v * v;
    c0 /= static_cast<double>(x.size());
    if (c0 == 0.0) throw DegenerateVariance("constant chain in autocorrelation");
    avg[0] += 1.0;
    for (int k = 1; k <= max_lag; ++k) {
      double ck = 0.0;
      for (size_t t = 0; t + static_cast<size_t>(k) < x.size(); ++t)
        ck += x[t] * x[t + static_cast<size_t>(k)];
      ck /= static_cast<double>(x.size());
      avg[static_cast<size_t>(k)] += ck / c0;
    }
  }
  for (double& v : avg) v /= static_cast<double>(archive.chain_count());
  return avg;
}

NllCurve expected_nll(const ChainArchive& archive, const TargetDensity& target,
                      int reference_samples, uint64_t seed) {
  NllCurve curve;
  int steps = archive.step_count();
  double log_z = target.log_norm_const();
  curve.nll_by_step.resize(static_cast<size_t>(steps) + 1, 0.0);
  for (int t = 0; t <= steps; ++t) {
    double acc = 0.0;
    for (const auto& chain : archive.states)
      acc += -(target.log_density(chain[static_cast<size_t>(t)]) - log_z);
    curve.nll_by_step[static_cast<size_t>(t)] = acc / archive.chain_count();
  }
  RngStream rng = RngStream::keyed(seed, "nll-reference");
  Vec64 x(static_cast<size_t>(target.dim()));
  double ref = 0.0;
  for (int s = 0; s < reference_samples; ++s) {
    target.sample(rng, x);
    ref += -(target.log_density(x) - log_z);
  }
  curve.reference = ref / reference_samples;
  return curve;
}

double tv_distance_histogram(std::span<const double> samples, const TargetDensity& target,
                             int bins, double lo, double hi) {
  if (samples.empty()) throw ShapeError("tv_distance_histogram: empty sample window");
  if (bins < 10) throw ShapeError("tv_distance_histogram: need at least 10 bins");
  if (!(hi > lo)) throw ShapeError("tv_distance_histogram: bad range");
  if (target.dim() != 1) throw ShapeError("tv_distance_histogram: 1-D targets only");

  double width = (hi - lo) / bins;
  Vec64 emp(static_cast<size_t>(bins), 0.0);
  double emp_under = 0.0, emp_over = 0.0;
  for (double s : samples) {
    if (s < lo)
      emp_under += 1.0;
    else if (s >= hi)
      emp_over += 1.0;
    else
      emp[static_cast<size_t>((s - lo) / width)] += 1.0;
  }
  double n = static_cast<double>(samples.size());
  for (double& v : emp) v /= n;
  emp_under /= n;
  emp_over /= n;

  // Simpson's rule per bin on the normalized density.
  double log_z = target.log_norm_const();
  auto pdf = [&](double x) {
    double v[1] = {x};
    return std::exp(target.log_density(std::span<const double>(v, 1)) - log_z);
  };
  constexpr int kSub = 32;
  Vec64 tgt(static_cast<size_t>(bins), 0.0);
  double total = 0.0;
  for (int b = 0; b < bins; ++b) {
    double a = lo + b * width;
    double h = width / kSub;
    double acc = pdf(a) + pdf(a + width);
    for (int i = 1; i < kSub; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * pdf(a + i * h);
    tgt[static_cast<size_t>(b)] = acc * h / 3.0;
    total += tgt[static_cast<size_t>(b)];
  }
  double tail = std::max(0.0, 1.0 - total);
  // Split the tail mass between the two sides by a coarse integral.
  double left_tail = 0.0;
  {
    double span_width = hi - lo;
    double a = lo - 8.0 * span_width;
    int steps = 400;
    double h = (lo - a) / steps;
    double acc = pdf(a) + pdf(lo);
    for (int i = 1; i < steps; ++i) acc += (i % 2 == 1 ? 4.0 : 2.0) * pdf(a + i * h);
    left_tail = std::min(tail, acc * h / 3.0);
  }
  double right_tail = tail - left_tail;

  double tv = std::abs(emp_under - left_tail) + std::abs(emp_over - right_tail);
  for (int b = 0; b < bins; ++b) tv += std::abs(emp[static_cast<size_t>(b)] - tgt[static_cast<size_t>(b)]);
  return 0.5 * tv;
}

ModeAssignment sign_mode_assignment() {
  return [](std::span<const double> x) { return x[0] >= 0.0 ? 1 : 0; };
}

ModeAssignment nearest_mode_assignment(std::vector<Vec64> modes) {
  if (modes.empty()) throw ShapeError("nearest_mode_assignment needs modes");
  return [modes = std::move(modes)](std::span<const double> x) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (size_t k = 0; k < modes.size(); ++k) {
      double d = 0.0;
      for (size_t i = 0; i < x.size(); ++i) {
        double diff = x[i] - modes[k][i];
        d += diff * diff;
      }
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(k);
      }
    }
    return best;
  };
}

double cross_mode_rate(const ChainArchive& archive, const ModeAssignment& mode) {
  uint64_t accepted = 0, crossed = 0;
  for (size_t c = 0; c < archive.states.size(); ++c) {
    const auto& chain = archive.states[c];
    for (size_t t = 1; t < chain.size(); ++t) {
      if (!archive.accepted[c][t]) continue;
      ++accepted;
      if (mode(chain[t - 1]) != mode(chain[t])) ++crossed;
    }
  }
  return accepted == 0 ? 0.0 : static_cast<double>(crossed) / static_cast<double>(accepted);
}

}  // namespace inmc
