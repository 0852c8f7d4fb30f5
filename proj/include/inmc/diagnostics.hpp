#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "inmc/kernels.hpp"
#include "inmc/targets.hpp"
#include "inmc/vec.hpp"

namespace inmc {

// Rectangular record of one sampling run: per chain, the state after every
// step (index 0 is the initial state) plus accept flags and raw log ratios
// for steps >= 1.
struct ChainArchive {
  std::vector<std::vector<Vec64>> states;
  std::vector<std::vector<uint8_t>> accepted;   // accepted[c][t] for t >= 1; [0] unused
  std::vector<Vec64> log_ratios;                // log_ratios[c][t] for t >= 1; [0] is 0

  std::string kernel_name;
  std::string target_name;
  uint64_t seed = 0;

  int chain_count() const { return static_cast<int>(states.size()); }
  int step_count() const;  // steps per chain (excluding the initial state)
  int state_dim() const;

  void add_chain(const Vec64& init, const std::vector<TransitionRecord>& records);
  double acceptance_rate() const;

  // CSV schema: chain,step,accepted,log_ratio,x0,...  (step 0 rows carry the
  // initial state with accepted=1 and log_ratio=0).
  void write_csv(std::ostream& os) const;
  static ChainArchive read_csv(std::istream& is);  // rejects malformed rows with line numbers

  // Values of one coordinate across chains at a fixed step.
  Vec64 states_at_step(int step, int coord) const;
  // Values of one coordinate pooled over steps [from_step, to_step].
  Vec64 pooled_states(int from_step, int to_step, int coord) const;
};

// Normalized empirical autocorrelation per lag (biased 1/N estimator,
// per-chain mean subtracted, averaged over chains). Lag 0 is exactly 1.
Vec64 autocorrelation(const ChainArchive& archive, int coordinate, int max_lag);

struct NllCurve {
  Vec64 nll_by_step;    // mean over chains of -log p(state) per step
  double reference;     // Monte-Carlo -E[log p] under the target itself
};

NllCurve expected_nll(const ChainArchive& archive, const TargetDensity& target,
                      int reference_samples = 200000, uint64_t seed = 0);

// Half L1 distance between the sample histogram and the target mass per bin
// (numeric Simpson integration per bin; mass outside [lo, hi] is compared
// against the two tail masses).
double tv_distance_histogram(std::span<const double> samples, const TargetDensity& target,
                             int bins, double lo, double hi);

using ModeAssignment = std::function<int(std::span<const double>)>;

ModeAssignment sign_mode_assignment();
ModeAssignment nearest_mode_assignment(std::vector<Vec64> modes);

// Fraction of accepted transitions whose endpoints lie in different modes.
double cross_mode_rate(const ChainArchive& archive, const ModeAssignment& mode);

}  // namespace inmc
