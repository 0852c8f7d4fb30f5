#pragma once

#include <span>
#include <vector>

#include "inmc/tape.hpp"
#include "inmc/vec.hpp"

namespace inmc {

// Occupancy distribution over the states 0..b of a linear proposal path
// after b accept/reject steps with per-edge acceptance probabilities
// A[0..b-1]: a triangular recurrence
//
//   chi[0][t] = (1 - A[0])^t
//   chi[j][t] = chi[j-1][t-1] A[j-1] + chi[j][t-1] (1 - A[j])   (j <= b-1)
//   chi[b][b] = prod_i A[i]
//
// The last row follows from reaching the end of the path requiring every
// step to be accepted; it restores sum_i P(i) = 1. Returns P(i) = chi[i][b].
Vec64 chain_distribution(std::span<const double> acceptances);

// Same recurrence over scalar tape nodes, so the occupancy probabilities
// stay differentiable through the acceptance probabilities.
std::vector<Var> chain_distribution(Tape& tape, std::span<const Var> acceptances);

}  // namespace inmc
