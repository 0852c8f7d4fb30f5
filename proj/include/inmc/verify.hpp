#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "inmc/involutive_net.hpp"
#include "inmc/rng.hpp"
#include "inmc/universality.hpp"

namespace inmc {

struct CheckResult {
  std::string name;
  double measured = 0.0;
  double threshold = 0.0;
  bool higher_is_better = false;
  bool passed = false;
  std::string detail;
};

// Random grammar-valid involutive network: a composition tree with up to
// max_leaves leaf blocks (function / permutation / matrix) over `dim`
// coordinates, wired through the sandwich and conjugation closure rules.
InvolutiveNetwork random_grammar_network(int dim, int max_leaves, RngStream& rng);

// Property suites behind `verify` and the acceptance criteria. Each returns
// one result per named property.
std::vector<CheckResult> verify_involution(uint64_t seed);
std::vector<CheckResult> verify_volume(uint64_t seed);
std::vector<CheckResult> verify_grad(uint64_t seed);
std::vector<CheckResult> verify_chi(uint64_t seed);
std::vector<CheckResult> verify_balance(uint64_t seed);
std::vector<CheckResult> verify_universality(uint64_t seed,
                                             std::vector<universality::SweepRow>* rows = nullptr);

// Runs one suite by name ("involution", "volume", "grad", "chi", "balance",
// "universality", "all"); throws ConfigError on unknown names.
std::vector<CheckResult> run_verify_suite(const std::string& suite, uint64_t seed);

// Prints "name: measured (threshold ...) PASS/FAIL" lines; returns true when
// everything passed.
bool print_results(const std::vector<CheckResult>& results, std::ostream& os);

}  // namespace inmc
