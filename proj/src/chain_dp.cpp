#include "inmc/chain_dp.hpp"

#include "inmc/errors.hpp"

namespace inmc {

Vec64 chain_distribution(std::span<const double> acceptances) {
  int b = static_cast<int>(acceptances.size());
  if (b < 1) throw ShapeError("chain_distribution needs b >= 1");
  for (double a : acceptances)
    if (!(a >= 0.0 && a <= 1.0)) throw DomainError("acceptance probability outside [0,1]");

  // chi[j][t], lower triangular in (j, t).
  std::vector<Vec64> chi(static_cast<size_t>(b) + 1, Vec64(static_cast<size_t>(b) + 1, 0.0));
  chi[0][0] = 1.0;
  for (int t = 1; t <= b; ++t) chi[0][static_cast<size_t>(t)] = chi[0][static_cast<size_t>(t) - 1] * (1.0 - acceptances[0]);
  for (int j = 1; j <= b - 1; ++j) {
    for (int t = j; t <= b; ++t) {
      chi[static_cast<size_t>(j)][static_cast<size_t>(t)] =
          chi[static_cast<size_t>(j) - 1][static_cast<size_t>(t) - 1] * acceptances[static_cast<size_t>(j) - 1] +
          chi[static_cast<size_t>(j)][static_cast<size_t>(t) - 1] * (1.0 - acceptances[static_cast<size_t>(j)]);
    }
  }
  double all = 1.0;
  for (double a : acceptances) all *= a;
  chi[static_cast<size_t>(b)][static_cast<size_t>(b)] = all;

  Vec64 p(static_cast<size_t>(b) + 1);
  for (int i = 0; i <= b; ++i) p[static_cast<size_t>(i)] = chi[static_cast<size_t>(i)][static_cast<size_t>(b)];
  return p;
}

std::vector<Var> chain_distribution(Tape& tape, std::span<const Var> acceptances) {
  int b = static_cast<int>(acceptances.size());
  if (b < 1) throw ShapeError("chain_distribution needs b >= 1");

  Var one = tape.constant_scalar(1.0);
  std::vector<Var> reject;  // 1 - A[j]
  reject.reserve(static_cast<size_t>(b));
  for (Var a : acceptances) reject.push_back(tape.sub(one, a));

  std::vector<std::vector<Var>> chi(static_cast<size_t>(b) + 1,
                                    std::vector<Var>(static_cast<size_t>(b) + 1));
  chi[0][0] = one;
  for (int t = 1; t <= b; ++t)
    chi[0][static_cast<size_t>(t)] = tape.mul(chi[0][static_cast<size_t>(t) - 1], reject[0]);
  for (int j = 1; j <= b - 1; ++j) {
    for (int t = j; t <= b; ++t) {
      Var advance = tape.mul(chi[static_cast<size_t>(j) - 1][static_cast<size_t>(t) - 1],
                             acceptances[static_cast<size_t>(j) - 1]);
      Var stay = t - 1 >= j ? tape.mul(chi[static_cast<size_t>(j)][static_cast<size_t>(t) - 1],
                                       reject[static_cast<size_t>(j)])
                            : Var{};
      chi[static_cast<size_t>(j)][static_cast<size_t>(t)] =
          stay.valid() ? tape.add(advance, stay) : advance;
    }
  }
  Var all = acceptances[0];
  for (int i = 1; i < b; ++i) all = tape.mul(all, acceptances[static_cast<size_t>(i)]);
  chi[static_cast<size_t>(b)][static_cast<size_t>(b)] = all;

  std::vector<Var> p(static_cast<size_t>(b) + 1);
  for (int i = 0; i <= b; ++i) p[static_cast<size_t>(i)] = chi[static_cast<size_t>(i)][static_cast<size_t>(b)];
  return p;
}

}  // namespace inmc
