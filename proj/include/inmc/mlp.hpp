#pragma once

#include <string>
#include <vector>

#include "inmc/params.hpp"
#include "inmc/rng.hpp"
#include "inmc/tape.hpp"
#include "inmc/vec.hpp"

namespace inmc {

// Dense feed-forward net (ReLU hidden layers, linear output) whose weights
// live as named segments inside a shared Parameters store. Used for the
// coupling shift nets and the discriminator.
class Mlp {
 public:
  enum class FinalInit {
    kZero,   // start as the zero function (identity coupling layers)
    kFanIn,  // uniform fan-in scaling
  };

  // Allocates weight/bias segments "<prefix>.w<i>"/"<prefix>.b<i>" in store.
  static Mlp create(Parameters& store, const std::string& prefix,
                    const std::vector<int>& widths, RngStream& rng, FinalInit final_init);

  // All weights and biases uniform in [-bound, bound] (discriminator init so
  // every parameter starts inside the WGAN clamp range).
  static Mlp create_uniform(Parameters& store, const std::string& prefix,
                            const std::vector<int>& widths, RngStream& rng, double bound);

  // Rebuild the handle from an existing store (deserialization path).
  static Mlp attach(const Parameters& store, const std::string& prefix,
                    const std::vector<int>& widths);

  int in_dim() const { return widths_.front(); }
  int out_dim() const { return widths_.back(); }
  const std::vector<int>& widths() const { return widths_; }
  const std::string& prefix() const { return prefix_; }

  Vec64 forward(const Parameters& store, std::span<const double> x) const;
  Var forward(Tape& tape, const BoundParams& bound, Var x) const;

 private:
  std::string prefix_;
  std::vector<int> widths_;
  std::vector<int> w_segs_;
  std::vector<int> b_segs_;
};

}  // namespace inmc
