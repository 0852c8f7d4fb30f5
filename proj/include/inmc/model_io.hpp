#pragma once

#include <iosfwd>
#include <memory>
#include <string>

#include "inmc/involutive_net.hpp"

namespace inmc {

// A trained generator plus the bookkeeping needed to rebuild its kernel.
struct GeneratorModel {
  int state_dim = 0;
  int aux_dim = 0;
  std::shared_ptr<InvolutiveNetwork> network;

  std::string target_name;
  uint64_t seed = 0;
  int training_steps = 0;
};

inline constexpr int kModelFormatVersion = 1;

struct ModelMeta {
  std::string target_name;
  uint64_t seed = 0;
  int training_steps = 0;
};

// JSON with the architecture descriptor (block tree, permutations, layer
// shapes) and every parameter value as a C99 hex-float string, so a
// save/load round trip is bit-identical. Version mismatch is a hard error.
void save_model(const InvolutiveNetwork& net, int state_dim, int aux_dim, const ModelMeta& meta,
                std::ostream& os);
void save_model(const GeneratorModel& model, std::ostream& os);
GeneratorModel load_model(std::istream& is);

void save_model_file(const InvolutiveNetwork& net, int state_dim, int aux_dim,
                     const ModelMeta& meta, const std::string& path);

std::string model_to_string(const GeneratorModel& model);
GeneratorModel model_from_string(const std::string& text);

void save_model_file(const GeneratorModel& model, const std::string& path);
GeneratorModel load_model_file(const std::string& path);

}  // namespace inmc
