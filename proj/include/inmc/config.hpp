#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>

#include "inmc/training.hpp"

namespace inmc {

// Plain-text config: one "dotted.key = value" per line, '#' comments.
// Flags override file values; unknown keys are rejected against a schema.
class KeyValueConfig {
 public:
  static KeyValueConfig from_string(const std::string& text);
  static KeyValueConfig from_file(const std::string& path);

  // "key=value" (command-line override form).
  void set_override(const std::string& assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const;
  std::string get_string(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  int get_int(const std::string& key, int fallback) const;
  uint64_t get_u64(const std::string& key, uint64_t fallback) const;

  // Throws ConfigError naming the first key outside `known`.
  void require_known(const std::set<std::string>& known) const;

  // Deterministic "key = value" dump, sorted by key.
  std::string resolved_text() const;

 private:
  std::map<std::string, std::string> values_;
};

// Schema of recognized training keys.
const std::set<std::string>& training_config_keys();

// Builds a validated TrainingConfig, materializing defaults into cfg so the
// resolved dump records every effective value.
TrainingConfig training_config_from(KeyValueConfig& cfg);

}  // namespace inmc
