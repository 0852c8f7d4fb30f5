#include "inmc/config.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "inmc/errors.hpp"

namespace inmc {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r\n");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r\n");
  return s.substr(a, b - a + 1);
}

}  // namespace

KeyValueConfig KeyValueConfig::from_string(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream is(text);
  std::string line;
  size_t line_no = 0;
  while (std::getline(is, line)) {
    ++line_no;
    size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::string t = trim(line);
    if (t.empty()) continue;
    size_t eq = t.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(line_no) + ": expected 'key = value'");
    std::string key = trim(t.substr(0, eq));
    std::string value = trim(t.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(line_no) + ": empty key");
    cfg.values_[key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::from_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream buf;
  buf << is.rdbuf();
  return from_string(buf.str());
}

void KeyValueConfig::set_override(const std::string& assignment) {
  size_t eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override must be key=value");
  set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

void KeyValueConfig::set(const std::string& key, const std::string& value) {
  if (key.empty()) throw ConfigError("empty config key");
  values_[key] = value;
}

bool KeyValueConfig::has(const std::string& key) const { return values_.count(key) != 0; }

std::string KeyValueConfig::get_string(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get_double(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    double v = std::stod(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected a number, got '" + it->second + "'");
  }
}

int KeyValueConfig::get_int(const std::string& key, int fallback) const {
  double v = get_double(key, static_cast<double>(fallback));
  int i = static_cast<int>(v);
  if (static_cast<double>(i) != v) throw ConfigError("key '" + key + "': expected an integer");
  return i;
}

uint64_t KeyValueConfig::get_u64(const std::string& key, uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  try {
    size_t pos = 0;
    unsigned long long v = std::stoull(it->second, &pos);
    if (pos != it->second.size()) throw std::invalid_argument("trailing");
    return v;
  } catch (const std::exception&) {
    throw ConfigError("key '" + key + "': expected an unsigned integer");
  }
}

void KeyValueConfig::require_known(const std::set<std::string>& known) const {
  for (const auto& [key, _] : values_)
    if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");
}

std::string KeyValueConfig::resolved_text() const {
  std::ostringstream os;
  for (const auto& [key, value] : values_) os << key << " = " << value << "\n";
  return os.str();
}

const std::set<std::string>& training_config_keys() {
  static const std::set<std::string> keys = {
      "target",         "target.radius",  "target.sd",     "target.components",
      "arch.aux_dim",   "arch.hidden_mult",
      "train.b",        "train.steps",    "train.batch",   "train.clip_w",
      "train.lr",       "train.lr_g",     "train.decay",   "train.eps",
      "train.init_sd",  "disc.hidden",    "seed",          "checkpoint_every",
  };
  return keys;
}

TrainingConfig training_config_from(KeyValueConfig& cfg) {
  cfg.require_known(training_config_keys());
  TrainingConfig tc;
  tc.target_name = cfg.get_string("target", "mix2");
  tc.target_opts.ring_radius = cfg.get_double("target.radius", tc.target_opts.ring_radius);
  tc.target_opts.ring_sd = cfg.get_double("target.sd", tc.target_opts.ring_sd);
  tc.target_opts.ring_components =
      cfg.get_int("target.components", tc.target_opts.ring_components);

  int state_dim = make_target(tc.target_name, tc.target_opts)->dim();
  int default_aux = 32 - state_dim;  // total width 32 unless overridden
  tc.aux_dim = cfg.get_int("arch.aux_dim", default_aux);
  tc.hidden_mult = cfg.get_int("arch.hidden_mult", tc.hidden_mult);
  tc.disc_hidden = cfg.get_int("disc.hidden", tc.disc_hidden);

  tc.b = cfg.get_int("train.b", tc.b);
  tc.training_steps = cfg.get_int("train.steps", tc.training_steps);
  tc.batch = cfg.get_int("train.batch", tc.batch);
  tc.clip_w = cfg.get_double("train.clip_w", tc.clip_w);
  double lr = cfg.get_double("train.lr", tc.d_opt.lr);
  tc.d_opt.lr = lr;
  tc.g_opt.lr = cfg.get_double("train.lr_g", lr);
  tc.d_opt.decay = tc.g_opt.decay = cfg.get_double("train.decay", tc.d_opt.decay);
  tc.d_opt.eps = tc.g_opt.eps = cfg.get_double("train.eps", tc.d_opt.eps);
  tc.init_sd = cfg.get_double("train.init_sd", tc.init_sd);
  tc.seed = cfg.get_u64("seed", tc.seed);
  tc.checkpoint_every = cfg.get_int("checkpoint_every", tc.checkpoint_every);
  tc.validate();

  // Materialize effective values so the resolved copy is complete.
  char buf[64];
  auto put_num = [&](const std::string& key, double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    cfg.set(key, buf);
  };
  cfg.set("target", tc.target_name);
  put_num("target.radius", tc.target_opts.ring_radius);
  put_num("target.sd", tc.target_opts.ring_sd);
  cfg.set("target.components", std::to_string(tc.target_opts.ring_components));
  cfg.set("arch.aux_dim", std::to_string(tc.aux_dim));
  cfg.set("arch.hidden_mult", std::to_string(tc.hidden_mult));
  cfg.set("disc.hidden", std::to_string(tc.disc_hidden));
  cfg.set("train.b", std::to_string(tc.b));
  cfg.set("train.steps", std::to_string(tc.training_steps));
  cfg.set("train.batch", std::to_string(tc.batch));
  put_num("train.clip_w", tc.clip_w);
  put_num("train.lr", tc.d_opt.lr);
  put_num("train.lr_g", tc.g_opt.lr);
  put_num("train.decay", tc.d_opt.decay);
  put_num("train.eps", tc.d_opt.eps);
  put_num("train.init_sd", tc.init_sd);
  cfg.set("seed", std::to_string(tc.seed));
  cfg.set("checkpoint_every", std::to_string(tc.checkpoint_every));
  return tc;
}

}  // namespace inmc
