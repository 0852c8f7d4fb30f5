#include "inmc/model_io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "inmc/errors.hpp"

namespace inmc {

namespace {

using Json = nlohmann::ordered_json;

std::string double_to_hex(double x) {
  if (!std::isfinite(x)) throw ModelFileError("cannot serialize non-finite parameter");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%a", x);
  return buf;
}

double hex_to_double(const std::string& s) {
  const char* c = s.c_str();
  char* end = nullptr;
  double v = std::strtod(c, &end);
  if (end != c + s.size()) throw ModelFileError("bad hex float '" + s + "'");
  return v;
}

Json mlp_to_json(const Mlp& m) {
  Json j;
  j["prefix"] = m.prefix();
  j["widths"] = m.widths();
  return j;
}

Json invnet_to_json(const InvertibleNet& net) {
  Json j;
  j["dim"] = net.dim();
  Json layers = Json::array();
  for (const auto& layer : net.layers()) {
    Json l;
    if (const auto* c = std::get_if<CouplingLayer>(&layer)) {
      l["type"] = "coupling";
      l["keep"] = c->keep;
      l["shift"] = c->shift;
      l["net"] = mlp_to_json(c->net);
    } else {
      l["type"] = "perm";
      l["perm"] = std::get<PermutationLayer>(layer).perm;
    }
    layers.push_back(std::move(l));
  }
  j["layers"] = std::move(layers);
  return j;
}

Json block_to_json(const Block& b, const Parameters& store) {
  Json j;
  std::visit(
      [&](const auto& n) {
        using T = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<T, FunctionBlock>) {
          j["type"] = "function";
          j["g"] = invnet_to_json(n.g);
        } else if constexpr (std::is_same_v<T, PermutationBlock>) {
          j["type"] = "perm";
          j["sigma"] = n.sigma;
        } else if constexpr (std::is_same_v<T, MatrixBlock>) {
          j["type"] = "matrix";
          j["v"] = store.name(n.v_seg);
          j["w"] = store.name(n.w_seg);
          j["dim"] = b.dim;
        } else if constexpr (std::is_same_v<T, IdentityBlock>) {
          j["type"] = "identity";
          j["dim"] = b.dim;
        } else if constexpr (std::is_same_v<T, Sandwich>) {
          j["type"] = "sandwich";
          j["outer"] = block_to_json(*n.outer, store);
          j["inner"] = block_to_json(*n.inner, store);
        } else if constexpr (std::is_same_v<T, Conjugate>) {
          j["type"] = "conjugate";
          j["g"] = invnet_to_json(n.g);
          j["inner"] = block_to_json(*n.inner, store);
        }
      },
      b.node);
  return j;
}

InvertibleNet invnet_from_json(const Json& j, const Parameters& store) {
  InvertibleNet net(j.at("dim").get<int>());
  for (const auto& l : j.at("layers")) {
    std::string type = l.at("type").get<std::string>();
    if (type == "coupling") {
      CouplingLayer c{.keep = l.at("keep").get<std::vector<int>>(),
                      .shift = l.at("shift").get<std::vector<int>>(),
                      .net = Mlp::attach(store, l.at("net").at("prefix").get<std::string>(),
                                         l.at("net").at("widths").get<std::vector<int>>())};
      net.add_coupling(std::move(c));
    } else if (type == "perm") {
      net.add_permutation(l.at("perm").get<std::vector<int>>());
    } else {
      throw ModelFileError("unknown invertible layer type '" + type + "'");
    }
  }
  return net;
}

BlockPtr block_from_json(const Json& j, Parameters& store) {
  std::string type = j.at("type").get<std::string>();
  if (type == "function") return make_function_block(invnet_from_json(j.at("g"), store));
  if (type == "perm") return make_permutation_block(j.at("sigma").get<std::vector<int>>());
  if (type == "matrix") {
    int v = store.find(j.at("v").get<std::string>());
    int w = store.find(j.at("w").get<std::string>());
    if (v < 0 || w < 0) throw ModelFileError("matrix block segments missing");
    if (store.seg(v).size() != store.seg(w).size() ||
        static_cast<int>(store.seg(v).size()) != j.at("dim").get<int>())
      throw ModelFileError("matrix block segment sizes inconsistent");
    auto b = std::make_unique<Block>();
    b->dim = j.at("dim").get<int>();
    b->node = MatrixBlock{v, w};
    return b;
  }
  if (type == "identity") return make_identity_block(j.at("dim").get<int>());
  if (type == "sandwich")
    return make_sandwich(block_from_json(j.at("outer"), store), block_from_json(j.at("inner"), store));
  if (type == "conjugate")
    return make_conjugate(invnet_from_json(j.at("g"), store), block_from_json(j.at("inner"), store));
  throw ModelFileError("unknown block type '" + type + "'");
}

}  // namespace

void save_model(const InvolutiveNetwork& net, int state_dim, int aux_dim, const ModelMeta& meta,
                std::ostream& os) {
  Json j;
  j["format_version"] = kModelFormatVersion;
  j["state_dim"] = state_dim;
  j["aux_dim"] = aux_dim;
  j["architecture"] = block_to_json(net.root(), net.params());
  Json segs = Json::array();
  const Parameters& p = net.params();
  for (int i = 0; i < p.segment_count(); ++i) {
    Json s;
    s["name"] = p.name(i);
    Json vals = Json::array();
    for (double v : p.seg(i)) vals.push_back(double_to_hex(v));
    s["values"] = std::move(vals);
    segs.push_back(std::move(s));
  }
  j["segments"] = std::move(segs);
  Json m;
  m["target"] = meta.target_name;
  m["seed"] = meta.seed;
  m["training_steps"] = meta.training_steps;
  j["metadata"] = std::move(m);
  os << j.dump(2) << "\n";
}

void save_model(const GeneratorModel& model, std::ostream& os) {
  if (!model.network) throw ModelFileError("no network to save");
  save_model(*model.network, model.state_dim, model.aux_dim,
             {model.target_name, model.seed, model.training_steps}, os);
}

GeneratorModel load_model(std::istream& is) {
  Json j;
  try {
    j = Json::parse(is);
  } catch (const std::exception& e) {
    throw ModelFileError(std::string("parse failure: ") + e.what());
  }
  int version = j.at("format_version").get<int>();
  if (version != kModelFormatVersion)
    throw ModelFileError("format version " + std::to_string(version) + " unsupported (expected " +
                         std::to_string(kModelFormatVersion) + ")");
  GeneratorModel model;
  model.state_dim = j.at("state_dim").get<int>();
  model.aux_dim = j.at("aux_dim").get<int>();
  Parameters store;
  for (const auto& s : j.at("segments")) {
    Vec64 vals;
    for (const auto& v : s.at("values")) vals.push_back(hex_to_double(v.get<std::string>()));
    store.add_segment(s.at("name").get<std::string>(), std::move(vals));
  }
  BlockPtr root = block_from_json(j.at("architecture"), store);
  model.network = std::make_shared<InvolutiveNetwork>(std::move(store), std::move(root));
  if (model.network->dim() != model.state_dim + model.aux_dim)
    throw ModelFileError("architecture dimension does not match state_dim + aux_dim");
  const auto& meta = j.at("metadata");
  model.target_name = meta.at("target").get<std::string>();
  model.seed = meta.at("seed").get<uint64_t>();
  model.training_steps = meta.at("training_steps").get<int>();
  return model;
}

std::string model_to_string(const GeneratorModel& model) {
  std::ostringstream os;
  save_model(model, os);
  return os.str();
}

GeneratorModel model_from_string(const std::string& text) {
  std::istringstream is(text);
  return load_model(is);
}

void save_model_file(const GeneratorModel& model, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ModelFileError("cannot open '" + path + "' for writing");
  save_model(model, os);
}

void save_model_file(const InvolutiveNetwork& net, int state_dim, int aux_dim,
                     const ModelMeta& meta, const std::string& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw ModelFileError("cannot open '" + path + "' for writing");
  save_model(net, state_dim, aux_dim, meta, os);
}

GeneratorModel load_model_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ModelFileError("cannot open '" + path + "'");
  return load_model(is);
}

}  // namespace inmc
