#include "qnn/topology.hpp"

#include <algorithm>

#include "qnn/error.hpp"

namespace qnn {

using nlohmann::json;

void TopologySpec::validate() const {
  dataset.validate();
  for (std::size_t i = 0; i < 3; ++i) {
    if (depth[i] == 0) throw ConfigError("block depths must be >= 1");
    if (width[i] == 0) throw ConfigError("block widths must be >= 1");
  }
}

void to_json(json& j, const DatasetSpec& d) {
  j = json{{"name", d.name},
           {"s_in", d.s_in},
           {"c_in", d.c_in},
           {"num_classes", d.num_classes},
           {"source", std::string(to_string(d.source))}};
}

namespace {

template <typename T>
T required(const json& j, const char* key, const char* where) {
  if (!j.contains(key)) throw ConfigError(std::string(where) + ": missing key '" + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(std::string(where) + ": key '" + key + "' has the wrong type");
  }
}

std::size_t required_count(const json& j, const char* key, const char* where) {
  const auto v = required<long long>(j, key, where);
  if (v < 0) throw ConfigError(std::string(where) + ": key '" + key + "' must be non-negative");
  return static_cast<std::size_t>(v);
}

}  // namespace

void from_json(const json& j, DatasetSpec& d) {
  if (j.is_string()) {
    d = DatasetSpec::preset(j.get<std::string>());
    return;
  }
  if (!j.is_object()) throw ConfigError("dataset: expected a preset name or an object");
  // Start from the named preset when there is one, so objects may override single fields.
  DatasetSpec base;
  if (j.contains("name") && j.at("name").is_string()) {
    const auto name = j.at("name").get<std::string>();
    for (const char* preset : {"cifar10", "mnist", "svhn", "synthetic"})
      if (name == preset) base = DatasetSpec::preset(name);
  }
  if (j.contains("name")) base.name = required<std::string>(j, "name", "dataset");
  if (j.contains("s_in")) base.s_in = required_count(j, "s_in", "dataset");
  if (j.contains("c_in")) base.c_in = required_count(j, "c_in", "dataset");
  if (j.contains("num_classes")) base.num_classes = required_count(j, "num_classes", "dataset");
  if (j.contains("source"))
    base.source = data_source_from_string(required<std::string>(j, "source", "dataset"));
  d = base;
}

void to_json(json& j, const TopologySpec& t) {
  j = json{{"nA", t.depth[0]}, {"nB", t.depth[1]}, {"nC", t.depth[2]},
           {"FA", t.width[0]}, {"FB", t.width[1]}, {"FC", t.width[2]},
           {"dataset", t.dataset}};
}

void from_json(const json& j, TopologySpec& t) {
  if (!j.is_object()) throw ConfigError("topology: expected a JSON object");
  static constexpr const char* kDepthKeys[3] = {"nA", "nB", "nC"};
  static constexpr const char* kWidthKeys[3] = {"FA", "FB", "FC"};
  for (std::size_t i = 0; i < 3; ++i) {
    t.depth[i] = required_count(j, kDepthKeys[i], "topology");
    t.width[i] = required_count(j, kWidthKeys[i], "topology");
  }
  if (!j.contains("dataset")) throw ConfigError("topology: missing key 'dataset'");
  from_json(j.at("dataset"), t.dataset);
}

void to_json(json& j, const QuantSpec& q) {
  j = json{{"Q", q.bits}, {"M", q.input_bits}, {"act", std::string(to_string(q.act))}};
}

void from_json(const json& j, QuantSpec& q) {
  if (!j.is_object()) throw ConfigError("quant: expected a JSON object");
  q.bits = required<int>(j, "Q", "quant");
  q.input_bits = j.contains("M") ? required<int>(j, "M", "quant") : 8;
  q.act = j.contains("act") ? act_kind_from_string(required<std::string>(j, "act", "quant"))
                            : QuantSpec::for_bits(q.bits).act;
}

Model build_topology(const TopologySpec& spec, const QuantSpec& quant, std::uint64_t seed) {
  spec.validate();
  quant.validate();
  Rng rng(seed);
  Model model;
  model.set_input_shape({spec.dataset.s_in, spec.dataset.s_in, spec.dataset.c_in});
  std::size_t channels = spec.dataset.c_in;
  for (std::size_t block = 0; block < 3; ++block) {
    for (std::size_t i = 0; i < spec.depth[block]; ++i) {
      model.emplace<QuantConv3x3>(channels, spec.width[block], quant, rng);
      model.emplace<BatchNorm>(spec.width[block]);
      model.emplace<QuantActivation>(quant);
      channels = spec.width[block];
    }
    model.emplace<MaxPool2x2>();
  }
  const std::size_t side = spec.dataset.s_in / 8;
  model.emplace<QuantDense>(side * side * channels, spec.dataset.num_classes, quant, rng);
  return model;
}

NetworkStats compute_stats(const TopologySpec& spec, const QuantSpec& quant,
                           const StatsOptions& options) {
  spec.validate();
  quant.validate();
  NetworkStats stats;
  stats.first_layer_factor = options.apply_first_layer_factor ? quant.first_layer_factor() : 1;
  stats.input_words = spec.dataset.s_in * spec.dataset.s_in * spec.dataset.c_in;
  stats.input_bits = static_cast<std::size_t>(quant.input_bits);

  std::uint64_t side = spec.dataset.s_in;
  std::uint64_t channels = spec.dataset.c_in;
  std::size_t layer_index = 0;
  bool first = true;
  for (std::size_t block = 0; block < 3; ++block) {
    const std::uint64_t f = spec.width[block];
    for (std::size_t i = 0; i < spec.depth[block]; ++i) {
      LayerFootprint fp;
      fp.layer_index = layer_index;
      fp.kind = LayerKind::Conv3x3;
      fp.input_words = side * side * channels;
      fp.output_words = side * side * f;
      fp.weight_words = 9 * channels * f + f;
      if (options.count_batchnorm_params) fp.weight_words += 2 * f;
      fp.macs = side * side * f * channels * 9;
      if (first) fp.macs *= static_cast<std::uint64_t>(stats.first_layer_factor);
      first = false;
      stats.per_layer.push_back(fp);
      channels = f;
      layer_index += 3;  // conv, batchnorm, activation
    }
    side /= 2;
    layer_index += 1;  // pool
  }
  LayerFootprint dense;
  dense.layer_index = layer_index;
  dense.kind = LayerKind::Dense;
  dense.input_words = side * side * channels;
  dense.output_words = spec.dataset.num_classes;
  dense.weight_words = dense.input_words * dense.output_words + dense.output_words;
  dense.macs = dense.input_words * dense.output_words;
  stats.per_layer.push_back(dense);

  for (const LayerFootprint& fp : stats.per_layer) {
    stats.macs += fp.macs;
    stats.params += fp.weight_words;
    stats.activations += fp.output_words;
  }
  return stats;
}

std::uint64_t max_feature_footprint(const NetworkStats& stats, int bits) {
  std::uint64_t words = 0;
  for (const LayerFootprint& fp : stats.per_layer)
    words = std::max({words, fp.input_words, fp.output_words});
  return words * static_cast<std::uint64_t>(bits);
}

void to_json(json& j, const NetworkStats& s) {
  json layers = json::array();
  for (const LayerFootprint& fp : s.per_layer)
    layers.push_back({{"layer", fp.layer_index},
                      {"kind", std::string(to_string(fp.kind))},
                      {"input_words", fp.input_words},
                      {"output_words", fp.output_words},
                      {"weight_words", fp.weight_words},
                      {"macs", fp.macs}});
  j = json{{"N_c", s.macs},
           {"N_s", s.params},
           {"A_s", s.activations},
           {"first_layer_factor", s.first_layer_factor},
           {"input_words", s.input_words},
           {"M", s.input_bits},
           {"per_layer", layers}};
}

}  // namespace qnn
