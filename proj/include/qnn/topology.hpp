#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "json.hpp"
#include "qnn/dataset.hpp"
#include "qnn/layers.hpp"
#include "qnn/quantization.hpp"

namespace qnn {

/// Three conv blocks (A, B, C) of `depth[i]` conv+batchnorm+activation
/// sequences at width `width[i]`, each block followed by a 2x2 max pool, then
/// one dense classifier on the (s_in/8)^2 * F_C pooled features.
struct TopologySpec {
  std::array<std::size_t, 3> depth{1, 1, 1};   // n_A, n_B, n_C
  std::array<std::size_t, 3> width{32, 32, 32};  // F_A, F_B, F_C
  DatasetSpec dataset = DatasetSpec::cifar10();

  void validate() const;
  std::size_t conv_layer_count() const { return depth[0] + depth[1] + depth[2]; }

  friend bool operator==(const TopologySpec&, const TopologySpec&) = default;
};

void to_json(nlohmann::json& j, const DatasetSpec& d);
void from_json(const nlohmann::json& j, DatasetSpec& d);
void to_json(nlohmann::json& j, const TopologySpec& t);
/// Accepts keys nA,nB,nC,FA,FB,FC and dataset (a preset name or an object
/// with name/s_in/c_in/num_classes/source). Throws ConfigError naming the key.
void from_json(const nlohmann::json& j, TopologySpec& t);
void to_json(nlohmann::json& j, const QuantSpec& q);
void from_json(const nlohmann::json& j, QuantSpec& q);

/// Instantiates the network with freshly initialised shadow weights.
Model build_topology(const TopologySpec& spec, const QuantSpec& quant, std::uint64_t seed = 1);

/// Word counts of one MAC layer (conv or dense) for a single inference.
struct LayerFootprint {
  std::size_t layer_index = 0;  // position in the built Model
  LayerKind kind = LayerKind::Conv3x3;
  std::uint64_t input_words = 0;
  std::uint64_t output_words = 0;
  std::uint64_t weight_words = 0;  // weights + biases (+ batchnorm params when counted)
  std::uint64_t macs = 0;          // after any first-layer factor
};

struct NetworkStats {
  std::uint64_t macs = 0;         // N_c
  std::uint64_t params = 0;       // N_s
  std::uint64_t activations = 0;  // A_s
  std::vector<LayerFootprint> per_layer;
  int first_layer_factor = 1;
  std::size_t input_words = 0;  // s_in^2 * c_in, the image fetched from DRAM
  std::size_t input_bits = 8;   // M

  std::uint64_t model_bits(int bits) const { return params * static_cast<std::uint64_t>(bits); }
};

struct StatsOptions {
  /// Multiply the first conv's MACs by ceil(M/Q) for M > Q.
  bool apply_first_layer_factor = true;
  /// Count batchnorm scale/shift in N_s (normally kept resident in full precision).
  bool count_batchnorm_params = false;
};

NetworkStats compute_stats(const TopologySpec& spec, const QuantSpec& quant,
                           const StatsOptions& options = {});

/// max over MAC layers of max(input words, output words) * Q, in bits.
std::uint64_t max_feature_footprint(const NetworkStats& stats, int bits);

void to_json(nlohmann::json& j, const NetworkStats& s);

}  // namespace qnn
