#include "qnn/energy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnn/error.hpp"

namespace qnn {

using nlohmann::json;

void HardwareConfig::validate() const {
  const auto positive = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!positive(mac_energy_16) || !positive(local_ratio) || !positive(main_ratio) ||
      !positive(dram_ratio) || !positive(p16))
    throw ConfigError("hardware '" + name + "': energies, ratios and p16 must be positive");
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw ConfigError("hardware '" + name + "': alpha must be finite and non-negative");
  if (!infinite_memory && (!positive(weight_buffer_bits) || !positive(activation_buffer_bits)))
    throw ConfigError("hardware '" + name + "': M_W and M_A must be positive");
}

HardwareConfig HardwareConfig::preset(std::string_view name) {
  HardwareConfig hw;
  hw.name = std::string(name);
  if (name == "1Mb") {
    hw.weight_buffer_bits = hw.activation_buffer_bits = 0.5 * kMegabit;
  } else if (name == "4Mb") {
    hw.weight_buffer_bits = hw.activation_buffer_bits = 2.0 * kMegabit;
  } else if (name == "infinite") {
    hw.infinite_memory = true;
    hw.weight_buffer_bits = hw.activation_buffer_bits = std::numeric_limits<double>::infinity();
  } else {
    throw ConfigError("unknown hardware preset '" + std::string(name) + "' (expected 1Mb|4Mb|infinite)");
  }
  return hw;
}

std::vector<std::string> HardwareConfig::preset_names() { return {"1Mb", "4Mb", "infinite"}; }

void to_json(json& j, const HardwareConfig& hw) {
  j = json{{"name", hw.name},
           {"E_MAC16", hw.mac_energy_16},
           {"alpha", hw.alpha},
           {"local_ratio", hw.local_ratio},
           {"main_ratio", hw.main_ratio},
           {"dram_ratio", hw.dram_ratio},
           {"p16", hw.p16},
           {"infinite", hw.infinite_memory}};
  if (hw.infinite_memory) {
    j["M_W"] = nullptr;
    j["M_A"] = nullptr;
  } else {
    j["M_W"] = hw.weight_buffer_bits;
    j["M_A"] = hw.activation_buffer_bits;
  }
}

void from_json(const json& j, HardwareConfig& hw) {
  if (!j.is_object()) throw ConfigError("hardware: expected a JSON object");
  HardwareConfig out;
  if (j.contains("preset")) out = HardwareConfig::preset(j.at("preset").get<std::string>());
  const auto number = [&](const char* key, double& field) {
    if (!j.contains(key) || j.at(key).is_null()) return;
    if (!j.at(key).is_number()) throw ConfigError(std::string("hardware: key '") + key + "' must be a number");
    field = j.at(key).get<double>();
  };
  if (j.contains("name")) out.name = j.at("name").get<std::string>();
  number("E_MAC16", out.mac_energy_16);
  number("alpha", out.alpha);
  number("local_ratio", out.local_ratio);
  number("main_ratio", out.main_ratio);
  number("dram_ratio", out.dram_ratio);
  number("p16", out.p16);
  if (j.contains("infinite")) {
    if (!j.at("infinite").is_boolean()) throw ConfigError("hardware: key 'infinite' must be a boolean");
    out.infinite_memory = j.at("infinite").get<bool>();
  }
  if (out.infinite_memory) {
    out.weight_buffer_bits = out.activation_buffer_bits = std::numeric_limits<double>::infinity();
  } else {
    number("M_W", out.weight_buffer_bits);
    number("M_A", out.activation_buffer_bits);
  }
  out.validate();
  hw = out;
}

double mac_energy(int bits, const HardwareConfig& hw) {
  if (bits < 1) throw ConfigError("bit width must be >= 1");
  return hw.mac_energy_16 * std::pow(static_cast<double>(bits) / 16.0, hw.alpha);
}

double local_access_energy(int bits, const HardwareConfig& hw) {
  return hw.local_ratio * mac_energy(bits, hw);
}

double main_access_energy(int bits, const HardwareConfig& hw) {
  return hw.main_ratio * mac_energy(bits, hw);
}

double dram_word_energy(int bits, const HardwareConfig& hw) {
  if (bits < 1) throw ConfigError("bit width must be >= 1");
  return hw.dram_ratio * hw.mac_energy_16 * static_cast<double>(bits) / 16.0;
}

double parallelism(int bits, const HardwareConfig& hw) {
  if (bits < 1) throw ConfigError("bit width must be >= 1");
  return hw.p16 * 16.0 / static_cast<double>(bits);
}

SpillWords spill_words(const NetworkStats& stats, int bits, const HardwareConfig& hw) {
  if (bits < 1) throw ConfigError("bit width must be >= 1");
  SpillWords spill;
  if (hw.infinite_memory) return spill;
  const double q = static_cast<double>(bits);
  const double weight_capacity = std::floor(hw.weight_buffer_bits / q);
  const double half_capacity = std::floor(hw.activation_buffer_bits / (2.0 * q));
  spill.weight_words = std::max(0.0, static_cast<double>(stats.params) - weight_capacity);
  for (const LayerFootprint& fp : stats.per_layer)
    spill.feature_words += std::max(0.0, static_cast<double>(fp.output_words) - half_capacity);
  return spill;
}

namespace {

double dram_energy_with(const NetworkStats& stats, const QuantSpec& quant, const HardwareConfig& hw,
                        const SpillWords& spill) {
  const double input_words =
      static_cast<double>(stats.input_words) * static_cast<double>(quant.first_layer_factor());
  return dram_word_energy(quant.bits, hw) *
         (input_words + 2.0 * spill.feature_words + spill.weight_words);
}

}  // namespace

double dram_energy(const NetworkStats& stats, const QuantSpec& quant, const HardwareConfig& hw) {
  return dram_energy_with(stats, quant, hw, spill_words(stats, quant.bits, hw));
}

OnChipEnergy hw_energy(const NetworkStats& stats, int bits, const HardwareConfig& hw) {
  const double e_mac = mac_energy(bits, hw);
  const double e_local = local_access_energy(bits, hw);
  const double e_main = main_access_energy(bits, hw);
  const double sqrt_p = std::sqrt(parallelism(bits, hw));
  const double nc = static_cast<double>(stats.macs);
  const double ns = static_cast<double>(stats.params);
  const double as = static_cast<double>(stats.activations);
  OnChipEnergy e;
  e.compute = e_mac * (nc + 3.0 * as);
  e.weights = e_main * ns + e_local * nc / sqrt_p;
  e.activations = 2.0 * e_main * as + e_local * nc / sqrt_p;
  return e;
}

EnergyBreakdown total_energy(const NetworkStats& stats, const QuantSpec& quant,
                             const HardwareConfig& hw) {
  hw.validate();
  quant.validate();
  const OnChipEnergy chip = hw_energy(stats, quant.bits, hw);
  EnergyBreakdown e;
  e.compute = chip.compute;
  e.weights = chip.weights;
  e.activations = chip.activations;
  e.on_chip = e.compute + e.weights + e.activations;
  e.spill = spill_words(stats, quant.bits, hw);
  e.dram = dram_energy_with(stats, quant, hw, e.spill);
  e.total = e.on_chip + e.dram;
  return e;
}

void to_json(json& j, const EnergyBreakdown& e) {
  j = json{{"E_C", e.compute},   {"E_W", e.weights}, {"E_A", e.activations},
           {"E_HW", e.on_chip},  {"E_DRAM", e.dram},  {"E_inf", e.total},
           {"f_r", e.spill.feature_words}, {"w_r", e.spill.weight_words}};
}

}  // namespace qnn
