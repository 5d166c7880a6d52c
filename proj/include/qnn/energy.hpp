#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "qnn/quantization.hpp"
#include "qnn/topology.hpp"

namespace qnn {

/// 1 Mb = 2^20 bits.
inline constexpr double kMegabit = 1024.0 * 1024.0;

/// Parameters of the two-level-buffer accelerator. Energies in pJ, memories in bits.
struct HardwareConfig {
  std::string name = "custom";
  double mac_energy_16 = 3.7;  // E_MAC of a 16-bit MAC
  double alpha = 1.25;         // E_MAC(Q) = E_MAC16 * (Q/16)^alpha
  double local_ratio = 1.0;    // E_L / E_MAC
  double main_ratio = 2.0;     // E_M / E_MAC
  double dram_ratio = 100.0;   // E_D(16) / E_MAC16
  double p16 = 64.0;           // 16-bit MAC units; p(Q) = p16 * 16 / Q
  double weight_buffer_bits = 2 * kMegabit;      // M_W
  double activation_buffer_bits = 2 * kMegabit;  // M_A, half inputs / half outputs
  bool infinite_memory = false;                  // no spills at all

  void validate() const;

  /// "1Mb", "4Mb" (total on-chip memory split evenly between M_W and M_A) or "infinite".
  static HardwareConfig preset(std::string_view name);
  static std::vector<std::string> preset_names();
};

void to_json(nlohmann::json& j, const HardwareConfig& hw);
/// Keys mirror the field names of the energy model: E_MAC16, alpha,
/// local_ratio, main_ratio, dram_ratio, p16, M_W, M_A, infinite, name.
/// Missing keys keep their defaults; a "preset" key seeds the defaults.
void from_json(const nlohmann::json& j, HardwareConfig& hw);

double mac_energy(int bits, const HardwareConfig& hw);
double local_access_energy(int bits, const HardwareConfig& hw);
double main_access_energy(int bits, const HardwareConfig& hw);
/// Energy of one intQ DRAM word access: dram_ratio * E_MAC16 * Q/16.
double dram_word_energy(int bits, const HardwareConfig& hw);
double parallelism(int bits, const HardwareConfig& hw);

struct SpillWords {
  double feature_words = 0.0;  // f_r
  double weight_words = 0.0;   // w_r
};

/// w_r = max(0, N_s - floor(M_W/Q));
/// f_r = sum over MAC layers of max(0, out_words - floor(M_A/(2Q))).
SpillWords spill_words(const NetworkStats& stats, int bits, const HardwareConfig& hw);

/// E_D(Q) * (s_in^2 c_in * ceil(M/Q) + 2 f_r + w_r).
double dram_energy(const NetworkStats& stats, const QuantSpec& quant, const HardwareConfig& hw);

struct OnChipEnergy {
  double compute = 0.0;      // E_C
  double weights = 0.0;      // E_W
  double activations = 0.0;  // E_A
};

OnChipEnergy hw_energy(const NetworkStats& stats, int bits, const HardwareConfig& hw);

struct EnergyBreakdown {
  double compute = 0.0;      // E_C
  double weights = 0.0;      // E_W
  double activations = 0.0;  // E_A
  double on_chip = 0.0;      // E_HW = E_C + E_W + E_A
  double dram = 0.0;         // E_DRAM
  double total = 0.0;        // E_inf = E_HW + E_DRAM
  SpillWords spill;
};

EnergyBreakdown total_energy(const NetworkStats& stats, const QuantSpec& quant,
                             const HardwareConfig& hw);

void to_json(nlohmann::json& j, const EnergyBreakdown& e);

}  // namespace qnn
