#pragma once

// Energy-model checks shared by the unit and acceptance suites. Each returns
// an empty string on success, otherwise a description of the first failure.

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <string>

#include "oracles.hpp"
#include "qnn/energy.hpp"
#include "qnn/topology.hpp"

namespace qnn::energycheck {

inline oracle::EnergySheet sheet_for(const NetworkStats& s, const TopologySpec& t,
                                     const QuantSpec& q, const HardwareConfig& hw) {
  std::vector<double> outs;
  for (const auto& l : s.per_layer) outs.push_back(static_cast<double>(l.output_words));
  return oracle::energy_sheet(static_cast<double>(s.macs), static_cast<double>(s.params),
                              static_cast<double>(s.activations), outs,
                              static_cast<double>(t.dataset.s_in), static_cast<double>(t.dataset.c_in),
                              q.bits, q.input_bits, hw.mac_energy_16, hw.alpha, hw.p16,
                              hw.weight_buffer_bits, hw.activation_buffer_bits, hw.infinite_memory);
}

inline double rel(double a, double b) {
  const double d = std::max(std::abs(a), std::abs(b));
  return d == 0.0 ? 0.0 : std::abs(a - b) / d;
}

/// Worst relative error between total_energy and the straight-line sheet.
inline double sheet_error(const TopologySpec& t, const QuantSpec& q, const HardwareConfig& hw) {
  const auto s = compute_stats(t, q);
  const auto e = total_energy(s, q, hw);
  const auto o = sheet_for(s, t, q, hw);
  return std::max({rel(e.compute, o.e_c), rel(e.weights, o.e_w), rel(e.activations, o.e_a),
                   rel(e.dram, o.e_dram), rel(e.total, o.e_inf)});
}

inline TopologySpec random_topology(std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> depth(1, 3), side(1, 4), ch(1, 3);
  std::uniform_int_distribution<int> width_pow(3, 9);
  TopologySpec t;
  for (auto& d : t.depth) d = depth(rng);
  for (auto& w : t.width) w = std::size_t{1} << width_pow(rng);
  t.dataset = DatasetSpec::synthetic(8 * side(rng), ch(rng), 10);
  return t;
}

inline HardwareConfig random_hardware(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  HardwareConfig hw;
  hw.mac_energy_16 = 0.5 + 5.0 * u(rng);
  hw.alpha = 0.5 + 1.5 * u(rng);
  hw.local_ratio = 0.5 + 2.0 * u(rng);
  hw.main_ratio = 1.0 + 4.0 * u(rng);
  hw.dram_ratio = 20.0 + 200.0 * u(rng);
  hw.p16 = std::round(8.0 + 120.0 * u(rng));
  hw.weight_buffer_bits = std::round(kMegabit * (0.05 + 8.0 * u(rng)));
  hw.activation_buffer_bits = std::round(kMegabit * (0.05 + 8.0 * u(rng)));
  return hw;
}

/// Additivity, memory monotonicity, workload monotonicity, precision scaling
/// and the spill threshold step over `configs` random (topology, Q, hw) triples.
inline std::string invariants(std::uint64_t seed, int configs) {
  std::mt19937_64 rng(seed);
  const int bits[] = {1, 2, 4, 8, 16};
  std::uniform_int_distribution<int> pick(0, 4);
  std::uniform_real_distribution<double> grow(1.01, 4.0);
  for (int i = 0; i < configs; ++i) {
    const TopologySpec t = random_topology(rng);
    const auto q = QuantSpec::for_bits(bits[pick(rng)]);
    const HardwareConfig hw = random_hardware(rng);
    const NetworkStats s = compute_stats(t, q);
    const auto e = total_energy(s, q, hw);
    std::ostringstream where;
    where << "config " << i << " (Q=" << q.bits << "): ";

    if (e.on_chip != e.compute + e.weights + e.activations || e.total != e.on_chip + e.dram)
      return where.str() + "breakdown does not add up";
    if (std::min({e.compute, e.weights, e.activations, e.dram}) < 0.0)
      return where.str() + "negative term";

    HardwareConfig bigger = hw;
    bigger.weight_buffer_bits *= grow(rng);
    if (total_energy(s, q, bigger).total > e.total) return where.str() + "E_inf grew with M_W";
    bigger = hw;
    bigger.activation_buffer_bits *= grow(rng);
    if (total_energy(s, q, bigger).total > e.total) return where.str() + "E_inf grew with M_A";

    NetworkStats more = s;
    more.macs += 1;
    if (!(total_energy(more, q, hw).total > e.total)) return where.str() + "not increasing in N_c";
    more = s;
    more.params += 1;
    if (!(total_energy(more, q, hw).total > e.total)) return where.str() + "not increasing in N_s";
    more = s;
    more.activations += 1;
    if (!(total_energy(more, q, hw).total > e.total)) return where.str() + "not increasing in A_s";

    const double c4 = hw_energy(s, 4, hw).compute, c8 = hw_energy(s, 8, hw).compute,
                 c16 = hw_energy(s, 16, hw).compute;
    if (!(c4 < c8 && c8 < c16)) return where.str() + "E_C not ordered in Q";

    // Spill step: with weights resident, M_A at exactly 2Q x largest output
    // fits everything; one bit less leaves a word over in that layer.
    std::uint64_t largest = 0;
    for (const auto& l : s.per_layer) largest = std::max(largest, l.output_words);
    HardwareConfig edge = hw;
    edge.weight_buffer_bits = 1e18;
    edge.activation_buffer_bits = 2.0 * q.bits * static_cast<double>(largest);
    const auto fit = total_energy(s, q, edge);
    const double floor_energy = dram_word_energy(q.bits, hw) * static_cast<double>(s.input_words) *
                                static_cast<double>(q.first_layer_factor());
    if (fit.spill.feature_words != 0.0 || rel(fit.dram, floor_energy) > 1e-12)
      return where.str() + "no step to the input-fetch floor at the fit boundary";
    edge.activation_buffer_bits -= 1.0;
    const auto over = total_energy(s, q, edge);
    if (!(over.spill.feature_words >= 1.0 && over.dram > fit.dram))
      return where.str() + "no spill just below the fit boundary";
  }
  return {};
}

}  // namespace qnn::energycheck
