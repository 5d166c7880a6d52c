#include <gtest/gtest.h>

#include <cmath>

#include "energy_suite.hpp"
#include "qnn/energy.hpp"
#include "qnn/error.hpp"
#include "qnn/topology.hpp"

using namespace qnn;

namespace {

NetworkStats worked_stats(int q = 8) { return compute_stats(TopologySpec{}, QuantSpec::for_bits(q)); }

}  // namespace

TEST(Energy, OperatorCosts) {
  const HardwareConfig hw;
  EXPECT_DOUBLE_EQ(mac_energy(16, hw), 3.7);
  EXPECT_NEAR(mac_energy(8, hw), 3.7 * std::pow(2.0, -1.25), 1e-15);
  EXPECT_NEAR(mac_energy(8, hw), 1.5557, 1e-4);
  HardwareConfig odd = hw;
  odd.alpha = 3.3;
  EXPECT_DOUBLE_EQ(mac_energy(16, odd), 3.7);
  EXPECT_DOUBLE_EQ(main_access_energy(8, hw), 2.0 * mac_energy(8, hw));
  EXPECT_DOUBLE_EQ(local_access_energy(8, hw), mac_energy(8, hw));
  EXPECT_DOUBLE_EQ(dram_word_energy(8, hw), 185.0);
  EXPECT_DOUBLE_EQ(parallelism(16, hw), 64.0);
  EXPECT_DOUBLE_EQ(parallelism(1, hw), 1024.0);
  EXPECT_DOUBLE_EQ(parallelism(8, hw), 128.0);
}

TEST(Energy, WorkedInstanceTerms) {
  const auto hw = HardwareConfig::preset("4Mb");
  const auto e = total_energy(worked_stats(), QuantSpec{8, 8}, hw);
  EXPECT_NEAR(e.compute * 1e-6, 6.173, 5e-4);
  EXPECT_NEAR(e.weights * 1e-6, 0.604, 5e-4);
  EXPECT_NEAR(e.activations * 1e-6, 0.796, 5e-4);
  EXPECT_NEAR(e.dram, 568320.0, 1e-6);
  EXPECT_NEAR(e.total * 1e-6, 8.141, 5e-4);
  EXPECT_EQ(e.spill.feature_words, 0.0);
  EXPECT_EQ(e.spill.weight_words, 0.0);
  EXPECT_LE(energycheck::sheet_error(TopologySpec{}, QuantSpec{8, 8}, hw), 1e-9);
}

TEST(Energy, SheetAgreementAcrossPresetsAndBits) {
  for (const auto& name : HardwareConfig::preset_names())
    for (int q : {1, 2, 4, 8, 16}) {
      TopologySpec t;
      t.width = {128, 256, 512};
      t.depth = {2, 2, 2};
      EXPECT_LE(energycheck::sheet_error(t, QuantSpec::for_bits(q), HardwareConfig::preset(name)),
                1e-9)
          << name << " Q=" << q;
    }
}

TEST(Energy, SpillWords) {
  NetworkStats s;
  s.params = 300000;
  HardwareConfig hw;
  hw.weight_buffer_bits = 2 * kMegabit;
  hw.activation_buffer_bits = 4 * kMegabit;
  s.per_layer.push_back({0, LayerKind::Conv3x3, 100, 40000, 10, 10});
  const auto sp = spill_words(s, 8, hw);
  EXPECT_EQ(sp.weight_words, 37856.0);
  EXPECT_EQ(sp.feature_words, 0.0);
  s.per_layer.push_back({4, LayerKind::Conv3x3, 100, 300000, 10, 10});
  EXPECT_EQ(spill_words(s, 8, hw).feature_words, 300000.0 - 262144.0);
  EXPECT_EQ(spill_words(s, 8, HardwareConfig::preset("infinite")).weight_words, 0.0);
}

TEST(Energy, InputFetchWords) {
  const HardwareConfig hw = HardwareConfig::preset("infinite");
  const auto e1 = total_energy(worked_stats(1), QuantSpec::for_bits(1), hw);
  EXPECT_NEAR(e1.dram / dram_word_energy(1, hw), 24576.0, 1e-9);
  const auto e8 = total_energy(worked_stats(8), QuantSpec::for_bits(8), hw);
  EXPECT_NEAR(e8.dram / dram_word_energy(8, hw), 3072.0, 1e-9);
}

TEST(Energy, ZeroWorkload) {
  const NetworkStats empty;
  const auto e = hw_energy(empty, 8, HardwareConfig{});
  EXPECT_EQ(e.compute, 0.0);
  EXPECT_EQ(e.weights, 0.0);
  EXPECT_EQ(e.activations, 0.0);
  EXPECT_EQ(dram_energy(empty, QuantSpec{8, 8}, HardwareConfig{}), 0.0);
}

TEST(Energy, DoublingParallelism) {
  const auto s = worked_stats();
  HardwareConfig a, b;
  b.p16 = 2 * a.p16;
  const double em = main_access_energy(8, a);
  const double reuse_a = hw_energy(s, 8, a).weights - em * static_cast<double>(s.params);
  const double reuse_b = hw_energy(s, 8, b).weights - em * static_cast<double>(s.params);
  EXPECT_NEAR(reuse_a / reuse_b, std::sqrt(2.0), 1e-12);
}

TEST(Energy, PrecisionOrderingAtIdenticalStats) {
  const auto s = worked_stats();
  for (const auto& name : HardwareConfig::preset_names()) {
    const auto hw = HardwareConfig::preset(name);
    EXPECT_LT(total_energy(s, QuantSpec{4, 8}, hw).total, total_energy(s, QuantSpec{8, 8}, hw).total)
        << name;
  }
}

TEST(Energy, RandomisedInvariants) { EXPECT_EQ(energycheck::invariants(7, 1000), ""); }

TEST(HardwareConfig, Presets) {
  const auto one = HardwareConfig::preset("1Mb");
  EXPECT_EQ(one.weight_buffer_bits, 0.5 * kMegabit);
  EXPECT_EQ(one.activation_buffer_bits, 0.5 * kMegabit);
  EXPECT_TRUE(HardwareConfig::preset("infinite").infinite_memory);
  EXPECT_THROW(HardwareConfig::preset("8Mb"), ConfigError);
  HardwareConfig bad;
  bad.mac_energy_16 = -1;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(HardwareConfig, JsonRoundTrip) {
  auto hw = HardwareConfig::preset("1Mb");
  hw.alpha = 1.1;
  const nlohmann::json j = hw;
  EXPECT_EQ(j.get<HardwareConfig>().alpha, 1.1);
  EXPECT_EQ(j.get<HardwareConfig>().weight_buffer_bits, hw.weight_buffer_bits);
  const auto inf = nlohmann::json(HardwareConfig::preset("infinite")).get<HardwareConfig>();
  EXPECT_TRUE(inf.infinite_memory);
  const auto seeded = nlohmann::json::parse(R"({"preset":"1Mb","E_MAC16":2.0})").get<HardwareConfig>();
  EXPECT_EQ(seeded.mac_energy_16, 2.0);
  EXPECT_EQ(seeded.weight_buffer_bits, 0.5 * kMegabit);
}

TEST(EnergyJson, Keys) {
  const nlohmann::json j = total_energy(worked_stats(), QuantSpec{8, 8}, HardwareConfig{});
  for (const char* k : {"E_C", "E_W", "E_A", "E_HW", "E_DRAM", "E_inf", "f_r", "w_r"})
    EXPECT_TRUE(j.contains(k)) << k;
}
