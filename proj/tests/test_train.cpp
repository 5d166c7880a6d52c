#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "qnn/checkpoint.hpp"
#include "qnn/dataset.hpp"
#include "qnn/error.hpp"
#include "qnn/topology.hpp"
#include "qnn/train.hpp"

using namespace qnn;
namespace fs = std::filesystem;

namespace {

// dense(64 -> 16) + batchnorm + activation + dense(16 -> 2) on 8x8x1 blobs.
Model tiny_dense_net(const QuantSpec& quant, std::uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.set_input_shape({8, 8, 1});
  m.emplace<QuantDense>(64, 16, quant, rng);
  m.emplace<BatchNorm>(16);
  m.emplace<QuantActivation>(quant);
  m.emplace<QuantDense>(16, 2, quant, rng);
  return m;
}

struct Blobs {
  Dataset train, test;
};

Blobs two_class_blobs() {
  const auto spec = DatasetSpec::synthetic(8, 1, 2);
  return {make_synthetic(spec, 400, 21), make_synthetic(spec, 200, 22)};
}

std::vector<std::vector<double>> snapshot(Model& m) {
  std::vector<std::vector<double>> out;
  for (const auto& e : m.state()) out.emplace_back(e.tensor->values().begin(), e.tensor->values().end());
  return out;
}

}  // namespace

TEST(Train, SeparableBlobsHighPrecision) {
  auto data = two_class_blobs();
  Model m = tiny_dense_net(QuantSpec::for_bits(16), 1);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  const auto r = train(m, data.train, data.test, cfg);
  ASSERT_EQ(r.history.size(), 20u);
  EXPECT_GE(r.final_test_accuracy(), 0.95);
}

TEST(Train, SeparableBlobsBinary) {
  auto data = two_class_blobs();
  Model m = tiny_dense_net(QuantSpec::for_bits(1), 1);
  TrainConfig cfg;
  cfg.epochs = 20;
  cfg.batch_size = 32;
  const auto r = train(m, data.train, data.test, cfg);
  EXPECT_GE(r.final_test_accuracy(), 0.8);
}

TEST(Train, SgdAlsoLearns) {
  auto data = two_class_blobs();
  Model m = tiny_dense_net(QuantSpec::for_bits(8), 2);
  TrainConfig cfg;
  cfg.optimizer = OptimizerKind::Sgd;
  cfg.learning_rate = 0.05;
  cfg.epochs = 10;
  EXPECT_GE(train(m, data.train, data.test, cfg).final_test_accuracy(), 0.95);
}

TEST(Train, ZeroEpochsLeavesModelUnchanged) {
  auto data = two_class_blobs();
  Model m = tiny_dense_net(QuantSpec::for_bits(4), 3);
  const auto before = snapshot(m);
  TrainConfig cfg;
  cfg.epochs = 0;
  EXPECT_TRUE(train(m, data.train, data.test, cfg).history.empty());
  EXPECT_EQ(snapshot(m), before);
}

TEST(Train, Deterministic) {
  auto data = two_class_blobs();
  TrainConfig cfg;
  cfg.epochs = 3;
  cfg.seed = 99;
  Model a = tiny_dense_net(QuantSpec::for_bits(2), 5);
  Model b = tiny_dense_net(QuantSpec::for_bits(2), 5);
  const auto ra = train(a, data.train, data.test, cfg);
  const auto rb = train(b, data.train, data.test, cfg);
  ASSERT_EQ(ra.history.size(), rb.history.size());
  for (std::size_t i = 0; i < ra.history.size(); ++i) {
    EXPECT_EQ(ra.history[i].train_loss, rb.history[i].train_loss);
    EXPECT_EQ(ra.history[i].test_accuracy, rb.history[i].test_accuracy);
  }
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(Train, ConvNetworkDeterministicAcrossSeeds) {
  TopologySpec t;
  t.width = {4, 4, 4};
  t.dataset = DatasetSpec::synthetic(8, 1, 3);
  const Dataset d = make_synthetic(t.dataset, 40, 3);
  TrainConfig cfg;
  cfg.epochs = 2;
  cfg.batch_size = 16;
  Model a = build_topology(t, QuantSpec::for_bits(4), 8);
  Model b = build_topology(t, QuantSpec::for_bits(4), 8);
  train(a, d, d, cfg);
  train(b, d, d, cfg);
  EXPECT_EQ(snapshot(a), snapshot(b));
  cfg.seed = 2;
  Model c = build_topology(t, QuantSpec::for_bits(4), 8);
  train(c, d, d, cfg);
  EXPECT_NE(snapshot(a), snapshot(c));
}

TEST(Train, DivergenceGuard) {
  auto data = two_class_blobs();
  Model m = tiny_dense_net(QuantSpec::for_bits(8), 1);
  auto& head = dynamic_cast<QuantDense&>(m.layer(3));
  head.bias().value[0] = 1e308;
  head.bias().value[1] = -1e308;
  TrainConfig cfg;
  cfg.epochs = 1;
  try {
    train(m, data.train, data.test, cfg);
    FAIL() << "expected DivergenceError";
  } catch (const DivergenceError& e) {
    EXPECT_NE(std::string(e.what()).find("epoch 1"), std::string::npos) << e.what();
  }
}

TEST(Train, ConfigValidation) {
  TrainConfig cfg;
  cfg.batch_size = 1;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.learning_rate = 0.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg = {};
  cfg.logit_scale = -1.0;
  EXPECT_THROW(cfg.validate(), ConfigError);
  EXPECT_THROW(optimizer_from_string("rmsprop"), ConfigError);
}

TEST(Train, LogitScaleKeepsPredictions) {
  auto data = two_class_blobs();
  Model m = tiny_dense_net(QuantSpec::for_bits(1), 4);
  TrainConfig cfg;
  cfg.epochs = 5;
  cfg.logit_scale = 0.25;
  const auto r = train(m, data.train, data.test, cfg);
  EXPECT_EQ(r.final_test_accuracy(), evaluate_accuracy(m, data.test));
}

TEST(Checkpoint, RoundTrip) {
  const fs::path dir = fs::path(QNN_TEST_TMP) / "ckpt";
  fs::create_directories(dir);
  TopologySpec t;
  t.depth = {1, 1, 2};
  t.width = {4, 6, 8};
  t.dataset = DatasetSpec::synthetic(8, 2, 3);
  const auto quant = QuantSpec::for_bits(2);
  Model m = build_topology(t, quant, 5);
  const Dataset d = make_synthetic(t.dataset, 20, 6);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.batch_size = 8;
  train(m, d, d, cfg);

  const fs::path json_path = save_checkpoint(m, t, quant, dir / "model");
  auto loaded = load_checkpoint(json_path);
  EXPECT_EQ(loaded.topology, t);
  EXPECT_EQ(loaded.quant, quant);
  EXPECT_EQ(snapshot(loaded.model), snapshot(m));
  EXPECT_EQ(loaded.model.forward(d.images, false), m.forward(d.images, false));
}

TEST(Checkpoint, TruncatedBlobRejected) {
  const fs::path dir = fs::path(QNN_TEST_TMP) / "ckpt_bad";
  fs::create_directories(dir);
  TopologySpec t;
  t.width = {4, 4, 4};
  t.dataset = DatasetSpec::synthetic(8, 1, 2);
  Model m = build_topology(t, QuantSpec::for_bits(4), 1);
  const fs::path json_path = save_checkpoint(m, t, QuantSpec::for_bits(4), dir / "model");
  fs::resize_file(dir / "model.bin", fs::file_size(dir / "model.bin") - 8);
  EXPECT_THROW(load_checkpoint(json_path), DataError);
}
