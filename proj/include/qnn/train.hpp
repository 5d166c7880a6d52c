#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "qnn/dataset.hpp"
#include "qnn/layers.hpp"

namespace qnn {

enum class OptimizerKind { Sgd, Adam };

std::string_view to_string(OptimizerKind kind);
OptimizerKind optimizer_from_string(std::string_view name);

struct TrainConfig {
  std::uint64_t seed = 1;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  OptimizerKind optimizer = OptimizerKind::Adam;
  double learning_rate = 1e-3;
  /// Multiplicative learning-rate decay applied after every epoch.
  double lr_decay = 1.0;
  double momentum = 0.9;  // SGD only
  double beta1 = 0.9;     // Adam
  double beta2 = 0.999;
  double adam_epsilon = 1e-8;
  /// Factor applied to the logits inside the training loss only (a softmax
  /// temperature). Predictions are argmax of the raw logits and do not change.
  double logit_scale = 1.0;
  /// Re-estimate batchnorm running statistics over the training set after
  /// every epoch (see recalibrate_batchnorm).
  bool recalibrate_batchnorm = false;

  void validate() const;
};

class Optimizer {
 public:
  virtual ~Optimizer() = default;
  /// Applies one update from the accumulated gradients, then clips shadow
  /// parameters onto [-1, 1].
  void step(const std::vector<Parameter*>& params);
  void set_learning_rate(double lr) { lr_ = lr; }
  double learning_rate() const { return lr_; }

 protected:
  explicit Optimizer(double lr) : lr_(lr) {}
  virtual void begin_step() {}
  virtual void update(std::size_t slot, Parameter& p) = 0;
  double lr_;
};

class SgdMomentum final : public Optimizer {
 public:
  SgdMomentum(double lr, double momentum) : Optimizer(lr), momentum_(momentum) {}

 private:
  void update(std::size_t slot, Parameter& p) override;
  double momentum_;
  std::vector<std::vector<double>> velocity_;
};

class Adam final : public Optimizer {
 public:
  Adam(double lr, double beta1, double beta2, double epsilon)
      : Optimizer(lr), beta1_(beta1), beta2_(beta2), epsilon_(epsilon) {}

 private:
  void begin_step() override { ++steps_; }
  void update(std::size_t slot, Parameter& p) override;
  double beta1_, beta2_, epsilon_;
  std::size_t steps_ = 0;
  std::vector<std::vector<double>> m_, v_;
};

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double test_accuracy = 0.0;
};

struct TrainResult {
  std::vector<EpochRecord> history;
  double final_test_accuracy() const { return history.empty() ? 0.0 : history.back().test_accuracy; }
};

/// Replaces the running statistics of every batchnorm layer by their plain
/// average over training-mode forwards of `data`, without touching parameters.
void recalibrate_batchnorm(Model& model, const Dataset& data, std::size_t batch_size);

/// Fraction of correctly classified samples, inference-mode forward.
double evaluate_accuracy(Model& model, const Dataset& data, std::size_t batch_size = 256);

using EpochCallback = std::function<void(const EpochRecord&)>;

/// Mini-batch training with the quantized forward pass on every step.
/// Throws DivergenceError when the loss becomes non-finite.
TrainResult train(Model& model, const Dataset& train_data, const Dataset& test_data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch = {});

}  // namespace qnn
