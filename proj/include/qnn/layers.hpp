#pragma once

#include <cstdint>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "qnn/ops.hpp"
#include "qnn/quantization.hpp"
#include "qnn/tensor.hpp"

namespace qnn {

/// A trainable tensor and its accumulated gradient. Shadow parameters are
/// clipped to [-1, 1] after every optimizer update.
struct Parameter {
  std::string name;
  Tensor value;
  Tensor grad;
  bool shadow = false;
};

/// Named reference into a layer's persistent state (parameters and running
/// statistics), used for checkpoints.
struct StateEntry {
  std::string name;
  Tensor* tensor;
};

enum class LayerKind { Conv3x3, Dense, BatchNorm, Activation, MaxPool2x2 };

std::string_view to_string(LayerKind kind);

class Layer {
 public:
  virtual ~Layer() = default;

  virtual LayerKind kind() const = 0;
  virtual Shape output_shape(const Shape& input) const = 0;
  virtual Tensor forward(const Tensor& input, bool training) = 0;
  /// Gradient w.r.t. the input of the last forward call; accumulates
  /// parameter gradients.
  virtual Tensor backward(const Tensor& grad_out) = 0;

  virtual std::vector<Parameter*> parameters() { return {}; }
  virtual std::vector<StateEntry> state() { return {}; }
};

using Rng = std::mt19937_64;

/// Common part of the quantized conv and dense layers: real-valued shadow
/// weights, a full-precision bias, and the QuantSpec used on every forward.
class QuantLayer : public Layer {
 public:
  const QuantSpec& quant() const { return quant_; }
  const Parameter& weights() const { return weights_; }
  const Parameter& bias() const { return bias_; }
  Parameter& weights() { return weights_; }
  Parameter& bias() { return bias_; }

  /// Weights as they enter the MACs: quantize_weight(shadow, Q) elementwise.
  Tensor quantized_weights() const;
  /// Input seen by the most recent forward call (empty before the first one).
  const Tensor& last_input() const { return input_; }

  std::vector<Parameter*> parameters() override { return {&weights_, &bias_}; }
  std::vector<StateEntry> state() override {
    return {{"weight", &weights_.value}, {"bias", &bias_.value}};
  }

 protected:
  QuantLayer(Shape weight_shape, std::size_t outputs, std::size_t fan_in, std::size_t fan_out,
             const QuantSpec& quant, Rng& rng);

  /// Routes a gradient w.r.t. the quantized weights through the STE.
  void accumulate_weight_grad(const Tensor& grad_q);
  void accumulate_bias_grad(const Tensor& grad);

  QuantSpec quant_;
  Parameter weights_;
  Parameter bias_;
  Tensor input_;
  Tensor qweights_;
};

class QuantConv3x3 final : public QuantLayer {
 public:
  QuantConv3x3(std::size_t in_channels, std::size_t out_channels, const QuantSpec& quant, Rng& rng);

  LayerKind kind() const override { return LayerKind::Conv3x3; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  std::size_t in_channels() const { return weights_.value.dim(2); }
  std::size_t out_channels() const { return weights_.value.dim(3); }
};

class QuantDense final : public QuantLayer {
 public:
  QuantDense(std::size_t in_features, std::size_t out_features, const QuantSpec& quant, Rng& rng);

  LayerKind kind() const override { return LayerKind::Dense; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  std::size_t in_features() const { return weights_.value.dim(0); }
  std::size_t out_features() const { return weights_.value.dim(1); }
};

class BatchNorm final : public Layer {
 public:
  explicit BatchNorm(std::size_t channels, double momentum = 0.9, double epsilon = 1e-5);

  LayerKind kind() const override { return LayerKind::BatchNorm; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  std::vector<Parameter*> parameters() override { return {&gamma_, &beta_}; }
  std::vector<StateEntry> state() override;

  std::size_t channels() const { return gamma_.value.size(); }

  /// Until end_recalibration(), training-mode forwards replace the running
  /// statistics by the plain average over the batches seen.
  void begin_recalibration();
  void end_recalibration();

 private:
  bool recalibrating_ = false;
  std::size_t recal_batches_ = 0;
  double momentum_;
  double epsilon_;
  Parameter gamma_;
  Parameter beta_;
  Tensor running_mean_;
  Tensor running_var_;
  ops::BatchNormCache cache_;
};

/// Quantized ReLU or hardtanh with its straight-through backward.
class QuantActivation final : public Layer {
 public:
  explicit QuantActivation(const QuantSpec& quant);

  LayerKind kind() const override { return LayerKind::Activation; }
  Shape output_shape(const Shape& input) const override { return input; }
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

  const QuantSpec& quant() const { return quant_; }

 private:
  QuantSpec quant_;
  Tensor input_;
};

class MaxPool2x2 final : public Layer {
 public:
  LayerKind kind() const override { return LayerKind::MaxPool2x2; }
  Shape output_shape(const Shape& input) const override;
  Tensor forward(const Tensor& input, bool training) override;
  Tensor backward(const Tensor& grad_out) override;

 private:
  Shape input_shape_;
  std::vector<std::size_t> argmax_;
};

/// Ordered stack of layers applied to NHWC batches.
class Model {
 public:
  Model() = default;
  Model(Model&&) = default;
  Model& operator=(Model&&) = default;

  void add(std::unique_ptr<Layer> layer) { layers_.push_back(std::move(layer)); }
  template <typename L, typename... Args>
  L& emplace(Args&&... args) {
    auto layer = std::make_unique<L>(std::forward<Args>(args)...);
    L& ref = *layer;
    layers_.push_back(std::move(layer));
    return ref;
  }

  Tensor forward(const Tensor& input, bool training);
  Tensor backward(const Tensor& grad_out);

  std::vector<Parameter*> parameters();
  /// All persistent tensors, named "<index>.<kind>.<field>".
  std::vector<StateEntry> state();
  void zero_grad();

  std::size_t size() const { return layers_.size(); }
  Layer& layer(std::size_t i) { return *layers_.at(i); }
  const Layer& layer(std::size_t i) const { return *layers_.at(i); }

  /// Per-sample input shape the model was built for ([H,W,C] or [features]).
  const Shape& input_shape() const { return input_shape_; }
  void set_input_shape(Shape shape) { input_shape_ = std::move(shape); }

 private:
  std::vector<std::unique_ptr<Layer>> layers_;
  Shape input_shape_;
};

}  // namespace qnn
