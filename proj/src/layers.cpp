#include "qnn/layers.hpp"

#include <cmath>

#include "qnn/error.hpp"

namespace qnn {

std::string_view to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::Conv3x3: return "conv3x3";
    case LayerKind::Dense: return "dense";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Activation: return "activation";
    case LayerKind::MaxPool2x2: return "maxpool2x2";
  }
  return "unknown";
}

// ---------------------------------------------------------------------------
// QuantLayer

QuantLayer::QuantLayer(Shape weight_shape, std::size_t outputs, std::size_t fan_in,
                       std::size_t fan_out, const QuantSpec& quant, Rng& rng)
    : quant_(quant) {
  quant_.validate();
  weights_.name = "weight";
  weights_.value = Tensor(weight_shape);
  weights_.grad = Tensor(weight_shape);
  weights_.shadow = true;
  bias_.name = "bias";
  bias_.value = Tensor({outputs});
  bias_.grad = Tensor({outputs});

  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& w : weights_.value.values()) w = dist(rng);
  clip_shadow_weights(weights_.value.values());
}

Tensor QuantLayer::quantized_weights() const {
  Tensor q(weights_.value.shape());
  const auto src = weights_.value.values();
  for (std::size_t i = 0; i < src.size(); ++i) q[i] = quantize_weight(src[i], quant_.bits);
  return q;
}

void QuantLayer::accumulate_weight_grad(const Tensor& grad_q) {
  const auto shadow = weights_.value.values();
  for (std::size_t i = 0; i < grad_q.size(); ++i)
    weights_.grad[i] += ste_weight_backward(shadow[i], grad_q[i]);
}

void QuantLayer::accumulate_bias_grad(const Tensor& grad) {
  for (std::size_t i = 0; i < grad.size(); ++i) bias_.grad[i] += grad[i];
}

// ---------------------------------------------------------------------------
// QuantConv3x3

QuantConv3x3::QuantConv3x3(std::size_t in_channels, std::size_t out_channels,
                           const QuantSpec& quant, Rng& rng)
    : QuantLayer({3, 3, in_channels, out_channels}, out_channels, 9 * in_channels,
                 9 * out_channels, quant, rng) {}

Shape QuantConv3x3::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[2] != in_channels())
    throw ShapeError("conv3x3 expects [H,W," + std::to_string(in_channels()) + "], got " +
                     shape_string(input));
  return {input[0], input[1], out_channels()};
}

Tensor QuantConv3x3::forward(const Tensor& input, bool /*training*/) {
  qweights_ = quantized_weights();
  input_ = input;
  return ops::conv3x3_forward(input, qweights_, bias_.value);
}

Tensor QuantConv3x3::backward(const Tensor& grad_out) {
  if (input_.empty()) throw ShapeError("conv3x3: backward called before forward");
  ops::ConvGrads g = ops::conv3x3_backward(input_, qweights_, grad_out);
  accumulate_weight_grad(g.weights);
  accumulate_bias_grad(g.bias);
  return std::move(g.input);
}

// ---------------------------------------------------------------------------
// QuantDense

QuantDense::QuantDense(std::size_t in_features, std::size_t out_features, const QuantSpec& quant,
                       Rng& rng)
    : QuantLayer({in_features, out_features}, out_features, in_features, out_features, quant, rng) {
}

Shape QuantDense::output_shape(const Shape& input) const {
  if (shape_size(input) != in_features())
    throw ShapeError("dense expects " + std::to_string(in_features()) + " features, got " +
                     shape_string(input));
  return {out_features()};
}

Tensor QuantDense::forward(const Tensor& input, bool /*training*/) {
  qweights_ = quantized_weights();
  input_ = input;
  return ops::dense_forward(input, qweights_, bias_.value);
}

Tensor QuantDense::backward(const Tensor& grad_out) {
  if (input_.empty()) throw ShapeError("dense: backward called before forward");
  ops::DenseGrads g = ops::dense_backward(input_, qweights_, grad_out);
  accumulate_weight_grad(g.weights);
  accumulate_bias_grad(g.bias);
  return std::move(g.input);
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::size_t channels, double momentum, double epsilon)
    : momentum_(momentum),
      epsilon_(epsilon),
      gamma_{"gamma", Tensor({channels}, 1.0), Tensor({channels}), false},
      beta_{"beta", Tensor({channels}), Tensor({channels}), false},
      running_mean_({channels}),
      running_var_({channels}, 1.0) {}

std::vector<StateEntry> BatchNorm::state() {
  return {{"gamma", &gamma_.value},
          {"beta", &beta_.value},
          {"running_mean", &running_mean_},
          {"running_var", &running_var_}};
}

Tensor BatchNorm::forward(const Tensor& input, bool training) {
  if (!training)
    return ops::batchnorm_forward_inference(input, gamma_.value, beta_.value, running_mean_,
                                            running_var_, epsilon_);
  Tensor out = ops::batchnorm_forward_train(input, gamma_.value, beta_.value, epsilon_, cache_);
  const std::size_t c = channels();
  const double rows = static_cast<double>(input.size() / c);
  // While recalibrating, the k-th batch gets weight 1/k: a plain average.
  const double keep = recalibrating_ ? static_cast<double>(recal_batches_) / (recal_batches_ + 1.0)
                                     : momentum_;
  if (recalibrating_) ++recal_batches_;
  for (std::size_t ch = 0; ch < c; ++ch) {
    const double unbiased = cache_.variance[ch] * rows / (rows - 1.0);
    running_mean_[ch] = keep * running_mean_[ch] + (1.0 - keep) * cache_.mean[ch];
    running_var_[ch] = keep * running_var_[ch] + (1.0 - keep) * unbiased;
  }
  return out;
}

void BatchNorm::begin_recalibration() {
  recalibrating_ = true;
  recal_batches_ = 0;
}

void BatchNorm::end_recalibration() { recalibrating_ = false; }

Tensor BatchNorm::backward(const Tensor& grad_out) {
  if (cache_.normalized.empty()) throw ShapeError("batchnorm: backward called before forward");
  ops::BatchNormGrads g = ops::batchnorm_backward(cache_, gamma_.value, grad_out);
  for (std::size_t i = 0; i < g.gamma.size(); ++i) {
    gamma_.grad[i] += g.gamma[i];
    beta_.grad[i] += g.beta[i];
  }
  return std::move(g.input);
}

// ---------------------------------------------------------------------------
// QuantActivation

QuantActivation::QuantActivation(const QuantSpec& quant) : quant_(quant) { quant_.validate(); }

Tensor QuantActivation::forward(const Tensor& input, bool training) {
  if (training) input_ = input;
  Tensor out(input.shape());
  for (std::size_t i = 0; i < input.size(); ++i)
    out[i] = quantized_activation_forward(input[i], quant_);
  return out;
}

Tensor QuantActivation::backward(const Tensor& grad_out) {
  if (input_.shape() != grad_out.shape()) throw ShapeError("activation: backward shape mismatch");
  Tensor grad(grad_out.shape());
  for (std::size_t i = 0; i < grad.size(); ++i)
    grad[i] = quantized_activation_backward(input_[i], grad_out[i], quant_);
  return grad;
}

// ---------------------------------------------------------------------------
// MaxPool2x2

Shape MaxPool2x2::output_shape(const Shape& input) const {
  if (input.size() != 3 || input[0] % 2 || input[1] % 2)
    throw ShapeError("maxpool2x2 expects [H,W,C] with even H, W, got " + shape_string(input));
  return {input[0] / 2, input[1] / 2, input[2]};
}

Tensor MaxPool2x2::forward(const Tensor& input, bool /*training*/) {
  input_shape_ = input.shape();
  return ops::maxpool2x2_forward(input, argmax_);
}

Tensor MaxPool2x2::backward(const Tensor& grad_out) {
  return ops::maxpool2x2_backward(grad_out, argmax_, input_shape_);
}

// ---------------------------------------------------------------------------
// Model

Tensor Model::forward(const Tensor& input, bool training) {
  Tensor x = input;
  for (auto& layer : layers_) x = layer->forward(x, training);
  return x;
}

Tensor Model::backward(const Tensor& grad_out) {
  Tensor g = grad_out;
  for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
  return g;
}

std::vector<Parameter*> Model::parameters() {
  std::vector<Parameter*> out;
  for (auto& layer : layers_)
    for (Parameter* p : layer->parameters()) out.push_back(p);
  return out;
}

std::vector<StateEntry> Model::state() {
  std::vector<StateEntry> out;
  for (std::size_t i = 0; i < layers_.size(); ++i)
    for (StateEntry e : layers_[i]->state()) {
      e.name = std::to_string(i) + "." + std::string(to_string(layers_[i]->kind())) + "." + e.name;
      out.push_back(e);
    }
  return out;
}

void Model::zero_grad() {
  for (Parameter* p : parameters()) p->grad.fill(0.0);
}

}  // namespace qnn
