#include "qnn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "qnn/error.hpp"
#include "qnn/ops.hpp"

namespace qnn {

std::string_view to_string(OptimizerKind kind) { return kind == OptimizerKind::Sgd ? "sgd" : "adam"; }

OptimizerKind optimizer_from_string(std::string_view name) {
  if (name == "sgd") return OptimizerKind::Sgd;
  if (name == "adam") return OptimizerKind::Adam;
  throw ConfigError("unknown optimizer '" + std::string(name) + "' (expected sgd|adam)");
}

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("batch size must be at least 2 (batchnorm statistics)");
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
  if (!(lr_decay > 0.0 && lr_decay <= 1.0)) throw ConfigError("lr_decay must be in (0, 1]");
  if (momentum < 0.0 || momentum >= 1.0) throw ConfigError("momentum must be in [0, 1)");
  if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
    throw ConfigError("Adam decay constants must be in [0, 1)");
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale))
    throw ConfigError("logit_scale must be positive");
}

void Optimizer::step(const std::vector<Parameter*>& params) {
  begin_step();
  for (std::size_t i = 0; i < params.size(); ++i) {
    Parameter& p = *params[i];
    update(i, p);
    if (p.shadow) clip_shadow_weights(p.value.values());
  }
}

void SgdMomentum::update(std::size_t slot, Parameter& p) {
  if (velocity_.size() <= slot) velocity_.resize(slot + 1);
  auto& vel = velocity_[slot];
  if (vel.size() != p.value.size()) vel.assign(p.value.size(), 0.0);
  for (std::size_t i = 0; i < vel.size(); ++i) {
    vel[i] = momentum_ * vel[i] - lr_ * p.grad[i];
    p.value[i] += vel[i];
  }
}

void Adam::update(std::size_t slot, Parameter& p) {
  if (m_.size() <= slot) {
    m_.resize(slot + 1);
    v_.resize(slot + 1);
  }
  auto& m = m_[slot];
  auto& v = v_[slot];
  if (m.size() != p.value.size()) {
    m.assign(p.value.size(), 0.0);
    v.assign(p.value.size(), 0.0);
  }
  const double t = static_cast<double>(steps_);
  const double c1 = 1.0 - std::pow(beta1_, t);
  const double c2 = 1.0 - std::pow(beta2_, t);
  for (std::size_t i = 0; i < m.size(); ++i) {
    const double g = p.grad[i];
    m[i] = beta1_ * m[i] + (1.0 - beta1_) * g;
    v[i] = beta2_ * v[i] + (1.0 - beta2_) * g * g;
    p.value[i] -= lr_ * (m[i] / c1) / (std::sqrt(v[i] / c2) + epsilon_);
  }
}

std::unique_ptr<Optimizer> make_optimizer(const TrainConfig& cfg) {
  if (cfg.optimizer == OptimizerKind::Sgd)
    return std::make_unique<SgdMomentum>(cfg.learning_rate, cfg.momentum);
  return std::make_unique<Adam>(cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.adam_epsilon);
}

namespace {

std::size_t count_correct(const Tensor& logits, const std::vector<int>& labels) {
  const std::size_t k = logits.dim(1);
  std::size_t correct = 0;
  for (std::size_t b = 0; b < labels.size(); ++b) {
    const double* row = logits.data() + b * k;
    const auto pred = std::max_element(row, row + k) - row;
    if (pred == labels[b]) ++correct;
  }
  return correct;
}

}  // namespace

double evaluate_accuracy(Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.size() == 0) return 0.0;
  std::size_t correct = 0;
  for (std::size_t begin = 0; begin < data.size(); begin += batch_size) {
    const std::size_t count = std::min(batch_size, data.size() - begin);
    const Dataset batch = data.slice(begin, count);
    correct += count_correct(model.forward(batch.images, false), batch.labels);
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

void recalibrate_batchnorm(Model& model, const Dataset& data, std::size_t batch_size) {
  std::vector<BatchNorm*> norms;
  for (std::size_t i = 0; i < model.size(); ++i)
    if (auto* bn = dynamic_cast<BatchNorm*>(&model.layer(i))) norms.push_back(bn);
  if (norms.empty()) return;
  for (auto* bn : norms) bn->begin_recalibration();
  for (std::size_t begin = 0; begin + 2 <= data.size(); begin += batch_size) {
    const Dataset batch = data.slice(begin, std::min(batch_size, data.size() - begin));
    model.forward(batch.images, true);
  }
  for (auto* bn : norms) bn->end_recalibration();
}

TrainResult train(Model& model, const Dataset& train_data, const Dataset& test_data,
                  const TrainConfig& cfg, const EpochCallback& on_epoch) {
  cfg.validate();
  TrainResult result;
  if (cfg.epochs == 0) return result;
  if (train_data.size() < 2) throw ConfigError("training set needs at least 2 samples");

  std::mt19937_64 rng(cfg.seed);
  auto optimizer = make_optimizer(cfg);
  const auto params = model.parameters();
  std::vector<std::size_t> order(train_data.size());
  std::iota(order.begin(), order.end(), 0);

  double lr = cfg.learning_rate;
  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    optimizer->set_learning_rate(lr);
    std::shuffle(order.begin(), order.end(), rng);

    double loss_sum = 0.0;
    std::size_t correct = 0, seen = 0, batch_index = 0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size, ++batch_index) {
      std::size_t count = std::min(cfg.batch_size, order.size() - begin);
      // A trailing batch of one sample cannot feed batchnorm statistics.
      if (count < 2) break;
      const std::vector<std::size_t> idx(order.begin() + static_cast<long>(begin),
                                         order.begin() + static_cast<long>(begin + count));
      const Dataset batch = train_data.gather(idx);

      model.zero_grad();
      const Tensor logits = model.forward(batch.images, true);
      Tensor scaled = logits;
      for (double& z : scaled.values()) z *= cfg.logit_scale;
      const double loss = ops::softmax_xent_forward(scaled, batch.labels);
      if (!std::isfinite(loss))
        throw DivergenceError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                              std::to_string(batch_index) + " (learning rate " +
                              std::to_string(lr) + ")");
      Tensor grad = ops::softmax_xent_backward(scaled, batch.labels);
      for (double& g : grad.values()) g *= cfg.logit_scale;
      model.backward(grad);
      optimizer->step(params);

      loss_sum += loss * static_cast<double>(count);
      correct += count_correct(logits, batch.labels);
      seen += count;
    }

    if (cfg.recalibrate_batchnorm) recalibrate_batchnorm(model, train_data, cfg.batch_size);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(seen);
    rec.train_accuracy = static_cast<double>(correct) / static_cast<double>(seen);
    rec.test_accuracy = evaluate_accuracy(model, test_data);
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);
    lr *= cfg.lr_decay;
  }
  return result;
}

}  // namespace qnn
