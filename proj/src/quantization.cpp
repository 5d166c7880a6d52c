#include "qnn/quantization.hpp"

#include <algorithm>
#include <cmath>

#include "qnn/error.hpp"

namespace qnn {

namespace {

constexpr int kMaxBits = 24;

void require_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw DomainError(std::string(what) + ": non-finite input");
}

void require_bits(int bits) {
  if (bits < 1 || bits > kMaxBits)
    throw ConfigError("bit width must be in [1, " + std::to_string(kMaxBits) +
                      "], got " + std::to_string(bits));
}

}  // namespace

std::string_view to_string(ActKind kind) {
  return kind == ActKind::QuantizedRelu ? "relu" : "hardtanh";
}

ActKind act_kind_from_string(std::string_view name) {
  if (name == "relu" || name == "quantized_relu") return ActKind::QuantizedRelu;
  if (name == "hardtanh" || name == "quantized_hardtanh") return ActKind::QuantizedHardtanh;
  throw ConfigError("unknown activation '" + std::string(name) + "' (expected relu|hardtanh)");
}

void QuantSpec::validate() const {
  require_bits(bits);
  if (input_bits < 1 || input_bits > 32)
    throw ConfigError("input bit width M must be in [1, 32], got " + std::to_string(input_bits));
  if (bits == 1 && act != ActKind::QuantizedHardtanh)
    throw ConfigError("Q = 1 requires the hardtanh (sign) activation");
}

int QuantSpec::first_layer_factor() const {
  if (input_bits <= bits) return 1;
  return (input_bits + bits - 1) / bits;
}

QuantSpec QuantSpec::for_bits(int bits, int input_bits) {
  return QuantSpec{bits, input_bits, bits == 1 ? ActKind::QuantizedHardtanh : ActKind::QuantizedRelu};
}

double round_half_away(double x) { return std::round(x); }

double quantize_weight(double w, int bits) {
  require_finite(w, "quantize_weight");
  require_bits(bits);
  if (bits == 1) return w >= 0.0 ? 1.0 : -1.0;
  const double scale = std::ldexp(1.0, bits - 1);
  const double q = round_half_away(scale * w) / scale;
  return std::clamp(q, -1.0, 1.0 - 1.0 / scale);
}

double ste_weight_backward(double w, double grad_q) {
  require_finite(w, "ste_weight_backward");
  require_finite(grad_q, "ste_weight_backward");
  return std::abs(w) <= 1.0 ? grad_q : 0.0;
}

double quantized_relu_forward(double x, int bits) {
  require_finite(x, "quantized_relu_forward");
  require_bits(bits);
  if (bits < 2) throw ConfigError("quantized ReLU needs Q >= 2; use hardtanh for Q = 1");
  const double scale = std::ldexp(1.0, bits);
  const double q = round_half_away(scale * x) / scale;
  return std::clamp(q, 0.0, 1.0 - 1.0 / scale);
}

double quantized_relu_backward(double x, double grad) {
  return (x >= 0.0 && x <= 1.0) ? grad : 0.0;
}

double quantized_hardtanh_forward(double x, int bits) {
  require_finite(x, "quantized_hardtanh_forward");
  return quantize_weight(std::clamp(x, -1.0, 1.0), bits);
}

double quantized_hardtanh_backward(double x, double grad) {
  return std::abs(x) <= 1.0 ? grad : 0.0;
}

double quantized_activation_forward(double x, const QuantSpec& spec) {
  return spec.act == ActKind::QuantizedRelu ? quantized_relu_forward(x, spec.bits)
                                            : quantized_hardtanh_forward(x, spec.bits);
}

double quantized_activation_backward(double x, double grad, const QuantSpec& spec) {
  return spec.act == ActKind::QuantizedRelu ? quantized_relu_backward(x, grad)
                                            : quantized_hardtanh_backward(x, grad);
}

void clip_shadow_weights(std::span<double> weights) {
  for (double& w : weights) w = std::clamp(w, -1.0, 1.0);
}

QuantLevelSet QuantLevelSet::signed_grid(int bits) {
  require_bits(bits);
  QuantLevelSet set{bits, {}};
  if (bits == 1) {
    set.levels = {-1.0, 1.0};
    return set;
  }
  const long half = 1L << (bits - 1);
  set.levels.reserve(static_cast<size_t>(2 * half));
  for (long k = -half; k < half; ++k) set.levels.push_back(static_cast<double>(k) / half);
  return set;
}

QuantLevelSet QuantLevelSet::unsigned_grid(int bits) {
  require_bits(bits);
  QuantLevelSet set{bits, {}};
  const long count = 1L << bits;
  set.levels.reserve(static_cast<size_t>(count));
  for (long k = 0; k < count; ++k) set.levels.push_back(static_cast<double>(k) / count);
  return set;
}

bool QuantLevelSet::contains(double value) const {
  return std::binary_search(levels.begin(), levels.end(), value);
}

int QuantLevelSet::code_of(double value) const {
  auto it = std::lower_bound(levels.begin(), levels.end(), value);
  if (it == levels.end() || *it != value) throw DomainError("value is not a grid level");
  return static_cast<int>(it - levels.begin());
}

QuantLevelSet activation_levels(const QuantSpec& spec) {
  return spec.act == ActKind::QuantizedRelu ? QuantLevelSet::unsigned_grid(spec.bits)
                                            : QuantLevelSet::signed_grid(spec.bits);
}

}  // namespace qnn
