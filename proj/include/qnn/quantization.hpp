#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qnn {

enum class ActKind { QuantizedRelu, QuantizedHardtanh };

std::string_view to_string(ActKind kind);
ActKind act_kind_from_string(std::string_view name);

/// Bit widths governing every quantizer in a network.
///
/// `bits` is the weight/activation width Q, `input_bits` the width M of the
/// first layer's inputs. A 1-bit network must use the hardtanh activation.
struct QuantSpec {
  int bits = 8;
  int input_bits = 8;
  ActKind act = ActKind::QuantizedRelu;

  /// Throws ConfigError when the combination is not admissible.
  void validate() const;

  /// Number of shifted-and-added intQ passes the first layer needs for
  /// M-bit inputs: ceil(M/Q) when M > Q, otherwise 1.
  int first_layer_factor() const;

  /// Default activation for a bit width: hardtanh (sign) for Q = 1, ReLU otherwise.
  static QuantSpec for_bits(int bits, int input_bits = 8);

  friend bool operator==(const QuantSpec&, const QuantSpec&) = default;
};

/// Round half away from zero.
double round_half_away(double x);

/// Weight quantizer: clip(round(2^(Q-1) w) / 2^(Q-1), -1, 1 - 2^-(Q-1)), or
/// sign(w) with sign(0) = +1 when Q = 1. Throws DomainError for non-finite w.
double quantize_weight(double w, int bits);

/// Straight-through estimate of dC/dw: g_q inside the closed interval
/// [-1, 1], zero outside.
double ste_weight_backward(double w, double grad_q);

/// Unsigned activation grid: clip(round(2^Q x) / 2^Q, 0, 1 - 2^-Q). Q >= 2.
double quantized_relu_forward(double x, int bits);
double quantized_relu_backward(double x, double grad);

/// Signed activation grid, identical to quantize_weight(clip(x, -1, 1), Q).
double quantized_hardtanh_forward(double x, int bits);
double quantized_hardtanh_backward(double x, double grad);

/// Dispatch on the activation kind of `spec`.
double quantized_activation_forward(double x, const QuantSpec& spec);
double quantized_activation_backward(double x, double grad, const QuantSpec& spec);

/// Clip every shadow weight onto [-1, 1], in place.
void clip_shadow_weights(std::span<double> weights);

/// Ordered set of values a quantizer can emit.
struct QuantLevelSet {
  int bits = 0;
  std::vector<double> levels;

  static QuantLevelSet signed_grid(int bits);
  static QuantLevelSet unsigned_grid(int bits);

  bool contains(double value) const;
  /// The integer code of a level (its index in `levels`); throws DomainError if absent.
  int code_of(double value) const;
};

/// Level set matching the activation quantizer of `spec`.
QuantLevelSet activation_levels(const QuantSpec& spec);

}  // namespace qnn
