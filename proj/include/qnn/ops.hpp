#pragma once

#include <cstddef>
#include <vector>

#include "qnn/tensor.hpp"

// Full-precision layer kernels. Quantized layers call these with already
// quantized weights/activations; gradient checks target these directly.
namespace qnn::ops {

/// Same-padded 3x3 cross-correlation.
/// input [N,H,W,Cin], weights [3,3,Cin,Cout] (HWIO), bias [Cout] -> [N,H,W,Cout].
Tensor conv3x3_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct ConvGrads {
  Tensor input;
  Tensor weights;
  Tensor bias;
};

ConvGrads conv3x3_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

/// input [N, ...] flattened to [N,K]; weights [K,Out]; bias [Out] -> [N,Out].
Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias);

struct DenseGrads {
  Tensor input;  // same shape as the forward input
  Tensor weights;
  Tensor bias;
};

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out);

// Batch normalisation over the last axis (channels); statistics are taken
// over every other axis.
struct BatchNormCache {
  Tensor normalized;  // x_hat
  std::vector<double> mean;
  std::vector<double> variance;  // biased batch variance
  std::vector<double> inv_std;
};

Tensor batchnorm_forward_train(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                               double epsilon, BatchNormCache& cache);

Tensor batchnorm_forward_inference(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                                   const Tensor& running_mean, const Tensor& running_var,
                                   double epsilon);

struct BatchNormGrads {
  Tensor input;
  Tensor gamma;
  Tensor beta;
};

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor& gamma,
                                  const Tensor& grad_out);

/// 2x2 max pooling with stride 2. `argmax` receives, per output element, the
/// flat input index it was taken from; ties go to the first window element
/// in row-major order.
Tensor maxpool2x2_forward(const Tensor& input, std::vector<std::size_t>& argmax);

Tensor maxpool2x2_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape);

/// Mean softmax cross-entropy over the batch. logits [N,K], labels in [0,K).
double softmax_xent_forward(const Tensor& logits, const std::vector<int>& labels);

/// d(mean loss)/d(logits) = (softmax - onehot) / N.
Tensor softmax_xent_backward(const Tensor& logits, const std::vector<int>& labels);

}  // namespace qnn::ops
