#include "qnn/ops.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "qnn/error.hpp"

namespace qnn::ops {

namespace {

void require_rank(const Tensor& t, std::size_t rank, const char* what) {
  if (t.rank() != rank)
    throw ShapeError(std::string(what) + ": expected rank " + std::to_string(rank) + ", got " +
                     shape_string(t.shape()));
}

struct ConvDims {
  std::size_t n, h, w, cin, cout;
};

ConvDims conv_dims(const Tensor& input, const Tensor& weights) {
  require_rank(input, 4, "conv3x3 input");
  require_rank(weights, 4, "conv3x3 weights");
  if (weights.dim(0) != 3 || weights.dim(1) != 3 || weights.dim(2) != input.dim(3))
    throw ShapeError("conv3x3: weights " + shape_string(weights.shape()) +
                     " incompatible with input " + shape_string(input.shape()));
  return {input.dim(0), input.dim(1), input.dim(2), input.dim(3), weights.dim(3)};
}

std::size_t flat_features(const Tensor& input) { return input.size() / input.dim(0); }

std::size_t channel_count(const Tensor& input) { return input.dim(input.rank() - 1); }

}  // namespace

Tensor conv3x3_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  const auto [n, h, w, cin, cout] = conv_dims(input, weights);
  if (bias.size() != cout) throw ShapeError("conv3x3: bias length must equal output channels");

  Tensor out({n, h, w, cout});
  const double* in = input.data();
  const double* wt = weights.data();
  double* o = out.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        double* orow = o + ((b * h + y) * w + x) * cout;
        std::copy(bias.data(), bias.data() + cout, orow);
        for (int ky = -1; ky <= 1; ++ky) {
          const long iy = static_cast<long>(y) + ky;
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (int kx = -1; kx <= 1; ++kx) {
            const long ix = static_cast<long>(x) + kx;
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            const double* irow = in + ((b * h + iy) * w + ix) * cin;
            const double* wtap = wt + static_cast<std::size_t>((ky + 1) * 3 + (kx + 1)) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double a = irow[ci];
              if (a == 0.0) continue;
              const double* wr = wtap + ci * cout;
              for (std::size_t co = 0; co < cout; ++co) orow[co] += a * wr[co];
            }
          }
        }
      }
    }
  }
  return out;
}

ConvGrads conv3x3_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  const auto [n, h, w, cin, cout] = conv_dims(input, weights);
  if (grad_out.shape() != Shape{n, h, w, cout})
    throw ShapeError("conv3x3_backward: grad_out shape " + shape_string(grad_out.shape()));

  ConvGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({cout})};
  const double* in = input.data();
  const double* wt = weights.data();
  const double* go = grad_out.data();
  double* gi = g.input.data();
  double* gw = g.weights.data();
  double* gb = g.bias.data();
  for (std::size_t b = 0; b < n; ++b) {
    for (std::size_t y = 0; y < h; ++y) {
      for (std::size_t x = 0; x < w; ++x) {
        const double* grow = go + ((b * h + y) * w + x) * cout;
        for (std::size_t co = 0; co < cout; ++co) gb[co] += grow[co];
        for (int ky = -1; ky <= 1; ++ky) {
          const long iy = static_cast<long>(y) + ky;
          if (iy < 0 || iy >= static_cast<long>(h)) continue;
          for (int kx = -1; kx <= 1; ++kx) {
            const long ix = static_cast<long>(x) + kx;
            if (ix < 0 || ix >= static_cast<long>(w)) continue;
            const std::size_t ioff = ((b * h + iy) * w + ix) * cin;
            const std::size_t woff = static_cast<std::size_t>((ky + 1) * 3 + (kx + 1)) * cin * cout;
            for (std::size_t ci = 0; ci < cin; ++ci) {
              const double a = in[ioff + ci];
              const double* wr = wt + woff + ci * cout;
              double* gwr = gw + woff + ci * cout;
              double acc = 0.0;
              for (std::size_t co = 0; co < cout; ++co) {
                acc += grow[co] * wr[co];
                gwr[co] += a * grow[co];
              }
              gi[ioff + ci] += acc;
            }
          }
        }
      }
    }
  }
  return g;
}

Tensor dense_forward(const Tensor& input, const Tensor& weights, const Tensor& bias) {
  require_rank(weights, 2, "dense weights");
  const std::size_t n = input.dim(0);
  const std::size_t k = flat_features(input);
  const std::size_t m = weights.dim(1);
  if (weights.dim(0) != k)
    throw ShapeError("dense: input features " + std::to_string(k) + " vs weights " +
                     shape_string(weights.shape()));
  if (bias.size() != m) throw ShapeError("dense: bias length must equal output units");

  Tensor out({n, m});
  for (std::size_t b = 0; b < n; ++b) {
    double* orow = out.data() + b * m;
    std::copy(bias.data(), bias.data() + m, orow);
    const double* irow = input.data() + b * k;
    for (std::size_t i = 0; i < k; ++i) {
      const double a = irow[i];
      if (a == 0.0) continue;
      const double* wr = weights.data() + i * m;
      for (std::size_t j = 0; j < m; ++j) orow[j] += a * wr[j];
    }
  }
  return out;
}

DenseGrads dense_backward(const Tensor& input, const Tensor& weights, const Tensor& grad_out) {
  require_rank(weights, 2, "dense weights");
  const std::size_t n = input.dim(0);
  const std::size_t k = flat_features(input);
  const std::size_t m = weights.dim(1);
  if (grad_out.shape() != Shape{n, m})
    throw ShapeError("dense_backward: grad_out shape " + shape_string(grad_out.shape()));

  DenseGrads g{Tensor(input.shape()), Tensor(weights.shape()), Tensor({m})};
  for (std::size_t b = 0; b < n; ++b) {
    const double* grow = grad_out.data() + b * m;
    const double* irow = input.data() + b * k;
    double* girow = g.input.data() + b * k;
    for (std::size_t j = 0; j < m; ++j) g.bias[j] += grow[j];
    for (std::size_t i = 0; i < k; ++i) {
      const double* wr = weights.data() + i * m;
      double* gwr = g.weights.data() + i * m;
      double acc = 0.0;
      for (std::size_t j = 0; j < m; ++j) {
        acc += grow[j] * wr[j];
        gwr[j] += irow[i] * grow[j];
      }
      girow[i] = acc;
    }
  }
  return g;
}

Tensor batchnorm_forward_train(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                               double epsilon, BatchNormCache& cache) {
  const std::size_t c = channel_count(input);
  if (input.dim(0) < 2) throw ShapeError("batchnorm: training needs a batch of at least 2");
  if (gamma.size() != c || beta.size() != c) throw ShapeError("batchnorm: parameter length mismatch");
  const std::size_t rows = input.size() / c;

  cache.mean.assign(c, 0.0);
  cache.variance.assign(c, 0.0);
  cache.inv_std.assign(c, 0.0);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) cache.mean[ch] += input[r * c + ch];
  for (double& m : cache.mean) m /= static_cast<double>(rows);
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double d = input[r * c + ch] - cache.mean[ch];
      cache.variance[ch] += d * d;
    }
  for (std::size_t ch = 0; ch < c; ++ch) {
    cache.variance[ch] /= static_cast<double>(rows);
    cache.inv_std[ch] = 1.0 / std::sqrt(cache.variance[ch] + epsilon);
  }

  cache.normalized = Tensor(input.shape());
  Tensor out(input.shape());
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      const double xhat = (input[i] - cache.mean[ch]) * cache.inv_std[ch];
      cache.normalized[i] = xhat;
      out[i] = gamma[ch] * xhat + beta[ch];
    }
  return out;
}

Tensor batchnorm_forward_inference(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                                   const Tensor& running_mean, const Tensor& running_var,
                                   double epsilon) {
  const std::size_t c = channel_count(input);
  if (gamma.size() != c || beta.size() != c || running_mean.size() != c || running_var.size() != c)
    throw ShapeError("batchnorm: parameter length mismatch");
  std::vector<double> scale(c), shift(c);
  for (std::size_t ch = 0; ch < c; ++ch) {
    scale[ch] = gamma[ch] / std::sqrt(running_var[ch] + epsilon);
    shift[ch] = beta[ch] - running_mean[ch] * scale[ch];
  }
  Tensor out(input.shape());
  const std::size_t rows = input.size() / c;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) out[r * c + ch] = input[r * c + ch] * scale[ch] + shift[ch];
  return out;
}

BatchNormGrads batchnorm_backward(const BatchNormCache& cache, const Tensor& gamma,
                                  const Tensor& grad_out) {
  const Tensor& xhat = cache.normalized;
  if (grad_out.shape() != xhat.shape()) throw ShapeError("batchnorm_backward: shape mismatch");
  const std::size_t c = channel_count(xhat);
  const std::size_t rows = xhat.size() / c;
  const double inv_rows = 1.0 / static_cast<double>(rows);

  BatchNormGrads g{Tensor(xhat.shape()), Tensor({c}), Tensor({c})};
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      g.beta[ch] += grad_out[i];
      g.gamma[ch] += grad_out[i] * xhat[i];
    }
  // dx = gamma * inv_std * (dy - mean(dy) - x_hat * mean(dy * x_hat))
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t ch = 0; ch < c; ++ch) {
      const std::size_t i = r * c + ch;
      g.input[i] = gamma[ch] * cache.inv_std[ch] *
                   (grad_out[i] - g.beta[ch] * inv_rows - xhat[i] * g.gamma[ch] * inv_rows);
    }
  return g;
}

Tensor maxpool2x2_forward(const Tensor& input, std::vector<std::size_t>& argmax) {
  require_rank(input, 4, "maxpool2x2 input");
  const std::size_t n = input.dim(0), h = input.dim(1), w = input.dim(2), c = input.dim(3);
  if (h % 2 || w % 2) throw ShapeError("maxpool2x2: spatial extents must be even, got " +
                                       shape_string(input.shape()));
  const std::size_t oh = h / 2, ow = w / 2;
  Tensor out({n, oh, ow, c});
  argmax.assign(out.size(), 0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t y = 0; y < oh; ++y)
      for (std::size_t x = 0; x < ow; ++x)
        for (std::size_t ch = 0; ch < c; ++ch) {
          double best = -std::numeric_limits<double>::infinity();
          std::size_t best_idx = 0;
          for (std::size_t dy = 0; dy < 2; ++dy)
            for (std::size_t dx = 0; dx < 2; ++dx) {
              const std::size_t idx = ((b * h + 2 * y + dy) * w + 2 * x + dx) * c + ch;
              if (input[idx] > best) {
                best = input[idx];
                best_idx = idx;
              }
            }
          const std::size_t o = ((b * oh + y) * ow + x) * c + ch;
          out[o] = best;
          argmax[o] = best_idx;
        }
  return out;
}

Tensor maxpool2x2_backward(const Tensor& grad_out, const std::vector<std::size_t>& argmax,
                           const Shape& input_shape) {
  if (argmax.size() != grad_out.size()) throw ShapeError("maxpool2x2_backward: argmax length mismatch");
  Tensor grad_in(input_shape);
  for (std::size_t o = 0; o < grad_out.size(); ++o) grad_in[argmax[o]] += grad_out[o];
  return grad_in;
}

namespace {

void check_logits(const Tensor& logits, const std::vector<int>& labels) {
  require_rank(logits, 2, "softmax_xent logits");
  if (labels.size() != logits.dim(0)) throw ShapeError("softmax_xent: label count != batch size");
  for (int y : labels)
    if (y < 0 || static_cast<std::size_t>(y) >= logits.dim(1))
      throw ShapeError("softmax_xent: label out of range: " + std::to_string(y));
}

}  // namespace

double softmax_xent_forward(const Tensor& logits, const std::vector<int>& labels) {
  check_logits(logits, labels);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  double total = 0.0;
  for (std::size_t b = 0; b < n; ++b) {
    const double* row = logits.data() + b * k;
    const double mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) sum += std::exp(row[j] - mx);
    total += std::log(sum) + mx - row[labels[b]];
  }
  return total / static_cast<double>(n);
}

Tensor softmax_xent_backward(const Tensor& logits, const std::vector<int>& labels) {
  check_logits(logits, labels);
  const std::size_t n = logits.dim(0), k = logits.dim(1);
  Tensor grad(logits.shape());
  const double inv_n = 1.0 / static_cast<double>(n);
  for (std::size_t b = 0; b < n; ++b) {
    const double* row = logits.data() + b * k;
    double* grow = grad.data() + b * k;
    const double mx = *std::max_element(row, row + k);
    double sum = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      grow[j] = std::exp(row[j] - mx);
      sum += grow[j];
    }
    for (std::size_t j = 0; j < k; ++j) grow[j] = grow[j] / sum * inv_n;
    grow[labels[b]] -= inv_n;
  }
  return grad;
}

}  // namespace qnn::ops
