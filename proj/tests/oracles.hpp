#pragma once

// Independent reference implementations used by the unit and acceptance
// suites. None of them call into the code path they check.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qnn/layers.hpp"
#include "qnn/tensor.hpp"
#include "qnn/topology.hpp"

namespace qnn::oracle {

// ---------------------------------------------------------------------------
// Finite differences

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
  std::size_t checked = 0;
};

/// Central differences of `loss` w.r.t. every element of `x`, compared with
/// `analytic`. Relative error per element is |a - n| / max(|a|, |n|, floor).
inline GradCheckResult check_gradient(Tensor& x, const Tensor& analytic,
                                      const std::function<double()>& loss, double step = 1e-5,
                                      double floor = 1e-6) {
  GradCheckResult r;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double saved = x[i];
    x[i] = saved + step;
    const double up = loss();
    x[i] = saved - step;
    const double down = loss();
    x[i] = saved;
    const double numeric = (up - down) / (2.0 * step);
    const double a = analytic[i];
    const double abs_err = std::abs(a - numeric);
    const double denom = std::max({std::abs(a), std::abs(numeric), floor});
    r.max_abs_error = std::max(r.max_abs_error, abs_err);
    r.max_rel_error = std::max(r.max_rel_error, abs_err / denom);
    ++r.checked;
  }
  return r;
}

inline Tensor random_tensor(const Shape& shape, std::mt19937_64& rng, double lo = -1.0,
                            double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(shape);
  for (double& v : t.values()) v = d(rng);
  return t;
}

/// Sum of projection * y: a scalar loss whose gradient w.r.t. y is `projection`.
inline double project(const Tensor& y, const Tensor& projection) {
  double s = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) s += y[i] * projection[i];
  return s;
}

// ---------------------------------------------------------------------------
// Convolution by direct loop nest over (n, y, x, co, ky, kx, ci)

inline Tensor conv3x3_loop_nest(const Tensor& in, const Tensor& w, const Tensor& b) {
  const long N = static_cast<long>(in.dim(0)), H = static_cast<long>(in.dim(1)),
             W = static_cast<long>(in.dim(2)), C = static_cast<long>(in.dim(3)),
             K = static_cast<long>(w.dim(3));
  Tensor out({in.dim(0), in.dim(1), in.dim(2), w.dim(3)});
  for (long n = 0; n < N; ++n)
    for (long y = 0; y < H; ++y)
      for (long x = 0; x < W; ++x)
        for (long k = 0; k < K; ++k) {
          double acc = b[static_cast<std::size_t>(k)];
          for (long dy = 0; dy < 3; ++dy)
            for (long dx = 0; dx < 3; ++dx)
              for (long c = 0; c < C; ++c) {
                const long iy = y + dy - 1, ix = x + dx - 1;
                if (iy < 0 || iy >= H || ix < 0 || ix >= W) continue;
                acc += in[static_cast<std::size_t>(((n * H + iy) * W + ix) * C + c)] *
                       w[static_cast<std::size_t>(((dy * 3 + dx) * C + c) * K + k)];
              }
          out[static_cast<std::size_t>(((n * H + y) * W + x) * K + k)] = acc;
        }
  return out;
}

// ---------------------------------------------------------------------------
// Network statistics by walking a built Model

struct EnumeratedStats {
  std::uint64_t macs = 0, params = 0, activations = 0;
  std::uint64_t max_words = 0;
  std::size_t conv_layers = 0, pools = 0, dense_layers = 0;
  std::vector<std::size_t> sides_after_pool;
};

/// Walks the layer list, propagating per-sample shapes with each layer's
/// output_shape and counting from the shapes and parameter tensors alone.
inline EnumeratedStats enumerate_stats(Model& model, int first_layer_factor) {
  EnumeratedStats s;
  Shape shape = model.input_shape();
  bool first_mac = true;
  for (std::size_t i = 0; i < model.size(); ++i) {
    Layer& layer = model.layer(i);
    const Shape out = layer.output_shape(shape);
    const std::uint64_t in_words = shape_size(shape), out_words = shape_size(out);
    switch (layer.kind()) {
      case LayerKind::Conv3x3:
      case LayerKind::Dense: {
        auto& q = dynamic_cast<QuantLayer&>(layer);
        const std::uint64_t weights = q.weights().value.size();
        const std::uint64_t positions = layer.kind() == LayerKind::Conv3x3 ? out[0] * out[1] : 1;
        std::uint64_t macs = positions * weights;  // one MAC per kernel weight per position
        if (first_mac) macs *= static_cast<std::uint64_t>(first_layer_factor);
        first_mac = false;
        s.macs += macs;
        s.params += weights + q.bias().value.size();
        s.max_words = std::max({s.max_words, in_words, out_words});
        if (layer.kind() == LayerKind::Conv3x3) ++s.conv_layers;
        else {
          ++s.dense_layers;
          s.activations += out_words;  // classifier outputs
        }
        break;
      }
      case LayerKind::Activation:
        s.activations += out_words;
        break;
      case LayerKind::MaxPool2x2:
        ++s.pools;
        s.sides_after_pool.push_back(out[0]);
        break;
      case LayerKind::BatchNorm:
        break;
    }
    shape = out;
  }
  return s;
}

// ---------------------------------------------------------------------------
// Energy model, straight-line evaluation of the closed-form terms

struct EnergySheet {
  double e_c, e_w, e_a, e_dram, e_inf;
};

/// `stats` supplies N_c, N_s, A_s and per-layer output words; everything else
/// is recomputed from first principles.
inline EnergySheet energy_sheet(double n_c, double n_s, double a_s,
                                const std::vector<double>& layer_out_words, double s_in,
                                double c_in, int q, int m, double e16, double alpha,
                                double p16, double mem_w_bits, double mem_a_bits, bool infinite) {
  const double emac = e16 * std::pow(q / 16.0, alpha);
  const double el = 1.0 * emac;
  const double em = 2.0 * emac;
  const double ed = 100.0 * e16 * (q / 16.0);
  const double p = p16 * 16.0 / q;
  const double rp = std::sqrt(p);
  EnergySheet s{};
  s.e_c = emac * n_c + emac * 3.0 * a_s;
  s.e_w = em * n_s + el * n_c / rp;
  s.e_a = 2.0 * em * a_s + el * n_c / rp;
  double w_r = 0.0, f_r = 0.0;
  if (!infinite) {
    const double wcap = std::floor(mem_w_bits / q);
    w_r = n_s > wcap ? n_s - wcap : 0.0;
    const double acap = std::floor(mem_a_bits / 2.0 / q);
    for (double o : layer_out_words) f_r += o > acap ? o - acap : 0.0;
  }
  const double mq = m > q ? std::ceil(static_cast<double>(m) / q) : 1.0;
  s.e_dram = ed * (s_in * s_in * c_in * mq + 2.0 * f_r + w_r);
  s.e_inf = s.e_c + s.e_w + s.e_a + s.e_dram;
  return s;
}

// ---------------------------------------------------------------------------
// Pareto dominance, all pairs

inline std::vector<std::size_t> pareto_all_pairs(const std::vector<std::pair<double, double>>& pts) {
  std::vector<std::size_t> kept;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    bool dominated = false;
    for (std::size_t j = 0; j < pts.size() && !dominated; ++j) {
      if (i == j) continue;
      const bool no_worse = pts[j].first <= pts[i].first && pts[j].second <= pts[i].second;
      const bool better = pts[j].first < pts[i].first || pts[j].second < pts[i].second;
      dominated = no_worse && better;
    }
    if (!dominated) kept.push_back(i);
  }
  return kept;
}

}  // namespace qnn::oracle
