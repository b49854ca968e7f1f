#include "dom/model.hpp"

#include <algorithm>
#include <cmath>

#include "dom/error.hpp"
#include "dom/rng.hpp"

namespace dom {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::affine: return "affine";
    case LayerKind::conv3x3: return "conv3x3";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2x2: return "maxpool2x2";
    case LayerKind::flatten: return "flatten";
  }
  return "unknown";
}

namespace {

std::string layer_label(std::size_t i, LayerKind kind) {
  return "layer " + std::to_string(i) + " (" + to_string(kind) + ")";
}

void affine_forward(const LayerInfo& L, const double* w, const Tensor& in, Tensor& out) {
  const std::size_t n_in = L.in_shape[0], n_out = L.out_shape[0];
  const double* b = w + L.weight_count;
  for (std::size_t s = 0; s < in.batch(); ++s) {
    const double* x = in.sample(s).data();
    double* y = out.sample(s).data();
    for (std::size_t o = 0; o < n_out; ++o) {
      const double* row = w + o * n_in;
      double acc = b[o];
      for (std::size_t i = 0; i < n_in; ++i) acc += row[i] * x[i];
      y[o] = acc;
    }
  }
}

void affine_backward(const LayerInfo& L, const double* w, const Tensor& in, const Tensor& gout,
                     double* gw, Tensor& gin) {
  const std::size_t n_in = L.in_shape[0], n_out = L.out_shape[0];
  double* gb = gw + L.weight_count;
  for (std::size_t s = 0; s < in.batch(); ++s) {
    const double* x = in.sample(s).data();
    const double* g = gout.sample(s).data();
    double* gx = gin.sample(s).data();
    std::fill(gx, gx + n_in, 0.0);
    for (std::size_t o = 0; o < n_out; ++o) {
      const double go = g[o];
      if (go == 0.0) continue;
      const double* row = w + o * n_in;
      double* grow = gw + o * n_in;
      for (std::size_t i = 0; i < n_in; ++i) {
        grow[i] += go * x[i];
        gx[i] += row[i] * go;
      }
      gb[o] += go;
    }
  }
}

void conv_forward(const LayerInfo& L, const double* w, const Tensor& in, Tensor& out) {
  const std::size_t C = L.in_shape[0], H = L.in_shape[1], W = L.in_shape[2];
  const std::size_t K = L.out_shape[0];
  const double* b = w + L.weight_count;
  for (std::size_t s = 0; s < in.batch(); ++s) {
    const double* x = in.sample(s).data();
    double* y = out.sample(s).data();
    for (std::size_t k = 0; k < K; ++k) {
      double* yk = y + k * H * W;
      std::fill(yk, yk + H * W, b[k]);
      for (std::size_t c = 0; c < C; ++c) {
        const double* xc = x + c * H * W;
        const double* wk = w + (k * C + c) * 9;
        for (std::size_t h = 0; h < H; ++h) {
          for (std::size_t ww = 0; ww < W; ++ww) {
            double acc = 0.0;
            for (int dh = -1; dh <= 1; ++dh) {
              const auto hh = static_cast<std::ptrdiff_t>(h) + dh;
              if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(H)) continue;
              for (int dw = -1; dw <= 1; ++dw) {
                const auto wc = static_cast<std::ptrdiff_t>(ww) + dw;
                if (wc < 0 || wc >= static_cast<std::ptrdiff_t>(W)) continue;
                acc += wk[(dh + 1) * 3 + (dw + 1)] * xc[hh * W + wc];
              }
            }
            yk[h * W + ww] += acc;
          }
        }
      }
    }
  }
}

void conv_backward(const LayerInfo& L, const double* w, const Tensor& in, const Tensor& gout,
                   double* gw, Tensor& gin) {
  const std::size_t C = L.in_shape[0], H = L.in_shape[1], W = L.in_shape[2];
  const std::size_t K = L.out_shape[0];
  double* gb = gw + L.weight_count;
  for (std::size_t s = 0; s < in.batch(); ++s) {
    const double* x = in.sample(s).data();
    const double* g = gout.sample(s).data();
    auto gx_span = gin.sample(s);
    std::fill(gx_span.begin(), gx_span.end(), 0.0);
    double* gx = gx_span.data();
    for (std::size_t k = 0; k < K; ++k) {
      const double* gk = g + k * H * W;
      for (std::size_t i = 0; i < H * W; ++i) gb[k] += gk[i];
      for (std::size_t c = 0; c < C; ++c) {
        const double* xc = x + c * H * W;
        double* gxc = gx + c * H * W;
        const double* wk = w + (k * C + c) * 9;
        double* gwk = gw + (k * C + c) * 9;
        for (std::size_t h = 0; h < H; ++h) {
          for (std::size_t ww = 0; ww < W; ++ww) {
            const double go = gk[h * W + ww];
            if (go == 0.0) continue;
            for (int dh = -1; dh <= 1; ++dh) {
              const auto hh = static_cast<std::ptrdiff_t>(h) + dh;
              if (hh < 0 || hh >= static_cast<std::ptrdiff_t>(H)) continue;
              for (int dw = -1; dw <= 1; ++dw) {
                const auto wc = static_cast<std::ptrdiff_t>(ww) + dw;
                if (wc < 0 || wc >= static_cast<std::ptrdiff_t>(W)) continue;
                const auto tap = static_cast<std::size_t>((dh + 1) * 3 + (dw + 1));
                gwk[tap] += go * xc[hh * W + wc];
                gxc[hh * W + wc] += wk[tap] * go;
              }
            }
          }
        }
      }
    }
  }
}

void pool_forward(const LayerInfo& L, const Tensor& in, Tensor& out, std::vector<std::size_t>& argmax) {
  const std::size_t C = L.in_shape[0], H = L.in_shape[1], W = L.in_shape[2];
  const std::size_t Ho = L.out_shape[1], Wo = L.out_shape[2];
  const std::size_t n_in = in.sample_size();
  argmax.assign(out.size(), 0);
  for (std::size_t s = 0; s < in.batch(); ++s) {
    const double* x = in.sample(s).data();
    double* y = out.sample(s).data();
    std::size_t* am = argmax.data() + s * out.sample_size();
    for (std::size_t c = 0; c < C; ++c) {
      for (std::size_t h = 0; h < Ho; ++h) {
        for (std::size_t w = 0; w < Wo; ++w) {
          std::size_t best = c * H * W + (2 * h) * W + 2 * w;
          for (std::size_t dh = 0; dh < 2; ++dh) {
            for (std::size_t dw = 0; dw < 2; ++dw) {
              const std::size_t idx = c * H * W + (2 * h + dh) * W + (2 * w + dw);
              if (x[idx] > x[best]) best = idx;
            }
          }
          const std::size_t o = (c * Ho + h) * Wo + w;
          y[o] = x[best];
          am[o] = s * n_in + best;
        }
      }
    }
  }
}

}  // namespace

Model::Model(Shape input_shape, std::vector<LayerSpec> layers, std::uint64_t seed)
    : input_shape_(std::move(input_shape)), seed_(seed) {
  if (input_shape_.empty() || shape_product(input_shape_) == 0) {
    throw ShapeError("model input shape must be non-empty with positive dimensions");
  }
  if (layers.empty() || layers.back().kind != LayerKind::affine) {
    throw ShapeError("model must end with an affine layer producing logits");
  }
  Shape shape = input_shape_;
  std::size_t offset = 0;
  for (std::size_t i = 0; i < layers.size(); ++i) {
    LayerInfo info{layers[i], shape, {}, offset, 0, 0};
    const auto fail = [&](const std::string& why) {
      throw ShapeError(layer_label(i, layers[i].kind) + ": " + why + ", input shape " + shape_string(shape));
    };
    switch (layers[i].kind) {
      case LayerKind::affine:
        if (shape.size() != 1) fail("affine expects a flat input");
        if (layers[i].units == 0) fail("affine needs a positive width");
        info.out_shape = {layers[i].units};
        info.weight_count = layers[i].units * shape[0];
        info.bias_count = layers[i].units;
        break;
      case LayerKind::conv3x3:
        if (shape.size() != 3) fail("conv3x3 expects a (C,H,W) input");
        if (layers[i].units == 0) fail("conv3x3 needs a positive channel count");
        info.out_shape = {layers[i].units, shape[1], shape[2]};
        info.weight_count = layers[i].units * shape[0] * 9;
        info.bias_count = layers[i].units;
        break;
      case LayerKind::relu:
        info.out_shape = shape;
        break;
      case LayerKind::maxpool2x2:
        if (shape.size() != 3 || shape[1] < 2 || shape[2] < 2) fail("maxpool2x2 expects (C,H,W) with H,W >= 2");
        info.out_shape = {shape[0], shape[1] / 2, shape[2] / 2};
        break;
      case LayerKind::flatten:
        info.out_shape = {shape_product(shape)};
        break;
    }
    offset += info.param_count();
    shape = info.out_shape;
    layers_.push_back(std::move(info));
  }
  num_classes_ = shape[0];
  params_.assign(offset, 0.0);
  init_params();
}

Model Model::mlp(const Shape& input_shape, const std::vector<std::size_t>& hidden, std::size_t num_classes,
                 std::uint64_t seed) {
  std::vector<LayerSpec> layers;
  if (input_shape.size() > 1) layers.push_back({LayerKind::flatten});
  for (auto h : hidden) {
    layers.push_back({LayerKind::affine, h});
    layers.push_back({LayerKind::relu});
  }
  layers.push_back({LayerKind::affine, num_classes});
  return Model(input_shape, std::move(layers), seed);
}

Model Model::convnet(const Shape& input_chw, const std::vector<std::size_t>& channels, std::size_t num_classes,
                     std::uint64_t seed) {
  std::vector<LayerSpec> layers;
  for (auto c : channels) {
    layers.push_back({LayerKind::conv3x3, c});
    layers.push_back({LayerKind::relu});
    layers.push_back({LayerKind::maxpool2x2});
  }
  layers.push_back({LayerKind::flatten});
  layers.push_back({LayerKind::affine, num_classes});
  return Model(input_chw, std::move(layers), seed);
}

std::vector<LayerSpec> Model::layer_specs() const {
  std::vector<LayerSpec> out;
  for (const auto& l : layers_) out.push_back(l.spec);
  return out;
}

void Model::set_params(std::span<const double> values) {
  if (values.size() != params_.size()) {
    throw ShapeError("parameter count mismatch: model has " + std::to_string(params_.size()) + ", got " +
                     std::to_string(values.size()));
  }
  std::copy(values.begin(), values.end(), params_.begin());
}

void Model::init_params() {
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& L = layers_[i];
    if (L.weight_count == 0) continue;
    const std::size_t fan_in = L.weight_count / L.bias_count;
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
    Rng rng(derive_seed({seed_, i}));
    for (std::size_t k = 0; k < L.weight_count; ++k) params_[L.param_offset + k] = rng.uniform(-bound, bound);
  }
}

void Model::check_input(const Tensor& x) const {
  if (x.rank() != input_shape_.size() + 1 || x.sample_shape() != input_shape_ || x.batch() == 0) {
    throw ShapeError(layer_label(0, layers_.front().spec.kind) + " expects batch input (B," +
                     shape_string(input_shape_).substr(1) + ", got " + shape_string(x.shape()));
  }
}

ForwardTrace Model::forward_trace(const Tensor& x) const {
  check_input(x);
  ForwardTrace trace;
  trace.activations.reserve(layers_.size() + 1);
  trace.activations.push_back(x);
  trace.pool_argmax.resize(layers_.size());
  for (std::size_t i = 0; i < layers_.size(); ++i) {
    const auto& L = layers_[i];
    const Tensor& in = trace.activations.back();
    Tensor out = Tensor::batch_of(x.batch(), L.out_shape);
    const double* w = params_.data() + L.param_offset;
    switch (L.spec.kind) {
      case LayerKind::affine: affine_forward(L, w, in, out); break;
      case LayerKind::conv3x3: conv_forward(L, w, in, out); break;
      case LayerKind::relu:
        for (std::size_t k = 0; k < in.size(); ++k) out[k] = in[k] > 0.0 ? in[k] : 0.0;
        break;
      case LayerKind::maxpool2x2: pool_forward(L, in, out, trace.pool_argmax[i]); break;
      case LayerKind::flatten: out.values() = in.values(); break;
    }
    out.require_finite("forward activation", static_cast<int>(i));
    trace.activations.push_back(std::move(out));
  }
  return trace;
}

Tensor Model::forward(const Tensor& x) const { return std::move(forward_trace(x).activations.back()); }

Backprop Model::backward(const ForwardTrace& trace, const Tensor& grad_logits) const {
  if (trace.activations.size() != layers_.size() + 1 || grad_logits.shape() != trace.logits().shape()) {
    throw ShapeError("backward: gradient shape " + shape_string(grad_logits.shape()) +
                     " does not match logits " + shape_string(trace.logits().shape()));
  }
  Backprop out;
  out.param_grad.assign(params_.size(), 0.0);
  Tensor g = grad_logits;
  for (std::size_t ii = layers_.size(); ii-- > 0;) {
    const auto& L = layers_[ii];
    const Tensor& in = trace.activations[ii];
    Tensor gin(in.shape());
    const double* w = params_.data() + L.param_offset;
    double* gw = out.param_grad.data() + L.param_offset;
    switch (L.spec.kind) {
      case LayerKind::affine: affine_backward(L, w, in, g, gw, gin); break;
      case LayerKind::conv3x3: conv_backward(L, w, in, g, gw, gin); break;
      case LayerKind::relu:
        for (std::size_t k = 0; k < in.size(); ++k) gin[k] = in[k] > 0.0 ? g[k] : 0.0;
        break;
      case LayerKind::maxpool2x2: {
        const auto& am = trace.pool_argmax[ii];
        for (std::size_t k = 0; k < g.size(); ++k) gin[am[k]] += g[k];
        break;
      }
      case LayerKind::flatten: gin.values() = g.values(); break;
    }
    gin.require_finite("input gradient", static_cast<int>(ii));
    if (L.param_count() > 0) {
      for (std::size_t k = 0; k < L.param_count(); ++k) {
        if (!std::isfinite(gw[k])) {
          throw NumericalError("non-finite parameter gradient at " + layer_label(ii, L.spec.kind),
                               static_cast<int>(ii));
        }
      }
    }
    g = std::move(gin);
  }
  out.input_grad = std::move(g);
  return out;
}

std::vector<int> predict(const Tensor& logits) {
  std::vector<int> out(logits.batch());
  for (std::size_t s = 0; s < logits.batch(); ++s) {
    auto row = logits.sample(s);
    out[s] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
  }
  return out;
}

}  // namespace dom
