#pragma once

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <string>
#include <vector>

#include "dom/dataset.hpp"
#include "dom/loss.hpp"
#include "dom/model.hpp"
#include "dom/rng.hpp"
#include "dom/tensor.hpp"

namespace dom::test {

inline std::filesystem::path scratch(const std::string& name) {
#ifdef DOM_TEST_TMP
  std::filesystem::path root = DOM_TEST_TMP;
#else
  std::filesystem::path root = std::filesystem::temp_directory_path() / "dom_tests";
#endif
  auto p = root / name;
  std::filesystem::remove_all(p);
  std::filesystem::create_directories(p);
  return p;
}

inline Tensor random_batch(std::size_t n, const Shape& sample, Rng& rng, double lo = 0.0, double hi = 1.0) {
  Tensor t = Tensor::batch_of(n, sample);
  for (auto& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

inline std::vector<int> random_labels(std::size_t n, int classes, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.below(static_cast<std::uint64_t>(classes)));
  return y;
}

inline Batch make_batch(Tensor x, std::vector<int> y, std::uint64_t first_id = 0) {
  Batch b;
  b.ids.resize(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) b.ids[i] = first_id + i;
  b.x = std::move(x);
  b.y = std::move(y);
  return b;
}

inline double mean_loss(const Model& m, const Tensor& x, std::span<const int> y) {
  return evaluate_loss(m, x, y).mean();
}

inline double rel_error(double a, double n) {
  return std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-6});
}

/// Central difference of the mean batch loss w.r.t. parameter i.
inline double fd_param(Model& m, const Tensor& x, std::span<const int> y, std::size_t i, double h = 1e-5) {
  const double keep = m.params()[i];
  m.params()[i] = keep + h;
  const double up = mean_loss(m, x, y);
  m.params()[i] = keep - h;
  const double down = mean_loss(m, x, y);
  m.params()[i] = keep;
  return (up - down) / (2.0 * h);
}

/// Central difference of sample b's own loss w.r.t. input entry j of that sample.
inline double fd_input(const Model& m, Tensor x, std::span<const int> y, std::size_t b, std::size_t j,
                       double h = 1e-5) {
  const double keep = x.sample(b)[j];
  x.sample(b)[j] = keep + h;
  const double up = evaluate_loss(m, x, y).values[b];
  x.sample(b)[j] = keep - h;
  const double down = evaluate_loss(m, x, y).values[b];
  return (up - down) / (2.0 * h);
}

/// True when no relu input sits within `margin` of its kink and no maxpool
/// window has a runner-up within `margin` of its maximum, so a central
/// difference of width well below `margin` sees a smooth function.
/// Zero pool windows come from rectified units and stay zero under small perturbations.
inline bool smooth_at(const Model& m, const Tensor& x, double margin = 1e-3) {
  const ForwardTrace tr = m.forward_trace(x);
  const auto& layers = m.layers();
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const Tensor& in = tr.activations[l];
    if (layers[l].spec.kind == LayerKind::relu) {
      for (double v : in.values()) {
        if (std::abs(v) < margin) return false;
      }
    } else if (layers[l].spec.kind == LayerKind::maxpool2x2) {
      const auto& s = layers[l].in_shape;
      const std::size_t C = s[0], H = s[1], W = s[2];
      for (std::size_t b = 0; b < in.batch(); ++b) {
        const auto v = in.sample(b);
        for (std::size_t c = 0; c < C; ++c) {
          for (std::size_t i = 0; i + 1 < H; i += 2) {
            for (std::size_t j = 0; j + 1 < W; j += 2) {
              std::vector<double> w{v[(c * H + i) * W + j], v[(c * H + i) * W + j + 1], v[(c * H + i + 1) * W + j],
                                    v[(c * H + i + 1) * W + j + 1]};
              std::sort(w.begin(), w.end());
              if (w[3] != 0.0 && w[3] - w[2] < margin) return false;
            }
          }
        }
      }
    }
  }
  return true;
}

}  // namespace dom::test
