#include "dom/loss.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dom/error.hpp"

namespace dom {

double LossVector::mean() const noexcept {
  if (values.empty()) return 0.0;
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
}

namespace {

void check_labels(const Tensor& logits, std::span<const int> labels) {
  if (logits.rank() != 2 || logits.batch() != labels.size()) {
    throw ShapeError("logits " + shape_string(logits.shape()) + " do not match " +
                     std::to_string(labels.size()) + " labels");
  }
  const auto k = static_cast<int>(logits.shape()[1]);
  for (int y : labels) {
    if (y < 0 || y >= k) {
      throw Error("label " + std::to_string(y) + " out of range [0," + std::to_string(k) + ")");
    }
  }
}

}  // namespace

LossVector loss_per_sample(const Tensor& logits, std::span<const int> labels, LossRole role) {
  check_labels(logits, labels);
  logits.require_finite("logits");
  LossVector out{std::vector<double>(labels.size()), role};
  for (std::size_t s = 0; s < labels.size(); ++s) {
    auto z = logits.sample(s);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - m);
    out.values[s] = (m - z[static_cast<std::size_t>(labels[s])]) + std::log(sum);
  }
  return out;
}

Tensor softmax_xent_grad(const Tensor& logits, std::span<const int> labels) {
  check_labels(logits, labels);
  Tensor g(logits.shape());
  for (std::size_t s = 0; s < labels.size(); ++s) {
    auto z = logits.sample(s);
    auto gs = g.sample(s);
    const double m = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) {
      gs[k] = std::exp(z[k] - m);
      sum += gs[k];
    }
    for (auto& v : gs) v /= sum;
    gs[static_cast<std::size_t>(labels[s])] -= 1.0;
  }
  return g;
}

LossGradients backward(const Model& model, const Tensor& x, std::span<const int> labels) {
  const ForwardTrace trace = model.forward_trace(x);
  LossGradients out;
  out.losses = loss_per_sample(trace.logits(), labels);
  Backprop bp = model.backward(trace, softmax_xent_grad(trace.logits(), labels));
  const double inv_b = 1.0 / static_cast<double>(labels.size());
  for (auto& v : bp.param_grad) v *= inv_b;
  out.param_grad = std::move(bp.param_grad);
  out.input_grad = std::move(bp.input_grad);
  return out;
}

LossVector evaluate_loss(const Model& model, const Tensor& x, std::span<const int> labels, LossRole role) {
  return loss_per_sample(model.forward(x), labels, role);
}

}  // namespace dom
