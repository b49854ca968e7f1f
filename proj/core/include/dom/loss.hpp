#pragma once

#include <span>
#include <vector>

#include "dom/model.hpp"
#include "dom/tensor.hpp"

namespace dom {

/// Which quantity a loss vector measures: natural, adversarial, and their
/// augmented counterparts.
enum class LossRole { nt, at, da_nt, da_at };

struct LossVector {
  std::vector<double> values;
  LossRole role = LossRole::nt;

  std::size_t size() const noexcept { return values.size(); }
  double mean() const noexcept;
};

/// Softmax cross-entropy per row, natural log, shifted by the row max.
LossVector loss_per_sample(const Tensor& logits, std::span<const int> labels, LossRole role = LossRole::nt);

/// softmax(logits) - onehot(labels), one row per sample.
Tensor softmax_xent_grad(const Tensor& logits, std::span<const int> labels);

struct LossGradients {
  LossVector losses;
  /// Gradient of the mean batch loss w.r.t. parameters.
  std::vector<double> param_grad;
  /// Gradient of each sample's own loss w.r.t. its input.
  Tensor input_grad;
};

LossGradients backward(const Model& model, const Tensor& x, std::span<const int> labels);

/// Per-sample loss of the model on x, forward only.
LossVector evaluate_loss(const Model& model, const Tensor& x, std::span<const int> labels,
                         LossRole role = LossRole::nt);

}  // namespace dom
