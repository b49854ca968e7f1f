#pragma once

#include <cstdint>
#include <functional>
#include <span>

#include "dom/dataset.hpp"
#include "dom/model.hpp"
#include "dom/tensor.hpp"

namespace dom {

/// L-infinity attack budget. steps == 1 is the RS-FGSM family, steps > 1 PGD.
struct AttackSpec {
  double epsilon = 8.0 / 255.0;
  double alpha = 2.0 / 255.0;
  int steps = 10;
  bool random_init = true;
  /// Keep x + delta inside [0,1].
  bool clip_pixels = true;
  /// Draw a fresh eta for every PGD step instead of one per attack.
  bool resample_eta = false;
};

struct Perturbation {
  Tensor delta;
};

/// Gradient of each sample's own loss w.r.t. its input, evaluated at x.
using InputGradientFn = std::function<Tensor(const Tensor& x)>;

InputGradientFn model_input_gradient(const Model& model, std::span<const int> labels);

/// eta ~ U(-eps, eps) per entry, one independent stream per (seed, sample id, draw).
Tensor draw_eta(const Shape& batch_shape, std::span<const std::uint64_t> ids, double epsilon, std::uint64_t seed,
                std::uint64_t draw = 0);

/// Clamp into the eps-ball and, if enabled, keep x + delta in [0,1] exactly.
void project(std::span<double> delta, std::span<const double> x, const AttackSpec& spec);

/// sign(0) == 0.
double sign(double v) noexcept;

/// delta = Proj(eta + alpha * sign(grad at x + eta)), eta given.
Perturbation rs_fgsm(const InputGradientFn& grad, const Tensor& x, const AttackSpec& spec, const Tensor& eta);

/// delta_0 = Proj(eta); delta_t = Proj(delta_{t-1} + alpha * sign(grad at x + delta_{t-1})).
/// With steps == 1 this is rs_fgsm bit-for-bit. When `eta_for_step` is given
/// (resample mode) each step reads delta_t = Proj(eta_t + alpha * sign(grad at x + eta_t + delta_{t-1})).
Perturbation pgd(const InputGradientFn& grad, const Tensor& x, const AttackSpec& spec, const Tensor& eta,
                 const std::function<Tensor(int step)>& eta_for_step = {});

/// Model-level entry points drawing eta from per-sample streams keyed by (seed, id).
Perturbation rs_fgsm(const Model& model, const Batch& batch, const AttackSpec& spec, std::uint64_t seed);
Perturbation pgd(const Model& model, const Batch& batch, const AttackSpec& spec, std::uint64_t seed);
/// rs_fgsm for single-step randomly initialised specs, pgd otherwise.
Perturbation perturb(const Model& model, const Batch& batch, const AttackSpec& spec, std::uint64_t seed);

Tensor add_perturbation(const Tensor& x, const Perturbation& p);

/// Fraction of samples still classified correctly under a pgd attack.
double robust_accuracy(const Model& model, const Dataset& data, const AttackSpec& spec, std::uint64_t seed,
                       std::size_t batch_size = 256);

/// Fraction of samples classified correctly without attack.
double natural_accuracy(const Model& model, const Dataset& data, std::size_t batch_size = 256);

}  // namespace dom
