#include "dom/attack.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dom/error.hpp"
#include "dom/loss.hpp"
#include "dom/rng.hpp"

namespace dom {

double sign(double v) noexcept { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

InputGradientFn model_input_gradient(const Model& model, std::span<const int> labels) {
  return [&model, labels](const Tensor& x) {
    const ForwardTrace trace = model.forward_trace(x);
    return model.backward(trace, softmax_xent_grad(trace.logits(), labels)).input_grad;
  };
}

Tensor draw_eta(const Shape& batch_shape, std::span<const std::uint64_t> ids, double epsilon, std::uint64_t seed,
                std::uint64_t draw) {
  Tensor eta(batch_shape);
  if (ids.size() != eta.batch()) throw ShapeError("draw_eta: one id per sample required");
  for (std::size_t s = 0; s < ids.size(); ++s) {
    Rng rng(derive_seed({seed, ids[s], draw}));
    for (auto& v : eta.sample(s)) v = rng.uniform(-epsilon, epsilon);
  }
  return eta;
}

void project(std::span<double> delta, std::span<const double> x, const AttackSpec& spec) {
  const double eps = spec.epsilon;
  for (std::size_t i = 0; i < delta.size(); ++i) {
    double d = std::clamp(delta[i], -eps, eps);
    if (spec.clip_pixels) {
      d = std::clamp(d, -x[i], 1.0 - x[i]);
      while (x[i] + d > 1.0) d = std::nextafter(d, -std::numeric_limits<double>::infinity());
      while (x[i] + d < 0.0) d = std::nextafter(d, std::numeric_limits<double>::infinity());
    }
    delta[i] = d;
  }
}

namespace {

void check_spec(const AttackSpec& spec) {
  if (!(spec.epsilon > 0.0) || !(spec.alpha > 0.0)) throw ConfigError("attack: epsilon and alpha must be positive");
  if (spec.steps < 1) throw ConfigError("attack: steps must be >= 1");
}

Tensor shifted(const Tensor& x, const Tensor& delta) {
  Tensor out = x;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += delta[i];
  return out;
}

Tensor checked_grad(const InputGradientFn& grad, const Tensor& at) {
  Tensor g = grad(at);
  if (g.shape() != at.shape()) throw ShapeError("attack: input gradient shape mismatch");
  g.require_finite("attack input gradient");
  return g;
}

}  // namespace

Perturbation rs_fgsm(const InputGradientFn& grad, const Tensor& x, const AttackSpec& spec, const Tensor& eta) {
  check_spec(spec);
  if (eta.shape() != x.shape()) throw ShapeError("rs_fgsm: eta shape mismatch");
  Tensor start = eta;
  project(start.data(), x.data(), spec);
  const Tensor g = checked_grad(grad, shifted(x, start));
  Tensor delta = start;
  for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += spec.alpha * sign(g[i]);
  project(delta.data(), x.data(), spec);
  return {std::move(delta)};
}

Perturbation pgd(const InputGradientFn& grad, const Tensor& x, const AttackSpec& spec, const Tensor& eta,
                 const std::function<Tensor(int step)>& eta_for_step) {
  check_spec(spec);
  if (eta.shape() != x.shape()) throw ShapeError("pgd: eta shape mismatch");
  if (eta_for_step) {
    Tensor delta(x.shape(), 0.0);
    for (int t = 1; t <= spec.steps; ++t) {
      const Tensor eta_t = t == 1 ? eta : eta_for_step(t);
      Tensor probe = eta_t;
      for (std::size_t i = 0; i < probe.size(); ++i) probe[i] += delta[i];
      project(probe.data(), x.data(), spec);
      const Tensor g = checked_grad(grad, shifted(x, probe));
      for (std::size_t i = 0; i < delta.size(); ++i) delta[i] = eta_t[i] + spec.alpha * sign(g[i]);
      project(delta.data(), x.data(), spec);
    }
    return {std::move(delta)};
  }
  Tensor delta = eta;
  project(delta.data(), x.data(), spec);
  for (int t = 1; t <= spec.steps; ++t) {
    const Tensor g = checked_grad(grad, shifted(x, delta));
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] += spec.alpha * sign(g[i]);
    project(delta.data(), x.data(), spec);
  }
  return {std::move(delta)};
}

namespace {

Tensor initial_eta(const Batch& batch, const AttackSpec& spec, std::uint64_t seed) {
  if (!spec.random_init) return Tensor(batch.x.shape(), 0.0);
  return draw_eta(batch.x.shape(), batch.ids, spec.epsilon, seed, 0);
}

}  // namespace

Perturbation rs_fgsm(const Model& model, const Batch& batch, const AttackSpec& spec, std::uint64_t seed) {
  if (spec.steps != 1 || !spec.random_init) throw ConfigError("rs_fgsm requires steps == 1 and random_init");
  return rs_fgsm(model_input_gradient(model, batch.y), batch.x, spec, initial_eta(batch, spec, seed));
}

Perturbation pgd(const Model& model, const Batch& batch, const AttackSpec& spec, std::uint64_t seed) {
  std::function<Tensor(int)> resample;
  if (spec.resample_eta && spec.random_init) {
    resample = [&](int step) {
      return draw_eta(batch.x.shape(), batch.ids, spec.epsilon, seed, static_cast<std::uint64_t>(step));
    };
  }
  return pgd(model_input_gradient(model, batch.y), batch.x, spec, initial_eta(batch, spec, seed), resample);
}

Perturbation perturb(const Model& model, const Batch& batch, const AttackSpec& spec, std::uint64_t seed) {
  if (spec.steps == 1 && spec.random_init) return rs_fgsm(model, batch, spec, seed);
  return pgd(model, batch, spec, seed);
}

Tensor add_perturbation(const Tensor& x, const Perturbation& p) { return shifted(x, p.delta); }

double robust_accuracy(const Model& model, const Dataset& data, const AttackSpec& spec, std::uint64_t seed,
                       std::size_t batch_size) {
  if (data.empty()) throw Error("robust_accuracy: empty dataset");
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.resize(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Batch b = data.gather(idx);
    const Perturbation p = pgd(model, b, spec, seed);
    const auto pred = predict(model.forward(add_perturbation(b.x, p)));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == b.y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

double natural_accuracy(const Model& model, const Dataset& data, std::size_t batch_size) {
  if (data.empty()) throw Error("natural_accuracy: empty dataset");
  std::size_t correct = 0;
  std::vector<std::size_t> idx;
  for (std::size_t start = 0; start < data.size(); start += batch_size) {
    idx.resize(std::min(batch_size, data.size() - start));
    std::iota(idx.begin(), idx.end(), start);
    const Batch b = data.gather(idx);
    const auto pred = predict(model.forward(b.x));
    for (std::size_t i = 0; i < pred.size(); ++i) correct += pred[i] == b.y[i] ? 1 : 0;
  }
  return static_cast<double>(correct) / static_cast<double>(data.size());
}

}  // namespace dom
