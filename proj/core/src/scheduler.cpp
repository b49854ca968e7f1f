#include "dom/scheduler.hpp"

#include <algorithm>
#include <cmath>

#include "dom/error.hpp"
#include "dom/loss.hpp"
#include "dom/rng.hpp"

namespace dom {

std::string to_string(DomMode mode) {
  switch (mode) {
    case DomMode::off: return "off";
    case DomMode::re: return "RE";
    case DomMode::da: return "DA";
  }
  return "off";
}

std::string to_string(Paradigm paradigm) {
  switch (paradigm) {
    case Paradigm::natural: return "natural";
    case Paradigm::at_multi: return "at_multi";
    case Paradigm::at_single: return "at_single";
  }
  return "natural";
}

std::optional<DomMode> parse_dom_mode(std::string_view s) {
  if (s == "off") return DomMode::off;
  if (s == "RE" || s == "re") return DomMode::re;
  if (s == "DA" || s == "da") return DomMode::da;
  return std::nullopt;
}

std::optional<Paradigm> parse_paradigm(std::string_view s) {
  if (s == "natural") return Paradigm::natural;
  if (s == "at_multi") return Paradigm::at_multi;
  if (s == "at_single") return Paradigm::at_single;
  return std::nullopt;
}

double percentile(std::span<const double> values, double p) {
  if (values.empty()) throw Error("percentile of an empty vector");
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  const double pos = p / 100.0 * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  if (frac == 0.0) return sorted[lo];
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

double resolve_threshold(const ThresholdRule& rule, std::span<const double> batch_nt_losses) {
  if (batch_nt_losses.empty()) throw Error("resolve_threshold: empty loss vector");
  if (rule.kind == ThresholdRule::Kind::fixed) return rule.value;
  return percentile(batch_nt_losses, rule.value);
}

BatchPlan plan_batch(DomMode mode, int epoch, int warmup, std::span<const double> nt_losses,
                     std::span<const std::uint64_t> ids, double threshold) {
  if (nt_losses.size() != ids.size()) throw ShapeError("plan_batch: one loss per id required");
  BatchPlan plan;
  plan.threshold = threshold;
  plan.active = mode != DomMode::off && epoch > warmup;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (plan.active && nt_losses[i] < threshold) {
      plan.high_confidence.push_back(i);
      plan.high_confidence_ids.push_back(ids[i]);
    } else {
      plan.retained.push_back(i);
      plan.retained_ids.push_back(ids[i]);
    }
  }
  return plan;
}

namespace {

void mark(const StepContext& ctx, Phase p) {
  if (ctx.timer) ctx.timer->mark(p);
}

StepGradient gradient_on(const Model& model, const Tensor& x, std::span<const int> y) {
  LossGradients lg = backward(model, x, y);
  return {std::move(lg.param_grad), lg.losses.mean(), y.size()};
}

const AttackSpec& require_attack(const StepContext& ctx) {
  if (!ctx.attack) throw ConfigError("adversarial paradigm " + to_string(ctx.paradigm) + " needs an attack spec");
  return *ctx.attack;
}

}  // namespace

StepGradient baseline_grad(const Model& model, const Batch& batch, const StepContext& ctx) {
  if (batch.size() == 0) return {std::vector<double>(model.param_count(), 0.0), 0.0, 0};
  if (!is_adversarial(ctx.paradigm)) return gradient_on(model, batch.x, batch.y);
  const Perturbation p = perturb(model, batch, require_attack(ctx), ctx.attack_seed);
  mark(ctx, Phase::attack);
  return gradient_on(model, add_perturbation(batch.x, p), batch.y);
}

StepGradient dom_re_grad(const Model& model, const Batch& batch, const BatchPlan& plan, const StepContext& ctx,
                         bool strict_fidelity) {
  if (is_adversarial(ctx.paradigm)) require_attack(ctx);
  if (plan.retained.empty()) return {std::vector<double>(model.param_count(), 0.0), 0.0, 0};
  if (strict_fidelity && is_adversarial(ctx.paradigm)) {
    const Perturbation p = perturb(model, batch, *ctx.attack, ctx.attack_seed);
    mark(ctx, Phase::attack);
    Batch adv = batch;
    adv.x = add_perturbation(batch.x, p);
    const Batch kept = subset(adv, plan.retained);
    return gradient_on(model, kept.x, kept.y);
  }
  return baseline_grad(model, subset(batch, plan.retained), ctx);
}

FamilyAugmentSource::FamilyAugmentSource(std::vector<AugmentKind> family, Shape sample_shape, double strength_hint,
                                         std::uint64_t seed)
    : family_(std::move(family)), shape_(std::move(sample_shape)), strength_(strength_hint), seed_(seed) {
  if (family_.empty()) throw ConfigError("augmentation family is empty");
}

std::vector<double> FamilyAugmentSource::draw(std::span<const double> x, std::uint64_t id, int iteration) {
  Rng rng(derive_seed({seed_, id, static_cast<std::uint64_t>(iteration)}));
  return apply_da(family_, x, shape_, strength_, rng);
}

std::size_t DaResult::accepted() const {
  return static_cast<std::size_t>(std::count_if(accepted_at.begin(), accepted_at.end(), [](int n) { return n > 0; }));
}

DaResult dom_da_transform(const BatchLossFn& loss, const Batch& hc, double threshold, double beta, int gamma,
                          AugmentSource& source) {
  if (gamma < 1) throw ConfigError("dom_da_transform: iterations must be >= 1, got " + std::to_string(gamma));
  DaResult out;
  out.x = hc.x;
  out.accepted_at.assign(hc.size(), 0);
  if (hc.size() == 0) return out;

  std::vector<std::size_t> pending(hc.size());
  for (std::size_t i = 0; i < pending.size(); ++i) pending[i] = i;
  const Shape sample_shape = hc.x.sample_shape();
  for (int n = 1; n <= gamma && !pending.empty(); ++n) {
    Tensor draws = Tensor::batch_of(pending.size(), sample_shape);
    std::vector<int> labels(pending.size());
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const std::size_t i = pending[k];
      auto a = source.draw(hc.x.sample(i), hc.ids[i], n);
      if (a.size() != hc.x.sample_size()) throw ShapeError("augmentation changed the sample size");
      std::copy(a.begin(), a.end(), draws.sample(k).begin());
      labels[k] = hc.y[i];
    }
    const auto losses = loss(draws, labels);
    out.evaluations += pending.size();

    std::vector<std::size_t> still;
    for (std::size_t k = 0; k < pending.size(); ++k) {
      const std::size_t i = pending[k];
      auto dst = out.x.sample(i);
      auto src = hc.x.sample(i);
      auto a = draws.sample(k);
      if (losses[k] > threshold) {
        std::copy(a.begin(), a.end(), dst.begin());
        out.accepted_at[i] = n;
      } else {
        for (std::size_t j = 0; j < dst.size(); ++j) dst[j] = std::clamp(src[j] * (1.0 - beta) + a[j] * beta, 0.0, 1.0);
        still.push_back(i);
      }
    }
    pending = std::move(still);
  }
  return out;
}

DaResult dom_da_transform(const Model& model, const Batch& hc, double threshold, double beta, int gamma,
                          AugmentSource& source) {
  const BatchLossFn loss = [&model](const Tensor& x, std::span<const int> y) {
    return evaluate_loss(model, x, y).values;
  };
  return dom_da_transform(loss, hc, threshold, beta, gamma, source);
}

Batch assemble_effective_batch(const Batch& batch, const BatchPlan& plan, const Tensor& transformed) {
  Batch eff = batch;
  if (plan.high_confidence.empty()) return eff;
  if (transformed.batch() != plan.high_confidence.size() || transformed.sample_size() != batch.x.sample_size()) {
    throw ShapeError("transformed inputs do not match the high-confidence set");
  }
  for (std::size_t k = 0; k < plan.high_confidence.size(); ++k) {
    auto src = transformed.sample(k);
    std::copy(src.begin(), src.end(), eff.x.sample(plan.high_confidence[k]).begin());
  }
  return eff;
}

StepGradient dom_da_grad(const Model& model, const Batch& batch, const BatchPlan& plan, const Tensor& transformed,
                         const StepContext& ctx) {
  if (is_adversarial(ctx.paradigm)) require_attack(ctx);
  return baseline_grad(model, assemble_effective_batch(batch, plan, transformed), ctx);
}

}  // namespace dom
