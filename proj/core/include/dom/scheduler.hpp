#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dom/attack.hpp"
#include "dom/augment.hpp"
#include "dom/dataset.hpp"
#include "dom/model.hpp"
#include "dom/timing.hpp"

namespace dom {

enum class DomMode { off, re, da };
enum class Paradigm { natural, at_multi, at_single };

std::string to_string(DomMode mode);
std::string to_string(Paradigm paradigm);
std::optional<DomMode> parse_dom_mode(std::string_view s);
std::optional<Paradigm> parse_paradigm(std::string_view s);
inline bool is_adversarial(Paradigm p) noexcept { return p != Paradigm::natural; }

struct ThresholdRule {
  enum class Kind { fixed, adaptive };
  Kind kind = Kind::fixed;
  /// Loss threshold for fixed rules, percentile in (0,100) for adaptive ones.
  double value = 0.2;

  static ThresholdRule fixed(double t) { return {Kind::fixed, t}; }
  static ThresholdRule adaptive(double percentile) { return {Kind::adaptive, percentile}; }
};

struct DomSpec {
  DomMode mode = DomMode::off;
  ThresholdRule threshold;
  /// Last epoch without intervention; -1 lets the runner pick the default.
  int warmup_epoch = -1;
  /// Blend weight applied to a failed augmentation draw.
  double da_strength = 0.5;
  /// Maximum augmentation draws per high-confidence sample and step.
  int da_iterations = 3;
  std::vector<AugmentKind> da_ops = all_augment_kinds();
  /// Operator magnitude handed to apply_da.
  double da_magnitude = 0.5;
  /// RE in adversarial paradigms: attack every sample, then mask.
  bool strict_fidelity = false;
};

/// p-th percentile with linear interpolation between order statistics.
double percentile(std::span<const double> values, double p);

double resolve_threshold(const ThresholdRule& rule, std::span<const double> batch_nt_losses);

/// Batch positions split by the natural-loss threshold.
struct BatchPlan {
  bool active = false;
  double threshold = 0.0;
  std::vector<std::size_t> retained;
  std::vector<std::size_t> high_confidence;
  std::vector<std::uint64_t> retained_ids;
  std::vector<std::uint64_t> high_confidence_ids;
};

/// Inactive (everything retained) for epoch <= warmup or mode off; otherwise
/// high confidence means loss < threshold, strictly.
BatchPlan plan_batch(DomMode mode, int epoch, int warmup, std::span<const double> nt_losses,
                     std::span<const std::uint64_t> ids, double threshold);

struct StepContext {
  Paradigm paradigm = Paradigm::natural;
  const AttackSpec* attack = nullptr;
  std::uint64_t attack_seed = 0;
  PhaseTimer* timer = nullptr;
};

struct StepGradient {
  std::vector<double> grads;
  double mean_loss = 0.0;
  /// Samples that contributed; zero means the step must be skipped.
  std::size_t count = 0;
};

/// Mean training loss gradient for the paradigm: natural, or adversarial on x + delta.
StepGradient baseline_grad(const Model& model, const Batch& batch, const StepContext& ctx);

/// Gradient over the retained sub-batch only.
StepGradient dom_re_grad(const Model& model, const Batch& batch, const BatchPlan& plan, const StepContext& ctx,
                         bool strict_fidelity = false);

/// Source of augmentation draws for dom_da_transform.
class AugmentSource {
 public:
  virtual ~AugmentSource() = default;
  /// Draw `iteration` (1-based) for the sample with the given id.
  virtual std::vector<double> draw(std::span<const double> x, std::uint64_t id, int iteration) = 0;
};

/// apply_da over an operator family with a stream per (seed, id, iteration).
class FamilyAugmentSource : public AugmentSource {
 public:
  FamilyAugmentSource(std::vector<AugmentKind> family, Shape sample_shape, double strength_hint, std::uint64_t seed);
  std::vector<double> draw(std::span<const double> x, std::uint64_t id, int iteration) override;

 private:
  std::vector<AugmentKind> family_;
  Shape shape_;
  double strength_;
  std::uint64_t seed_;
};

using BatchLossFn = std::function<std::vector<double>(const Tensor& x, std::span<const int> y)>;

struct DaResult {
  Tensor x;
  /// Iteration at which each sample's draw was accepted, 0 when all draws failed.
  std::vector<int> accepted_at;
  std::size_t evaluations = 0;

  std::size_t accepted() const;
};

/// Per sample, up to gamma draws: a draw whose loss exceeds the threshold is
/// taken as-is; otherwise the candidate becomes x * (1 - beta) + draw * beta.
DaResult dom_da_transform(const BatchLossFn& loss, const Batch& high_confidence, double threshold, double beta,
                          int gamma, AugmentSource& source);
DaResult dom_da_transform(const Model& model, const Batch& high_confidence, double threshold, double beta, int gamma,
                          AugmentSource& source);

/// The batch with high-confidence rows replaced by `transformed`.
Batch assemble_effective_batch(const Batch& batch, const BatchPlan& plan, const Tensor& transformed);

/// Gradient over the effective batch (perturbations regenerated on it for AT).
StepGradient dom_da_grad(const Model& model, const Batch& batch, const BatchPlan& plan, const Tensor& transformed,
                         const StepContext& ctx);

}  // namespace dom
