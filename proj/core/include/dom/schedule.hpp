#pragma once

#include <optional>
#include <vector>

namespace dom {

/// Epoch-indexed learning rate. Epochs are zero-based and may be fractional
/// (epoch + batch / batches_per_epoch) so the cyclical kind ramps per step.
struct LrSchedule {
  enum class Kind { step, cyclical };

  Kind kind = Kind::step;
  double base_lr = 0.1;
  std::vector<int> decay_epochs{150, 225};
  double decay_factor = 0.1;
  double peak_lr = 0.2;
  double peak_epoch = 150.0;
  int total_epochs = 300;

  static LrSchedule step(double base, std::vector<int> decays, double factor, int total);
  static LrSchedule cyclical(double peak, double peak_epoch, int total);

  /// Throws dom::Error unless 0 <= epoch < total_epochs.
  double lr_at(double epoch) const;

  /// First decay epoch of a step schedule; nullopt for cyclical.
  std::optional<int> first_decay() const;
};

}  // namespace dom
