#include "dom/schedule.hpp"

#include <cmath>
#include <string>

#include "dom/error.hpp"

namespace dom {

LrSchedule LrSchedule::step(double base, std::vector<int> decays, double factor, int total) {
  LrSchedule s;
  s.kind = Kind::step;
  s.base_lr = base;
  s.decay_epochs = std::move(decays);
  s.decay_factor = factor;
  s.total_epochs = total;
  return s;
}

LrSchedule LrSchedule::cyclical(double peak, double peak_epoch, int total) {
  LrSchedule s;
  s.kind = Kind::cyclical;
  s.peak_lr = peak;
  s.peak_epoch = peak_epoch;
  s.total_epochs = total;
  s.decay_epochs.clear();
  return s;
}

double LrSchedule::lr_at(double epoch) const {
  if (!(epoch >= 0.0) || epoch >= static_cast<double>(total_epochs)) {
    throw Error("lr_at: epoch " + std::to_string(epoch) + " outside [0," + std::to_string(total_epochs) + ")");
  }
  if (kind == Kind::step) {
    int decays = 0;
    for (int d : decay_epochs) decays += static_cast<double>(d) <= epoch ? 1 : 0;
    return base_lr * std::pow(decay_factor, decays);
  }
  if (epoch <= peak_epoch) return peak_lr * epoch / peak_epoch;
  return peak_lr * (static_cast<double>(total_epochs) - epoch) / (static_cast<double>(total_epochs) - peak_epoch);
}

std::optional<int> LrSchedule::first_decay() const {
  if (kind != Kind::step || decay_epochs.empty()) return std::nullopt;
  return decay_epochs.front();
}

}  // namespace dom
