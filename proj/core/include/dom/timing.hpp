#pragma once

#include <array>
#include <chrono>

namespace dom {

enum class Phase { data = 0, dom = 1, attack = 2, backward = 3 };
inline constexpr std::size_t kPhaseCount = 4;

/// Lap timer: mark(p) charges the time since the previous mark to phase p, so
/// the phases of one timed region add up to its wall-clock duration.
class PhaseTimer {
 public:
  using Clock = std::chrono::steady_clock;

  void start() { last_ = Clock::now(); }
  void mark(Phase p) {
    const auto now = Clock::now();
    totals_[static_cast<std::size_t>(p)] += std::chrono::duration<double>(now - last_).count();
    last_ = now;
  }
  double seconds(Phase p) const { return totals_[static_cast<std::size_t>(p)]; }
  void reset() { totals_.fill(0.0); }

 private:
  Clock::time_point last_ = Clock::now();
  std::array<double, kPhaseCount> totals_{};
};

}  // namespace dom
