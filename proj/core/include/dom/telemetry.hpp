#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace dom {

enum class LossChannel : std::uint8_t { natural = 0, adversarial = 1 };

std::string to_string(LossChannel channel);

using LossById = std::map<std::uint64_t, double>;

/// Append-only per-sample loss history, one entry per (channel, id, epoch).
class LossLedger {
 public:
  /// Throws dom::Error on a duplicate entry or an epoch older than the id's last one.
  void record(LossChannel channel, int epoch, std::uint64_t id, double loss);
  void record_epoch(LossChannel channel, int epoch, std::span<const std::uint64_t> ids, std::span<const double> losses);

  bool has_epoch(LossChannel channel, int epoch) const;
  std::vector<int> epochs(LossChannel channel) const;
  /// Throws dom::Error for an unrecorded epoch.
  const LossById& at(LossChannel channel, int epoch) const;
  std::size_t entry_count() const noexcept { return entries_; }

  /// CSV with header `epoch,sample_id,channel,loss`, rows ordered by channel, epoch, id.
  void write_csv(const std::filesystem::path& path) const;
  static LossLedger read_csv(const std::filesystem::path& path);

 private:
  std::array<std::map<int, LossById>, 2> data_;
  std::array<std::unordered_map<std::uint64_t, int>, 2> last_epoch_;
  std::size_t entries_ = 0;
};

/// [0, 0.2, 0.5, 1, 2, inf]
std::vector<double> default_bin_edges();

/// Fraction of losses per bin [edge_i, edge_{i+1}). Edges must start at 0,
/// increase strictly and end at +inf.
std::vector<double> loss_range_proportions(std::span<const double> losses, std::span<const double> edges);
std::vector<double> loss_range_proportions(const LossLedger& ledger, LossChannel channel, int epoch,
                                           std::span<const double> edges);

/// Ranks each channel ascending by loss (ties by id), cuts both rankings into
/// ten contiguous groups (earlier groups take the remainder) and returns
/// |N_i ∩ A_i| / |N_i| per group. Group 0 is the highest-confidence decile.
std::array<double, 10> overlap_rate_deciles(const LossById& natural, const LossById& adversarial);

enum class MemoTag : std::uint8_t { original_hc, transformed_hc, normal };
std::string to_string(MemoTag tag);

struct MemorizationTag {
  std::uint64_t id = 0;
  MemoTag tag = MemoTag::normal;
  int reference_epoch = 0;
};

/// High confidence now (loss < threshold) splits by the auxiliary snapshot's
/// loss: original if it was already below the threshold, transformed otherwise.
std::vector<MemorizationTag> tag_memorization(const LossById& current, const LossById& aux, int current_epoch,
                                              double threshold);
std::vector<MemorizationTag> tag_memorization(const LossLedger& ledger, const LossById& aux, int current_epoch,
                                              double threshold);

struct PersistenceCurves {
  std::vector<int> epochs;
  std::vector<double> original;
  std::vector<double> transformed;
};

/// Mean natural loss of each tagged group for epochs removal..removal+horizon.
PersistenceCurves persistence_curves(const LossLedger& ledger, std::span<const MemorizationTag> tags,
                                     int removal_epoch, int horizon);

/// Mean adversarial loss of samples split by natural loss < or >= threshold,
/// averaged over the given epochs.
struct GroupedAdversarialLoss {
  double low_natural_mean = 0.0;
  double high_natural_mean = 0.0;
  std::size_t low_count = 0;
  std::size_t high_count = 0;
};

GroupedAdversarialLoss adversarial_loss_by_natural_group(const LossLedger& ledger, std::span<const int> epochs,
                                                         double natural_threshold);

}  // namespace dom
