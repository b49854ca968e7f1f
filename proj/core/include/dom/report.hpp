#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace dom {

struct EpochTiming {
  double data = 0.0;
  double dom = 0.0;
  double attack = 0.0;
  double backward = 0.0;
  /// Wall clock of the training loop of the epoch, measured independently of the phases.
  double train_total = 0.0;
  /// End-of-epoch evaluation and telemetry, outside train_total.
  double eval = 0.0;

  double phase_sum() const noexcept { return data + dom + attack + backward; }
};

struct DomEpochStats {
  std::size_t high_confidence = 0;
  std::size_t retained = 0;
  std::size_t da_evaluations = 0;
  std::size_t da_accepted = 0;
  std::size_t skipped_steps = 0;
};

/// Accuracies and errors are percentages.
struct EpochRecord {
  int epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double train_acc = 0.0;
  double test_acc = 0.0;
  double test_error = 0.0;
  std::optional<double> robust_acc;
  /// Fraction of training samples with natural loss below the DOM threshold.
  std::optional<double> train_hc_fraction;
  DomEpochStats dom;
  EpochTiming timing;
};

enum class SelectionMetric { min_test_error, max_robust_accuracy };

struct CheckpointSummary {
  int epoch = 0;
  double test_error = 0.0;
  std::optional<double> robust_acc;
  /// Error under the selection metric: test error, or 100 - robust accuracy.
  double error = 0.0;
};

struct RunReport {
  SelectionMetric selection = SelectionMetric::min_test_error;
  std::vector<EpochRecord> epochs;
  CheckpointSummary best;
  CheckpointSummary last;
  /// best.error - last.error; negative when the final epoch is worse.
  double diff = 0.0;
};

/// Error of one epoch under the selection metric.
double selection_error(const EpochRecord& e, SelectionMetric metric);

/// Best is the first epoch attaining the optimum of the selection metric;
/// epochs lacking a robust accuracy are skipped for max_robust_accuracy.
RunReport finalize_report(std::vector<EpochRecord> history, SelectionMetric metric);

struct ReportContext {
  std::string paradigm;
  std::string dom_mode;
  double threshold = 0.0;
  int warmup_epoch = 0;
  std::uint64_t seed = 0;
};

/// JSON document with keys documented in the README. `include_timing` false
/// drops every wall-clock field, leaving only deterministic numerics.
std::string report_to_json(const RunReport& report, const ReportContext& ctx, bool include_timing = true);
void write_report(const RunReport& report, const ReportContext& ctx, const std::filesystem::path& path);

}  // namespace dom
