#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dom/config.hpp"
#include "dom/dataset.hpp"
#include "dom/model.hpp"
#include "dom/report.hpp"
#include "dom/telemetry.hpp"

namespace dom {

struct DataSplits {
  Dataset train;
  Dataset test;
};

/// Train and test sets described by `config.data`.
DataSplits load_data(const RunConfig& config);

Model build_model(const RunConfig& config, const Shape& sample_shape, std::size_t num_classes);

struct RunOptions {
  /// Write artifacts when config.output_dir is non-empty.
  bool write_outputs = true;
  /// Keep a copy of the parameters after every epoch.
  bool keep_param_history = false;
  std::function<void(const EpochRecord&)> on_epoch;
};

struct RunResult {
  RunReport report;
  ReportContext context;
  LossLedger ledger;
  /// Natural losses of the training set at the auxiliary snapshot.
  LossById aux_losses;
  std::vector<MemorizationTag> tags;
  std::optional<PersistenceCurves> persistence;
  std::optional<std::array<double, 10>> deciles;
  std::optional<GroupedAdversarialLoss> grouped_adversarial;
  std::vector<std::vector<double>> param_history;
  Model model;
};

/// Throws ConfigError listing every violation before training starts and
/// NumericalError (after writing nan_dump.txt when outputs are enabled) on a
/// non-finite loss or gradient.
RunResult run(const RunConfig& config, const RunOptions& options = {});

/// "field: message" per violation, newline separated.
std::string describe(std::span<const Violation> violations);

struct SweepRow {
  std::string value;
  std::uint64_t seed = 0;
  RunReport report;
};

/// One run per (value, seed) with `axis` set to the value. Throws ConfigError
/// unless the axis is a scalar key. Each run writes below
/// out_dir/<axis>=<value>/seed_<seed> and the table goes to out_dir/sweep.csv.
std::vector<SweepRow> sweep(const RunConfig& base, std::string_view axis, std::span<const std::string> values,
                            std::span<const std::uint64_t> seeds, const std::filesystem::path& out_dir);

void write_sweep_csv(std::string_view axis, std::span<const SweepRow> rows, const std::filesystem::path& path);

}  // namespace dom
