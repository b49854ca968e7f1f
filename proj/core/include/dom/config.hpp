#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "dom/attack.hpp"
#include "dom/optim.hpp"
#include "dom/schedule.hpp"
#include "dom/scheduler.hpp"
#include "dom/tensor.hpp"

namespace dom {

struct DataConfig {
  /// synthetic | idx | cifar | domd
  std::string source = "synthetic";
  std::size_t n_train = 2000;
  std::size_t n_test = 1000;
  std::size_t classes = 10;
  Shape shape{32};
  double label_noise = 0.2;
  double cluster_std = 0.15;
  std::uint64_t seed = 0;
  std::string train_images, train_labels, test_images, test_labels;
  std::string train_path, test_path;
  /// Pad-4 crop and flip on image-shaped data.
  bool standard_augment = true;
  /// Keep only the first N records of a file dataset; 0 keeps all.
  std::size_t limit_train = 0;
  std::size_t limit_test = 0;
};

struct ModelConfig {
  /// mlp | convnet
  std::string arch = "mlp";
  std::vector<std::size_t> hidden{128, 128};
  std::vector<std::size_t> channels{8, 16};
  /// -1 reuses the run seed.
  std::int64_t seed = -1;
};

struct TrainConfig {
  int epochs = 300;
  std::size_t batch_size = 128;
  SgdOptions sgd;
};

struct EvalConfig {
  AttackSpec attack{8.0 / 255.0, 2.0 / 255.0, 20, true, true, false};
  /// Robust-accuracy cadence in epochs; the final epoch is always evaluated.
  int every = 1;
  std::size_t batch_size = 256;
};

struct TelemetryConfig {
  bool ledger = true;
  /// Finite interior edges; 0 and +inf are implied.
  std::vector<double> bins{0.2, 0.5, 1.0, 2.0};
  /// Auxiliary snapshot epoch; -1 picks the default.
  int aux_epoch = -1;
  /// Epoch at which high-confidence samples are tagged and removed; 0 disables the probe.
  int probe_epoch = 0;
  int probe_horizon = 10;
  double fig4_threshold = 1.5;
  int fig4_window = 10;
  bool checkpoints = true;
};

struct RunConfig {
  Paradigm paradigm = Paradigm::natural;
  DataConfig data;
  ModelConfig model;
  TrainConfig train;
  LrSchedule lr;
  AttackSpec attack;
  EvalConfig eval;
  DomSpec dom;
  TelemetryConfig telemetry;
  std::uint64_t seed = 0;
  std::string output_dir;

  /// CIFAR-10 scale defaults for the paradigm.
  static RunConfig defaults(Paradigm paradigm);

  /// lr with total_epochs = train.epochs and peak_epoch defaulted to the midpoint.
  LrSchedule schedule() const;
  /// dom.warmup, or the first decay epoch (step) / epochs / 2 (cyclical).
  int resolved_warmup() const;
  /// telemetry.aux_epoch, or the first decay epoch (step) / warm-up epoch (cyclical).
  int resolved_aux_epoch() const;
  std::uint64_t model_seed() const { return model.seed < 0 ? seed : static_cast<std::uint64_t>(model.seed); }
};

struct Violation {
  std::string field;
  std::string message;
};

std::vector<Violation> validate(const RunConfig& config);

enum class KeyKind { integer, number, boolean, enumeration, text, list };

struct ConfigKeyInfo {
  std::string name;
  KeyKind kind;
  std::string doc;
};

const std::vector<ConfigKeyInfo>& config_keys();
bool is_scalar_key(std::string_view key);

/// Throws ConfigError on an unknown key or a malformed value.
void set_config_value(RunConfig& config, std::string_view key, std::string_view value);
std::string get_config_value(const RunConfig& config, std::string_view key);

using KeyValues = std::vector<std::pair<std::string, std::string>>;

/// `key = value` lines, `#` comments. The last `paradigm` given anywhere
/// selects the defaults; then file entries and overrides apply in order.
RunConfig parse_config(std::string_view text, const KeyValues& overrides = {});
RunConfig load_config(const std::filesystem::path& path, const KeyValues& overrides = {});
KeyValues parse_key_values(std::string_view text);
std::string dump_config(const RunConfig& config);

}  // namespace dom
