#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dom/model.hpp"

namespace dom {

enum class CheckpointRole : std::uint8_t { best = 0, last = 1, aux = 2 };

std::string to_string(CheckpointRole role);

struct Checkpoint {
  Model model;
  int epoch = 0;
  CheckpointRole role = CheckpointRole::last;
  /// Percentages measured when the checkpoint was taken.
  double train_acc = 0.0;
  double test_acc = 0.0;
  std::optional<double> robust_acc;
};

/// "DOMC" container: magic, u32 version, role, epoch, metrics, architecture
/// descriptor, then the f64 parameter blob, all little-endian (see README).
std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace dom
