#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "dom/rng.hpp"
#include "dom/tensor.hpp"

namespace dom {

enum class AugmentKind { random_crop_pad, horizontal_flip, random_erase, gaussian_noise, crop_resize, channel_jitter };

std::string to_string(AugmentKind kind);
std::optional<AugmentKind> parse_augment_kind(std::string_view name);
const std::vector<AugmentKind>& all_augment_kinds();

/// Operator plus a normalized magnitude in [0,1]:
///   random_crop_pad  pad = round(magnitude * side / 4), random offset
///   horizontal_flip  magnitude ignored
///   random_erase     erased fraction of the image area = magnitude, filled with `fill`
///   gaussian_noise   sigma = 0.25 * magnitude
///   crop_resize      crop side = (1 - magnitude / 2) * side, bilinear resize back
///   channel_jitter   per-channel gain 1 + U(-m/2, m/2) and offset U(-m/4, m/4)
/// Flat feature vectors are treated as a (1, 1, D) image. Outputs are clipped to [0,1].
struct AugmentOp {
  AugmentKind kind = AugmentKind::gaussian_noise;
  double magnitude = 0.5;
  double fill = 0.0;
};

std::vector<double> apply_op(const AugmentOp& op, std::span<const double> x, const Shape& shape, Rng& rng);

/// Samples one operator uniformly from `family` and applies it at `strength_hint`.
std::vector<double> apply_da(std::span<const AugmentKind> family, std::span<const double> x, const Shape& shape,
                             double strength_hint, Rng& rng);

/// Crop window origin in zero-padded coordinates, each in [0, 2 * pad];
/// (pad, pad) without flip is the identity.
struct CropFlipDraw {
  std::size_t offset_y = 0;
  std::size_t offset_x = 0;
  bool flip = false;
};

std::vector<double> crop_flip(std::span<const double> x, const Shape& chw, std::size_t pad, const CropFlipDraw& draw);

/// Pad-4 random crop followed by a 50% horizontal flip. Requires a (C,H,W) shape.
std::vector<double> standard_augment(std::span<const double> x, const Shape& chw, Rng& rng, std::size_t pad = 4);

}  // namespace dom
