#include "dom/augment.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include "dom/error.hpp"

namespace dom {

namespace {

constexpr std::array<std::pair<AugmentKind, std::string_view>, 6> kNames{{
    {AugmentKind::random_crop_pad, "random_crop_pad"},
    {AugmentKind::horizontal_flip, "horizontal_flip"},
    {AugmentKind::random_erase, "random_erase"},
    {AugmentKind::gaussian_noise, "gaussian_noise"},
    {AugmentKind::crop_resize, "crop_resize"},
    {AugmentKind::channel_jitter, "channel_jitter"},
}};

struct Geometry {
  std::size_t c, h, w;
};

Geometry geometry(const Shape& shape, std::size_t size) {
  if (shape.size() == 3) return {shape[0], shape[1], shape[2]};
  if (shape.size() == 1) return {1, 1, shape[0]};
  if (shape_product(shape) != size) throw ShapeError("augment: unsupported shape " + shape_string(shape));
  return {1, 1, size};
}

void clip_unit(std::vector<double>& v) {
  for (auto& x : v) x = std::clamp(x, 0.0, 1.0);
}

std::vector<double> shift_crop(std::span<const double> x, Geometry g, std::size_t pad_h, std::size_t pad_w,
                               std::size_t oy, std::size_t ox) {
  std::vector<double> out(x.size(), 0.0);
  for (std::size_t c = 0; c < g.c; ++c) {
    for (std::size_t h = 0; h < g.h; ++h) {
      const auto sh = static_cast<std::ptrdiff_t>(h + oy) - static_cast<std::ptrdiff_t>(pad_h);
      if (sh < 0 || sh >= static_cast<std::ptrdiff_t>(g.h)) continue;
      for (std::size_t w = 0; w < g.w; ++w) {
        const auto sw = static_cast<std::ptrdiff_t>(w + ox) - static_cast<std::ptrdiff_t>(pad_w);
        if (sw < 0 || sw >= static_cast<std::ptrdiff_t>(g.w)) continue;
        out[(c * g.h + h) * g.w + w] = x[(c * g.h + static_cast<std::size_t>(sh)) * g.w + static_cast<std::size_t>(sw)];
      }
    }
  }
  return out;
}

void flip_w(std::vector<double>& v, Geometry g) {
  for (std::size_t row = 0; row < g.c * g.h; ++row) {
    std::reverse(v.begin() + static_cast<std::ptrdiff_t>(row * g.w),
                 v.begin() + static_cast<std::ptrdiff_t>((row + 1) * g.w));
  }
}

double bilinear(std::span<const double> plane, Geometry g, double y, double x) {
  const double yc = std::clamp(y, 0.0, static_cast<double>(g.h - 1));
  const double xc = std::clamp(x, 0.0, static_cast<double>(g.w - 1));
  const auto y0 = static_cast<std::size_t>(std::floor(yc));
  const auto x0 = static_cast<std::size_t>(std::floor(xc));
  const std::size_t y1 = std::min(y0 + 1, g.h - 1), x1 = std::min(x0 + 1, g.w - 1);
  const double fy = yc - static_cast<double>(y0), fx = xc - static_cast<double>(x0);
  const double top = plane[y0 * g.w + x0] * (1 - fx) + plane[y0 * g.w + x1] * fx;
  const double bot = plane[y1 * g.w + x0] * (1 - fx) + plane[y1 * g.w + x1] * fx;
  return top * (1 - fy) + bot * fy;
}

}  // namespace

std::string to_string(AugmentKind kind) {
  for (const auto& [k, name] : kNames) {
    if (k == kind) return std::string(name);
  }
  return "unknown";
}

std::optional<AugmentKind> parse_augment_kind(std::string_view name) {
  for (const auto& [k, n] : kNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

const std::vector<AugmentKind>& all_augment_kinds() {
  static const std::vector<AugmentKind> kinds = [] {
    std::vector<AugmentKind> v;
    for (const auto& [k, n] : kNames) v.push_back(k);
    return v;
  }();
  return kinds;
}

std::vector<double> apply_op(const AugmentOp& op, std::span<const double> x, const Shape& shape, Rng& rng) {
  const Geometry g = geometry(shape, x.size());
  const double m = std::clamp(op.magnitude, 0.0, 1.0);
  std::vector<double> out(x.begin(), x.end());
  switch (op.kind) {
    case AugmentKind::random_crop_pad: {
      const auto pad_h = static_cast<std::size_t>(std::lround(m * static_cast<double>(g.h) / 4.0));
      const auto pad_w = static_cast<std::size_t>(std::lround(m * static_cast<double>(g.w) / 4.0));
      const std::size_t oy = rng.below(2 * pad_h + 1), ox = rng.below(2 * pad_w + 1);
      out = shift_crop(x, g, pad_h, pad_w, oy, ox);
      break;
    }
    case AugmentKind::horizontal_flip:
      flip_w(out, g);
      break;
    case AugmentKind::random_erase: {
      std::size_t eh, ew;
      if (g.h == 1) {
        eh = 1;
        ew = static_cast<std::size_t>(std::lround(m * static_cast<double>(g.w)));
      } else {
        const double side = std::sqrt(m);
        eh = static_cast<std::size_t>(std::lround(side * static_cast<double>(g.h)));
        ew = static_cast<std::size_t>(std::lround(side * static_cast<double>(g.w)));
      }
      if (eh == 0 || ew == 0) break;
      const std::size_t y0 = rng.below(g.h - eh + 1), x0 = rng.below(g.w - ew + 1);
      for (std::size_t c = 0; c < g.c; ++c) {
        for (std::size_t h = y0; h < y0 + eh; ++h) {
          for (std::size_t w = x0; w < x0 + ew; ++w) out[(c * g.h + h) * g.w + w] = op.fill;
        }
      }
      break;
    }
    case AugmentKind::gaussian_noise: {
      const double sigma = 0.25 * m;
      if (sigma == 0.0) break;
      for (auto& v : out) v += sigma * rng.normal();
      break;
    }
    case AugmentKind::crop_resize: {
      const double frac = 1.0 - 0.5 * m;
      const double ch = frac * static_cast<double>(g.h), cw = frac * static_cast<double>(g.w);
      const double y0 = rng.uniform(0.0, static_cast<double>(g.h) - ch);
      const double x0 = rng.uniform(0.0, static_cast<double>(g.w) - cw);
      if (frac == 1.0) break;
      for (std::size_t c = 0; c < g.c; ++c) {
        auto plane = x.subspan(c * g.h * g.w, g.h * g.w);
        for (std::size_t h = 0; h < g.h; ++h) {
          for (std::size_t w = 0; w < g.w; ++w) {
            const double sy = y0 + (static_cast<double>(h) + 0.5) * ch / static_cast<double>(g.h) - 0.5;
            const double sx = x0 + (static_cast<double>(w) + 0.5) * cw / static_cast<double>(g.w) - 0.5;
            out[(c * g.h + h) * g.w + w] = bilinear(plane, g, sy, sx);
          }
        }
      }
      break;
    }
    case AugmentKind::channel_jitter: {
      for (std::size_t c = 0; c < g.c; ++c) {
        const double gain = 1.0 + rng.uniform(-0.5 * m, 0.5 * m);
        const double offset = rng.uniform(-0.25 * m, 0.25 * m);
        for (std::size_t k = 0; k < g.h * g.w; ++k) {
          auto& v = out[c * g.h * g.w + k];
          v = v * gain + offset;
        }
      }
      break;
    }
  }
  clip_unit(out);
  return out;
}

std::vector<double> apply_da(std::span<const AugmentKind> family, std::span<const double> x, const Shape& shape,
                             double strength_hint, Rng& rng) {
  if (family.empty()) throw ConfigError("apply_da: empty augmentation family");
  const AugmentOp op{family[rng.below(family.size())], strength_hint};
  return apply_op(op, x, shape, rng);
}

std::vector<double> crop_flip(std::span<const double> x, const Shape& chw, std::size_t pad, const CropFlipDraw& draw) {
  if (chw.size() != 3 || shape_product(chw) != x.size()) {
    throw ShapeError("standard augmentation expects a (C,H,W) image, got " + shape_string(chw));
  }
  if (draw.offset_y > 2 * pad || draw.offset_x > 2 * pad) throw Error("crop offset exceeds padding");
  const Geometry g{chw[0], chw[1], chw[2]};
  auto out = shift_crop(x, g, pad, pad, draw.offset_y, draw.offset_x);
  if (draw.flip) flip_w(out, g);
  return out;
}

std::vector<double> standard_augment(std::span<const double> x, const Shape& chw, Rng& rng, std::size_t pad) {
  CropFlipDraw draw;
  draw.offset_y = rng.below(2 * pad + 1);
  draw.offset_x = rng.below(2 * pad + 1);
  draw.flip = rng.bernoulli(0.5);
  return crop_flip(x, chw, pad, draw);
}

}  // namespace dom
