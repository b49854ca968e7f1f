#include "dom/checkpoint.hpp"

#include <cmath>
#include <limits>

#include "dom/binary_io.hpp"
#include "dom/error.hpp"

namespace dom {

namespace {
constexpr std::uint32_t kVersion = 1;
}

std::string to_string(CheckpointRole role) {
  switch (role) {
    case CheckpointRole::best: return "best";
    case CheckpointRole::last: return "last";
    case CheckpointRole::aux: return "aux";
  }
  return "last";
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  io::ByteWriter w;
  w.bytes("DOMC");
  w.u32_le(kVersion);
  w.u8(static_cast<std::uint8_t>(ckpt.role));
  w.u32_le(static_cast<std::uint32_t>(ckpt.epoch));
  w.f64_le(ckpt.train_acc);
  w.f64_le(ckpt.test_acc);
  w.f64_le(ckpt.robust_acc.value_or(std::numeric_limits<double>::quiet_NaN()));
  w.u64_le(ckpt.model.seed());
  const auto& in = ckpt.model.input_shape();
  w.u32_le(static_cast<std::uint32_t>(in.size()));
  for (auto d : in) w.u64_le(d);
  const auto layers = ckpt.model.layer_specs();
  w.u32_le(static_cast<std::uint32_t>(layers.size()));
  for (const auto& l : layers) {
    w.u8(static_cast<std::uint8_t>(l.kind));
    w.u64_le(l.units);
  }
  w.u64_le(ckpt.model.param_count());
  for (double p : ckpt.model.params()) w.f64_le(p);
  return w.buffer();
}

Checkpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  io::ByteReader r(bytes, "DOMC checkpoint");
  if (r.bytes(4) != "DOMC") throw FormatError(FormatError::Code::bad_magic, "DOMC: bad magic");
  const auto version = r.u32_le();
  if (version != kVersion) throw FormatError(FormatError::Code::bad_value, "DOMC: unsupported version " + std::to_string(version));
  const auto role = r.u8();
  if (role > 2) throw FormatError(FormatError::Code::bad_value, "DOMC: unknown role");
  const auto epoch = static_cast<int>(r.u32_le());
  const double train_acc = r.f64_le();
  const double test_acc = r.f64_le();
  const double robust = r.f64_le();
  const auto seed = r.u64_le();
  Shape in(r.u32_le());
  for (auto& d : in) d = r.u64_le();
  std::vector<LayerSpec> layers(r.u32_le());
  for (auto& l : layers) {
    const auto kind = r.u8();
    if (kind > 4) throw FormatError(FormatError::Code::bad_value, "DOMC: unknown layer kind");
    l.kind = static_cast<LayerKind>(kind);
    l.units = r.u64_le();
  }
  Model model(in, layers, seed);
  const auto count = r.u64_le();
  if (count != model.param_count()) {
    throw FormatError(FormatError::Code::count_mismatch, "DOMC: " + std::to_string(count) +
                                                             " parameters stored, architecture needs " +
                                                             std::to_string(model.param_count()));
  }
  std::vector<double> params(count);
  for (auto& p : params) p = r.f64_le();
  if (r.remaining() != 0) throw FormatError(FormatError::Code::bad_size, "DOMC: trailing bytes");
  model.set_params(params);
  Checkpoint c{std::move(model), epoch, static_cast<CheckpointRole>(role), train_acc, test_acc, std::nullopt};
  if (!std::isnan(robust)) c.robust_acc = robust;
  return c;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  io::write_file(path, encode_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(io::read_file(path)); }

}  // namespace dom
