#include "dom/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <unordered_set>

#include "dom/binary_io.hpp"
#include "dom/error.hpp"
#include "dom/rng.hpp"

namespace dom {

namespace {
constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;
constexpr std::size_t kCifarRecord = 3073;
constexpr std::uint32_t kDomdVersion = 1;

int infer_classes(const std::vector<SampleRecord>& records) {
  int max_label = 0;
  for (const auto& r : records) max_label = std::max(max_label, r.label);
  return std::max(10, max_label + 1);
}
}  // namespace

Batch Dataset::gather(std::span<const std::size_t> indices) const {
  Batch b;
  if (indices.empty()) return b;
  const std::size_t n = shape_product(sample_shape);
  std::vector<double> data;
  data.reserve(indices.size() * n);
  b.y.reserve(indices.size());
  b.ids.reserve(indices.size());
  for (auto i : indices) {
    const auto& r = records.at(i);
    data.insert(data.end(), r.x.begin(), r.x.end());
    b.y.push_back(r.label);
    b.ids.push_back(r.id);
  }
  Shape shape{indices.size()};
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  b.x = Tensor(std::move(shape), std::move(data));
  return b;
}

Batch Dataset::all() const {
  std::vector<std::size_t> idx(records.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  return gather(idx);
}

void Dataset::validate() const {
  const std::size_t n = shape_product(sample_shape);
  std::unordered_set<std::uint64_t> seen;
  for (const auto& r : records) {
    if (!seen.insert(r.id).second) {
      throw FormatError(FormatError::Code::bad_value, "duplicate sample id " + std::to_string(r.id));
    }
    if (r.label < 0 || r.label >= num_classes) {
      throw FormatError(FormatError::Code::bad_value, "sample " + std::to_string(r.id) + " has label " +
                                                          std::to_string(r.label) + " outside [0," +
                                                          std::to_string(num_classes) + ")");
    }
    if (r.x.size() != n) {
      throw FormatError(FormatError::Code::bad_size, "sample " + std::to_string(r.id) + " has " +
                                                         std::to_string(r.x.size()) + " values, expected " +
                                                         std::to_string(n));
    }
    for (double v : r.x) {
      if (!(v >= 0.0 && v <= 1.0)) {
        throw FormatError(FormatError::Code::bad_value, "sample " + std::to_string(r.id) + " has a value outside [0,1]");
      }
    }
  }
}

std::vector<std::vector<double>> synthetic_centroids(std::uint64_t seed, std::size_t n_classes, std::size_t dim) {
  Rng rng(derive_seed({seed, 0xc3a7'0001ULL}));
  std::vector<std::vector<double>> c(n_classes, std::vector<double>(dim));
  for (auto& row : c) {
    for (auto& v : row) v = rng.uniform(0.2, 0.8);
  }
  return c;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw ConfigError("synthetic data needs at least 2 classes");
  if (spec.n_samples < spec.n_classes) {
    throw ConfigError("synthetic data: n_samples (" + std::to_string(spec.n_samples) + ") < n_classes (" +
                      std::to_string(spec.n_classes) + ")");
  }
  if (!(spec.label_noise_rate >= 0.0 && spec.label_noise_rate < 1.0)) {
    throw ConfigError("synthetic data: label_noise_rate must be in [0,1)");
  }
  const std::size_t dim = shape_product(spec.sample_shape);
  const auto centroids = synthetic_centroids(spec.seed, spec.n_classes, dim);

  Dataset d;
  d.sample_shape = spec.sample_shape;
  d.num_classes = static_cast<int>(spec.n_classes);
  d.split = spec.split;
  d.records.resize(spec.n_samples);
  Rng rng(derive_seed({spec.seed, 0xc3a7'0002ULL, spec.stream}));
  for (std::size_t i = 0; i < spec.n_samples; ++i) {
    auto& r = d.records[i];
    r.id = spec.id_offset + i;
    r.label = static_cast<int>(i % spec.n_classes);
    r.x.resize(dim);
    const auto& c = centroids[static_cast<std::size_t>(r.label)];
    for (std::size_t k = 0; k < dim; ++k) r.x[k] = std::clamp(c[k] + spec.cluster_std * rng.normal(), 0.0, 1.0);
  }
  d.clean_labels.resize(spec.n_samples);
  for (std::size_t i = 0; i < spec.n_samples; ++i) d.clean_labels[i] = d.records[i].label;

  const auto n_noisy = static_cast<std::size_t>(spec.label_noise_rate * static_cast<double>(spec.n_samples));
  if (n_noisy > 0) {
    Rng noise_rng(derive_seed({spec.seed, 0xc3a7'0003ULL, spec.stream}));
    std::vector<std::size_t> order(spec.n_samples);
    std::iota(order.begin(), order.end(), std::size_t{0});
    for (std::size_t i = 0; i < n_noisy; ++i) {
      std::swap(order[i], order[i + noise_rng.below(spec.n_samples - i)]);
      auto& r = d.records[order[i]];
      const auto shift = 1 + static_cast<int>(noise_rng.below(spec.n_classes - 1));
      r.label = (r.label + shift) % static_cast<int>(spec.n_classes);
      d.noisy_ids.push_back(r.id);
    }
    std::sort(d.noisy_ids.begin(), d.noisy_ids.end());
  }
  return d;
}

Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path, Split split,
                 std::uint64_t id_offset) {
  const auto img_bytes = io::read_file(images_path);
  const auto lbl_bytes = io::read_file(labels_path);
  io::ByteReader img(img_bytes, "IDX images " + images_path.string());
  io::ByteReader lbl(lbl_bytes, "IDX labels " + labels_path.string());

  const auto img_magic = img.u32_be();
  if (img_magic != kIdxImagesMagic) {
    throw FormatError(FormatError::Code::bad_magic, "IDX images: bad magic " + std::to_string(img_magic));
  }
  const auto lbl_magic = lbl.u32_be();
  if (lbl_magic != kIdxLabelsMagic) {
    throw FormatError(FormatError::Code::bad_magic, "IDX labels: bad magic " + std::to_string(lbl_magic));
  }
  const std::size_t n = img.u32_be(), rows = img.u32_be(), cols = img.u32_be();
  const std::size_t n_labels = lbl.u32_be();
  if (n != n_labels) {
    throw FormatError(FormatError::Code::count_mismatch, "IDX: " + std::to_string(n) + " images but " +
                                                             std::to_string(n_labels) + " labels");
  }
  if (rows == 0 || cols == 0) throw FormatError(FormatError::Code::bad_size, "IDX images: zero-sized image");
  const auto pixels = img.take(n * rows * cols);
  const auto labels = lbl.take(n);

  Dataset d;
  d.sample_shape = {1, rows, cols};
  d.split = split;
  d.records.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto& r = d.records[i];
    r.id = id_offset + i;
    r.label = labels[i];
    r.x.resize(rows * cols);
    for (std::size_t k = 0; k < rows * cols; ++k) r.x[k] = pixels[i * rows * cols + k] / 255.0;
  }
  d.num_classes = infer_classes(d.records);
  return d;
}

Dataset load_cifar_binary(const std::filesystem::path& path, Split split, std::uint64_t id_offset) {
  const auto bytes = io::read_file(path);
  if (bytes.empty() || bytes.size() % kCifarRecord != 0) {
    throw FormatError(FormatError::Code::bad_size, "CIFAR binary " + path.string() + ": size " +
                                                       std::to_string(bytes.size()) + " is not a positive multiple of 3073");
  }
  Dataset d;
  d.sample_shape = {3, 32, 32};
  d.split = split;
  d.records.resize(bytes.size() / kCifarRecord);
  for (std::size_t i = 0; i < d.records.size(); ++i) {
    const std::uint8_t* rec = bytes.data() + i * kCifarRecord;
    auto& r = d.records[i];
    r.id = id_offset + i;
    r.label = rec[0];
    r.x.resize(kCifarRecord - 1);
    for (std::size_t k = 0; k + 1 < kCifarRecord; ++k) r.x[k] = rec[1 + k] / 255.0;
  }
  d.num_classes = infer_classes(d.records);
  return d;
}

void save_domd(const Dataset& data, const std::filesystem::path& path) {
  io::ByteWriter w;
  const bool has_clean = data.clean_labels.size() == data.records.size() && !data.records.empty();
  w.bytes("DOMD");
  w.u32_le(kDomdVersion);
  w.u64_le(data.records.size());
  w.u64_le(shape_product(data.sample_shape));
  w.u32_le(static_cast<std::uint32_t>(data.num_classes));
  w.u8(static_cast<std::uint8_t>(data.split));
  w.u8(has_clean ? 1 : 0);
  w.u32_le(static_cast<std::uint32_t>(data.sample_shape.size()));
  for (auto dsz : data.sample_shape) w.u64_le(dsz);
  w.u64_le(data.noisy_ids.size());
  for (auto id : data.noisy_ids) w.u64_le(id);
  for (std::size_t i = 0; i < data.records.size(); ++i) {
    const auto& r = data.records[i];
    w.u64_le(r.id);
    w.u32_le(static_cast<std::uint32_t>(r.label));
    if (has_clean) w.u32_le(static_cast<std::uint32_t>(data.clean_labels[i]));
    for (double v : r.x) w.f64_le(v);
  }
  io::write_file(path, w.buffer());
}

Dataset load_domd(const std::filesystem::path& path) {
  const auto bytes = io::read_file(path);
  io::ByteReader r(bytes, "DOMD " + path.string());
  if (r.bytes(4) != "DOMD") throw FormatError(FormatError::Code::bad_magic, "DOMD: bad magic in " + path.string());
  const auto version = r.u32_le();
  if (version != kDomdVersion) {
    throw FormatError(FormatError::Code::bad_value, "DOMD: unsupported version " + std::to_string(version));
  }
  Dataset d;
  const auto n = r.u64_le();
  const auto dim = r.u64_le();
  d.num_classes = static_cast<int>(r.u32_le());
  d.split = static_cast<Split>(r.u8());
  const bool has_clean = r.u8() != 0;
  const auto rank = r.u32_le();
  for (std::uint32_t i = 0; i < rank; ++i) d.sample_shape.push_back(r.u64_le());
  if (shape_product(d.sample_shape) != dim) {
    throw FormatError(FormatError::Code::count_mismatch, "DOMD: shape " + shape_string(d.sample_shape) +
                                                             " disagrees with dim " + std::to_string(dim));
  }
  const auto n_noisy = r.u64_le();
  for (std::uint64_t i = 0; i < n_noisy; ++i) d.noisy_ids.push_back(r.u64_le());
  const std::size_t per_record = 12 + (has_clean ? 4 : 0) + 8 * dim;
  if (r.remaining() != n * per_record) {
    throw FormatError(r.remaining() < n * per_record ? FormatError::Code::truncated : FormatError::Code::bad_size,
                      "DOMD: payload holds " + std::to_string(r.remaining()) + " bytes, expected " +
                          std::to_string(n * per_record));
  }
  d.records.resize(n);
  for (auto& rec : d.records) {
    rec.id = r.u64_le();
    rec.label = static_cast<int>(r.u32_le());
    if (has_clean) d.clean_labels.push_back(static_cast<int>(r.u32_le()));
    rec.x.resize(dim);
    for (auto& v : rec.x) v = r.f64_le();
  }
  d.validate();
  return d;
}

std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[rng.below(i)]);
  return idx;
}

Batch subset(const Batch& batch, std::span<const std::size_t> positions) {
  Batch out;
  out.x = gather_samples(batch.x, positions);
  out.y.reserve(positions.size());
  out.ids.reserve(positions.size());
  for (auto p : positions) {
    out.y.push_back(batch.y.at(p));
    out.ids.push_back(batch.ids.at(p));
  }
  return out;
}

}  // namespace dom
