#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "dom/tensor.hpp"

namespace dom {

/// One training example. `id` is stable for the lifetime of the dataset and
/// keys every per-sample record elsewhere (loss ledger, RNG streams).
struct SampleRecord {
  std::uint64_t id = 0;
  std::vector<double> x;
  int label = 0;
};

enum class Split : std::uint8_t { train = 0, test = 1 };

struct Batch {
  Tensor x;
  std::vector<int> y;
  std::vector<std::uint64_t> ids;

  std::size_t size() const noexcept { return y.size(); }
};

/// Rows of `batch` at `positions`, in that order.
Batch subset(const Batch& batch, std::span<const std::size_t> positions);

struct Dataset {
  Shape sample_shape;
  int num_classes = 0;
  Split split = Split::train;
  std::vector<SampleRecord> records;
  /// Ids whose label was replaced by label-noise injection, ascending.
  std::vector<std::uint64_t> noisy_ids;
  /// Pre-noise label per record, when known (synthetic data only).
  std::vector<int> clean_labels;

  std::size_t size() const noexcept { return records.size(); }
  bool empty() const noexcept { return records.empty(); }
  bool is_image() const noexcept { return sample_shape.size() == 3; }

  Batch gather(std::span<const std::size_t> indices) const;
  Batch all() const;

  /// Throws FormatError(bad_value) on duplicate ids, labels outside
  /// [0, num_classes), entries outside [0,1], or wrong sample sizes.
  void validate() const;
};

/// Gaussian class clusters clipped to [0,1]. Centroids depend only on `seed`
/// and the geometry, so a train and a test set drawn with different `stream`
/// values share the same class structure.
struct SyntheticSpec {
  std::size_t n_samples = 1000;
  std::size_t n_classes = 10;
  Shape sample_shape{32};
  double label_noise_rate = 0.0;
  std::uint64_t seed = 0;
  double cluster_std = 0.15;
  std::uint64_t stream = 0;
  std::uint64_t id_offset = 0;
  Split split = Split::train;
};

std::vector<std::vector<double>> synthetic_centroids(std::uint64_t seed, std::size_t n_classes, std::size_t dim);
Dataset make_synthetic(const SyntheticSpec& spec);

/// MNIST-style IDX pair (images magic 0x00000803, labels 0x00000801, big-endian).
Dataset load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path,
                 Split split = Split::train, std::uint64_t id_offset = 0);

/// CIFAR-10 binary batch: 3073-byte records, label byte then R, G, B planes.
Dataset load_cifar_binary(const std::filesystem::path& path, Split split = Split::train,
                          std::uint64_t id_offset = 0);

/// Little-endian "DOMD" container (layout in README).
void save_domd(const Dataset& data, const std::filesystem::path& path);
Dataset load_domd(const std::filesystem::path& path);

/// Fisher-Yates permutation of [0, n) from a seeded stream.
std::vector<std::size_t> shuffled_indices(std::size_t n, std::uint64_t seed);

}  // namespace dom
