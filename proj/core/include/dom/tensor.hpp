#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace dom {

using Shape = std::vector<std::size_t>;

std::size_t shape_product(const Shape& shape) noexcept;
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles. A leading dimension is the batch axis
/// wherever a function takes a "batch" tensor.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape, double fill = 0.0);
  Tensor(Shape shape, std::vector<double> data);

  /// Batch tensor of `batch` samples with per-sample shape `sample_shape`.
  static Tensor batch_of(std::size_t batch, const Shape& sample_shape, double fill = 0.0);

  const Shape& shape() const noexcept { return shape_; }
  std::size_t rank() const noexcept { return shape_.size(); }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::span<double> data() noexcept { return data_; }
  std::span<const double> data() const noexcept { return data_; }
  std::vector<double>& values() noexcept { return data_; }
  const std::vector<double>& values() const noexcept { return data_; }

  double& operator[](std::size_t i) noexcept { return data_[i]; }
  double operator[](std::size_t i) const noexcept { return data_[i]; }

  std::size_t batch() const noexcept { return shape_.empty() ? 0 : shape_[0]; }
  std::size_t sample_size() const noexcept;
  Shape sample_shape() const;
  std::span<double> sample(std::size_t b) noexcept;
  std::span<const double> sample(std::size_t b) const noexcept;

  bool all_finite() const noexcept;
  /// Throws NumericalError naming `what` if any entry is NaN or Inf.
  void require_finite(const char* what, int layer = -1) const;

  friend bool operator==(const Tensor&, const Tensor&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

/// Copies the selected samples (by batch position) into a new batch tensor.
Tensor gather_samples(const Tensor& batch, std::span<const std::size_t> positions);

double max_abs(std::span<const double> v) noexcept;

}  // namespace dom
