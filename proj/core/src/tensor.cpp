#include "dom/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "dom/error.hpp"

namespace dom {

std::size_t shape_product(const Shape& shape) noexcept {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "(";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(shape[i]);
  }
  return out + ")";
}

Tensor::Tensor(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_product(shape_), fill) {
  for (auto d : shape_) {
    if (d == 0) throw ShapeError("tensor dimensions must be positive, got " + shape_string(shape_));
  }
}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_product(shape_) != data_.size()) {
    throw ShapeError("tensor shape " + shape_string(shape_) + " does not match " +
                     std::to_string(data_.size()) + " values");
  }
}

Tensor Tensor::batch_of(std::size_t batch, const Shape& sample_shape, double fill) {
  Shape shape;
  shape.reserve(sample_shape.size() + 1);
  shape.push_back(batch);
  shape.insert(shape.end(), sample_shape.begin(), sample_shape.end());
  return Tensor(std::move(shape), fill);
}

std::size_t Tensor::sample_size() const noexcept {
  return shape_.empty() || shape_[0] == 0 ? 0 : data_.size() / shape_[0];
}

Shape Tensor::sample_shape() const { return Shape(shape_.begin() + (shape_.empty() ? 0 : 1), shape_.end()); }

std::span<double> Tensor::sample(std::size_t b) noexcept {
  const auto n = sample_size();
  return std::span<double>(data_).subspan(b * n, n);
}

std::span<const double> Tensor::sample(std::size_t b) const noexcept {
  const auto n = sample_size();
  return std::span<const double>(data_).subspan(b * n, n);
}

bool Tensor::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::require_finite(const char* what, int layer) const {
  if (all_finite()) return;
  std::string msg = std::string("non-finite value in ") + what;
  if (layer >= 0) msg += " at layer " + std::to_string(layer);
  throw NumericalError(msg, layer);
}

Tensor gather_samples(const Tensor& batch, std::span<const std::size_t> positions) {
  const auto n = batch.sample_size();
  Shape shape = batch.shape();
  shape[0] = positions.size();
  std::vector<double> data;
  data.reserve(positions.size() * n);
  for (auto p : positions) {
    auto s = batch.sample(p);
    data.insert(data.end(), s.begin(), s.end());
  }
  if (positions.empty()) return Tensor();
  return Tensor(std::move(shape), std::move(data));
}

double max_abs(std::span<const double> v) noexcept {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace dom
