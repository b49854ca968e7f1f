#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dom/tensor.hpp"

namespace dom {

enum class LayerKind : std::uint8_t { affine = 0, conv3x3 = 1, relu = 2, maxpool2x2 = 3, flatten = 4 };

std::string to_string(LayerKind kind);

/// Architecture entry. `units` is the output width of an affine layer or the
/// output channel count of a conv3x3 layer, and is ignored otherwise.
struct LayerSpec {
  LayerKind kind;
  std::size_t units = 0;

  friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Resolved layer: chained shapes and where its parameters live in the flat
/// parameter vector (weights first, then bias).
struct LayerInfo {
  LayerSpec spec;
  Shape in_shape;
  Shape out_shape;
  std::size_t param_offset = 0;
  std::size_t weight_count = 0;
  std::size_t bias_count = 0;

  std::size_t param_count() const noexcept { return weight_count + bias_count; }
};

/// Activations kept from a forward pass; activations[0] is the input and
/// activations[i + 1] is the output of layer i.
struct ForwardTrace {
  std::vector<Tensor> activations;
  /// Per maxpool layer, the flat input index that won each output cell.
  std::vector<std::vector<std::size_t>> pool_argmax;

  const Tensor& logits() const { return activations.back(); }
};

struct Backprop {
  /// Gradient w.r.t. the flat parameter vector, accumulated over the batch.
  std::vector<double> param_grad;
  /// Gradient w.r.t. each input sample.
  Tensor input_grad;
};

/// Sequential network over per-sample input shape. The last layer must be an
/// affine layer producing class logits; softmax is folded into the loss.
class Model {
 public:
  Model(Shape input_shape, std::vector<LayerSpec> layers, std::uint64_t seed);

  /// affine/relu stack; a flatten is prepended for multi-axis inputs.
  static Model mlp(const Shape& input_shape, const std::vector<std::size_t>& hidden,
                   std::size_t num_classes, std::uint64_t seed);
  /// [conv3x3, relu, maxpool2x2] per entry of `channels`, then flatten and an affine head.
  static Model convnet(const Shape& input_chw, const std::vector<std::size_t>& channels,
                       std::size_t num_classes, std::uint64_t seed);

  const Shape& input_shape() const noexcept { return input_shape_; }
  std::size_t num_classes() const noexcept { return num_classes_; }
  const std::vector<LayerInfo>& layers() const noexcept { return layers_; }
  std::vector<LayerSpec> layer_specs() const;
  std::uint64_t seed() const noexcept { return seed_; }

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t param_count() const noexcept { return params_.size(); }
  void set_params(std::span<const double> values);

  Tensor forward(const Tensor& x) const;
  ForwardTrace forward_trace(const Tensor& x) const;

  /// Back-propagates `grad_logits` (one row per sample) through a recorded trace.
  Backprop backward(const ForwardTrace& trace, const Tensor& grad_logits) const;

 private:
  void check_input(const Tensor& x) const;
  void init_params();

  Shape input_shape_;
  std::vector<LayerInfo> layers_;
  std::vector<double> params_;
  std::size_t num_classes_ = 0;
  std::uint64_t seed_ = 0;
};

/// argmax per row; ties go to the lowest class index.
std::vector<int> predict(const Tensor& logits);

}  // namespace dom
