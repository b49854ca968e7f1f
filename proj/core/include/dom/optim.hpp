#pragma once

#include <span>
#include <vector>

#include "dom/model.hpp"

namespace dom {

struct SgdOptions {
  double momentum = 0.9;
  double weight_decay = 5e-4;
};

/// SGD with heavy-ball momentum and L2 weight decay folded into the gradient:
///   v <- momentum * v + (grad + weight_decay * param)
///   param <- param - lr * v
class Sgd {
 public:
  explicit Sgd(SgdOptions options = {}) : options_(options) {}

  void step(Model& model, std::span<const double> grads, double lr);

  const SgdOptions& options() const noexcept { return options_; }
  std::span<const double> velocity() const noexcept { return velocity_; }

 private:
  SgdOptions options_;
  std::vector<double> velocity_;
};

}  // namespace dom
