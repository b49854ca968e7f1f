#include "dom/optim.hpp"

#include <string>

#include "dom/error.hpp"

namespace dom {

void Sgd::step(Model& model, std::span<const double> grads, double lr) {
  auto params = model.params();
  if (grads.size() != params.size()) {
    throw ShapeError("sgd: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) +
                     " parameters");
  }
  if (velocity_.size() != params.size()) velocity_.assign(params.size(), 0.0);
  const double mu = options_.momentum, wd = options_.weight_decay;
  for (std::size_t i = 0; i < params.size(); ++i) {
    velocity_[i] = mu * velocity_[i] + (grads[i] + wd * params[i]);
    params[i] -= lr * velocity_[i];
  }
}

}  // namespace dom
