#pragma once

#include <stdexcept>
#include <string>

namespace dom {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Incompatible tensor or parameter shapes.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A NaN or Inf surfaced in a forward value or gradient.
class NumericalError : public Error {
 public:
  NumericalError(const std::string& what, int layer = -1)
      : Error(what), layer_(layer) {}
  int layer() const noexcept { return layer_; }

 private:
  int layer_;
};

/// Malformed on-disk data (IDX, CIFAR, DOMD, DOMC, CSV).
class FormatError : public Error {
 public:
  enum class Code { bad_magic, truncated, count_mismatch, bad_size, bad_value, io };

  FormatError(Code code, const std::string& what) : Error(what), code_(code) {}
  Code code() const noexcept { return code_; }

 private:
  Code code_;
};

/// Invalid run configuration or argument.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace dom
