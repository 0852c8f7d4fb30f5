#pragma once

#include <stdexcept>
#include <string>

namespace inmc {

struct ShapeError : std::runtime_error {
  explicit ShapeError(const std::string& msg) : std::runtime_error("shape error: " + msg) {}
};

struct DomainError : std::runtime_error {
  explicit DomainError(const std::string& msg) : std::runtime_error("domain error: " + msg) {}
};

struct NonFiniteDensity : std::runtime_error {
  explicit NonFiniteDensity(const std::string& msg)
      : std::runtime_error("non-finite density: " + msg) {}
};

struct NonFiniteLoss : std::runtime_error {
  explicit NonFiniteLoss(const std::string& msg) : std::runtime_error("non-finite loss: " + msg) {}
};

struct NotVolumePreserving : std::runtime_error {
  explicit NotVolumePreserving(const std::string& msg)
      : std::runtime_error("not volume preserving: " + msg) {}
};

struct DimensionTooLarge : std::runtime_error {
  explicit DimensionTooLarge(const std::string& msg)
      : std::runtime_error("dimension too large: " + msg) {}
};

struct DegenerateVariance : std::runtime_error {
  explicit DegenerateVariance(const std::string& msg)
      : std::runtime_error("degenerate variance: " + msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error("config error: " + msg) {}
};

struct ModelFileError : std::runtime_error {
  explicit ModelFileError(const std::string& msg) : std::runtime_error("model file: " + msg) {}
};

}  // namespace inmc
