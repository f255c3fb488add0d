#pragma once

#include <stdexcept>
#include <string>

namespace critiq {

// Bad distribution/model parameters (wrong count, out-of-range value).
class ParameterError : public std::invalid_argument {
  public:
    explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Model with sigma^2 = 0 (e.g. D/D/1): representable, but the tail/idle
// constants divide by sigma and are undefined.
class DegenerateModelError : public std::domain_error {
  public:
    explicit DegenerateModelError(const std::string& what) : std::domain_error(what) {}
};

// Operation requires load rho = 1.
class CriticalityError : public std::domain_error {
  public:
    explicit CriticalityError(const std::string& what) : std::domain_error(what) {}
};

// Tail fit cannot proceed (empty input, not enough tail mass, bad window).
class FitError : public std::runtime_error {
  public:
    explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace critiq
