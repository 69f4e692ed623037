#ifndef CAPMINK_ERRORS_HPP
#define CAPMINK_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace capmink {

// Input that fails validation (bad direction set, malformed file, empty or
// unbounded intersection). The CLI maps this to exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& what) : std::runtime_error(what) {}
};

// Numerical backend failure (iteration caps, ill-conditioned systems).
// The CLI maps this to exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace capmink

#endif
