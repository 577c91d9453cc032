#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qdw {

/// Bad input: a physical range, a cross-field constraint, or a malformed document.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// The numerics left their tolerance band (step size too coarse, positivity lost, fit diverged).
class NumericalError : public std::runtime_error {
public:
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

/// Several validation failures reported together.
class ValidationReport : public ValidationError {
public:
  explicit ValidationReport(std::vector<std::string> errors);
  const std::vector<std::string>& errors() const noexcept { return errors_; }

private:
  std::vector<std::string> errors_;
};

}  // namespace qdw
