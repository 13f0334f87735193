#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace blowlab {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid or out-of-range input parameter (alpha, epsilon, M, delta, sizes...).
class ParameterError : public Error {
 public:
  using Error::Error;
};

/// Coordinate transform requested at a point where it is undefined.
class CoordinateSingularity : public Error {
 public:
  using Error::Error;
};

/// Function or field violates a domain/support/parity requirement.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Symbolic layer asked for a factor it cannot represent.
class UnsupportedFactor : public Error {
 public:
  using Error::Error;
};

/// Malformed field file, header or config.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Weighted integral or norm that does not converge; carries the refinement trend.
class DivergentIntegral : public Error {
 public:
  DivergentIntegral(std::string name, std::vector<double> trend)
      : Error("divergent integral: " + name), name_(std::move(name)), trend_(std::move(trend)) {}
  const std::string& name() const { return name_; }
  const std::vector<double>& trend() const { return trend_; }

 private:
  std::string name_;
  std::vector<double> trend_;
};

/// Time integration produced non-finite values.
class NumericalDivergence : public Error {
 public:
  NumericalDivergence(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const { return time_; }

 private:
  double time_;
};

}  // namespace blowlab
