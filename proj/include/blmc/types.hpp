#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace blmc {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Base error for the library. `kind()` is a short machine-parsable class
/// used by the CLI ("config", "io", "numeric", "usage").
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

 private:
  std::string kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error("config", msg) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error("io", msg) {}
};

class NumericError : public Error {
 public:
  explicit NumericError(const std::string& msg) : Error("numeric", msg) {}
};

}  // namespace blmc
