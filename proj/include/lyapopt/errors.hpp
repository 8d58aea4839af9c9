#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lyapopt {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

// Non-finite value or gradient produced by an objective.
class ObjectiveOverflow : public std::runtime_error {
 public:
  ObjectiveOverflow(const std::string& what, Vector theta)
      : std::runtime_error("objective overflow: " + what), theta_(std::move(theta)) {}
  const Vector& theta() const { return theta_; }

 private:
  Vector theta_;
};

class InvalidObjective : public std::invalid_argument {
 public:
  explicit InvalidObjective(const std::string& what)
      : std::invalid_argument("invalid objective: " + what) {}
};

// The backtracking step fell below the underflow floor without acceptance.
class LinesearchStall : public std::runtime_error {
 public:
  explicit LinesearchStall(double eta)
      : std::runtime_error("linesearch stall at eta=" + std::to_string(eta)), eta_(eta) {}
  double eta() const { return eta_; }

 private:
  double eta_;
};

class ConfigError : public std::invalid_argument {
 public:
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& what) : std::runtime_error(what) {}
};

class HypothesisViolated : public std::domain_error {
 public:
  explicit HypothesisViolated(const std::string& what)
      : std::domain_error("hypothesis violated: " + what) {}
};

class NoClosedForm : public std::domain_error {
 public:
  explicit NoClosedForm(const std::string& what)
      : std::domain_error("no closed form: " + what) {}
};

class DegenerateFit : public std::runtime_error {
 public:
  explicit DegenerateFit(const std::string& what)
      : std::runtime_error("degenerate fit: " + what) {}
};

}  // namespace lyapopt
