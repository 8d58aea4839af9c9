#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lyapopt/errors.hpp"

namespace lyapopt {

// Lojasiewicz pair at a critical point: ||grad f|| >= c |f - f*|^(1 - exponent)
// on the ball of the given radius.
struct LojasiewiczSpec {
  double exponent = 0.5;
  double constant = 1.0;
  double radius = 0.1;
};

// Pure differentiable function R: R^N -> R. Implementations are immutable and
// reentrant; evaluation counting lives in ObjectiveHandle.
class Objective {
 public:
  virtual ~Objective() = default;

  virtual Eigen::Index dimension() const = 0;
  virtual double value(const Vector& theta) const = 0;
  // Returns R(theta) and writes grad R(theta) into grad.
  virtual double value_and_gradient(const Vector& theta, Vector& grad) const = 0;
  virtual std::string name() const = 0;
};

// A private per-run view of an objective that counts evaluations. Not
// thread-safe; concurrent runs each own a handle over a shared Objective.
class ObjectiveHandle {
 public:
  explicit ObjectiveHandle(std::shared_ptr<const Objective> objective);

  Eigen::Index dimension() const { return objective_->dimension(); }
  const Objective& objective() const { return *objective_; }

  // Each throws ObjectiveOverflow on a non-finite result and
  // std::invalid_argument on a wrong-sized or non-finite theta.
  double value(const Vector& theta);
  Vector gradient(const Vector& theta);
  std::pair<double, Vector> value_and_grad(const Vector& theta);

  std::uint64_t value_evaluations() const { return value_evals_; }
  std::uint64_t gradient_evaluations() const { return grad_evals_; }

 private:
  void check_input(const Vector& theta) const;

  std::shared_ptr<const Objective> objective_;
  std::uint64_t value_evals_ = 0;
  std::uint64_t grad_evals_ = 0;
};

// R(theta) = 1/2 (theta - theta*)^T A (theta - theta*), A symmetric positive definite.
class QuadraticObjective final : public Objective {
 public:
  QuadraticObjective(Matrix a, Vector minimizer);

  Eigen::Index dimension() const override { return minimizer_.size(); }
  double value(const Vector& theta) const override;
  double value_and_gradient(const Vector& theta, Vector& grad) const override;
  std::string name() const override { return "quadratic"; }

  const Matrix& matrix() const { return a_; }
  const Vector& minimizer() const { return minimizer_; }
  // Largest eigenvalue of A.
  double smoothness() const { return l_max_; }
  double smallest_eigenvalue() const { return l_min_; }
  // exponent 1/2, c = sqrt(2 lambda_min), valid globally.
  LojasiewiczSpec lojasiewicz() const;

 private:
  Matrix a_;
  Vector minimizer_;
  double l_max_ = 0.0;
  double l_min_ = 0.0;
};

// Throws InvalidObjective unless A is square, symmetric and positive definite
// with a matching minimizer.
std::shared_ptr<QuadraticObjective> make_quadratic(const Matrix& a, const Vector& minimizer);

// R(theta) = sum_i theta_i^p for an even degree p >= 2.
class MonomialObjective final : public Objective {
 public:
  MonomialObjective(int degree, Eigen::Index dimension);

  Eigen::Index dimension() const override { return dim_; }
  double value(const Vector& theta) const override;
  double value_and_gradient(const Vector& theta, Vector& grad) const override;
  std::string name() const override { return "monomial"; }

  int degree() const { return degree_; }
  // exponent 1/p, c = p N^{-(p-2)/(2p)} at the origin (c = p in 1-D).
  LojasiewiczSpec lojasiewicz() const;

 private:
  int degree_;
  Eigen::Index dim_;
};

// (a - x)^2 + b (y - x^2)^2, minimizer (a, a^2).
class RosenbrockObjective final : public Objective {
 public:
  explicit RosenbrockObjective(double a = 1.0, double b = 100.0) : a_(a), b_(b) {}

  Eigen::Index dimension() const override { return 2; }
  double value(const Vector& theta) const override;
  double value_and_gradient(const Vector& theta, Vector& grad) const override;
  std::string name() const override { return "rosenbrock"; }

  Vector minimizer() const;

 private:
  double a_;
  double b_;
};

enum class Activation { GeluApprox, Tanh, Sigmoid, Linear };

Activation parse_activation(const std::string& tag);
std::string to_string(Activation act);

// Logistic sigmoid, branch-stable for large |x|.
double sigmoid(double x);
// x * sigmoid(1.702 x)
double gelu_approx(double x);

// Widths n_0 -> n_1 -> ... -> n_L and one activation per layer (L entries).
struct NetworkShape {
  std::vector<int> widths;
  std::vector<Activation> activations;

  void validate() const;
  // sum_l n_in(l) n_out(l) + n_out(l)
  Eigen::Index parameter_count() const;

  // 60 -> 30 gelu -> 1 sigmoid
  static NetworkShape sonar();
  // 13 -> 15 tanh -> 15 tanh -> 1 linear
  static NetworkShape boston();
};

// Zero biases, weights of layer l drawn N(0, 1) / sqrt(n_in(l)). Parameters are
// laid out layer by layer: weights (n_out x n_in, row-major) then biases.
Vector xavier_init(const NetworkShape& shape, std::uint64_t seed);

// Feed-forward network with mean-squared-error loss over a fixed dataset:
// R(theta) = (1/M) sum_i ||net(x_i) - y_i||^2.
class MLPObjective final : public Objective {
 public:
  // inputs: M x n_0, targets: M x n_L.
  MLPObjective(NetworkShape shape, const Matrix& inputs, const Matrix& targets);

  Eigen::Index dimension() const override { return n_params_; }
  double value(const Vector& theta) const override;
  double value_and_gradient(const Vector& theta, Vector& grad) const override;
  std::string name() const override { return "mlp"; }

  const NetworkShape& shape() const { return shape_; }
  Eigen::Index samples() const { return inputs_.cols(); }

  // Network outputs for the rows of inputs (M x n_L).
  Matrix predict(const Vector& theta, const Matrix& inputs) const;

 private:
  NetworkShape shape_;
  Matrix inputs_;   // n_0 x M
  Matrix targets_;  // n_L x M
  Eigen::Index n_params_;
};

// Mean squared error and rounding accuracy (percent) of predictions.
double mean_squared_error(const Matrix& predictions, const Matrix& targets);
double rounding_accuracy(const Matrix& predictions, const Matrix& targets);

}  // namespace lyapopt
