#include "lyapopt/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

namespace lyapopt {

namespace {

double ipow(double x, int p) {
  double result = 1.0;
  double base = x;
  while (p > 0) {
    if (p & 1) result *= base;
    base *= base;
    p >>= 1;
  }
  return result;
}

void check_result(double value, const Vector* grad, const Vector& theta) {
  if (!std::isfinite(value)) throw ObjectiveOverflow("non-finite value", theta);
  if (grad != nullptr && !grad->allFinite()) throw ObjectiveOverflow("non-finite gradient", theta);
}

}  // namespace

ObjectiveHandle::ObjectiveHandle(std::shared_ptr<const Objective> objective)
    : objective_(std::move(objective)) {
  if (!objective_) throw std::invalid_argument("null objective");
}

void ObjectiveHandle::check_input(const Vector& theta) const {
  if (theta.size() != objective_->dimension()) {
    std::ostringstream msg;
    msg << "theta has " << theta.size() << " components, objective expects "
        << objective_->dimension();
    throw std::invalid_argument(msg.str());
  }
  if (!theta.allFinite()) throw std::invalid_argument("theta has non-finite components");
}

double ObjectiveHandle::value(const Vector& theta) {
  check_input(theta);
  ++value_evals_;
  const double r = objective_->value(theta);
  check_result(r, nullptr, theta);
  return r;
}

Vector ObjectiveHandle::gradient(const Vector& theta) {
  check_input(theta);
  ++grad_evals_;
  Vector grad(theta.size());
  const double r = objective_->value_and_gradient(theta, grad);
  check_result(r, &grad, theta);
  return grad;
}

std::pair<double, Vector> ObjectiveHandle::value_and_grad(const Vector& theta) {
  check_input(theta);
  ++value_evals_;
  ++grad_evals_;
  Vector grad(theta.size());
  const double r = objective_->value_and_gradient(theta, grad);
  check_result(r, &grad, theta);
  return {r, std::move(grad)};
}

// ---------------------------------------------------------------------------

QuadraticObjective::QuadraticObjective(Matrix a, Vector minimizer)
    : a_(std::move(a)), minimizer_(std::move(minimizer)) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a_, Eigen::EigenvaluesOnly);
  l_min_ = eig.eigenvalues().minCoeff();
  l_max_ = eig.eigenvalues().maxCoeff();
}

double QuadraticObjective::value(const Vector& theta) const {
  const Vector d = theta - minimizer_;
  return 0.5 * d.dot(a_ * d);
}

double QuadraticObjective::value_and_gradient(const Vector& theta, Vector& grad) const {
  const Vector d = theta - minimizer_;
  grad.noalias() = a_ * d;
  return 0.5 * d.dot(grad);
}

LojasiewiczSpec QuadraticObjective::lojasiewicz() const {
  return {0.5, std::sqrt(2.0 * l_min_), std::numeric_limits<double>::infinity()};
}

std::shared_ptr<QuadraticObjective> make_quadratic(const Matrix& a, const Vector& minimizer) {
  if (a.rows() == 0 || a.rows() != a.cols()) throw InvalidObjective("matrix must be square");
  if (minimizer.size() != a.rows()) throw InvalidObjective("minimizer size does not match matrix");
  if (!a.allFinite() || !minimizer.allFinite()) throw InvalidObjective("non-finite entries");
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw InvalidObjective("matrix is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a, Eigen::EigenvaluesOnly);
  if (!(eig.eigenvalues().minCoeff() > 0.0)) throw InvalidObjective("matrix is not positive definite");
  return std::make_shared<QuadraticObjective>(a, minimizer);
}

// ---------------------------------------------------------------------------

MonomialObjective::MonomialObjective(int degree, Eigen::Index dimension)
    : degree_(degree), dim_(dimension) {
  if (degree < 2 || degree % 2 != 0) throw InvalidObjective("monomial degree must be even and >= 2");
  if (dimension < 1) throw InvalidObjective("monomial dimension must be positive");
}

double MonomialObjective::value(const Vector& theta) const {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) sum += ipow(theta[i], degree_);
  return sum;
}

double MonomialObjective::value_and_gradient(const Vector& theta, Vector& grad) const {
  grad.resize(theta.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double lower = ipow(theta[i], degree_ - 1);
    grad[i] = degree_ * lower;
    sum += lower * theta[i];
  }
  return sum;
}

LojasiewiczSpec MonomialObjective::lojasiewicz() const {
  const double p = degree_;
  const double c = p * std::pow(static_cast<double>(dim_), -(p - 2.0) / (2.0 * p));
  return {1.0 / p, c, std::numeric_limits<double>::infinity()};
}

// ---------------------------------------------------------------------------

double RosenbrockObjective::value(const Vector& theta) const {
  const double x = theta[0];
  const double y = theta[1];
  const double r = y - x * x;
  return (a_ - x) * (a_ - x) + b_ * r * r;
}

double RosenbrockObjective::value_and_gradient(const Vector& theta, Vector& grad) const {
  const double x = theta[0];
  const double y = theta[1];
  const double r = y - x * x;
  grad.resize(2);
  grad[0] = -2.0 * (a_ - x) - 4.0 * b_ * x * r;
  grad[1] = 2.0 * b_ * r;
  return (a_ - x) * (a_ - x) + b_ * r * r;
}

Vector RosenbrockObjective::minimizer() const { return Vector{{a_, a_ * a_}}; }

}  // namespace lyapopt
