#include <cmath>
#include <random>

#include "lyapopt/objectives.hpp"

namespace lyapopt {

namespace {

constexpr double kGeluScale = 1.702;

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct LayerView {
  Eigen::Map<const RowMajorMatrix> weights;
  Eigen::Map<const Vector> bias;
};

LayerView layer_view(const Vector& theta, Eigen::Index offset, int n_in, int n_out) {
  return {Eigen::Map<const RowMajorMatrix>(theta.data() + offset, n_out, n_in),
          Eigen::Map<const Vector>(theta.data() + offset + Eigen::Index{n_out} * n_in, n_out)};
}

// Branch-stable logistic on a whole array: e = exp(-|x|) never overflows.
Eigen::ArrayXXd sigmoid_array(const Eigen::ArrayXXd& x) {
  const Eigen::ArrayXXd e = (-x.abs()).exp();
  return (x >= 0.0).select(1.0 / (1.0 + e), e / (1.0 + e));
}

// tanh(x) = sign(x) (1 - e)/(1 + e) with e = exp(-2|x|).
Eigen::ArrayXXd tanh_array(const Eigen::ArrayXXd& x) {
  const Eigen::ArrayXXd e = (-2.0 * x.abs()).exp();
  const Eigen::ArrayXXd t = (1.0 - e) / (1.0 + e);
  return (x >= 0.0).select(t, -t);
}

void activate(Activation act, const Matrix& z, Matrix& a) {
  switch (act) {
    case Activation::GeluApprox:
      a = (z.array() * sigmoid_array(kGeluScale * z.array())).matrix();
      break;
    case Activation::Tanh:
      a = tanh_array(z.array()).matrix();
      break;
    case Activation::Sigmoid:
      a = sigmoid_array(z.array()).matrix();
      break;
    case Activation::Linear:
      a = z;
      break;
  }
}

// Multiplies delta in place by act'(z); a = act(z).
void scale_by_derivative(Activation act, const Matrix& z, const Matrix& a, Matrix& delta) {
  switch (act) {
    case Activation::GeluApprox: {
      const Eigen::ArrayXXd s = sigmoid_array(kGeluScale * z.array());
      delta.array() *= s + kGeluScale * z.array() * s * (1.0 - s);
      break;
    }
    case Activation::Tanh:
      delta.array() *= 1.0 - a.array().square();
      break;
    case Activation::Sigmoid:
      delta.array() *= a.array() * (1.0 - a.array());
      break;
    case Activation::Linear:
      break;
  }
}

Matrix forward(const NetworkShape& shape, const Vector& theta, const Matrix& inputs) {
  Matrix a = inputs;
  Matrix z;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < shape.widths.size(); ++l) {
    const int n_in = shape.widths[l];
    const int n_out = shape.widths[l + 1];
    const LayerView layer = layer_view(theta, offset, n_in, n_out);
    z.noalias() = layer.weights * a;
    z.colwise() += layer.bias;
    activate(shape.activations[l], z, a);
    offset += Eigen::Index{n_out} * n_in + n_out;
  }
  return a;
}

}  // namespace

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

double gelu_approx(double x) { return x * sigmoid(kGeluScale * x); }

Activation parse_activation(const std::string& tag) {
  if (tag == "gelu" || tag == "gelu-approx" || tag == "g") return Activation::GeluApprox;
  if (tag == "tanh" || tag == "t") return Activation::Tanh;
  if (tag == "sigmoid" || tag == "s") return Activation::Sigmoid;
  if (tag == "linear" || tag == "l") return Activation::Linear;
  throw InvalidObjective("unknown activation '" + tag + "'");
}

std::string to_string(Activation act) {
  switch (act) {
    case Activation::GeluApprox: return "gelu-approx";
    case Activation::Tanh: return "tanh";
    case Activation::Sigmoid: return "sigmoid";
    case Activation::Linear: return "linear";
  }
  return "?";
}

void NetworkShape::validate() const {
  if (widths.size() < 2) throw InvalidObjective("network needs at least an input and an output width");
  if (activations.size() + 1 != widths.size()) {
    throw InvalidObjective("network needs one activation per layer");
  }
  for (int w : widths) {
    if (w < 1) throw InvalidObjective("layer widths must be positive");
  }
}

Eigen::Index NetworkShape::parameter_count() const {
  Eigen::Index n = 0;
  for (std::size_t l = 0; l + 1 < widths.size(); ++l) {
    n += Eigen::Index{widths[l]} * widths[l + 1] + widths[l + 1];
  }
  return n;
}

NetworkShape NetworkShape::sonar() {
  return {{60, 30, 1}, {Activation::GeluApprox, Activation::Sigmoid}};
}

NetworkShape NetworkShape::boston() {
  return {{13, 15, 15, 1}, {Activation::Tanh, Activation::Tanh, Activation::Linear}};
}

Vector xavier_init(const NetworkShape& shape, std::uint64_t seed) {
  shape.validate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Vector theta(shape.parameter_count());
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l + 1 < shape.widths.size(); ++l) {
    const int n_in = shape.widths[l];
    const int n_out = shape.widths[l + 1];
    const double scale = 1.0 / std::sqrt(static_cast<double>(n_in));
    const Eigen::Index n_weights = Eigen::Index{n_in} * n_out;
    for (Eigen::Index k = 0; k < n_weights; ++k) theta[offset + k] = scale * normal(rng);
    theta.segment(offset + n_weights, n_out).setZero();
    offset += n_weights + n_out;
  }
  return theta;
}

// ---------------------------------------------------------------------------

MLPObjective::MLPObjective(NetworkShape shape, const Matrix& inputs, const Matrix& targets)
    : shape_(std::move(shape)) {
  shape_.validate();
  if (inputs.rows() == 0 || inputs.rows() != targets.rows()) {
    throw InvalidObjective("inputs and targets must have the same positive number of rows");
  }
  if (inputs.cols() != shape_.widths.front()) throw InvalidObjective("input width does not match network");
  if (targets.cols() != shape_.widths.back()) throw InvalidObjective("target width does not match network");
  inputs_ = inputs.transpose();
  targets_ = targets.transpose();
  n_params_ = shape_.parameter_count();
}

Matrix MLPObjective::predict(const Vector& theta, const Matrix& inputs) const {
  return forward(shape_, theta, inputs.transpose()).transpose();
}

double MLPObjective::value(const Vector& theta) const {
  const Matrix out = forward(shape_, theta, inputs_);
  return (out - targets_).squaredNorm() / static_cast<double>(inputs_.cols());
}

double MLPObjective::value_and_gradient(const Vector& theta, Vector& grad) const {
  const std::size_t n_layers = shape_.activations.size();
  std::vector<Matrix> pre(n_layers);
  std::vector<Matrix> post(n_layers + 1);
  std::vector<Eigen::Index> offsets(n_layers);
  post[0] = inputs_;
  Eigen::Index offset = 0;
  for (std::size_t l = 0; l < n_layers; ++l) {
    offsets[l] = offset;
    const int n_in = shape_.widths[l];
    const int n_out = shape_.widths[l + 1];
    const LayerView layer = layer_view(theta, offset, n_in, n_out);
    pre[l].noalias() = layer.weights * post[l];
    pre[l].colwise() += layer.bias;
    activate(shape_.activations[l], pre[l], post[l + 1]);
    offset += Eigen::Index{n_out} * n_in + n_out;
  }

  const double m = static_cast<double>(inputs_.cols());
  Matrix residual = post[n_layers] - targets_;
  const double loss = residual.squaredNorm() / m;

  grad.resize(n_params_);
  Matrix delta = (2.0 / m) * residual;
  for (std::size_t l = n_layers; l-- > 0;) {
    const int n_in = shape_.widths[l];
    const int n_out = shape_.widths[l + 1];
    scale_by_derivative(shape_.activations[l], pre[l], post[l + 1], delta);
    Eigen::Map<RowMajorMatrix> grad_w(grad.data() + offsets[l], n_out, n_in);
    grad_w.noalias() = delta * post[l].transpose();
    grad.segment(offsets[l] + Eigen::Index{n_out} * n_in, n_out) = delta.rowwise().sum();
    if (l > 0) {
      const LayerView layer = layer_view(theta, offsets[l], n_in, n_out);
      Matrix back = layer.weights.transpose() * delta;
      delta = std::move(back);
    }
  }
  return loss;
}

double mean_squared_error(const Matrix& predictions, const Matrix& targets) {
  if (predictions.size() == 0) return 0.0;
  return (predictions - targets).squaredNorm() / static_cast<double>(predictions.rows());
}

double rounding_accuracy(const Matrix& predictions, const Matrix& targets) {
  if (predictions.size() == 0) return 0.0;
  Eigen::Index correct = 0;
  for (Eigen::Index i = 0; i < predictions.size(); ++i) {
    const double label = predictions.data()[i] >= 0.5 ? 1.0 : 0.0;
    if (label == targets.data()[i]) ++correct;
  }
  return 100.0 * static_cast<double>(correct) / static_cast<double>(predictions.size());
}

}  // namespace lyapopt
