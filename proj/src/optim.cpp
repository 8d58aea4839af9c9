#include "lyapopt/optim.hpp"

#include <chrono>
#include <cmath>
#include <sstream>

namespace lyapopt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool finite_positive(double x) { return std::isfinite(x) && x > 0.0; }

std::string fmt(double x) {
  std::ostringstream out;
  out << x;
  return out.str();
}

void check_step(double eta, double beta_bar) {
  if (!(eta > 0.0) || eta * beta_bar > 1.0) {
    throw std::invalid_argument("step " + fmt(eta) + " outside (0, 1/beta_bar] for beta_bar=" +
                                fmt(beta_bar));
  }
}

template <class State>
void start_state(State& st, ObjectiveHandle& obj, const Vector& theta0) {
  st.theta = theta0;
  auto [value, grad] = obj.value_and_grad(theta0);
  st.value = value;
  st.grad = std::move(grad);
}

// Moves to theta_new whose value is already known; only the gradient is new.
template <class State>
void advance(State& st, ObjectiveHandle& obj, Vector theta_new, double value_new) {
  st.theta = std::move(theta_new);
  st.value = value_new;
  st.grad = obj.gradient(st.theta);
  ++st.n;
}

// Moves to theta_new with one combined evaluation (constant-step methods).
template <class State>
void advance_evaluating(State& st, ObjectiveHandle& obj, Vector theta_new) {
  st.theta = std::move(theta_new);
  auto [value, grad] = obj.value_and_grad(st.theta);
  st.value = value;
  st.grad = std::move(grad);
  ++st.n;
}

}  // namespace

// ---------------------------------------------------------------------------

void BacktrackConfig::validate() const {
  if (!(std::isfinite(shrink) && shrink > 1.0)) throw ConfigError("f1 must be > 1, got " + fmt(shrink));
  if (!(std::isfinite(grow) && grow >= 1.0)) throw ConfigError("f2 must be >= 1, got " + fmt(grow));
  if (!(dissipation > 0.0 && dissipation < 1.0)) {
    throw ConfigError("lambda must lie in (0,1), got " + fmt(dissipation));
  }
  if (!finite_positive(friction)) throw ConfigError("beta_bar must be > 0, got " + fmt(friction));
}

void BacktrackConfig::validate_momentum() const {
  validate();
  if (friction < 1.0) throw ConfigError("momentum needs beta_bar >= 1, got " + fmt(friction));
  if (!(dissipation < 0.5 / friction)) {
    throw ConfigError("momentum needs lambda < 1/(2 beta_bar) = " + fmt(0.5 / friction) +
                      ", got " + fmt(dissipation));
  }
}

MomentumState MomentumState::start(ObjectiveHandle& obj, const Vector& theta0) {
  MomentumState st;
  start_state(st, obj, theta0);
  st.v = Vector::Zero(theta0.size());
  return st;
}

RMSPropState RMSPropState::start(ObjectiveHandle& obj, const Vector& theta0) {
  RMSPropState st;
  start_state(st, obj, theta0);
  st.s = Vector::Zero(theta0.size());
  return st;
}

GdState GdState::start(ObjectiveHandle& obj, const Vector& theta0) {
  GdState st;
  start_state(st, obj, theta0);
  return st;
}

void StopCriterion::validate() const {
  if (!finite_positive(grad_tolerance)) throw ConfigError("gradient tolerance must be > 0");
  if (max_iterations < 1) throw ConfigError("max epochs must be >= 1");
}

OptimizerKind parse_optimizer(const std::string& tag) {
  if (tag == "gd-armijo") return OptimizerKind::GdArmijo;
  if (tag == "momentum") return OptimizerKind::Momentum;
  if (tag == "momentum-adaptive") return OptimizerKind::MomentumAdaptive;
  if (tag == "rmsprop") return OptimizerKind::RMSProp;
  if (tag == "rmsprop-adaptive") return OptimizerKind::RMSPropAdaptive;
  throw ConfigError("unknown optimizer '" + tag + "'");
}

std::string to_string(OptimizerKind kind) {
  switch (kind) {
    case OptimizerKind::GdArmijo: return "gd-armijo";
    case OptimizerKind::Momentum: return "momentum";
    case OptimizerKind::MomentumAdaptive: return "momentum-adaptive";
    case OptimizerKind::RMSProp: return "rmsprop";
    case OptimizerKind::RMSPropAdaptive: return "rmsprop-adaptive";
  }
  return "?";
}

bool is_adaptive(OptimizerKind kind) {
  return kind == OptimizerKind::GdArmijo || kind == OptimizerKind::MomentumAdaptive ||
         kind == OptimizerKind::RMSPropAdaptive;
}

double OptimizerConfig::constant_beta() const {
  if (std::isfinite(beta)) return beta;
  return 1.0 - backtrack.friction * eta;
}

void OptimizerConfig::validate() const {
  switch (kind) {
    case OptimizerKind::GdArmijo:
      backtrack.validate();
      if (!std::isnan(eta_init) && !finite_positive(eta_init)) {
        throw ConfigError("eta_init must be > 0");
      }
      break;
    case OptimizerKind::MomentumAdaptive:
      backtrack.validate_momentum();
      break;
    case OptimizerKind::RMSPropAdaptive:
      backtrack.validate();
      if (!finite_positive(eps_a)) throw ConfigError("eps_a must be > 0");
      break;
    case OptimizerKind::Momentum: {
      if (!finite_positive(eta)) throw ConfigError("eta must be > 0");
      if (std::isfinite(beta)) {
        if (!(beta >= 0.0 && beta < 1.0)) throw ConfigError("beta must lie in [0,1)");
      } else {
        if (!finite_positive(backtrack.friction)) throw ConfigError("beta_bar must be > 0");
        if (eta * backtrack.friction > 1.0) throw ConfigError("momentum needs eta <= 1/beta_bar");
      }
      break;
    }
    case OptimizerKind::RMSProp: {
      if (!finite_positive(eta)) throw ConfigError("eta must be > 0");
      if (!finite_positive(eps_a)) throw ConfigError("eps_a must be > 0");
      const double b = constant_beta();
      if (!(b > 0.0 && b < 1.0)) throw ConfigError("rmsprop needs beta in (0,1), got " + fmt(b));
      break;
    }
  }
}

// ---------------------------------------------------------------------------

std::pair<Vector, Vector> momentum_update(const Vector& theta, const Vector& v, const Vector& grad,
                                          double eta, double keep) {
  Vector v_new = keep * v + eta * grad;
  Vector theta_new = theta - eta * v_new;
  return {std::move(theta_new), std::move(v_new)};
}

std::pair<Vector, Vector> momentum_trial(const Vector& theta, const Vector& v, const Vector& grad,
                                         double eta, double beta_bar) {
  check_step(eta, beta_bar);
  return momentum_update(theta, v, grad, eta, 1.0 - beta_bar * eta);
}

double lyapunov_momentum(ObjectiveHandle& obj, const Vector& theta, const Vector& v) {
  return obj.value(theta) + 0.5 * v.squaredNorm();
}

double momentum_target(double eta, const Vector& v_new, double lambda, double beta_bar) {
  return -lambda * beta_bar * eta * v_new.squaredNorm();
}

bool momentum_accept(double v_new_value, double v_old_value, double eta, const Vector& v_new,
                     double lambda, double beta_bar) {
  return v_new_value - v_old_value <= momentum_target(eta, v_new, lambda, beta_bar);
}

std::pair<Vector, Vector> rmsprop_update(const Vector& theta, const Vector& s, const Vector& grad,
                                         double eta, double keep, double mix, double eps_a) {
  Vector s_new = keep * s.array() + mix * grad.array().square();
  Vector theta_new = theta.array() - eta * grad.array() / (eps_a + s_new.array().sqrt());
  return {std::move(theta_new), std::move(s_new)};
}

std::pair<Vector, Vector> rmsprop_trial(const Vector& theta, const Vector& s, const Vector& grad,
                                        double eta, double beta_bar, double eps_a) {
  check_step(eta, beta_bar);
  const double mix = beta_bar * eta;
  return rmsprop_update(theta, s, grad, eta, 1.0 - mix, mix, eps_a);
}

double rmsprop_target(double eta, const Vector& grad, const Vector& s_new, double lambda,
                      double eps_a) {
  return -lambda * eta * (grad.array().square() / (eps_a + s_new.array().sqrt())).sum();
}

bool rmsprop_accept(double r_new, double r_old, double eta, const Vector& grad, const Vector& s_new,
                    double lambda, double eps_a) {
  return r_new - r_old <= rmsprop_target(eta, grad, s_new, lambda, eps_a);
}

// ---------------------------------------------------------------------------

TraceRow adaptive_momentum_step(MomentumState& state, ObjectiveHandle& obj,
                                const BacktrackConfig& cfg) {
  struct Candidate {
    Vector theta, v;
    double value = kNaN;
  };
  const double lambda = cfg.dissipation;
  const double beta_bar = cfg.friction;
  const double v_old = state.value + 0.5 * state.v.squaredNorm();

  auto result = backtrack(
      state.eta, cfg.step_ceiling(), cfg.shrink, cfg.grow,
      [&](double eta) {
        auto [theta, v] = momentum_trial(state.theta, state.v, state.grad, eta, beta_bar);
        return Candidate{std::move(theta), std::move(v)};
      },
      [&](Candidate& c, double eta) {
        if (!c.theta.allFinite()) return false;
        c.value = obj.value(c.theta);
        const double v_new = c.value + 0.5 * c.v.squaredNorm();
        return momentum_accept(v_new, v_old, eta, c.v, lambda, beta_bar);
      });

  Candidate& c = result.candidate;
  TraceRow row;
  row.iteration = state.n;
  row.eta = result.eta;
  row.eta_start = result.eta_start;
  row.lyapunov_before = v_old;
  row.lyapunov_after = c.value + 0.5 * c.v.squaredNorm();
  row.objective_before = state.value;
  row.objective_after = c.value;
  row.grad_norm = state.grad.norm();
  row.displacement = (c.theta - state.theta).norm();
  row.dissipation = momentum_target(result.eta, c.v, lambda, beta_bar);
  row.trials = result.trials;

  state.v = std::move(c.v);
  state.eta = result.eta;
  advance(state, obj, std::move(c.theta), c.value);
  row.evaluations = obj.value_evaluations();
  return row;
}

TraceRow adaptive_rmsprop_step(RMSPropState& state, ObjectiveHandle& obj,
                               const BacktrackConfig& cfg, double eps_a) {
  struct Candidate {
    Vector theta, s;
    double value = kNaN;
  };
  const double lambda = cfg.dissipation;
  const double beta_bar = cfg.friction;

  auto result = backtrack(
      state.eta, cfg.step_ceiling(), cfg.shrink, cfg.grow,
      [&](double eta) {
        auto [theta, s] = rmsprop_trial(state.theta, state.s, state.grad, eta, beta_bar, eps_a);
        return Candidate{std::move(theta), std::move(s)};
      },
      [&](Candidate& c, double eta) {
        if (!c.theta.allFinite()) return false;
        c.value = obj.value(c.theta);
        return rmsprop_accept(c.value, state.value, eta, state.grad, c.s, lambda, eps_a);
      });

  Candidate& c = result.candidate;
  TraceRow row;
  row.iteration = state.n;
  row.eta = result.eta;
  row.eta_start = result.eta_start;
  row.lyapunov_before = state.value;
  row.lyapunov_after = c.value;
  row.objective_before = state.value;
  row.objective_after = c.value;
  row.grad_norm = state.grad.norm();
  row.displacement = (c.theta - state.theta).norm();
  row.dissipation = rmsprop_target(result.eta, state.grad, c.s, lambda, eps_a);
  row.trials = result.trials;

  state.s = std::move(c.s);
  state.eta = result.eta;
  advance(state, obj, std::move(c.theta), c.value);
  row.evaluations = obj.value_evaluations();
  return row;
}

TraceRow constant_momentum_step(MomentumState& state, ObjectiveHandle& obj, double eta,
                                double beta_bar) {
  check_step(eta, beta_bar);
  return constant_momentum_step_beta(state, obj, eta, 1.0 - beta_bar * eta);
}

TraceRow constant_momentum_step_beta(MomentumState& state, ObjectiveHandle& obj, double eta,
                                     double beta) {
  auto [theta, v] = momentum_update(state.theta, state.v, state.grad, eta, beta);
  TraceRow row;
  row.iteration = state.n;
  row.eta = eta;
  row.eta_start = eta;
  row.lyapunov_before = state.value + 0.5 * state.v.squaredNorm();
  row.objective_before = state.value;
  row.grad_norm = state.grad.norm();
  row.displacement = (theta - state.theta).norm();
  row.dissipation = kNaN;
  state.v = std::move(v);
  state.eta = eta;
  advance_evaluating(state, obj, std::move(theta));
  row.objective_after = state.value;
  row.lyapunov_after = state.value + 0.5 * state.v.squaredNorm();
  row.evaluations = obj.value_evaluations();
  return row;
}

TraceRow constant_rmsprop_step(RMSPropState& state, ObjectiveHandle& obj, double eta, double beta,
                               double eps_a) {
  auto [theta, s] = rmsprop_update(state.theta, state.s, state.grad, eta, beta, 1.0 - beta, eps_a);
  TraceRow row;
  row.iteration = state.n;
  row.eta = eta;
  row.eta_start = eta;
  row.lyapunov_before = state.value;
  row.objective_before = state.value;
  row.grad_norm = state.grad.norm();
  row.displacement = (theta - state.theta).norm();
  row.dissipation = kNaN;
  state.s = std::move(s);
  state.eta = eta;
  advance_evaluating(state, obj, std::move(theta));
  row.objective_after = state.value;
  row.lyapunov_after = state.value;
  row.evaluations = obj.value_evaluations();
  return row;
}

TraceRow gd_armijo_step(GdState& state, ObjectiveHandle& obj, const BacktrackConfig& cfg,
                        double eta_init) {
  struct Candidate {
    Vector theta;
    double value = kNaN;
  };
  const double lambda = cfg.dissipation;
  const double g2 = state.grad.squaredNorm();

  auto result = backtrack(
      state.eta, eta_init, cfg.shrink, cfg.grow,
      [&](double eta) { return Candidate{state.theta - eta * state.grad}; },
      [&](Candidate& c, double eta) {
        if (!c.theta.allFinite()) return false;
        c.value = obj.value(c.theta);
        return c.value - state.value <= -lambda * eta * g2;
      });

  Candidate& c = result.candidate;
  TraceRow row;
  row.iteration = state.n;
  row.eta = result.eta;
  row.eta_start = result.eta_start;
  row.lyapunov_before = state.value;
  row.lyapunov_after = c.value;
  row.objective_before = state.value;
  row.objective_after = c.value;
  row.grad_norm = std::sqrt(g2);
  row.displacement = (c.theta - state.theta).norm();
  row.dissipation = -lambda * result.eta * g2;
  row.trials = result.trials;

  state.eta = result.eta;
  advance(state, obj, std::move(c.theta), c.value);
  row.evaluations = obj.value_evaluations();
  return row;
}

// ---------------------------------------------------------------------------

namespace {

template <class State, class Step>
void drive(State& state, const StopCriterion& stop,
           const RunOptions& options, std::uint64_t value_base, IterationTrace& trace, Step&& step) {
  if (options.record_iterates) trace.iterates.push_back(state.theta);
  for (;;) {
    if (state.grad.norm() <= stop.grad_tolerance) {
      trace.converged = true;
      break;
    }
    if (state.n >= stop.max_iterations) break;
    TraceRow row = step(state);
    row.evaluations -= value_base;
    trace.linesearch_trials += static_cast<std::uint64_t>(row.trials);
    if (options.record_rows) trace.rows.push_back(row);
    if (options.record_iterates) trace.iterates.push_back(state.theta);
  }
  trace.iterations = state.n;
  trace.final_theta = state.theta;
  trace.final_objective = state.value;
  trace.final_grad_norm = state.grad.norm();
}

}  // namespace

IterationTrace run(const OptimizerConfig& cfg, ObjectiveHandle& obj, const Vector& theta0,
                   const StopCriterion& stop, const RunOptions& options) {
  cfg.validate();
  stop.validate();
  if (theta0.size() != obj.dimension()) throw std::invalid_argument("theta0 has the wrong size");

  const auto t0 = std::chrono::steady_clock::now();
  const std::uint64_t value_base = obj.value_evaluations();
  const std::uint64_t grad_base = obj.gradient_evaluations();
  IterationTrace trace;

  switch (cfg.kind) {
    case OptimizerKind::MomentumAdaptive: {
      auto st = MomentumState::start(obj, theta0);
      drive(st, stop, options, value_base, trace,
            [&](MomentumState& s) { return adaptive_momentum_step(s, obj, cfg.backtrack); });
      break;
    }
    case OptimizerKind::RMSPropAdaptive: {
      auto st = RMSPropState::start(obj, theta0);
      drive(st, stop, options, value_base, trace, [&](RMSPropState& s) {
        return adaptive_rmsprop_step(s, obj, cfg.backtrack, cfg.eps_a);
      });
      break;
    }
    case OptimizerKind::Momentum: {
      auto st = MomentumState::start(obj, theta0);
      const bool explicit_beta = std::isfinite(cfg.beta);
      drive(st, stop, options, value_base, trace, [&](MomentumState& s) {
        return explicit_beta ? constant_momentum_step_beta(s, obj, cfg.eta, cfg.beta)
                             : constant_momentum_step(s, obj, cfg.eta, cfg.backtrack.friction);
      });
      break;
    }
    case OptimizerKind::RMSProp: {
      auto st = RMSPropState::start(obj, theta0);
      const double beta = cfg.constant_beta();
      drive(st, stop, options, value_base, trace, [&](RMSPropState& s) {
        return constant_rmsprop_step(s, obj, cfg.eta, beta, cfg.eps_a);
      });
      break;
    }
    case OptimizerKind::GdArmijo: {
      auto st = GdState::start(obj, theta0);
      const double ceiling =
          std::isnan(cfg.eta_init) ? cfg.backtrack.step_ceiling() : cfg.eta_init;
      drive(st, stop, options, value_base, trace,
            [&](GdState& s) { return gd_armijo_step(s, obj, cfg.backtrack, ceiling); });
      break;
    }
  }

  trace.value_evaluations = obj.value_evaluations() - value_base;
  trace.gradient_evaluations = obj.gradient_evaluations() - grad_base;
  trace.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return trace;
}

}  // namespace lyapopt
