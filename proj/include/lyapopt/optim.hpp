#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "lyapopt/objectives.hpp"

namespace lyapopt {

// Backtracking below this step is reported as a stall.
inline constexpr double kStallFloor = 1e-30;

// Linesearch constants. The step ceiling is 1/friction.
struct BacktrackConfig {
  double shrink = 2.0;       // f1
  double grow = 1e4;         // f2
  double dissipation = 0.5;  // lambda
  double friction = 1.0;     // beta_bar

  double step_ceiling() const { return 1.0 / friction; }

  // f1 > 1, f2 >= 1, lambda in (0,1), beta_bar > 0. Throws ConfigError.
  void validate() const;
  // validate() plus beta_bar >= 1 and lambda < 1/(2 beta_bar).
  void validate_momentum() const;
};

// Cached R and grad R at theta so each iteration evaluates the gradient once.
struct MomentumState {
  Vector theta;
  Vector v;
  double eta = 0.0;  // last accepted step; 0 before the first step
  std::int64_t n = 0;
  double value = 0.0;
  Vector grad;

  static MomentumState start(ObjectiveHandle& obj, const Vector& theta0);
};

struct RMSPropState {
  Vector theta;
  Vector s;
  double eta = 0.0;
  std::int64_t n = 0;
  double value = 0.0;
  Vector grad;

  static RMSPropState start(ObjectiveHandle& obj, const Vector& theta0);
};

struct GdState {
  Vector theta;
  double eta = 0.0;
  std::int64_t n = 0;
  double value = 0.0;
  Vector grad;

  static GdState start(ObjectiveHandle& obj, const Vector& theta0);
};

// One accepted step n -> n+1. The Lyapunov value is V = R + |v|^2/2 for
// momentum and R otherwise.
struct TraceRow {
  std::int64_t iteration = 0;
  double eta = 0.0;            // accepted eta_n
  double eta_start = 0.0;      // first trial step of the linesearch
  double lyapunov_before = 0.0;
  double lyapunov_after = 0.0;
  double objective_before = 0.0;
  double objective_after = 0.0;
  double grad_norm = 0.0;      // |grad R(theta_n)|
  double displacement = 0.0;   // |theta_{n+1} - theta_n|
  double dissipation = 0.0;    // right-hand side of the acceptance test, <= 0
  std::uint64_t evaluations = 0;  // cumulative value evaluations after the step
  int trials = 1;
};

struct IterationTrace {
  std::vector<TraceRow> rows;
  std::vector<Vector> iterates;  // theta_0 .. theta_final when recorded
  bool converged = false;
  std::int64_t iterations = 0;
  Vector final_theta;
  double final_objective = 0.0;
  double final_grad_norm = 0.0;
  std::uint64_t value_evaluations = 0;
  std::uint64_t gradient_evaluations = 0;
  std::uint64_t linesearch_trials = 0;
  double wall_seconds = 0.0;
};

struct StopCriterion {
  double grad_tolerance = 1e-4;
  std::int64_t max_iterations = 200000;

  void validate() const;
};

enum class OptimizerKind { GdArmijo, Momentum, MomentumAdaptive, RMSProp, RMSPropAdaptive };

OptimizerKind parse_optimizer(const std::string& tag);
std::string to_string(OptimizerKind kind);
bool is_adaptive(OptimizerKind kind);

struct OptimizerConfig {
  OptimizerKind kind = OptimizerKind::MomentumAdaptive;
  BacktrackConfig backtrack;
  // Constant-step only. beta, when finite, overrides 1 - beta_bar*eta.
  double eta = 1e-2;
  double beta = std::numeric_limits<double>::quiet_NaN();
  double eps_a = 0.1;
  // GD-Armijo step ceiling; NaN means 1/beta_bar.
  double eta_init = std::numeric_limits<double>::quiet_NaN();

  // Effective averaging weight for the constant-step methods.
  double constant_beta() const;
  // Throws ConfigError.
  void validate() const;
};

// ---------------------------------------------------------------------------
// Trial maps and acceptance tests. No objective evaluations.

// v' = keep*v + eta*grad, theta' = theta - eta*v'.
std::pair<Vector, Vector> momentum_update(const Vector& theta, const Vector& v, const Vector& grad,
                                          double eta, double keep);
// momentum_update with keep = 1 - beta_bar*eta; requires 0 < eta <= 1/beta_bar.
std::pair<Vector, Vector> momentum_trial(const Vector& theta, const Vector& v, const Vector& grad,
                                         double eta, double beta_bar);

// R(theta) + |v|^2/2, one value evaluation.
double lyapunov_momentum(ObjectiveHandle& obj, const Vector& theta, const Vector& v);

double momentum_target(double eta, const Vector& v_new, double lambda, double beta_bar);
bool momentum_accept(double v_new_value, double v_old_value, double eta, const Vector& v_new,
                     double lambda, double beta_bar);

// s' = keep*s + mix*grad^2, theta' = theta - eta*grad/(eps_a + sqrt(s')).
std::pair<Vector, Vector> rmsprop_update(const Vector& theta, const Vector& s, const Vector& grad,
                                         double eta, double keep, double mix, double eps_a);
// rmsprop_update with keep = 1 - beta_bar*eta, mix = beta_bar*eta.
std::pair<Vector, Vector> rmsprop_trial(const Vector& theta, const Vector& s, const Vector& grad,
                                        double eta, double beta_bar, double eps_a);

double rmsprop_target(double eta, const Vector& grad, const Vector& s_new, double lambda,
                      double eps_a);
bool rmsprop_accept(double r_new, double r_old, double eta, const Vector& grad, const Vector& s_new,
                    double lambda, double eps_a);

// ---------------------------------------------------------------------------
// Backtracking engine.

template <class Candidate>
struct BacktrackResult {
  Candidate candidate;
  double eta = 0.0;
  double eta_start = 0.0;
  int trials = 0;
};

// First trial at min(grow*eta_prev, ceiling), or the ceiling when eta_prev is 0.
// trial(eta) must build a candidate from the caller's saved state without
// mutating it, so a rejection needs no restore. accept(candidate, eta) may
// throw ObjectiveOverflow, which counts as a rejection.
template <class Trial, class Accept>
auto backtrack(double eta_prev, double ceiling, double shrink, double grow, Trial&& trial,
               Accept&& accept) -> BacktrackResult<decltype(trial(1.0))> {
  const double eta0 = eta_prev > 0.0 ? std::min(grow * eta_prev, ceiling) : ceiling;
  double eta = eta0;
  int trials = 0;
  for (;;) {
    ++trials;
    auto candidate = trial(eta);
    bool ok = false;
    try {
      ok = accept(candidate, eta);
    } catch (const ObjectiveOverflow&) {
      ok = false;
    }
    if (ok) return {std::move(candidate), eta, eta0, trials};
    eta /= shrink;
    if (eta < kStallFloor) throw LinesearchStall(eta);
  }
}

// ---------------------------------------------------------------------------
// Step functions. Each advances the state by one iteration and refreshes the
// cached value and gradient at the new point.

TraceRow adaptive_momentum_step(MomentumState& state, ObjectiveHandle& obj,
                                const BacktrackConfig& cfg);
TraceRow adaptive_rmsprop_step(RMSPropState& state, ObjectiveHandle& obj,
                               const BacktrackConfig& cfg, double eps_a);
// Averaging weight beta_n = 1 - beta_bar*eta.
TraceRow constant_momentum_step(MomentumState& state, ObjectiveHandle& obj, double eta,
                                double beta_bar);
// Explicit averaging weight.
TraceRow constant_momentum_step_beta(MomentumState& state, ObjectiveHandle& obj, double eta,
                                     double beta);
TraceRow constant_rmsprop_step(RMSPropState& state, ObjectiveHandle& obj, double eta, double beta,
                               double eps_a);
// Armijo rule R(theta - eta g) - R(theta) <= -lambda eta |g|^2, first trial
// min(grow*eta_prev, eta_init).
TraceRow gd_armijo_step(GdState& state, ObjectiveHandle& obj, const BacktrackConfig& cfg,
                        double eta_init);

struct RunOptions {
  bool record_rows = true;
  bool record_iterates = false;
};

// Iterates until |grad R| <= tolerance or max_iterations steps. Optimizer
// errors (LinesearchStall, ObjectiveOverflow) propagate.
IterationTrace run(const OptimizerConfig& cfg, ObjectiveHandle& obj, const Vector& theta0,
                   const StopCriterion& stop, const RunOptions& options = {});

}  // namespace lyapopt
