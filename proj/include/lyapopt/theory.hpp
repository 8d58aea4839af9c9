#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "lyapopt/optim.hpp"

namespace lyapopt {

// Largest step below which the momentum dissipation test always passes on an
// L-smooth objective. Closed forms exist for beta_bar in {1, 2} only; other
// values throw NoClosedForm.
double eta_root_momentum(double L, double lambda, double beta_bar);

struct StepFloor {
  double eta_o = 0.0;
  double eta_star = 0.0;  // eta_o / f1
};

// eta_o = min(2 eps_a (1 - lambda)/L, 1/beta_bar).
StepFloor eta_o_rmsprop(double L, double lambda, double beta_bar, double eps_a, double f1);

// (2/(lambda beta_bar c^2 eta_k^3)) max(1, r_k [(1 - beta_bar) eta_k + 1]^2), r_k = eta_k/eta_{k-1}.
double momentum_Bk(double eta_k, double eta_prev, double lambda, double beta_bar, double c);

struct RmsConstants {
  double s_tilde = 0.0;
  double s = 0.0;  // (eps_a + sqrt(s_tilde))^2
};

RmsConstants rms_S_constants(double eta_star, double beta_bar, double L, double N, double eps_a);

enum class RateKind { Exponential, Power, FiniteTime };

std::string to_string(RateKind kind);

// Predicted bound on |theta_n - theta*|.
//   Exponential: constant * exp(-rate_factor * sum_{k = anchor+sum_begin}^{n - sum_lag} weights[k])
//   Power:       constant * (sum of the same weights)^exponent, when constant is known
// envelope(n) is +inf where the bound makes no claim (n < first_valid, finite
// time, unknown constant).
struct RateBound {
  RateKind kind = RateKind::Exponential;
  double constant = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> weights;  // indexed by iteration
  double rate_factor = 1.0;
  double exponent = std::numeric_limits<double>::quiet_NaN();  // -alpha/(1 - 2 alpha)
  std::int64_t anchor = -1;  // n1, -1 if the trace never entered the ball
  std::int64_t sum_begin = 0;
  std::int64_t sum_lag = 1;
  std::int64_t first_valid = std::numeric_limits<std::int64_t>::max();

  double envelope(std::int64_t n) const;
};

// -alpha/(1 - 2 alpha) for alpha < 1/2.
double power_exponent(double alpha);

// Lyapunov value at iterate n (V for momentum traces, R otherwise).
double lyapunov_at(const IterationTrace& trace, std::int64_t n);

// First iterate within radius of theta_star; -1 if none. Needs recorded iterates.
std::int64_t ball_entry(const IterationTrace& trace, const Vector& theta_star, double radius);

// Envelope for Adaptive Momentum. spec is the Lojasiewicz pair of V at
// (theta*, 0); eta_star is the step floor; lyapunov_star = V(theta*, 0).
RateBound momentum_rate_bound(const IterationTrace& trace, const Vector& theta_star,
                              const LojasiewiczSpec& spec, const BacktrackConfig& cfg,
                              double eta_star, double lyapunov_star = 0.0);

// Envelope for (Adaptive) RMSProp with a constant S. spec is the pair of R.
RateBound rms_rate_bound(const IterationTrace& trace, const Vector& theta_star,
                         const LojasiewiczSpec& spec, double S, double lambda, double eps_a,
                         double objective_star = 0.0);

// Average evaluations per iteration bound: 1 + log f2/log f1 + log(f1^2/(beta_bar eta*))/(n log f1).
double complexity_bound(double f1, double f2, double beta_bar, double eta_star, std::int64_t n);

// C_n/n <= complexity_bound(n) for every n >= warmup (n >= 1).
bool check_complexity(const IterationTrace& trace, double f1, double f2, double beta_bar,
                      double eta_star, std::int64_t warmup = 1);

// Every |theta_{n+1} - theta_n| <= sqrt(eta_n N/beta_bar) + 1e-12.
bool check_step_bound_rms(const IterationTrace& trace, double N, double beta_bar);

// Smallest accepted step over rows [from, end); +inf if empty.
double min_accepted_step(const IterationTrace& trace, std::int64_t from = 0);

// Delta-inequality relating successive displacements and V^alpha, checked at
// each n >= max(from, 1) with relative tolerance 1e-9. When theta_star is
// given (and iterates are recorded) only indices inside spec.radius count.
bool check_delta_inequality(const IterationTrace& trace, const LojasiewiczSpec& spec,
                            const BacktrackConfig& cfg, double lyapunov_star,
                            std::int64_t from = 1, const Vector* theta_star = nullptr);

enum class GronwallKind { TwoStepExp, TwoStepPower, OneStepExp, OneStepPower };

GronwallKind parse_gronwall(const std::string& tag);
std::string to_string(GronwallKind kind);

// Conclusion bound at index n (n >= 2 for two-step, n >= 0 for one-step).
double gronwall_bound(GronwallKind kind, const std::vector<double>& u,
                      const std::vector<double>& w, double gamma, std::size_t n);

// Verifies the hypothesis (HypothesisViolated otherwise), then reports
// whether the conclusion holds at every index. w must have at least u.size()
// entries for one-step kinds and u.size() - 1 for two-step kinds.
bool check_gronwall(GronwallKind kind, const std::vector<double>& u, const std::vector<double>& w,
                    double gamma);

enum class RateModel { Exponential, Power };

struct RateFit {
  double slope = 0.0;      // d log|e| / dn or d log|e| / d log n
  double intercept = 0.0;
  double factor = 0.0;     // exp(slope), per-step factor for the exponential model
  std::size_t points = 0;
};

// Least-squares fit of log distance over the trailing tail_fraction of the
// sequence; entries <= 10 machine epsilon are dropped. Index i is the
// iteration number. Throws DegenerateFit below 10 usable points.
RateFit fit_rate(const std::vector<double>& distances, RateModel model, double tail_fraction);

// Distances |theta_n - theta*| from the recorded iterates; theta* defaults to
// the final iterate.
RateFit rate_fit(const IterationTrace& trace, RateModel model, double tail_fraction,
                 const Vector* theta_star = nullptr);

}  // namespace lyapopt
