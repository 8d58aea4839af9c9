#include "lyapopt/theory.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lyapopt {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kHypothesisSlack = 1e-12;

void require_positive(double x, const char* name) {
  if (!(std::isfinite(x) && x > 0.0)) {
    throw std::invalid_argument(std::string(name) + " must be finite and positive");
  }
}

void require_iterates(const IterationTrace& trace) {
  if (trace.iterates.empty()) throw std::invalid_argument("trace has no recorded iterates");
}

[[noreturn]] void violated(const std::string& what, std::size_t n) {
  std::ostringstream msg;
  msg << what << " at index " << n;
  throw HypothesisViolated(msg.str());
}

}  // namespace

double eta_root_momentum(double L, double lambda, double beta_bar) {
  require_positive(L, "L");
  require_positive(lambda, "lambda");
  if (beta_bar == 1.0) {
    if (lambda > 0.5) throw std::invalid_argument("beta_bar = 1 needs lambda <= 1/2");
    return std::min(1.0, (1.0 - 2.0 * lambda) / L);
  }
  if (beta_bar == 2.0) {
    if (!(lambda < 0.25)) throw std::invalid_argument("beta_bar = 2 needs lambda < 1/4");
    const double disc = std::sqrt(1.0 - 4.0 * lambda);
    const double l2 = 2.0 * (1.0 - 2.0 * lambda) + 2.0 * disc;
    // Below L2 the whole interval (0, 1/2] is admissible.
    if (L < l2) return 0.5;
    const double arg = 0.25 + (2.0 * lambda - 1.0) / L + 4.0 * lambda * lambda / (L * L);
    const double root = 0.5 - 2.0 * lambda / L - std::sqrt(std::max(0.0, arg));
    return std::min(0.5, root);
  }
  std::ostringstream msg;
  msg << "eta_root for beta_bar=" << beta_bar;
  throw NoClosedForm(msg.str());
}

StepFloor eta_o_rmsprop(double L, double lambda, double beta_bar, double eps_a, double f1) {
  require_positive(L, "L");
  require_positive(beta_bar, "beta_bar");
  require_positive(eps_a, "eps_a");
  if (!(lambda > 0.0 && lambda < 1.0)) throw std::invalid_argument("lambda must lie in (0,1)");
  if (!(f1 > 1.0)) throw std::invalid_argument("f1 must be > 1");
  const double eta_o = std::min(2.0 * eps_a * (1.0 - lambda) / L, 1.0 / beta_bar);
  return {eta_o, eta_o / f1};
}

double momentum_Bk(double eta_k, double eta_prev, double lambda, double beta_bar, double c) {
  require_positive(eta_k, "eta_k");
  require_positive(eta_prev, "eta_{k-1}");
  const double r = eta_k / eta_prev;
  const double bracket = (1.0 - beta_bar) * eta_k + 1.0;
  return 2.0 / (lambda * beta_bar * c * c * eta_k * eta_k * eta_k) *
         std::max(1.0, r * bracket * bracket);
}

RmsConstants rms_S_constants(double eta_star, double beta_bar, double L, double N, double eps_a) {
  require_positive(eta_star, "eta_star");
  require_positive(beta_bar, "beta_bar");
  const double be = beta_bar * eta_star;
  if (be > 1.0) throw std::invalid_argument("rms_S_constants needs beta_bar * eta_star <= 1");
  const double b3 = beta_bar * beta_bar * beta_bar;
  const double s_tilde = 1.0 / be +
                         2.0 * L * std::sqrt(N) * (1.0 - be) / (b3 * eta_star * eta_star) +
                         L * L * N * (1.0 - be) * (2.0 - be) /
                             (b3 * beta_bar * beta_bar * eta_star * eta_star * eta_star);
  const double root = eps_a + std::sqrt(s_tilde);
  return {s_tilde, root * root};
}

std::string to_string(RateKind kind) {
  switch (kind) {
    case RateKind::Exponential: return "exponential";
    case RateKind::Power: return "power";
    case RateKind::FiniteTime: return "finite-time";
  }
  return "?";
}

double RateBound::envelope(std::int64_t n) const {
  if (anchor < 0 || n < first_valid || kind == RateKind::FiniteTime) return kInf;
  if (!std::isfinite(constant)) return kInf;
  const std::int64_t last = n - sum_lag;
  if (last >= static_cast<std::int64_t>(weights.size())) return kInf;
  double sum = 0.0;
  for (std::int64_t k = anchor + sum_begin; k <= last; ++k) sum += weights[static_cast<std::size_t>(k)];
  if (kind == RateKind::Exponential) return constant * std::exp(-rate_factor * sum);
  return sum > 0.0 ? constant * std::pow(sum, exponent) : kInf;
}

double power_exponent(double alpha) {
  if (!(alpha > 0.0 && alpha < 0.5)) throw std::invalid_argument("power exponent needs alpha in (0, 1/2)");
  return -alpha / (1.0 - 2.0 * alpha);
}

double lyapunov_at(const IterationTrace& trace, std::int64_t n) {
  const auto rows = static_cast<std::int64_t>(trace.rows.size());
  if (n < 0 || n > rows) throw std::out_of_range("iterate index outside the trace");
  if (n < rows) return trace.rows[static_cast<std::size_t>(n)].lyapunov_before;
  if (rows == 0) return trace.final_objective;
  return trace.rows.back().lyapunov_after;
}

std::int64_t ball_entry(const IterationTrace& trace, const Vector& theta_star, double radius) {
  require_iterates(trace);
  for (std::size_t n = 0; n < trace.iterates.size(); ++n) {
    if ((trace.iterates[n] - theta_star).norm() < radius) return static_cast<std::int64_t>(n);
  }
  return -1;
}

namespace {

RateBound classify(double alpha) {
  RateBound bound;
  if (alpha > 0.5) {
    bound.kind = RateKind::FiniteTime;
  } else if (alpha < 0.5) {
    bound.kind = RateKind::Power;
    bound.exponent = power_exponent(alpha);
  }
  return bound;
}

}  // namespace

RateBound momentum_rate_bound(const IterationTrace& trace, const Vector& theta_star,
                              const LojasiewiczSpec& spec, const BacktrackConfig& cfg,
                              double eta_star, double lyapunov_star) {
  RateBound bound = classify(spec.exponent);
  const double lambda = cfg.dissipation;
  const double beta_bar = cfg.friction;
  const double c = spec.constant;

  bound.weights.assign(trace.rows.size(), 0.0);
  for (std::size_t k = 1; k < trace.rows.size(); ++k) {
    bound.weights[k] = 1.0 / momentum_Bk(trace.rows[k].eta, trace.rows[k - 1].eta, lambda, beta_bar, c);
  }
  bound.rate_factor = 0.25;
  bound.sum_begin = 1;
  bound.sum_lag = 2;
  if (bound.kind == RateKind::FiniteTime) return bound;

  bound.anchor = ball_entry(trace, theta_star, spec.radius);
  const auto rows = static_cast<std::int64_t>(trace.rows.size());
  if (bound.anchor < 0 || bound.anchor + 1 > rows) {
    bound.anchor = -1;
    return bound;
  }
  bound.first_valid = bound.anchor + 3;
  if (bound.kind == RateKind::Exponential) {
    const double v0 = std::max(0.0, lyapunov_at(trace, bound.anchor) - lyapunov_star);
    const double v1 = std::max(0.0, lyapunov_at(trace, bound.anchor + 1) - lyapunov_star);
    const double a_star = 2.0 / (lambda * spec.exponent * c * beta_bar) *
                          (1.0 / eta_star + (1.0 + beta_bar) * cfg.grow);
    const double sqrt_k = std::exp(0.5 * std::sqrt(v0 * v1));
    bound.constant = (1.0 / (2.0 * beta_bar * std::sqrt(lambda)) + a_star) * sqrt_k;
  }
  return bound;
}

RateBound rms_rate_bound(const IterationTrace& trace, const Vector& theta_star,
                         const LojasiewiczSpec& spec, double S, double lambda, double eps_a,
                         double objective_star) {
  RateBound bound = classify(spec.exponent);
  const double c = spec.constant;
  const double root_s = std::sqrt(S);
  bound.weights.resize(trace.rows.size());
  for (std::size_t k = 0; k < trace.rows.size(); ++k) {
    bound.weights[k] = lambda * c * c * trace.rows[k].eta / (2.0 * root_s);
  }
  bound.rate_factor = 1.0;
  bound.sum_begin = 0;
  bound.sum_lag = 1;
  if (bound.kind == RateKind::FiniteTime) return bound;

  bound.anchor = ball_entry(trace, theta_star, spec.radius);
  if (bound.anchor < 0) return bound;
  bound.first_valid = bound.anchor;
  if (bound.kind == RateKind::Exponential) {
    const double gap = std::abs(lyapunov_at(trace, bound.anchor) - objective_star);
    bound.constant = 2.0 * root_s / (lambda * c * eps_a) * gap;
  }
  return bound;
}

double complexity_bound(double f1, double f2, double beta_bar, double eta_star, std::int64_t n) {
  if (n < 1) throw std::invalid_argument("complexity bound needs n >= 1");
  const double lf1 = std::log(f1);
  return 1.0 + std::log(f2) / lf1 +
         std::log(f1 * f1 / (beta_bar * eta_star)) / (static_cast<double>(n) * lf1);
}

bool check_complexity(const IterationTrace& trace, double f1, double f2, double beta_bar,
                      double eta_star, std::int64_t warmup) {
  for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(warmup, 1)) - 1;
       i < trace.rows.size(); ++i) {
    const auto n = static_cast<std::int64_t>(i) + 1;
    const double mean = static_cast<double>(trace.rows[i].evaluations) / static_cast<double>(n);
    if (mean > complexity_bound(f1, f2, beta_bar, eta_star, n) + 1e-12) return false;
  }
  return true;
}

bool check_step_bound_rms(const IterationTrace& trace, double N, double beta_bar) {
  for (const TraceRow& row : trace.rows) {
    if (!(row.displacement <= std::sqrt(row.eta * N / beta_bar) + 1e-12)) return false;
  }
  return true;
}

double min_accepted_step(const IterationTrace& trace, std::int64_t from) {
  double m = kInf;
  for (std::size_t i = static_cast<std::size_t>(std::max<std::int64_t>(from, 0)); i < trace.rows.size(); ++i) {
    m = std::min(m, trace.rows[i].eta);
  }
  return m;
}

bool check_delta_inequality(const IterationTrace& trace, const LojasiewiczSpec& spec,
                            const BacktrackConfig& cfg, double lyapunov_star, std::int64_t from,
                            const Vector* theta_star) {
  const double alpha = spec.exponent;
  const double coef_base = 2.0 / (cfg.dissipation * alpha * spec.constant * cfg.friction);
  if (theta_star != nullptr) require_iterates(trace);
  for (std::size_t n = static_cast<std::size_t>(std::max<std::int64_t>(from, 1)); n < trace.rows.size(); ++n) {
    if (theta_star != nullptr &&
        (n >= trace.iterates.size() || (trace.iterates[n] - *theta_star).norm() >= spec.radius)) {
      continue;
    }
    const TraceRow& prev = trace.rows[n - 1];
    const TraceRow& cur = trace.rows[n];
    const double beta_n = 1.0 - cfg.friction * cur.eta;
    const double a_n = std::max(prev.eta, cur.eta * (cur.eta + beta_n));
    const double coef = coef_base * a_n / (prev.eta * cur.eta);
    const double v0 = std::pow(std::max(0.0, cur.lyapunov_before - lyapunov_star), alpha);
    const double v1 = std::pow(std::max(0.0, cur.lyapunov_after - lyapunov_star), alpha);
    const double lhs = cur.displacement;
    const double rhs = 0.5 * (prev.displacement - cur.displacement) + coef * (v0 - v1);
    const double scale = lhs + 0.5 * (prev.displacement + cur.displacement) + coef * (v0 + v1);
    if (lhs - rhs > 1e-9 * scale) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

GronwallKind parse_gronwall(const std::string& tag) {
  if (tag == "two-step-exp") return GronwallKind::TwoStepExp;
  if (tag == "two-step-power") return GronwallKind::TwoStepPower;
  if (tag == "one-step-exp") return GronwallKind::OneStepExp;
  if (tag == "one-step-power") return GronwallKind::OneStepPower;
  throw std::invalid_argument("unknown Gronwall kind '" + tag + "'");
}

std::string to_string(GronwallKind kind) {
  switch (kind) {
    case GronwallKind::TwoStepExp: return "two-step-exp";
    case GronwallKind::TwoStepPower: return "two-step-power";
    case GronwallKind::OneStepExp: return "one-step-exp";
    case GronwallKind::OneStepPower: return "one-step-power";
  }
  return "?";
}

namespace {

bool two_step(GronwallKind kind) {
  return kind == GronwallKind::TwoStepExp || kind == GronwallKind::TwoStepPower;
}

bool exp_kind(GronwallKind kind) {
  return kind == GronwallKind::TwoStepExp || kind == GronwallKind::OneStepExp;
}

// Bound from the partial weight sum; two-step sums start at k = 1, one-step at k = 0.
double bound_from_sum(GronwallKind kind, double u0, double u1, double gamma, double sum) {
  switch (kind) {
    case GronwallKind::TwoStepExp:
      return std::exp(std::sqrt(u0 * u1)) * std::exp(-0.5 * sum);
    case GronwallKind::TwoStepPower:
      return std::pow(2.0 / (std::pow(u0, 1.0 - gamma) + std::pow(u1, 1.0 - gamma) + (gamma - 1.0) * sum),
                      1.0 / (gamma - 1.0));
    case GronwallKind::OneStepExp:
      return u0 * std::exp(-sum);
    case GronwallKind::OneStepPower:
      return std::pow(std::pow(u0, 1.0 - gamma) + (gamma - 1.0) * sum, -1.0 / (gamma - 1.0));
  }
  return kInf;
}

void check_hypothesis(GronwallKind kind, const std::vector<double>& u, const std::vector<double>& w,
                      double gamma) {
  if (exp_kind(kind) ? gamma != 1.0 : !(gamma > 1.0)) {
    std::ostringstream msg;
    msg << "gamma=" << gamma << " not admissible for " << to_string(kind);
    throw HypothesisViolated(msg.str());
  }
  const std::size_t needed = u.empty() ? 0 : u.size() - 1;
  if (w.size() < needed) throw HypothesisViolated("weight sequence too short");
  for (std::size_t n = 0; n < u.size(); ++n) {
    if (!std::isfinite(u[n])) violated("non-finite u", n);
  }
  if (two_step(kind)) {
    for (std::size_t n = 0; n < u.size(); ++n) {
      if (!(u[n] > 0.0)) violated("u not positive", n);
      if (n > 0 && u[n] > u[n - 1]) violated("u increasing", n);
    }
    for (std::size_t k = 1; k + 1 < u.size(); ++k) {
      if (!(w[k] > 0.0) || !std::isfinite(w[k])) violated("w not positive", k);
    }
    for (std::size_t n = 2; n < u.size(); ++n) {
      const double drop = u[n - 2] - u[n];
      const double need = w[n - 1] * std::pow(u[n - 1], gamma);
      if (drop < need - kHypothesisSlack * u[n - 2]) violated("two-step decrease fails", n);
    }
  } else {
    for (std::size_t n = 0; n < u.size(); ++n) {
      if (!(u[n] >= 0.0)) violated("u negative", n);
    }
    for (std::size_t n = 0; n + 1 < u.size(); ++n) {
      if (!(w[n] >= 0.0) || !std::isfinite(w[n])) violated("w negative", n);
      const double step = u[n + 1] - u[n];
      const double need = -w[n] * std::pow(u[n], gamma);
      if (step > need + kHypothesisSlack * u[n]) violated("one-step decrease fails", n);
    }
  }
}

}  // namespace

double gronwall_bound(GronwallKind kind, const std::vector<double>& u, const std::vector<double>& w,
                      double gamma, std::size_t n) {
  if (u.size() < (two_step(kind) ? 2u : 1u)) throw std::invalid_argument("sequence too short");
  if (two_step(kind) && n < 2) throw std::invalid_argument("two-step bound needs n >= 2");
  const std::size_t begin = two_step(kind) ? 1 : 0;
  double sum = 0.0;
  for (std::size_t k = begin; k < n; ++k) sum += w.at(k);
  return bound_from_sum(kind, u[0], two_step(kind) ? u[1] : 0.0, gamma, sum);
}

bool check_gronwall(GronwallKind kind, const std::vector<double>& u, const std::vector<double>& w,
                    double gamma) {
  check_hypothesis(kind, u, w, gamma);
  if (u.empty()) return true;
  const bool two = two_step(kind);
  const std::size_t first = two ? 2 : 0;
  double sum = 0.0;
  if (two && u.size() > 2) sum = w[1];
  for (std::size_t n = first; n < u.size(); ++n) {
    if (!two && n > 0) sum += w[n - 1];
    if (two && n > 2) sum += w[n - 1];
    const double bound = bound_from_sum(kind, u[0], two ? u[1] : 0.0, gamma, sum);
    if (u[n] > bound + 1e-12 * std::max(bound, u[n])) return false;
  }
  return true;
}

// ---------------------------------------------------------------------------

RateFit fit_rate(const std::vector<double>& distances, RateModel model, double tail_fraction) {
  if (!(tail_fraction > 0.0 && tail_fraction <= 1.0)) {
    throw std::invalid_argument("tail fraction must lie in (0,1]");
  }
  const double floor = 10.0 * std::numeric_limits<double>::epsilon();
  const auto begin = static_cast<std::size_t>(std::floor((1.0 - tail_fraction) * static_cast<double>(distances.size())));
  std::vector<double> xs;
  std::vector<double> ys;
  for (std::size_t i = begin; i < distances.size(); ++i) {
    const double d = distances[i];
    if (!(std::isfinite(d) && d > floor)) continue;
    if (model == RateModel::Power && i == 0) continue;
    xs.push_back(model == RateModel::Exponential ? static_cast<double>(i) : std::log(static_cast<double>(i)));
    ys.push_back(std::log(d));
  }
  if (xs.size() < 10) {
    std::ostringstream msg;
    msg << "only " << xs.size() << " usable tail points";
    throw DegenerateFit(msg.str());
  }
  const double m = static_cast<double>(xs.size());
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    mx += xs[i];
    my += ys[i];
  }
  mx /= m;
  my /= m;
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    sxx += (xs[i] - mx) * (xs[i] - mx);
    sxy += (xs[i] - mx) * (ys[i] - my);
  }
  if (!(sxx > 0.0)) throw DegenerateFit("tail abscissae are all equal");
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  fit.factor = std::exp(fit.slope);
  fit.points = xs.size();
  return fit;
}

RateFit rate_fit(const IterationTrace& trace, RateModel model, double tail_fraction,
                 const Vector* theta_star) {
  require_iterates(trace);
  const Vector& target = theta_star != nullptr ? *theta_star : trace.iterates.back();
  std::vector<double> distances;
  distances.reserve(trace.iterates.size());
  for (const Vector& theta : trace.iterates) distances.push_back((theta - target).norm());
  return fit_rate(distances, model, tail_fraction);
}

}  // namespace lyapopt
