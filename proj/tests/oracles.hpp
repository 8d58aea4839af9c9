#pragma once

// Independent reference computations for the tests. Plain loops over
// std::vector; nothing here calls into the library's numerics.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <random>
#include <vector>

#include "lyapopt/objectives.hpp"

namespace oracle {

using Vec = std::vector<double>;

inline Vec to_vec(const lyapopt::Vector& v) { return Vec(v.data(), v.data() + v.size()); }

inline lyapopt::Vector to_eigen(const Vec& v) {
  lyapopt::Vector out(static_cast<Eigen::Index>(v.size()));
  for (std::size_t i = 0; i < v.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[i];
  return out;
}

inline double norm(const Vec& v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

// Central differences with relative step h_i = 1e-6 (1 + |theta_i|).
inline Vec central_gradient(const std::function<double(const lyapopt::Vector&)>& f, const lyapopt::Vector& theta) {
  Vec g(static_cast<std::size_t>(theta.size()));
  lyapopt::Vector x = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    const double h = 1e-6 * (1.0 + std::abs(theta[i]));
    x[i] = theta[i] + h;
    const double up = f(x);
    x[i] = theta[i] - h;
    const double down = f(x);
    x[i] = theta[i];
    g[static_cast<std::size_t>(i)] = (up - down) / (2.0 * h);
  }
  return g;
}

// One heavy-ball trial written out component by component.
struct MomentumTrial {
  Vec theta;
  Vec v;
};

inline MomentumTrial momentum_trial(const Vec& theta, const Vec& v, const Vec& g, double eta, double beta_bar) {
  MomentumTrial t{theta, v};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    t.v[i] = (1.0 - beta_bar * eta) * v[i] + eta * g[i];
    t.theta[i] = theta[i] - eta * t.v[i];
  }
  return t;
}

struct RmsTrial {
  Vec theta;
  Vec s;
};

inline RmsTrial rmsprop_trial(const Vec& theta, const Vec& s, const Vec& g, double eta, double beta_bar,
                              double eps_a) {
  RmsTrial t{theta, s};
  for (std::size_t i = 0; i < theta.size(); ++i) {
    t.s[i] = (1.0 - beta_bar * eta) * s[i] + beta_bar * eta * g[i] * g[i];
    t.theta[i] = theta[i] - eta * g[i] / (eps_a + std::sqrt(t.s[i]));
  }
  return t;
}

// Reference Adaptive Momentum iteration on a diagonal quadratic 1/2 sum d_i x_i^2,
// following the algorithm's control flow literally. Returns the accepted steps.
struct ReferenceRun {
  std::vector<double> etas;
  std::vector<int> trials;
  std::vector<Vec> thetas;
};

inline ReferenceRun reference_adaptive_momentum(const Vec& diag, Vec theta, int steps, double lambda,
                                                double beta_bar, double f1, double f2) {
  auto R = [&](const Vec& x) {
    double r = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) r += 0.5 * diag[i] * x[i] * x[i];
    return r;
  };
  Vec v(theta.size(), 0.0);
  double eta_prev = 0.0;
  ReferenceRun out;
  out.thetas.push_back(theta);
  for (int n = 0; n < steps; ++n) {
    Vec g(theta.size());
    for (std::size_t i = 0; i < theta.size(); ++i) g[i] = diag[i] * theta[i];
    double kin = 0.0;
    for (double x : v) kin += 0.5 * x * x;
    const double v_old = R(theta) + kin;
    double eta = eta_prev > 0.0 ? std::min(f2 * eta_prev, 1.0 / beta_bar) : 1.0 / beta_bar;
    int trials = 0;
    for (;;) {
      ++trials;
      const MomentumTrial t = momentum_trial(theta, v, g, eta, beta_bar);
      double k2 = 0.0;
      for (double x : t.v) k2 += x * x;
      const double v_new = R(t.theta) + 0.5 * k2;
      if (v_new - v_old <= -lambda * beta_bar * eta * k2) {
        theta = t.theta;
        v = t.v;
        break;
      }
      eta /= f1;
    }
    eta_prev = eta;
    out.etas.push_back(eta);
    out.trials.push_back(trials);
    out.thetas.push_back(theta);
  }
  return out;
}

// Gronwall conclusions evaluated from scratch at every index.
inline bool gronwall_brute(int kind, const Vec& u, const Vec& w, double gamma) {
  // kind: 0 two-step-exp, 1 two-step-power, 2 one-step-exp, 3 one-step-power
  const bool two = kind < 2;
  for (std::size_t n = two ? 2 : 0; n < u.size(); ++n) {
    double sum = 0.0;
    for (std::size_t k = two ? 1 : 0; k < n; ++k) sum += w[k];
    double bound = 0.0;
    switch (kind) {
      case 0: bound = std::exp(std::sqrt(u[0] * u[1]) - 0.5 * sum); break;
      case 1:
        bound = std::pow(2.0 / (std::pow(u[0], 1.0 - gamma) + std::pow(u[1], 1.0 - gamma) + (gamma - 1.0) * sum),
                         1.0 / (gamma - 1.0));
        break;
      case 2: bound = u[0] * std::exp(-sum); break;
      default: bound = std::pow(std::pow(u[0], 1.0 - gamma) + (gamma - 1.0) * sum, -1.0 / (gamma - 1.0));
    }
    if (u[n] > bound + 1e-12 * std::max(bound, u[n])) return false;
  }
  return true;
}

// A sequence satisfying the Gronwall hypothesis by construction: each u_n is
// pushed down by at least w u^gamma, with the weights trimmed so the
// decrease requirement holds exactly where u hits its floor.
struct GronwallSample {
  Vec u;
  Vec w;
};

inline GronwallSample random_gronwall_sample(int kind, double gamma, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const bool two = kind < 2;
  const std::size_t len = 5 + static_cast<std::size_t>(unit(rng) * 30);
  GronwallSample s{Vec(len), Vec(len, 0.0)};
  Vec& u = s.u;
  Vec& w = s.w;
  u[0] = 0.2 + unit(rng);
  if (two) u[1] = u[0] * (0.5 + 0.5 * unit(rng));
  for (std::size_t n = two ? 2 : 1; n < len; ++n) {
    const std::size_t k = n - 1;
    const double base = two ? u[n - 2] : u[n - 1];
    const double pk = std::pow(u[k], gamma);
    w[k] = 0.3 * unit(rng) + 1e-6;
    u[n] = std::max(1e-6, std::min(base - w[k] * pk * (1.0 + unit(rng)), u[n - 1]));
    if (base - u[n] < w[k] * pk) w[k] = (base - u[n]) / pk;
    if (two) w[k] = std::max(w[k], 1e-12);
  }
  if (two) w[1] = std::max(w[1], 1e-9);
  return s;
}

// Smaller of the two middle elements after a full sort.
inline double lower_median(Vec v) {
  std::sort(v.begin(), v.end());
  return v[(v.size() - 1) / 2];
}

// Ordinary least squares slope of y on x.
inline double ols_slope(const Vec& x, const Vec& y) {
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(x.size());
  my /= static_cast<double>(x.size());
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
  }
  return sxy / sxx;
}

}  // namespace oracle
