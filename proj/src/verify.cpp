#include <chrono>
#include <cmath>
#include <functional>
#include <random>
#include <sstream>

#include "lyapopt/harness.hpp"
#include "lyapopt/theory.hpp"

namespace lyapopt {

namespace {

struct Canned {
  std::string name;
  std::shared_ptr<const Objective> objective;
  Vector theta0;
  Vector theta_star;
  double L = std::numeric_limits<double>::quiet_NaN();  // known smoothness or NaN
  LojasiewiczSpec spec;
  bool quadratic = false;
};

Vector unit_ones(Eigen::Index n) { return Vector::Ones(n) / std::sqrt(static_cast<double>(n)); }

std::vector<Canned> analytic_battery() {
  std::vector<Canned> out;
  {
    Matrix a = Vector((Vector(2) << 1.0, 4.0).finished()).asDiagonal();
    auto q = make_quadratic(a, Vector::Zero(2));
    out.push_back({"quadratic-diag", q, unit_ones(2), q->minimizer(), q->smoothness(), q->lojasiewicz(), true});
  }
  {
    Matrix a(3, 3);
    a << 3.0, 1.0, 0.0, 1.0, 2.0, 0.5, 0.0, 0.5, 1.0;
    Vector star(3);
    star << 1.0, -1.0, 0.5;
    auto q = make_quadratic(a, star);
    out.push_back({"quadratic-coupled", q, unit_ones(3), q->minimizer(), q->smoothness(), q->lojasiewicz(), true});
  }
  {
    auto m = std::make_shared<MonomialObjective>(4, 2);
    out.push_back({"monomial-p4", m, unit_ones(2), Vector::Zero(2), std::numeric_limits<double>::quiet_NaN(),
                   m->lojasiewicz(), false});
  }
  {
    auto r = std::make_shared<RosenbrockObjective>();
    out.push_back({"rosenbrock", r, unit_ones(2), r->minimizer(), std::numeric_limits<double>::quiet_NaN(), {}, false});
  }
  return out;
}

struct Variant {
  OptimizerKind kind;
  double beta_bar;
};

constexpr Variant kVariants[] = {{OptimizerKind::MomentumAdaptive, 1.0},
                                 {OptimizerKind::MomentumAdaptive, 2.0},
                                 {OptimizerKind::RMSPropAdaptive, 1.0},
                                 {OptimizerKind::RMSPropAdaptive, 10.0}};

bool momentum(OptimizerKind k) { return k == OptimizerKind::MomentumAdaptive || k == OptimizerKind::Momentum; }

std::string label(const std::string& objective, const OptimizerConfig& cfg) {
  std::ostringstream s;
  s << objective << "/" << to_string(cfg.kind) << "/b" << cfg.backtrack.friction;
  return s.str();
}

struct BatteryRun {
  std::string label;
  OptimizerConfig cfg;
  const Canned* problem = nullptr;
  IterationTrace trace;
  std::string error;
};

std::vector<BatteryRun> run_battery(const std::vector<Canned>& battery, std::int64_t max_iterations,
                                    bool iterates) {
  std::vector<BatteryRun> out;
  for (const Canned& c : battery) {
    for (const Variant& v : kVariants) {
      BatteryRun r;
      r.cfg = default_optimizer(v.kind, v.beta_bar);
      r.label = label(c.name, r.cfg);
      r.problem = &c;
      try {
        ObjectiveHandle h(c.objective);
        r.trace = run(r.cfg, h, c.theta0, StopCriterion{1e-4, max_iterations}, RunOptions{true, iterates});
      } catch (const std::exception& e) {
        r.error = e.what();
      }
      out.push_back(std::move(r));
    }
  }
  return out;
}

// Step floor eta* where L is known; the smallest accepted step otherwise.
double eta_star_for(const BatteryRun& r) {
  const BacktrackConfig& b = r.cfg.backtrack;
  if (std::isfinite(r.problem->L)) {
    if (momentum(r.cfg.kind)) return eta_root_momentum(r.problem->L, b.dissipation, b.friction) / b.shrink;
    return eta_o_rmsprop(r.problem->L, b.dissipation, b.friction, r.cfg.eps_a, b.shrink).eta_star;
  }
  return min_accepted_step(r.trace);
}

using Body = std::function<bool(std::ostringstream&)>;

CheckResult timed(const std::string& name, const Body& body) {
  CheckResult c;
  c.name = name;
  const auto t0 = std::chrono::steady_clock::now();
  std::ostringstream detail;
  try {
    c.passed = body(detail);
  } catch (const std::exception& e) {
    c.passed = false;
    detail << "exception: " << e.what();
  }
  c.detail = detail.str();
  c.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return c;
}

bool battery_ok(const std::vector<BatteryRun>& runs, std::ostringstream& d) {
  for (const BatteryRun& r : runs) {
    if (!r.error.empty()) {
      d << r.label << ": " << r.error;
      return false;
    }
  }
  return true;
}

bool dissipation_holds(const std::vector<BatteryRun>& runs, std::ostringstream& d) {
  if (!battery_ok(runs, d)) return false;
  std::size_t steps = 0;
  for (const BatteryRun& r : runs) {
    for (const TraceRow& row : r.trace.rows) {
      ++steps;
      const double slack = 1e-12 * (1.0 + std::abs(row.lyapunov_before));
      if (row.lyapunov_after - row.lyapunov_before > row.dissipation + slack) {
        d << r.label << " step " << row.iteration << ": dV=" << row.lyapunov_after - row.lyapunov_before
          << " > " << row.dissipation;
        return false;
      }
    }
  }
  d << steps << " accepted steps over " << runs.size() << " runs";
  return true;
}

bool complexity_holds(const std::vector<BatteryRun>& runs, std::ostringstream& d) {
  if (!battery_ok(runs, d)) return false;
  double worst = 0.0;
  for (const BatteryRun& r : runs) {
    const BacktrackConfig& b = r.cfg.backtrack;
    if (!check_complexity(r.trace, b.shrink, b.grow, b.friction, eta_star_for(r))) {
      d << r.label << ": C_n/n above the bound";
      return false;
    }
    if (!r.trace.rows.empty()) {
      worst = std::max(worst, static_cast<double>(r.trace.value_evaluations) /
                                  static_cast<double>(r.trace.rows.size()));
    }
  }
  d << "largest C_n/n " << worst << " (asymptotic bound " << 1.0 + std::log(1e4) / std::log(2.0) << ")";
  return true;
}

bool rms_displacement_holds(const std::vector<BatteryRun>& runs, std::ostringstream& d) {
  if (!battery_ok(runs, d)) return false;
  std::size_t checked = 0;
  for (const BatteryRun& r : runs) {
    if (momentum(r.cfg.kind)) continue;
    ++checked;
    const double n = static_cast<double>(r.problem->objective->dimension());
    if (!check_step_bound_rms(r.trace, n, r.cfg.backtrack.friction)) {
      d << r.label << ": displacement above sqrt(eta N / beta_bar)";
      return false;
    }
  }
  d << checked << " RMSProp runs";
  return true;
}

std::vector<CheckResult> analytic_checks() {
  std::vector<CheckResult> out;
  const auto battery = analytic_battery();
  const auto runs = run_battery(battery, 100000, true);

  out.push_back(timed("config-gate", [](std::ostringstream& d) {
    OptimizerConfig bad = default_optimizer(OptimizerKind::MomentumAdaptive, 1.0);
    bad.backtrack.dissipation = 0.9;
    try {
      bad.validate();
    } catch (const ConfigError& e) {
      d << "lambda=0.9 rejected: " << e.what();
      return true;
    }
    d << "lambda=0.9 accepted for momentum";
    return false;
  }));

  out.push_back(timed("dissipation", [&](std::ostringstream& d) { return dissipation_holds(runs, d); }));

  out.push_back(timed("convergence", [&](std::ostringstream& d) {
    if (!battery_ok(runs, d)) return false;
    for (const BatteryRun& r : runs) {
      if (!r.trace.converged) {
        d << r.label << " did not converge (|grad| " << r.trace.final_grad_norm << ")";
        return false;
      }
    }
    d << runs.size() << " runs converged";
    return true;
  }));

  out.push_back(timed("step-floor", [&](std::ostringstream& d) {
    if (!battery_ok(runs, d)) return false;
    for (const BatteryRun& r : runs) {
      if (!r.problem->quadratic) continue;
      const double floor = eta_star_for(r);
      const double seen = min_accepted_step(r.trace, 1);
      if (seen < floor) {
        d << r.label << ": eta " << seen << " < floor " << floor;
        return false;
      }
      d << r.label << " min eta " << seen << " >= " << floor << "; ";
    }
    return true;
  }));

  out.push_back(timed("complexity", [&](std::ostringstream& d) { return complexity_holds(runs, d); }));
  out.push_back(timed("rms-displacement", [&](std::ostringstream& d) { return rms_displacement_holds(runs, d); }));

  out.push_back(timed("rate-envelope", [&](std::ostringstream& d) {
    if (!battery_ok(runs, d)) return false;
    for (const BatteryRun& r : runs) {
      if (!r.problem->quadratic) continue;
      const Canned& c = *r.problem;
      const BacktrackConfig& b = r.cfg.backtrack;
      // n1 is the entry into the 0.1 ball even where the inequality holds globally.
      LojasiewiczSpec spec = c.spec;
      spec.radius = 0.1;
      RateBound bound;
      if (momentum(r.cfg.kind)) {
        LojasiewiczSpec v_spec = spec;
        v_spec.constant = std::min(c.spec.constant, std::sqrt(2.0));
        bound = momentum_rate_bound(r.trace, c.theta_star, v_spec, b, eta_star_for(r));
      } else {
        const double eta_star = eta_star_for(r);
        const auto n = static_cast<double>(c.objective->dimension());
        const RmsConstants s = rms_S_constants(eta_star, b.friction, c.L, n, r.cfg.eps_a);
        bound = rms_rate_bound(r.trace, c.theta_star, spec, s.s, b.dissipation, r.cfg.eps_a);
      }
      if (bound.anchor < 0) {
        // Landing on theta* from outside the ball leaves no index after n1.
        if ((r.trace.final_theta - c.theta_star).norm() < 100.0 * std::numeric_limits<double>::epsilon()) continue;
        d << r.label << ": never entered the ball";
        return false;
      }
      for (std::size_t n = 0; n < r.trace.iterates.size(); ++n) {
        const double dist = (r.trace.iterates[n] - c.theta_star).norm();
        // Distances at rounding level carry no rate information.
        if (dist < 100.0 * std::numeric_limits<double>::epsilon()) continue;
        if (dist > bound.envelope(static_cast<std::int64_t>(n))) {
          d << r.label << " n=" << n << ": " << dist << " above envelope " << bound.envelope(static_cast<std::int64_t>(n));
          return false;
        }
      }
      if (r.trace.iterations > 10000) {
        d << r.label << ": " << r.trace.iterations << " iterations";
        return false;
      }
      // The slope is fitted on a longer run; one that lands exactly on
      // theta* leaves nothing to fit.
      ObjectiveHandle h(c.objective);
      const IterationTrace longer = run(r.cfg, h, c.theta0, StopCriterion{1e-10, 10000}, RunOptions{false, true});
      const double last = (longer.final_theta - c.theta_star).norm();
      if (last > 10.0 * std::numeric_limits<double>::epsilon()) {
        const RateFit fit = rate_fit(longer, RateModel::Exponential, 1.0, &c.theta_star);
        if (fit.slope > 0.0) {
          d << r.label << ": fitted slope " << fit.slope << " > 0";
          return false;
        }
      }
    }
    d << "all quadratic runs below their envelopes";
    return true;
  }));

  out.push_back(timed("delta-inequality", [&](std::ostringstream& d) {
    if (!battery_ok(runs, d)) return false;
    for (const BatteryRun& r : runs) {
      if (!r.problem->quadratic || !momentum(r.cfg.kind)) continue;
      LojasiewiczSpec v_spec = r.problem->spec;
      v_spec.constant = std::min(v_spec.constant, std::sqrt(2.0));
      if (!check_delta_inequality(r.trace, v_spec, r.cfg.backtrack, 0.0, 1, &r.problem->theta_star)) {
        d << r.label << ": inequality fails inside the ball";
        return false;
      }
    }
    d << "holds on quadratic momentum runs";
    return true;
  }));

  out.push_back(timed("power-rate", [&](std::ostringstream& d) {
    auto x4 = std::make_shared<MonomialObjective>(4, 1);
    for (OptimizerKind kind : {OptimizerKind::GdArmijo, OptimizerKind::MomentumAdaptive}) {
      ObjectiveHandle h(x4);
      const OptimizerConfig cfg = default_optimizer(kind, 1.0);
      const IterationTrace t = run(cfg, h, Vector::Ones(1), StopCriterion{1e-12, 20000}, RunOptions{true, true});
      const Vector zero = Vector::Zero(1);
      const RateFit fit = rate_fit(t, RateModel::Power, 0.5, &zero);
      d << to_string(kind) << " slope " << fit.slope << "; ";
      if (fit.slope < -0.7 || fit.slope > -0.3) return false;
    }
    return true;
  }));

  out.push_back(timed("constant-step", [&](std::ostringstream& d) {
    for (const Canned& c : battery) {
      if (!c.quadratic) continue;
      const double lambda = 0.25;
      OptimizerConfig mom = default_optimizer(OptimizerKind::Momentum, 1.0);
      mom.backtrack.friction = 1.0;
      mom.eta = eta_root_momentum(c.L, lambda, 1.0);
      mom.beta = std::numeric_limits<double>::quiet_NaN();
      OptimizerConfig rms = default_optimizer(OptimizerKind::RMSProp, 1.0);
      rms.eps_a = 0.1;
      rms.eta = eta_o_rmsprop(c.L, 0.5, 1.0, rms.eps_a, 2.0).eta_o;
      rms.beta = std::numeric_limits<double>::quiet_NaN();
      for (const OptimizerConfig& cfg : {mom, rms}) {
        ObjectiveHandle h(c.objective);
        const IterationTrace t = run(cfg, h, c.theta0, StopCriterion{1e-4, 100000});
        if (!t.converged) {
          d << c.name << "/" << to_string(cfg.kind) << " eta=" << cfg.eta << " did not converge";
          return false;
        }
        d << c.name << "/" << to_string(cfg.kind) << " " << t.iterations << " its; ";
      }
    }
    return true;
  }));

  out.push_back(timed("non-monotone-objective", [&](std::ostringstream& d) {
    if (!battery_ok(runs, d)) return false;
    for (const BatteryRun& r : runs) {
      if (!r.problem->quadratic || !momentum(r.cfg.kind)) continue;
      bool rose = false;
      bool v_monotone = true;
      for (const TraceRow& row : r.trace.rows) {
        rose = rose || row.objective_after > row.objective_before;
        v_monotone = v_monotone && row.lyapunov_after <= row.lyapunov_before;
      }
      if (rose && v_monotone) {
        d << r.label << ": R increases on some step, V never does";
        return true;
      }
    }
    d << "no quadratic momentum run showed an R increase";
    return false;
  }));

  out.push_back(timed("gronwall", [](std::ostringstream& d) {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t disagreements = 0;
    for (GronwallKind kind : {GronwallKind::TwoStepExp, GronwallKind::TwoStepPower, GronwallKind::OneStepExp,
                              GronwallKind::OneStepPower}) {
      const bool two = kind == GronwallKind::TwoStepExp || kind == GronwallKind::TwoStepPower;
      const double gamma = (kind == GronwallKind::TwoStepExp || kind == GronwallKind::OneStepExp) ? 1.0 : 2.0;
      for (int trial = 0; trial < 100; ++trial) {
        const std::size_t len = 5 + static_cast<std::size_t>(unit(rng) * 30);
        std::vector<double> u(len), w(len, 0.0);
        u[0] = 0.2 + unit(rng);
        if (two) u[1] = u[0] * (0.5 + 0.5 * unit(rng));
        for (std::size_t n = two ? 2 : 1; n < len; ++n) {
          const std::size_t k = n - 1;
          w[k] = 0.3 * unit(rng);
          const double base = two ? u[n - 2] : u[n - 1];
          const double drop = w[k] * std::pow(u[k], gamma) * (1.0 + unit(rng));
          u[n] = std::max(1e-6, std::min(base - drop, u[n - 1]));
          if (two && base - u[n] < w[k] * std::pow(u[k], gamma)) w[k] = (base - u[n]) / std::pow(u[k], gamma);
          if (!two && u[n - 1] - u[n] < w[k] * std::pow(u[k], gamma)) w[k] = (u[n - 1] - u[n]) / std::pow(u[k], gamma);
        }
        if (two) w[1] = std::max(w[1], 1e-9);
        for (auto& x : w) x = std::max(x, two ? 1e-12 : 0.0);
        bool brute = true;
        for (std::size_t n = two ? 2 : 0; n < len; ++n) {
          const double b = gronwall_bound(kind, u, w, gamma, n);
          if (u[n] > b + 1e-12 * std::max(b, u[n])) brute = false;
        }
        bool fast = false;
        try {
          fast = check_gronwall(kind, u, w, gamma);
        } catch (const HypothesisViolated&) {
          continue;
        }
        if (fast != brute) ++disagreements;
      }
    }
    d << disagreements << " disagreements";
    return disagreements == 0;
  }));

  return out;
}

std::vector<CheckResult> mlp_checks(const std::string& data_dir) {
  std::vector<CheckResult> out;
  std::vector<Canned> battery;
  for (const auto& spec : {sonar_spec(data_dir), boston_spec(data_dir)}) {
    const Problem p = build_problem(spec);
    Canned c;
    c.name = spec.network;
    c.objective = p.objective;
    c.theta0 = p.initial_point(0);
    battery.push_back(std::move(c));
  }
  const auto runs = run_battery(battery, 3000, false);
  out.push_back(timed("mlp-dissipation", [&](std::ostringstream& d) { return dissipation_holds(runs, d); }));
  out.push_back(timed("mlp-complexity", [&](std::ostringstream& d) { return complexity_holds(runs, d); }));
  out.push_back(timed("mlp-rms-displacement", [&](std::ostringstream& d) { return rms_displacement_holds(runs, d); }));
  return out;
}

std::vector<CheckResult> table_checks(const std::string& data_dir, int jobs) {
  std::vector<CheckResult> out;
  for (const ExperimentConfig& cfg : table_experiments(data_dir, 20)) {
    out.push_back(timed("table/" + cfg.id, [&](std::ostringstream& d) {
      const AggregateRow row = aggregate(cfg, run_experiment(cfg, jobs).seeds);
      d << "non-cv " << row.non_cv_pct << "%, median train "
        << (row.median_train ? std::to_string(*row.median_train) : "n/a") << ", median test "
        << (row.median_test ? std::to_string(*row.median_test) : "n/a");
      const bool sonar = cfg.id.rfind("sonar", 0) == 0;
      if (cfg.optimizer.kind == OptimizerKind::RMSProp) return row.median_train && *row.median_train <= 80.0;
      if (row.non_cv_pct != 0.0 || !row.median_train) return false;
      return sonar ? *row.median_train == 100.0 : *row.median_train <= 1e-3;
    }));
  }
  return out;
}

}  // namespace

std::vector<CheckResult> verify_suite(VerifyLevel level, const std::string& data_dir, int jobs) {
  std::vector<CheckResult> out = analytic_checks();
  if (level == VerifyLevel::Full) {
    for (auto& c : mlp_checks(data_dir)) out.push_back(std::move(c));
    for (auto& c : table_checks(data_dir, jobs)) out.push_back(std::move(c));
  }
  return out;
}

}  // namespace lyapopt
