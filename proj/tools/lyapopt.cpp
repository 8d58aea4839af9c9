// Command-line front end: run, sweep, verify, report.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>

#include "CLI11.hpp"
#include "lyapopt/harness.hpp"

namespace {

using namespace lyapopt;

constexpr int kOk = 0;
constexpr int kRunFailure = 1;
constexpr int kConfigError = 2;

// Flags shared by run and sweep; each one overrides the config file when given.
struct Overrides {
  std::string config;
  std::string objective;
  std::string optimizer;
  double beta_bar = 1.0;
  double beta = 0.0;
  double lambda = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  double eps_a = 0.0;
  double eta = 0.0;
  double eps_grad = 1e-4;
  std::int64_t max_epochs = 200000;
  std::string dataset;
  int label_col = -1;
  double test_fraction = 0.5;
  std::uint64_t seed = 0;
  std::string out = ".";
  bool dump_traces = false;
  int jobs = 1;

  std::map<std::string, CLI::Option*> opts;

  void add(CLI::App* app) {
    opts["config"] = app->add_option("config", config, "JSON experiment config");
    opts["objective"] = app->add_option("--objective", objective,
                                        "quadratic[:d1,d2,..] | monomial[:p[:N]] | rosenbrock | sonar | boston");
    opts["optimizer"] = app->add_option("--optimizer", optimizer)
                            ->check(CLI::IsMember({"gd-armijo", "momentum", "momentum-adaptive", "rmsprop",
                                                   "rmsprop-adaptive"}));
    opts["beta-bar"] = app->add_option("--beta-bar", beta_bar, "friction beta_bar");
    opts["beta"] = app->add_option("--beta", beta, "averaging weight (constant-step only)");
    opts["lambda"] = app->add_option("--lambda", lambda, "dissipation rate");
    opts["f1"] = app->add_option("--f1", f1, "backtracking shrink factor");
    opts["f2"] = app->add_option("--f2", f2, "warm-start growth factor");
    opts["eps-a"] = app->add_option("--eps-a", eps_a, "RMSProp regularizer");
    opts["eta"] = app->add_option("--eta", eta, "step (constant-step only)");
    opts["eps-grad"] = app->add_option("--eps-grad", eps_grad, "stop when |grad R| <= this")->capture_default_str();
    opts["max-epochs"] = app->add_option("--max-epochs", max_epochs, "iteration cap")->capture_default_str();
    opts["dataset"] = app->add_option("--dataset", dataset, "CSV for MLP objectives");
    opts["label-col"] = app->add_option("--label-col", label_col, "0-based label column");
    opts["test-fraction"] = app->add_option("--test-fraction", test_fraction);
    opts["seed"] = app->add_option("--seed", seed, "single initialization seed");
    opts["out"] = app->add_option("--out", out, "output directory")->capture_default_str();
    opts["dump-traces"] = app->add_flag("--dump-traces", dump_traces, "write one trace CSV per run");
    opts["jobs"] = app->add_option("--jobs", jobs, "parallel seeds (0: all cores)")->capture_default_str();
  }

  bool given(const std::string& name) const { return opts.at(name)->count() > 0; }

  std::vector<ExperimentConfig> build() const {
    std::vector<ExperimentConfig> cfgs;
    if (given("config")) {
      cfgs = load_experiments(config);
    } else {
      ExperimentConfig cfg;
      cfg.objective = parse_objective_spec(given("objective") ? objective : "quadratic", default_data_dir());
      cfg.optimizer = default_optimizer(OptimizerKind::MomentumAdaptive, beta_bar);
      cfg.id = (given("objective") ? objective : "quadratic");
      cfgs.push_back(cfg);
    }
    for (ExperimentConfig& cfg : cfgs) {
      if (given("objective") && given("config")) {
        cfg.objective = parse_objective_spec(objective, default_data_dir());
      }
      if (given("optimizer")) {
        cfg.optimizer = default_optimizer(parse_optimizer(optimizer), beta_bar);
        if (!given("config")) cfg.id += "-" + optimizer;
      } else if (given("beta-bar")) {
        cfg.optimizer.backtrack.friction = beta_bar;
        if (cfg.optimizer.kind == OptimizerKind::MomentumAdaptive && !given("lambda")) {
          cfg.optimizer.backtrack.dissipation = 1.0 / (4.0 * beta_bar);
        }
      }
      OptimizerConfig& o = cfg.optimizer;
      if (given("beta")) o.beta = beta;
      else if (given("beta-bar") && o.kind == OptimizerKind::Momentum) o.beta = std::nan("");
      if (given("lambda")) o.backtrack.dissipation = lambda;
      if (given("f1")) o.backtrack.shrink = f1;
      if (given("f2")) o.backtrack.grow = f2;
      if (given("eps-a")) o.eps_a = eps_a;
      if (given("eta")) o.eta = eta;
      if (given("eps-grad")) cfg.stop.grad_tolerance = eps_grad;
      if (given("max-epochs")) cfg.stop.max_iterations = max_epochs;
      if (given("dataset")) {
        if (!cfg.objective.is_mlp()) throw ConfigError("--dataset needs an MLP objective (sonar or boston)");
        cfg.objective.dataset = dataset;
      }
      if (given("label-col")) cfg.objective.label_column = label_col;
      if (given("test-fraction")) cfg.objective.test_fraction = test_fraction;
      if (given("seed")) cfg.seeds = {seed};
      cfg.output_dir = out;
      if (given("dump-traces")) cfg.dump_traces = dump_traces;
      cfg.validate();
    }
    return cfgs;
  }
};

std::string fmt(const std::optional<double>& x) {
  if (!x) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", *x);
  return buf;
}

int execute(const std::vector<ExperimentConfig>& cfgs, int jobs, const std::string& out) {
  AggregateReport report;
  bool failed = false;
  for (const ExperimentConfig& cfg : cfgs) {
    std::cerr << "[" << cfg.id << "] " << cfg.seeds.size() << " seed(s)\n";
    const ExperimentResult result = run_experiment(cfg, jobs);
    for (const SeedResult& s : result.seeds) {
      if (!s.error.empty()) {
        failed = true;
        std::cerr << "  seed " << s.seed << " failed: " << s.error << "\n";
      }
    }
    report.rows.push_back(aggregate(cfg, result.seeds));
    const AggregateRow& r = report.rows.back();
    std::cout << r.config_id << ": non-cv " << fmt(r.non_cv_pct) << "%, train " << fmt(r.median_train)
              << ", test " << fmt(r.median_test) << ", time " << fmt(r.median_time_s) << " s, evals "
              << fmt(r.median_evals) << ", evals/ls " << fmt(r.mean_evals_per_ls) << "\n";
  }
  std::filesystem::create_directories(out);
  emit_report(report, ReportFormat::Csv, out + "/report.csv");
  emit_report(report, ReportFormat::Json, out + "/report.json");
  std::cerr << "wrote " << out << "/report.csv and report.json\n";
  return failed ? kRunFailure : kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Lyapunov-based adaptive optimizers: runs, sweeps, theory checks"};
  app.require_subcommand(1);

  Overrides run_flags;
  CLI::App* run_cmd = app.add_subcommand("run", "run one experiment config");
  run_flags.add(run_cmd);

  Overrides sweep_flags;
  int n_seeds = 20;
  bool tables = false;
  CLI::App* sweep_cmd = app.add_subcommand("sweep", "run a config over seeds 0..K-1");
  sweep_flags.add(sweep_cmd);
  sweep_cmd->add_option("--seeds", n_seeds, "number of seeds")->capture_default_str();
  sweep_cmd->add_flag("--tables", tables, "the benchmark table configs on Sonar and Boston");

  std::string level = "fast";
  int verify_jobs = 1;
  std::string data_dir = default_data_dir();
  CLI::App* verify_cmd = app.add_subcommand("verify", "optimizer and theory invariant checks");
  verify_cmd->add_option("--level", level)->check(CLI::IsMember({"fast", "full"}))->capture_default_str();
  verify_cmd->add_option("--jobs", verify_jobs)->capture_default_str();
  verify_cmd->add_option("--data-dir", data_dir)->capture_default_str();

  std::string report_in;
  std::string report_out;
  std::string report_format = "csv";
  CLI::App* report_cmd = app.add_subcommand("report", "re-aggregate a stored report.json");
  report_cmd->add_option("input", report_in, "report.json from run or sweep")->required();
  report_cmd->add_option("--format", report_format)->check(CLI::IsMember({"csv", "json"}))->capture_default_str();
  report_cmd->add_option("--out", report_out, "output file (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (run_cmd->parsed()) {
      return execute(run_flags.build(), run_flags.jobs, run_flags.out);
    }
    if (sweep_cmd->parsed()) {
      if (n_seeds < 1) throw ConfigError("--seeds must be >= 1");
      std::vector<ExperimentConfig> cfgs;
      if (tables) {
        cfgs = table_experiments(default_data_dir(), n_seeds);
        for (auto& c : cfgs) {
          c.output_dir = sweep_flags.out;
          c.dump_traces = sweep_flags.dump_traces;
          if (sweep_flags.given("max-epochs")) c.stop.max_iterations = sweep_flags.max_epochs;
          if (sweep_flags.given("eps-grad")) c.stop.grad_tolerance = sweep_flags.eps_grad;
        }
      } else {
        cfgs = sweep_flags.build();
        for (auto& c : cfgs) {
          c.seeds.clear();
          for (int i = 0; i < n_seeds; ++i) c.seeds.push_back(static_cast<std::uint64_t>(i));
        }
      }
      return execute(cfgs, sweep_flags.jobs, sweep_flags.out);
    }
    if (verify_cmd->parsed()) {
      const auto results = verify_suite(level == "full" ? VerifyLevel::Full : VerifyLevel::Fast, data_dir, verify_jobs);
      bool ok = true;
      for (const CheckResult& c : results) {
        ok = ok && c.passed;
        std::printf("%-4s %-34s %8.2fs  %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.seconds, c.detail.c_str());
      }
      return ok ? kOk : kRunFailure;
    }
    if (report_cmd->parsed()) {
      AggregateReport report = load_report_json(report_in);
      for (auto& row : report.rows) row = reaggregate(row);
      if (report_out.empty()) {
        std::cout << (report_format == "csv" ? report_csv(report) : report_json(report));
      } else {
        emit_report(report, report_format == "csv" ? ReportFormat::Csv : ReportFormat::Json, report_out);
      }
      return kOk;
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRunFailure;
  }
  return kOk;
}
