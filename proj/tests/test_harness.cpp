#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "lyapopt/harness.hpp"
#include "oracles.hpp"

using namespace lyapopt;

namespace {

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("lyapopt_harness_" + name)).string();
}

SeedResult seed_result(std::uint64_t seed, bool converged, double train) {
  SeedResult r;
  r.seed = seed;
  r.converged = converged;
  r.iterations = 10 + static_cast<std::int64_t>(seed);
  r.train_metric = train;
  r.test_metric = train - 5.0;
  r.wall_seconds = 0.01 * static_cast<double>(seed + 1);
  r.value_evaluations = 40 + seed;
  r.gradient_evaluations = 11 + seed;
  r.evals_per_linesearch = 3.0;
  r.final_grad_norm = 1e-5;
  return r;
}

ExperimentConfig quadratic_config() {
  ExperimentConfig cfg;
  cfg.id = "quad";
  cfg.objective = parse_objective_spec("quadratic:1,4", default_data_dir());
  cfg.optimizer = default_optimizer(OptimizerKind::MomentumAdaptive, 1.0);
  cfg.seeds = {0, 1, 2};
  return cfg;
}

void strip_times(AggregateRow& row) {
  row.median_time_s.reset();
  for (auto& s : row.seeds) s.wall_seconds = 0.0;
}

}  // namespace

TEST(Config, JsonRoundTrip) {
  ExperimentConfig cfg = quadratic_config();
  cfg.objective.matrix = {{3.0, 1.0}, {1.0, 2.0}};
  cfg.objective.minimizer = {1.0, -1.0};
  cfg.stop = StopCriterion{1e-6, 1234};
  cfg.dump_traces = true;
  cfg.output_dir = "somewhere";
  const ExperimentConfig back = experiment_from_json(to_json(cfg));
  EXPECT_EQ(back.id, cfg.id);
  EXPECT_EQ(back.objective.matrix, cfg.objective.matrix);
  EXPECT_EQ(back.objective.minimizer, cfg.objective.minimizer);
  EXPECT_EQ(back.optimizer.kind, cfg.optimizer.kind);
  EXPECT_EQ(back.optimizer.backtrack.dissipation, cfg.optimizer.backtrack.dissipation);
  EXPECT_EQ(back.optimizer.backtrack.grow, cfg.optimizer.backtrack.grow);
  EXPECT_EQ(back.stop.grad_tolerance, 1e-6);
  EXPECT_EQ(back.stop.max_iterations, 1234);
  EXPECT_EQ(back.seeds, cfg.seeds);
  EXPECT_TRUE(back.dump_traces);
  EXPECT_EQ(to_json(back), to_json(cfg));
}

TEST(Config, MomentumGateRejectedBeforeRun) {
  ExperimentConfig cfg = quadratic_config();
  cfg.optimizer.backtrack.dissipation = 0.5;  // 1/(2 beta_bar)
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.optimizer.backtrack.dissipation = 0.9;
  EXPECT_THROW(run_experiment(cfg), ConfigError);
}

TEST(Config, BadJson) {
  EXPECT_THROW(experiment_from_json("{not json"), ConfigError);
  EXPECT_THROW(experiment_from_json(R"({"optimizer": {"tag": "adam"}})"), ConfigError);
  EXPECT_THROW(parse_objective_spec("banana", default_data_dir()), ConfigError);
}

TEST(Config, Defaults) {
  const OptimizerConfig m = default_optimizer(OptimizerKind::Momentum);
  EXPECT_EQ(m.eta, 1e-2);
  EXPECT_NEAR((1.0 - m.constant_beta()) / m.eta, 10.0, 1e-12);
  const OptimizerConfig a = default_optimizer(OptimizerKind::MomentumAdaptive, 2.0);
  EXPECT_EQ(a.backtrack.dissipation, 0.125);
  EXPECT_EQ(a.backtrack.shrink, 2.0);
  EXPECT_EQ(a.backtrack.grow, 1e4);
  const OptimizerConfig r = default_optimizer(OptimizerKind::RMSPropAdaptive, 10.0);
  EXPECT_EQ(r.backtrack.dissipation, 0.5);
  EXPECT_EQ(r.eps_a, 0.1);
}

TEST(Aggregate, DefinitionExamples) {
  ExperimentConfig cfg = quadratic_config();
  const AggregateRow row = aggregate(cfg, {seed_result(0, true, 100), seed_result(1, true, 100), seed_result(2, false, 50)});
  EXPECT_NEAR(row.non_cv_pct, 100.0 / 3.0, 1e-12);
  ASSERT_TRUE(row.median_train);
  EXPECT_EQ(*row.median_train, 100.0);

  const AggregateRow none = aggregate(cfg, {seed_result(0, false, 1), seed_result(1, false, 2)});
  EXPECT_EQ(none.non_cv_pct, 100.0);
  EXPECT_FALSE(none.median_train);
  EXPECT_FALSE(none.median_test);
  EXPECT_FALSE(none.median_evals);

  const SeedResult one = seed_result(4, true, 77);
  const AggregateRow single = aggregate(cfg, {one});
  EXPECT_EQ(single.non_cv_pct, 0.0);
  EXPECT_EQ(*single.median_train, 77.0);
  EXPECT_EQ(*single.median_test, 72.0);
  EXPECT_EQ(*single.median_evals, 44.0);
  EXPECT_EQ(*single.median_time_s, one.wall_seconds);
}

TEST(Aggregate, FailedRunsCountAsNonConvergent) {
  SeedResult bad = seed_result(0, false, 0);
  bad.error = "linesearch stall";
  bad.train_metric.reset();
  const AggregateRow row = aggregate(quadratic_config(), {bad, seed_result(1, true, 3.0)});
  EXPECT_EQ(row.non_cv_pct, 50.0);
  EXPECT_EQ(*row.median_train, 3.0);
}

TEST(Aggregate, LowerMedianMatchesOracle) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-5, 5);
  EXPECT_FALSE(lower_median({}));
  for (int k = 1; k <= 40; ++k) {
    std::vector<double> xs(static_cast<std::size_t>(k));
    for (auto& x : xs) x = u(rng);
    EXPECT_EQ(*lower_median(xs), oracle::lower_median(xs));
  }
  EXPECT_EQ(*lower_median({1.0, 2.0, 3.0, 4.0}), 2.0);
}

TEST(Aggregate, ReaggregateReproducesRow) {
  const ExperimentConfig cfg = quadratic_config();
  const AggregateRow row = aggregate(cfg, {seed_result(0, true, 1), seed_result(1, true, 2), seed_result(2, false, 3)});
  EXPECT_EQ(reaggregate(row), row);
}

TEST(Report, CsvShapes) {
  AggregateReport empty;
  EXPECT_EQ(report_csv(empty), std::string(kReportColumns) + "\n");
  EXPECT_EQ(std::string(kReportColumns),
            "config_id,optimizer,beta_bar,eta,lambda,f1,f2,eps_a,non_cv_pct,median_train,median_test,"
            "median_time_s,median_evals,mean_evals_per_ls");
  AggregateReport one;
  one.rows.push_back(aggregate(quadratic_config(), {seed_result(0, true, 1.5)}));
  const std::string csv = report_csv(one);
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
  const std::string path = temp_path("one.csv");
  emit_report(one, ReportFormat::Csv, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), csv);
}

TEST(Report, JsonRoundTrip) {
  AggregateReport rep;
  const ExperimentConfig cfg = quadratic_config();
  rep.rows.push_back(aggregate(cfg, {seed_result(0, true, 1.25), seed_result(1, false, 2.0)}));
  ExperimentConfig c2 = cfg;
  c2.id = "const";
  c2.optimizer = default_optimizer(OptimizerKind::RMSProp);
  SeedResult failed = seed_result(2, false, 0.0);
  failed.error = "objective overflow";
  failed.train_metric.reset();
  failed.test_metric.reset();
  rep.rows.push_back(aggregate(c2, {failed}));
  const std::string path = temp_path("rt.json");
  emit_report(rep, ReportFormat::Json, path);
  EXPECT_EQ(load_report_json(path), rep);
}

TEST(Report, UnwritablePathNamed) {
  try {
    emit_report(AggregateReport{}, ReportFormat::Csv, "/nonexistent-dir/x/report.csv");
    FAIL();
  } catch (const std::runtime_error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent-dir/x/report.csv"), std::string::npos);
  }
}

TEST(Run, SingleSeedQuadratic) {
  ExperimentConfig cfg = quadratic_config();
  cfg.seeds = {0};
  const ExperimentResult r = run_experiment(cfg);
  ASSERT_EQ(r.seeds.size(), 1u);
  EXPECT_TRUE(r.seeds[0].converged);
  EXPECT_TRUE(r.seeds[0].error.empty());
  EXPECT_EQ(r.seeds[0].gradient_evaluations, static_cast<std::uint64_t>(r.seeds[0].iterations) + 1);
  EXPECT_NEAR(r.seeds[0].evals_per_linesearch,
              static_cast<double>(r.seeds[0].value_evaluations - 1) / static_cast<double>(r.seeds[0].iterations), 1e-12);
}

TEST(Run, DeterministicAndJobInvariant) {
  ExperimentConfig cfg = quadratic_config();
  cfg.objective = parse_objective_spec("rosenbrock", default_data_dir());
  cfg.optimizer = default_optimizer(OptimizerKind::RMSPropAdaptive, 1.0);
  cfg.seeds = {0, 1, 2, 3};
  AggregateRow a = aggregate(cfg, run_experiment(cfg, 1).seeds);
  AggregateRow b = aggregate(cfg, run_experiment(cfg, 1).seeds);
  AggregateRow c = aggregate(cfg, run_experiment(cfg, 3).seeds);
  strip_times(a);
  strip_times(b);
  strip_times(c);
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, c);
}

TEST(Run, MlpSeedsDifferAndRepeat) {
  ExperimentConfig cfg;
  cfg.id = "sonar-short";
  cfg.objective = sonar_spec(default_data_dir());
  cfg.optimizer = default_optimizer(OptimizerKind::MomentumAdaptive, 1.0);
  cfg.stop = StopCriterion{1e-4, 30};
  cfg.seeds = {0, 1};
  const ExperimentResult r1 = run_experiment(cfg, 2);
  const ExperimentResult r2 = run_experiment(cfg, 1);
  ASSERT_EQ(r1.seeds.size(), 2u);
  for (std::size_t i = 0; i < 2; ++i) {
    SeedResult x = r1.seeds[i], y = r2.seeds[i];
    x.wall_seconds = y.wall_seconds = 0.0;
    EXPECT_EQ(x, y);
  }
  EXPECT_NE(r1.seeds[0].train_metric, std::nullopt);
  EXPECT_NE(r1.seeds[0].final_grad_norm, r1.seeds[1].final_grad_norm);
}

TEST(Problem, SonarAndBostonShapes) {
  const Problem s = build_problem(sonar_spec(default_data_dir()));
  EXPECT_EQ(s.objective->dimension(), 1861);
  EXPECT_EQ(s.train.rows(), 104);
  EXPECT_EQ(s.test.rows(), 104);
  EXPECT_TRUE(s.classification);
  const Problem b = build_problem(boston_spec(default_data_dir()));
  EXPECT_EQ(b.objective->dimension(), 466);
  EXPECT_FALSE(b.classification);
  EXPECT_EQ(b.train.rows() + b.test.rows(), 506);
}

TEST(Problem, AnalyticStartingPoint) {
  const Problem p = build_problem(parse_objective_spec("quadratic:1,4,9", default_data_dir()));
  const Vector th = p.initial_point(0);
  EXPECT_NEAR(th.norm(), 1.0, 1e-15);
  EXPECT_EQ(th[0], th[2]);
}

TEST(TraceCsv, HeaderAndRows) {
  ObjectiveHandle h(make_quadratic(Matrix::Identity(2, 2), Vector::Zero(2)));
  const IterationTrace t = run(default_optimizer(OptimizerKind::MomentumAdaptive), h, Vector::Ones(2), StopCriterion{});
  const std::string path = temp_path("trace.csv");
  write_trace_csv(t, path);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header,
            "iteration,eta,eta_start,lyapunov_before,lyapunov_after,objective_before,objective_after,grad_norm,"
            "displacement,dissipation,evaluations,trials");
  std::size_t lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  EXPECT_EQ(lines, t.rows.size());
}
