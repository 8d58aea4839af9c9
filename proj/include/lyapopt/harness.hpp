#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "lyapopt/data.hpp"
#include "lyapopt/objectives.hpp"
#include "lyapopt/optim.hpp"

namespace lyapopt {

// What to minimize. Analytic kinds ignore the dataset fields; MLP kinds ignore
// the analytic ones.
struct ObjectiveSpec {
  std::string kind = "quadratic";  // quadratic | monomial | rosenbrock | mlp

  // quadratic: A = diag(diagonal) unless matrix (row-major rows) is given
  std::vector<double> diagonal{1.0, 4.0};
  std::vector<std::vector<double>> matrix;
  std::vector<double> minimizer;  // default: origin

  int degree = 4;      // monomial
  int dimension = 1;   // monomial
  double rosen_a = 1.0;
  double rosen_b = 100.0;

  // Starting point for analytic objectives; default all-ones scaled to norm 1.
  std::vector<double> theta0;

  // mlp
  std::string network = "sonar";  // sonar | boston | custom
  std::vector<int> widths;
  std::vector<std::string> activations;
  std::string dataset;
  int label_column = -1;
  bool has_header = false;
  std::string task = "classification";  // classification | regression
  double test_fraction = 0.5;
  std::uint64_t split_seed = 7;
  bool stratify = true;

  bool is_mlp() const { return kind == "mlp"; }
  void validate() const;
};

// Parses the compact CLI form: quadratic[:d1,d2,...], monomial[:p[:N]],
// rosenbrock, sonar, boston.
ObjectiveSpec parse_objective_spec(const std::string& text, const std::string& data_dir);

// Benchmark defaults: network shape, label column, split.
ObjectiveSpec sonar_spec(const std::string& data_dir);
ObjectiveSpec boston_spec(const std::string& data_dir);

// Default hyperparameters for an optimizer tag: f1 = 2, f2 = 1e4; adaptive
// momentum lambda = 1/(4 beta_bar); adaptive RMSProp lambda = 0.5, eps_a = 0.1;
// constant momentum eta = 1e-2, beta = 0.9; constant RMSProp eta = 1e-3,
// beta = 0.999, eps_a = 1e-7.
OptimizerConfig default_optimizer(OptimizerKind kind, double beta_bar = 1.0);

struct ExperimentConfig {
  std::string id = "experiment";
  ObjectiveSpec objective;
  OptimizerConfig optimizer;
  StopCriterion stop;
  std::vector<std::uint64_t> seeds{0};
  std::string output_dir;
  bool dump_traces = false;

  // Throws ConfigError.
  void validate() const;
};

std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(const std::string& text);
// A file holds one config object or {"experiments": [...]}.
std::vector<ExperimentConfig> load_experiments(const std::string& path);

// Dataset split and objective, built once and shared read-only across seeds.
struct Problem {
  std::shared_ptr<const Objective> objective;
  std::shared_ptr<const MLPObjective> mlp;  // null for analytic objectives
  Dataset train;
  Dataset test;
  bool classification = false;
  Vector theta0;  // analytic objectives

  Vector initial_point(std::uint64_t seed) const;
};

Problem build_problem(const ObjectiveSpec& spec);

struct SeedResult {
  std::uint64_t seed = 0;
  bool converged = false;
  std::string error;  // non-empty when the run threw
  std::int64_t iterations = 0;
  // Accuracy (%) for classification, MSE for regression, R for analytic.
  std::optional<double> train_metric;
  std::optional<double> test_metric;
  double wall_seconds = 0.0;
  std::uint64_t value_evaluations = 0;
  std::uint64_t gradient_evaluations = 0;
  double evals_per_linesearch = 0.0;  // (C_n - 1)/n
  double final_grad_norm = 0.0;

  bool operator==(const SeedResult&) const = default;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<SeedResult> seeds;
  std::vector<IterationTrace> traces;  // filled when requested
};

// One run per seed, jobs worker threads (<= 0: hardware concurrency). Per-seed
// failures are recorded, never thrown. Results are ordered as cfg.seeds.
ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs = 1, bool keep_traces = false);
ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& problem, int jobs = 1,
                                bool keep_traces = false);

struct AggregateRow {
  std::string config_id;
  std::string optimizer;
  double beta_bar = 0.0;
  std::optional<double> eta;  // constant-step methods only
  double lambda = 0.0;
  double f1 = 0.0;
  double f2 = 0.0;
  std::optional<double> eps_a;
  double non_cv_pct = 0.0;
  std::optional<double> median_train;
  std::optional<double> median_test;
  std::optional<double> median_time_s;
  std::optional<double> median_evals;
  std::optional<double> mean_evals_per_ls;
  std::vector<SeedResult> seeds;

  bool operator==(const AggregateRow&) const = default;
};

struct AggregateReport {
  std::vector<AggregateRow> rows;

  bool operator==(const AggregateReport&) const = default;
};

// Lower median: the smaller middle element for even counts. Empty -> nullopt.
std::optional<double> lower_median(std::vector<double> values);

// Medians over converged runs only; non-convergent and failed runs count
// towards non_cv_pct.
AggregateRow aggregate(const ExperimentConfig& cfg, const std::vector<SeedResult>& results);
// Recomputes the medians of a row from its per-seed records.
AggregateRow reaggregate(const AggregateRow& row);

enum class ReportFormat { Csv, Json };

// Throws std::runtime_error naming the path on I/O failure.
void emit_report(const AggregateReport& report, ReportFormat format, const std::string& path);
AggregateReport load_report_json(const std::string& path);
std::string report_csv(const AggregateReport& report);
std::string report_json(const AggregateReport& report);

extern const char* const kReportColumns;

void write_trace_csv(const IterationTrace& trace, const std::string& path);

// The benchmark table runs: adaptive configs on both benchmarks plus
// constant RMSProp (eta = 0.1, beta = 0.999) on Sonar.
std::vector<ExperimentConfig> table_experiments(const std::string& data_dir, int n_seeds);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

enum class VerifyLevel { Fast, Full };

// Optim and theory invariants on canned problems; Full adds the MLP battery
// and the reduced table reproduction.
std::vector<CheckResult> verify_suite(VerifyLevel level, const std::string& data_dir, int jobs = 1);

// Location of the bundled datasets.
std::string default_data_dir();

}  // namespace lyapopt
