#include "lyapopt/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace lyapopt {

using nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

json number_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

double number_or_nan(const json& j, const char* key, double fallback) {
  if (!j.contains(key)) return fallback;
  const json& v = j.at(key);
  if (v.is_null()) return kNaN;
  if (!v.is_number()) throw ConfigError(std::string("'") + key + "' must be a number");
  return v.get<double>();
}

template <class T>
T value_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string resolve_path(const std::string& path) {
  namespace fs = std::filesystem;
  if (path.empty() || fs::path(path).is_absolute() || fs::exists(path)) return path;
  const fs::path root = fs::path(default_data_dir()).parent_path();
  const fs::path candidate = root / path;
  return fs::exists(candidate) ? candidate.string() : path;
}

std::vector<double> parse_list(const std::string& text) {
  std::vector<double> out;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      out.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("cannot parse number '" + item + "' in objective spec");
    }
  }
  return out;
}

NetworkShape network_shape(const ObjectiveSpec& spec) {
  if (spec.network == "sonar") return NetworkShape::sonar();
  if (spec.network == "boston") return NetworkShape::boston();
  NetworkShape shape;
  shape.widths = spec.widths;
  for (const auto& tag : spec.activations) shape.activations.push_back(parse_activation(tag));
  return shape;
}

}  // namespace

// ---------------------------------------------------------------------------

void ObjectiveSpec::validate() const {
  if (kind == "quadratic") {
    if (matrix.empty() && diagonal.empty()) throw ConfigError("quadratic needs a diagonal or a matrix");
    const std::size_t n = matrix.empty() ? diagonal.size() : matrix.size();
    if (!minimizer.empty() && minimizer.size() != n) throw ConfigError("minimizer size does not match");
    if (!theta0.empty() && theta0.size() != n) throw ConfigError("theta0 size does not match");
  } else if (kind == "monomial") {
    if (degree < 2 || degree % 2 != 0) throw ConfigError("monomial degree must be even and >= 2");
    if (dimension < 1) throw ConfigError("monomial dimension must be >= 1");
    if (!theta0.empty() && theta0.size() != static_cast<std::size_t>(dimension)) {
      throw ConfigError("theta0 size does not match");
    }
  } else if (kind == "rosenbrock") {
    if (!theta0.empty() && theta0.size() != 2) throw ConfigError("theta0 size does not match");
  } else if (kind == "mlp") {
    if (dataset.empty()) throw ConfigError("mlp objective needs a dataset path");
    if (label_column < 0) throw ConfigError("mlp objective needs a label column");
    if (task != "classification" && task != "regression") throw ConfigError("task must be classification or regression");
    if (!(test_fraction > 0.0 && test_fraction < 1.0)) throw ConfigError("test fraction must lie in (0,1)");
    if (network != "sonar" && network != "boston" && network != "custom") {
      throw ConfigError("network must be sonar, boston or custom");
    }
    try {
      network_shape(*this).validate();
    } catch (const InvalidObjective& e) {
      throw ConfigError(e.what());
    }
  } else {
    throw ConfigError("unknown objective kind '" + kind + "'");
  }
}

ObjectiveSpec sonar_spec(const std::string& data_dir) {
  ObjectiveSpec s;
  s.kind = "mlp";
  s.network = "sonar";
  s.dataset = data_dir + "/sonar_surrogate.csv";
  s.label_column = 60;
  s.has_header = false;
  s.task = "classification";
  s.test_fraction = 0.5;
  s.split_seed = 7;
  s.stratify = true;
  return s;
}

ObjectiveSpec boston_spec(const std::string& data_dir) {
  ObjectiveSpec s;
  s.kind = "mlp";
  s.network = "boston";
  s.dataset = data_dir + "/boston.csv";
  s.label_column = 13;
  s.has_header = true;
  s.task = "regression";
  s.test_fraction = 0.5;
  s.split_seed = 7;
  s.stratify = false;
  return s;
}

ObjectiveSpec parse_objective_spec(const std::string& text, const std::string& data_dir) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string tail = colon == std::string::npos ? "" : text.substr(colon + 1);
  ObjectiveSpec s;
  if (head == "sonar" || head == "boston") {
    if (!tail.empty()) throw ConfigError("'" + head + "' takes no parameters");
    return head == "sonar" ? sonar_spec(data_dir) : boston_spec(data_dir);
  }
  if (head == "quadratic") {
    s.kind = "quadratic";
    if (!tail.empty()) s.diagonal = parse_list(tail);
  } else if (head == "monomial") {
    s.kind = "monomial";
    if (!tail.empty()) {
      std::string flat = tail;
      std::replace(flat.begin(), flat.end(), ':', ',');
      const auto parts = parse_list(flat);
      s.degree = static_cast<int>(parts.at(0));
      if (parts.size() > 1) s.dimension = static_cast<int>(parts[1]);
    }
  } else if (head == "rosenbrock") {
    s.kind = "rosenbrock";
    if (!tail.empty()) {
      const auto parts = parse_list(tail);
      s.rosen_a = parts.at(0);
      if (parts.size() > 1) s.rosen_b = parts[1];
    }
  } else {
    throw ConfigError("unknown objective '" + text + "'");
  }
  s.validate();
  return s;
}

OptimizerConfig default_optimizer(OptimizerKind kind, double beta_bar) {
  OptimizerConfig c;
  c.kind = kind;
  c.backtrack.shrink = 2.0;
  c.backtrack.grow = 1e4;
  c.backtrack.friction = beta_bar;
  switch (kind) {
    case OptimizerKind::MomentumAdaptive:
      c.backtrack.dissipation = 1.0 / (4.0 * beta_bar);
      break;
    case OptimizerKind::RMSPropAdaptive:
      c.backtrack.dissipation = 0.5;
      c.eps_a = 0.1;
      break;
    case OptimizerKind::GdArmijo:
      c.backtrack.dissipation = 0.5;
      break;
    case OptimizerKind::Momentum:
      c.eta = 1e-2;
      c.beta = 0.9;
      c.backtrack.friction = (1.0 - 0.9) / 1e-2;
      break;
    case OptimizerKind::RMSProp:
      c.eta = 1e-3;
      c.beta = 0.999;
      c.eps_a = 1e-7;
      break;
  }
  return c;
}

void ExperimentConfig::validate() const {
  if (id.empty()) throw ConfigError("experiment id must not be empty");
  objective.validate();
  optimizer.validate();
  stop.validate();
  if (seeds.empty()) throw ConfigError("at least one seed is required");
}

// ---------------------------------------------------------------------------

namespace {

json objective_json(const ObjectiveSpec& s) {
  json j;
  j["kind"] = s.kind;
  if (s.kind == "quadratic") {
    if (s.matrix.empty()) j["diagonal"] = s.diagonal;
    else j["matrix"] = s.matrix;
    if (!s.minimizer.empty()) j["minimizer"] = s.minimizer;
  } else if (s.kind == "monomial") {
    j["degree"] = s.degree;
    j["dimension"] = s.dimension;
  } else if (s.kind == "rosenbrock") {
    j["a"] = s.rosen_a;
    j["b"] = s.rosen_b;
  } else {
    j["network"] = s.network;
    if (s.network == "custom") {
      j["widths"] = s.widths;
      j["activations"] = s.activations;
    }
    j["dataset"] = s.dataset;
    j["label_column"] = s.label_column;
    j["has_header"] = s.has_header;
    j["task"] = s.task;
    j["test_fraction"] = s.test_fraction;
    j["split_seed"] = s.split_seed;
    j["stratify"] = s.stratify;
  }
  if (!s.theta0.empty()) j["theta0"] = s.theta0;
  return j;
}

ObjectiveSpec objective_from(const json& j) {
  ObjectiveSpec s;
  s.kind = value_or<std::string>(j, "kind", s.kind);
  if (j.contains("matrix")) {
    s.matrix = j.at("matrix").get<std::vector<std::vector<double>>>();
    s.diagonal.clear();
  }
  s.diagonal = value_or(j, "diagonal", s.diagonal);
  s.minimizer = value_or(j, "minimizer", s.minimizer);
  s.degree = value_or(j, "degree", s.degree);
  s.dimension = value_or(j, "dimension", s.dimension);
  s.rosen_a = value_or(j, "a", s.rosen_a);
  s.rosen_b = value_or(j, "b", s.rosen_b);
  s.theta0 = value_or(j, "theta0", s.theta0);
  if (s.kind == "mlp") {
    const std::string network = value_or<std::string>(j, "network", "sonar");
    // Benchmark presets first, then explicit overrides.
    if (network == "boston") s = boston_spec(default_data_dir());
    else if (network == "sonar") s = sonar_spec(default_data_dir());
    s.kind = "mlp";
    s.network = network;
    s.widths = value_or(j, "widths", s.widths);
    s.activations = value_or(j, "activations", s.activations);
    s.dataset = resolve_path(value_or(j, "dataset", s.dataset));
    s.label_column = value_or(j, "label_column", s.label_column);
    s.has_header = value_or(j, "has_header", s.has_header);
    s.task = value_or(j, "task", s.task);
    s.test_fraction = value_or(j, "test_fraction", s.test_fraction);
    s.split_seed = value_or(j, "split_seed", s.split_seed);
    s.stratify = value_or(j, "stratify", s.stratify);
  }
  return s;
}

json optimizer_json(const OptimizerConfig& c) {
  json j;
  j["tag"] = to_string(c.kind);
  j["beta_bar"] = c.backtrack.friction;
  j["lambda"] = c.backtrack.dissipation;
  j["f1"] = c.backtrack.shrink;
  j["f2"] = c.backtrack.grow;
  j["eps_a"] = c.eps_a;
  j["eta"] = c.eta;
  j["beta"] = number_or_null(c.beta);
  j["eta_init"] = number_or_null(c.eta_init);
  return j;
}

OptimizerConfig optimizer_from(const json& j) {
  const OptimizerKind kind = parse_optimizer(value_or<std::string>(j, "tag", "momentum-adaptive"));
  const double beta_bar = value_or(j, "beta_bar", 1.0);
  OptimizerConfig c = default_optimizer(kind, beta_bar);
  if (j.contains("beta_bar") && kind == OptimizerKind::Momentum && !j.contains("beta")) c.beta = kNaN;
  c.backtrack.dissipation = value_or(j, "lambda", c.backtrack.dissipation);
  c.backtrack.shrink = value_or(j, "f1", c.backtrack.shrink);
  c.backtrack.grow = value_or(j, "f2", c.backtrack.grow);
  c.eps_a = value_or(j, "eps_a", c.eps_a);
  c.eta = value_or(j, "eta", c.eta);
  c.beta = number_or_nan(j, "beta", c.beta);
  c.eta_init = number_or_nan(j, "eta_init", c.eta_init);
  return c;
}

ExperimentConfig experiment_from(const json& j) {
  if (!j.is_object()) throw ConfigError("experiment config must be a JSON object");
  ExperimentConfig cfg;
  cfg.id = value_or<std::string>(j, "id", cfg.id);
  if (j.contains("objective")) cfg.objective = objective_from(j.at("objective"));
  if (j.contains("optimizer")) cfg.optimizer = optimizer_from(j.at("optimizer"));
  if (j.contains("stop")) {
    const json& s = j.at("stop");
    cfg.stop.grad_tolerance = value_or(s, "eps_grad", cfg.stop.grad_tolerance);
    cfg.stop.max_iterations = value_or(s, "max_epochs", cfg.stop.max_iterations);
  }
  if (j.contains("seeds")) {
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
  } else if (j.contains("n_seeds")) {
    const int n = j.at("n_seeds").get<int>();
    if (n < 1) throw ConfigError("n_seeds must be >= 1");
    cfg.seeds.clear();
    for (int i = 0; i < n; ++i) cfg.seeds.push_back(static_cast<std::uint64_t>(i));
  }
  cfg.output_dir = value_or(j, "output_dir", cfg.output_dir);
  cfg.dump_traces = value_or(j, "dump_traces", cfg.dump_traces);
  cfg.validate();
  return cfg;
}

}  // namespace

std::string to_json(const ExperimentConfig& cfg) {
  json j;
  j["id"] = cfg.id;
  j["objective"] = objective_json(cfg.objective);
  j["optimizer"] = optimizer_json(cfg.optimizer);
  j["stop"] = {{"eps_grad", cfg.stop.grad_tolerance}, {"max_epochs", cfg.stop.max_iterations}};
  j["seeds"] = cfg.seeds;
  j["output_dir"] = cfg.output_dir;
  j["dump_traces"] = cfg.dump_traces;
  return j.dump(2);
}

ExperimentConfig experiment_from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("invalid JSON: ") + e.what());
  }
  try {
    return experiment_from(j);
  } catch (const json::exception& e) {
    throw ConfigError(e.what());
  }
}

std::vector<ExperimentConfig> load_experiments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": invalid JSON: " + e.what());
  }
  std::vector<ExperimentConfig> out;
  try {
    if (j.is_object() && j.contains("experiments")) {
      for (const json& e : j.at("experiments")) out.push_back(experiment_from(e));
    } else {
      out.push_back(experiment_from(j));
    }
  } catch (const json::exception& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return out;
}

// ---------------------------------------------------------------------------

Vector Problem::initial_point(std::uint64_t seed) const {
  if (mlp) return xavier_init(mlp->shape(), seed);
  return theta0;
}

Problem build_problem(const ObjectiveSpec& spec) {
  spec.validate();
  Problem p;
  auto analytic_start = [&](Eigen::Index n) {
    if (!spec.theta0.empty()) return Vector(Eigen::Map<const Vector>(spec.theta0.data(), n));
    return Vector(Vector::Ones(n) / std::sqrt(static_cast<double>(n)));
  };
  if (spec.kind == "quadratic") {
    Matrix a;
    if (!spec.matrix.empty()) {
      const auto n = static_cast<Eigen::Index>(spec.matrix.size());
      a.resize(n, n);
      for (Eigen::Index i = 0; i < n; ++i) {
        if (spec.matrix[static_cast<std::size_t>(i)].size() != static_cast<std::size_t>(n)) {
          throw ConfigError("quadratic matrix must be square");
        }
        for (Eigen::Index k = 0; k < n; ++k) a(i, k) = spec.matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
      }
    } else {
      a = Eigen::Map<const Vector>(spec.diagonal.data(), static_cast<Eigen::Index>(spec.diagonal.size())).asDiagonal();
    }
    Vector minimizer = spec.minimizer.empty()
                           ? Vector(Vector::Zero(a.rows()))
                           : Vector(Eigen::Map<const Vector>(spec.minimizer.data(), a.rows()));
    try {
      p.objective = make_quadratic(a, minimizer);
    } catch (const InvalidObjective& e) {
      throw ConfigError(e.what());
    }
    p.theta0 = analytic_start(a.rows());
  } else if (spec.kind == "monomial") {
    p.objective = std::make_shared<MonomialObjective>(spec.degree, spec.dimension);
    p.theta0 = analytic_start(spec.dimension);
  } else if (spec.kind == "rosenbrock") {
    p.objective = std::make_shared<RosenbrockObjective>(spec.rosen_a, spec.rosen_b);
    p.theta0 = analytic_start(2);
  } else {
    Dataset d = load_csv(resolve_path(spec.dataset), spec.label_column, spec.has_header);
    p.classification = spec.task == "classification";
    if (p.classification) {
      d.targets = label_encode(d.raw_labels);
    } else {
      d = normalize_targets(d);
    }
    d = standardize(d);
    auto [train, test] = split(d, spec.test_fraction, spec.split_seed, spec.stratify && p.classification);
    p.train = std::move(train);
    p.test = std::move(test);
    p.mlp = std::make_shared<MLPObjective>(network_shape(spec), p.train.inputs, p.train.targets);
    p.objective = p.mlp;
  }
  return p;
}

// ---------------------------------------------------------------------------

namespace {

SeedResult run_seed(const ExperimentConfig& cfg, const Problem& problem, std::uint64_t seed,
                    IterationTrace* keep) {
  SeedResult r;
  r.seed = seed;
  ObjectiveHandle handle(problem.objective);
  RunOptions options;
  options.record_rows = keep != nullptr || cfg.dump_traces;
  try {
    IterationTrace trace = run(cfg.optimizer, handle, problem.initial_point(seed), cfg.stop, options);
    r.converged = trace.converged;
    r.iterations = trace.iterations;
    r.wall_seconds = trace.wall_seconds;
    r.value_evaluations = trace.value_evaluations;
    r.gradient_evaluations = trace.gradient_evaluations;
    r.final_grad_norm = trace.final_grad_norm;
    r.evals_per_linesearch =
        trace.iterations > 0
            ? static_cast<double>(trace.value_evaluations - 1) / static_cast<double>(trace.iterations)
            : 0.0;
    if (problem.mlp) {
      const Matrix train_pred = problem.mlp->predict(trace.final_theta, problem.train.inputs);
      const Matrix test_pred = problem.mlp->predict(trace.final_theta, problem.test.inputs);
      if (problem.classification) {
        r.train_metric = rounding_accuracy(train_pred, problem.train.targets);
        r.test_metric = rounding_accuracy(test_pred, problem.test.targets);
      } else {
        r.train_metric = mean_squared_error(train_pred, problem.train.targets);
        r.test_metric = mean_squared_error(test_pred, problem.test.targets);
      }
    } else {
      r.train_metric = trace.final_objective;
    }
    if (cfg.dump_traces && !cfg.output_dir.empty()) {
      write_trace_csv(trace, cfg.output_dir + "/" + cfg.id + "_seed" + std::to_string(seed) + ".csv");
    }
    if (keep != nullptr) *keep = std::move(trace);
  } catch (const std::exception& e) {
    r.converged = false;
    r.error = e.what();
  }
  return r;
}

}  // namespace

ExperimentResult run_experiment(const ExperimentConfig& cfg, int jobs, bool keep_traces) {
  cfg.validate();
  return run_experiment(cfg, build_problem(cfg.objective), jobs, keep_traces);
}

ExperimentResult run_experiment(const ExperimentConfig& cfg, const Problem& problem, int jobs,
                                bool keep_traces) {
  cfg.validate();
  if (cfg.dump_traces && !cfg.output_dir.empty()) std::filesystem::create_directories(cfg.output_dir);
  ExperimentResult out;
  out.config = cfg;
  const std::size_t n = cfg.seeds.size();
  out.seeds.resize(n);
  if (keep_traces) out.traces.resize(n);

  if (jobs <= 0) jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      out.seeds[i] = run_seed(cfg, problem, cfg.seeds[i], keep_traces ? &out.traces[i] : nullptr);
    }
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(work);
    for (auto& t : pool) t.join();
  }
  return out;
}

// ---------------------------------------------------------------------------

std::optional<double> lower_median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  const std::size_t mid = (values.size() - 1) / 2;
  std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(mid), values.end());
  return values[mid];
}

AggregateRow reaggregate(const AggregateRow& row) {
  AggregateRow out = row;
  std::vector<double> train, test, time, evals, per_ls;
  std::size_t failed = 0;
  for (const SeedResult& r : row.seeds) {
    if (!r.converged) {
      ++failed;
      continue;
    }
    if (r.train_metric) train.push_back(*r.train_metric);
    if (r.test_metric) test.push_back(*r.test_metric);
    time.push_back(r.wall_seconds);
    evals.push_back(static_cast<double>(r.value_evaluations));
    per_ls.push_back(r.evals_per_linesearch);
  }
  out.non_cv_pct = row.seeds.empty() ? 0.0 : 100.0 * static_cast<double>(failed) / static_cast<double>(row.seeds.size());
  out.median_train = lower_median(train);
  out.median_test = lower_median(test);
  out.median_time_s = lower_median(time);
  out.median_evals = lower_median(evals);
  out.mean_evals_per_ls = lower_median(per_ls);
  return out;
}

AggregateRow aggregate(const ExperimentConfig& cfg, const std::vector<SeedResult>& results) {
  AggregateRow row;
  const OptimizerConfig& o = cfg.optimizer;
  row.config_id = cfg.id;
  row.optimizer = to_string(o.kind);
  row.lambda = o.backtrack.dissipation;
  row.f1 = o.backtrack.shrink;
  row.f2 = o.backtrack.grow;
  if (o.kind == OptimizerKind::Momentum || o.kind == OptimizerKind::RMSProp) {
    row.eta = o.eta;
    row.beta_bar = (1.0 - o.constant_beta()) / o.eta;
  } else {
    row.beta_bar = o.backtrack.friction;
  }
  if (o.kind == OptimizerKind::RMSProp || o.kind == OptimizerKind::RMSPropAdaptive) row.eps_a = o.eps_a;
  row.seeds = results;
  return reaggregate(row);
}

std::vector<ExperimentConfig> table_experiments(const std::string& data_dir, int n_seeds) {
  std::vector<std::uint64_t> seeds;
  for (int i = 0; i < n_seeds; ++i) seeds.push_back(static_cast<std::uint64_t>(i));
  std::vector<ExperimentConfig> out;
  auto add = [&](const std::string& bench, const ObjectiveSpec& spec, OptimizerConfig opt,
                 const std::string& label) {
    ExperimentConfig cfg;
    cfg.id = bench + "-" + label;
    cfg.objective = spec;
    cfg.optimizer = std::move(opt);
    cfg.stop = StopCriterion{1e-4, 200000};
    cfg.seeds = seeds;
    out.push_back(std::move(cfg));
  };
  for (const auto& [bench, spec] : {std::pair{std::string("sonar"), sonar_spec(data_dir)},
                                    std::pair{std::string("boston"), boston_spec(data_dir)}}) {
    add(bench, spec, default_optimizer(OptimizerKind::MomentumAdaptive, 1.0), "momentum-adaptive-b1");
    add(bench, spec, default_optimizer(OptimizerKind::MomentumAdaptive, 2.0), "momentum-adaptive-b2");
    add(bench, spec, default_optimizer(OptimizerKind::RMSPropAdaptive, 1.0), "rmsprop-adaptive-b1");
    add(bench, spec, default_optimizer(OptimizerKind::RMSPropAdaptive, 10.0), "rmsprop-adaptive-b10");
  }
  OptimizerConfig fast = default_optimizer(OptimizerKind::RMSProp);
  fast.eta = 0.1;
  add("sonar", sonar_spec(data_dir), fast, "rmsprop-eta0.1");
  return out;
}

std::string default_data_dir() {
  if (const char* env = std::getenv("LYAPOPT_DATA_DIR"); env != nullptr && *env != '\0') return env;
  return LYAPOPT_DATA_DIR;
}

}  // namespace lyapopt
