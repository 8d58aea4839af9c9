#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "json.hpp"
#include "lyapopt/harness.hpp"

namespace lyapopt {

using nlohmann::json;

const char* const kReportColumns =
    "config_id,optimizer,beta_bar,eta,lambda,f1,f2,eps_a,non_cv_pct,median_train,median_test,"
    "median_time_s,median_evals,mean_evals_per_ls";

namespace {

std::string num(double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.10g", x);
  return buf;
}

std::string num(const std::optional<double>& x) { return x ? num(*x) : std::string(); }

json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::optional<double> opt_from(const json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

json seed_json(const SeedResult& r) {
  return json{{"seed", r.seed},
              {"converged", r.converged},
              {"error", r.error},
              {"iterations", r.iterations},
              {"train", opt_json(r.train_metric)},
              {"test", opt_json(r.test_metric)},
              {"time_s", r.wall_seconds},
              {"value_evals", r.value_evaluations},
              {"grad_evals", r.gradient_evaluations},
              {"evals_per_ls", r.evals_per_linesearch},
              {"final_grad_norm", r.final_grad_norm}};
}

SeedResult seed_from(const json& j) {
  SeedResult r;
  r.seed = j.at("seed").get<std::uint64_t>();
  r.converged = j.at("converged").get<bool>();
  r.error = j.value("error", std::string());
  r.iterations = j.at("iterations").get<std::int64_t>();
  r.train_metric = opt_from(j, "train");
  r.test_metric = opt_from(j, "test");
  r.wall_seconds = j.at("time_s").get<double>();
  r.value_evaluations = j.at("value_evals").get<std::uint64_t>();
  r.gradient_evaluations = j.at("grad_evals").get<std::uint64_t>();
  r.evals_per_linesearch = j.at("evals_per_ls").get<double>();
  r.final_grad_norm = j.at("final_grad_norm").get<double>();
  return r;
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
  out.flush();
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace

std::string report_csv(const AggregateReport& report) {
  std::ostringstream out;
  out << kReportColumns << "\n";
  for (const AggregateRow& r : report.rows) {
    out << r.config_id << "," << r.optimizer << "," << num(r.beta_bar) << "," << num(r.eta) << ","
        << num(r.lambda) << "," << num(r.f1) << "," << num(r.f2) << "," << num(r.eps_a) << ","
        << num(r.non_cv_pct) << "," << num(r.median_train) << "," << num(r.median_test) << ","
        << num(r.median_time_s) << "," << num(r.median_evals) << "," << num(r.mean_evals_per_ls)
        << "\n";
  }
  return out.str();
}

std::string report_json(const AggregateReport& report) {
  json rows = json::array();
  for (const AggregateRow& r : report.rows) {
    json seeds = json::array();
    for (const SeedResult& s : r.seeds) seeds.push_back(seed_json(s));
    rows.push_back(json{{"config_id", r.config_id},
                        {"optimizer", r.optimizer},
                        {"beta_bar", r.beta_bar},
                        {"eta", opt_json(r.eta)},
                        {"lambda", r.lambda},
                        {"f1", r.f1},
                        {"f2", r.f2},
                        {"eps_a", opt_json(r.eps_a)},
                        {"non_cv_pct", r.non_cv_pct},
                        {"median_train", opt_json(r.median_train)},
                        {"median_test", opt_json(r.median_test)},
                        {"median_time_s", opt_json(r.median_time_s)},
                        {"median_evals", opt_json(r.median_evals)},
                        {"mean_evals_per_ls", opt_json(r.mean_evals_per_ls)},
                        {"seeds", seeds}});
  }
  return json{{"rows", rows}}.dump(2) + "\n";
}

void emit_report(const AggregateReport& report, ReportFormat format, const std::string& path) {
  write_file(path, format == ReportFormat::Csv ? report_csv(report) : report_json(report));
}

AggregateReport load_report_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  AggregateReport report;
  try {
    const json j = json::parse(in);
    for (const json& r : j.at("rows")) {
      AggregateRow row;
      row.config_id = r.at("config_id").get<std::string>();
      row.optimizer = r.at("optimizer").get<std::string>();
      row.beta_bar = r.at("beta_bar").get<double>();
      row.eta = opt_from(r, "eta");
      row.lambda = r.at("lambda").get<double>();
      row.f1 = r.at("f1").get<double>();
      row.f2 = r.at("f2").get<double>();
      row.eps_a = opt_from(r, "eps_a");
      row.non_cv_pct = r.at("non_cv_pct").get<double>();
      row.median_train = opt_from(r, "median_train");
      row.median_test = opt_from(r, "median_test");
      row.median_time_s = opt_from(r, "median_time_s");
      row.median_evals = opt_from(r, "median_evals");
      row.mean_evals_per_ls = opt_from(r, "mean_evals_per_ls");
      for (const json& s : r.at("seeds")) row.seeds.push_back(seed_from(s));
      report.rows.push_back(std::move(row));
    }
  } catch (const json::exception& e) {
    throw std::runtime_error(path + ": " + e.what());
  }
  return report;
}

void write_trace_csv(const IterationTrace& trace, const std::string& path) {
  std::ostringstream out;
  out << "iteration,eta,eta_start,lyapunov_before,lyapunov_after,objective_before,objective_after,"
         "grad_norm,displacement,dissipation,evaluations,trials\n";
  char buf[512];
  for (const TraceRow& r : trace.rows) {
    std::snprintf(buf, sizeof buf, "%lld,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%llu,%d\n",
                  static_cast<long long>(r.iteration), r.eta, r.eta_start, r.lyapunov_before,
                  r.lyapunov_after, r.objective_before, r.objective_after, r.grad_norm,
                  r.displacement, r.dissipation, static_cast<unsigned long long>(r.evaluations),
                  r.trials);
    out << buf;
  }
  write_file(path, out.str());
}

}  // namespace lyapopt
