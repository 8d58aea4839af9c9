#include "lyapopt/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace lyapopt {

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream in(line);
  while (std::getline(in, field, ',')) fields.push_back(trim(field));
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

bool parse_number(const std::string& text, double& out) {
  if (text.empty()) return false;
  const char* begin = text.data();
  const char* end = begin + text.size();
  if (*begin == '+') ++begin;
  const auto [ptr, ec] = std::from_chars(begin, end, out);
  return ec == std::errc() && ptr == end;
}

[[noreturn]] void fail(const std::string& path, std::size_t line, std::size_t column,
                       const std::string& what) {
  std::ostringstream msg;
  msg << path << ":" << line << ":" << column << ": " << what;
  throw DataError(msg.str());
}

std::string column_name(const Dataset& d, Eigen::Index j) {
  if (static_cast<std::size_t>(j) < d.feature_names.size()) {
    return "'" + d.feature_names[static_cast<std::size_t>(j)] + "' (column " + std::to_string(j) + ")";
  }
  return "column " + std::to_string(j);
}

}  // namespace

Matrix Normalization::apply(const Matrix& x) const {
  if (!active()) return x;
  return ((x.rowwise() - shift).array().rowwise() / scale.array()).matrix();
}

Matrix Normalization::invert(const Matrix& x) const {
  if (!active()) return x;
  return ((x.array().rowwise() * scale.array()).matrix().rowwise() + shift);
}

Dataset Dataset::select(const std::vector<Eigen::Index>& rows) const {
  Dataset out;
  out.inputs.resize(static_cast<Eigen::Index>(rows.size()), inputs.cols());
  if (targets.size() > 0) out.targets.resize(static_cast<Eigen::Index>(rows.size()), targets.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto r = rows[i];
    out.inputs.row(static_cast<Eigen::Index>(i)) = inputs.row(r);
    if (targets.size() > 0) out.targets.row(static_cast<Eigen::Index>(i)) = targets.row(r);
    if (!raw_labels.empty()) out.raw_labels.push_back(raw_labels[static_cast<std::size_t>(r)]);
  }
  out.feature_names = feature_names;
  out.feature_norm = feature_norm;
  out.target_norm = target_norm;
  out.provenance = provenance;
  return out;
}

Dataset load_csv(const std::string& path, int label_column, bool has_header) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);

  std::vector<std::vector<double>> rows;
  std::vector<std::string> labels;
  std::vector<std::string> header;
  std::size_t width = 0;
  std::size_t line_no = 0;
  std::string line;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<std::string> fields = split_fields(line);
    if (width == 0) {
      width = fields.size();
      if (label_column < 0 || static_cast<std::size_t>(label_column) >= width) {
        fail(path, line_no, 1, "label column " + std::to_string(label_column) + " outside " +
                                   std::to_string(width) + " fields");
      }
      if (width < 2) fail(path, line_no, 1, "need at least one feature and a label");
      if (has_header) {
        header = std::move(fields);
        continue;
      }
    }
    if (fields.size() != width) {
      fail(path, line_no, fields.size(), "expected " + std::to_string(width) + " fields, found " +
                                             std::to_string(fields.size()));
    }
    std::vector<double> row;
    row.reserve(width - 1);
    for (std::size_t j = 0; j < width; ++j) {
      if (static_cast<int>(j) == label_column) {
        if (fields[j].empty()) fail(path, line_no, j + 1, "empty label");
        labels.push_back(fields[j]);
        continue;
      }
      double x = 0.0;
      if (!parse_number(fields[j], x)) fail(path, line_no, j + 1, "cannot parse '" + fields[j] + "'");
      if (!std::isfinite(x)) fail(path, line_no, j + 1, "non-finite value '" + fields[j] + "'");
      row.push_back(x);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw DataError(path + ": no data rows");

  Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width - 1));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j + 1 < width; ++j) {
      d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
  }
  for (std::size_t j = 0; j < header.size(); ++j) {
    if (static_cast<int>(j) != label_column) d.feature_names.push_back(header[j]);
  }

  Matrix numeric(static_cast<Eigen::Index>(labels.size()), 1);
  bool all_numeric = true;
  for (std::size_t i = 0; i < labels.size() && all_numeric; ++i) {
    double y = 0.0;
    all_numeric = parse_number(labels[i], y) && std::isfinite(y);
    numeric(static_cast<Eigen::Index>(i), 0) = y;
  }
  if (all_numeric) d.targets = std::move(numeric);
  d.raw_labels = std::move(labels);
  d.provenance = path + " (label column " + std::to_string(label_column) + ")";
  return d;
}

Dataset standardize(const Dataset& d) {
  if (d.rows() == 0) throw DataError("cannot standardize an empty dataset");
  const double m = static_cast<double>(d.rows());
  const Eigen::RowVectorXd mean = d.inputs.colwise().sum() / m;
  const Matrix centered = d.inputs.rowwise() - mean;
  const Eigen::RowVectorXd dev = (centered.array().square().colwise().sum() / m).sqrt().matrix();
  for (Eigen::Index j = 0; j < dev.size(); ++j) {
    if (!(dev[j] > 0.0)) throw DataError("zero deviation in " + column_name(d, j));
  }
  Dataset out = d;
  out.inputs = (centered.array().rowwise() / dev.array()).matrix();
  if (d.feature_norm.active()) {
    out.feature_norm.shift = d.feature_norm.shift.array() + d.feature_norm.scale.array() * mean.array();
    out.feature_norm.scale = d.feature_norm.scale.array() * dev.array();
  } else {
    out.feature_norm.shift = mean;
    out.feature_norm.scale = dev;
  }
  out.feature_norm.kind = Normalization::Kind::Standard;
  out.provenance += "; standardized";
  return out;
}

Dataset destandardize(const Dataset& d) {
  Dataset out = d;
  out.inputs = d.feature_norm.invert(d.inputs);
  out.feature_norm = Normalization{};
  return out;
}

Matrix minmax_normalize(const Matrix& targets, Normalization* record) {
  if (targets.rows() == 0) throw DataError("cannot normalize empty targets");
  const Eigen::RowVectorXd lo = targets.colwise().minCoeff();
  const Eigen::RowVectorXd hi = targets.colwise().maxCoeff();
  const Eigen::RowVectorXd range = hi - lo;
  for (Eigen::Index j = 0; j < range.size(); ++j) {
    if (!(range[j] > 0.0)) throw DataError("constant target column " + std::to_string(j));
  }
  Normalization norm;
  norm.kind = Normalization::Kind::MinMax;
  norm.shift = lo;
  norm.scale = range;
  if (record != nullptr) *record = norm;
  return norm.apply(targets);
}

Dataset normalize_targets(const Dataset& d) {
  if (d.targets.size() == 0) throw DataError("dataset has no numeric targets");
  Dataset out = d;
  out.targets = minmax_normalize(d.targets, &out.target_norm);
  out.provenance += "; targets min-max";
  return out;
}

Matrix label_encode(const std::vector<std::string>& labels) {
  const std::set<std::string> classes(labels.begin(), labels.end());
  if (classes.size() != 2) {
    throw DataError("label encoding needs exactly 2 classes, found " + std::to_string(classes.size()));
  }
  const std::string& zero = *classes.begin();
  Matrix out(static_cast<Eigen::Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    out(static_cast<Eigen::Index>(i), 0) = labels[i] == zero ? 0.0 : 1.0;
  }
  return out;
}

std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed,
                                  bool stratify) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw DataError("test fraction must lie in (0,1)");
  }
  const Eigen::Index m = d.rows();
  const auto n_test = static_cast<Eigen::Index>(std::ceil(static_cast<double>(m) * test_fraction));
  if (n_test >= m) throw DataError("split leaves no training rows");

  std::mt19937_64 rng(seed);
  auto shuffle = [&rng](std::vector<Eigen::Index>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::uniform_int_distribution<std::size_t> pick(0, i - 1);
      std::swap(v[i - 1], v[pick(rng)]);
    }
  };

  std::vector<Eigen::Index> test;
  std::vector<Eigen::Index> train;
  if (!stratify) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    shuffle(order);
    test.assign(order.begin(), order.begin() + n_test);
    train.assign(order.begin() + n_test, order.end());
  } else {
    if (d.targets.cols() != 1 || d.targets.rows() != m) throw DataError("stratified split needs one target column");
    std::vector<Eigen::Index> classes[2];
    for (Eigen::Index i = 0; i < m; ++i) {
      const double y = d.targets(i, 0);
      if (y != 0.0 && y != 1.0) throw DataError("stratified split needs 0/1 targets");
      classes[y == 0.0 ? 0 : 1].push_back(i);
    }
    // Floor of each class share, remainder to the larger fractional part.
    Eigen::Index take[2];
    double frac[2];
    for (int c = 0; c < 2; ++c) {
      const double share = static_cast<double>(classes[c].size()) * static_cast<double>(n_test) /
                           static_cast<double>(m);
      take[c] = static_cast<Eigen::Index>(std::floor(share));
      frac[c] = share - static_cast<double>(take[c]);
    }
    Eigen::Index remainder = n_test - take[0] - take[1];
    while (remainder > 0) {
      const int c = frac[1] > frac[0] ? 1 : 0;
      ++take[c];
      frac[c] = -1.0;
      --remainder;
    }
    for (int c = 0; c < 2; ++c) {
      shuffle(classes[c]);
      test.insert(test.end(), classes[c].begin(), classes[c].begin() + take[c]);
      train.insert(train.end(), classes[c].begin() + take[c], classes[c].end());
    }
  }
  std::sort(test.begin(), test.end());
  std::sort(train.begin(), train.end());
  return {d.select(train), d.select(test)};
}

}  // namespace lyapopt
