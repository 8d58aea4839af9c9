#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lyapopt/errors.hpp"

namespace lyapopt {

// Per-column affine map x' = (x - shift) / scale.
struct Normalization {
  enum class Kind { None, Standard, MinMax };

  Kind kind = Kind::None;
  Eigen::RowVectorXd shift;
  Eigen::RowVectorXd scale;

  bool active() const { return kind != Kind::None; }
  Matrix apply(const Matrix& x) const;
  Matrix invert(const Matrix& x) const;
};

struct Dataset {
  Matrix inputs;   // M x d
  Matrix targets;  // M x 1; empty until labels are encoded when they are not numeric
  std::vector<std::string> raw_labels;
  std::vector<std::string> feature_names;
  Normalization feature_norm;
  Normalization target_norm;
  std::string provenance;

  Eigen::Index rows() const { return inputs.rows(); }
  // Rows in the given order; normalization records and provenance are kept.
  Dataset select(const std::vector<Eigen::Index>& rows) const;
};

// Comma-separated numeric table. The label column is kept as raw text and is
// also parsed into targets when every label is numeric. Throws DataError with
// row/column positions (1-based, counting the header line).
Dataset load_csv(const std::string& path, int label_column, bool has_header);

// Zero mean, unit population deviation per feature. Throws DataError naming a
// constant column. Repeated application composes the records.
Dataset standardize(const Dataset& d);
// Undoes the feature normalization.
Dataset destandardize(const Dataset& d);

// Per-column affine map onto [0, 1]. Throws DataError on a constant column.
Matrix minmax_normalize(const Matrix& targets, Normalization* record = nullptr);
// minmax_normalize on the dataset targets, recording the map.
Dataset normalize_targets(const Dataset& d);

// Two classes; the lexicographically smaller label maps to 0.
Matrix label_encode(const std::vector<std::string>& labels);

// Seeded Fisher-Yates split with ceil(M * test_fraction) test rows. Stratified
// splits need 0/1 targets and keep each class within one row of its share.
std::pair<Dataset, Dataset> split(const Dataset& d, double test_fraction, std::uint64_t seed,
                                  bool stratify);

}  // namespace lyapopt
