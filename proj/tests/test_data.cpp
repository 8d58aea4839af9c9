#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

#include "lyapopt/data.hpp"

using namespace lyapopt;

namespace {

std::string write_temp(const std::string& name, const std::string& body) {
  const auto path = std::filesystem::temp_directory_path() / ("lyapopt_test_" + name);
  std::ofstream(path) << body;
  return path.string();
}

Dataset column(std::initializer_list<double> xs) {
  Dataset d;
  d.inputs.resize(static_cast<Eigen::Index>(xs.size()), 1);
  Eigen::Index i = 0;
  for (double x : xs) d.inputs(i++, 0) = x;
  d.targets = Matrix::Zero(d.inputs.rows(), 1);
  return d;
}

Dataset indexed(Eigen::Index m, const std::vector<double>& labels) {
  Dataset d;
  d.inputs.resize(m, 1);
  d.targets.resize(m, 1);
  for (Eigen::Index i = 0; i < m; ++i) {
    d.inputs(i, 0) = static_cast<double>(i);
    d.targets(i, 0) = labels[static_cast<std::size_t>(i)];
  }
  return d;
}

}  // namespace

TEST(LoadCsv, ThreeRows) {
  const Dataset d = load_csv(write_temp("three.csv", "1,2,R\n3,4,M\n5,6,R\n"), 2, false);
  ASSERT_EQ(d.inputs.rows(), 3);
  ASSERT_EQ(d.inputs.cols(), 2);
  EXPECT_EQ(d.inputs(2, 1), 6.0);
  EXPECT_EQ(d.raw_labels, (std::vector<std::string>{"R", "M", "R"}));
}

TEST(LoadCsv, Errors) {
  EXPECT_THROW(load_csv(write_temp("empty.csv", ""), 0, false), DataError);
  EXPECT_THROW(load_csv(write_temp("nan.csv", "1,2,R\nNaN,4,M\n"), 2, false), DataError);
  EXPECT_THROW(load_csv(write_temp("ragged.csv", "1,2,R\n3,M\n"), 2, false), DataError);
  EXPECT_THROW(load_csv(write_temp("text.csv", "1,2,R\n3,x,M\n"), 2, false), DataError);
  EXPECT_THROW(load_csv("/nonexistent/file.csv", 0, false), DataError);
}

TEST(LoadCsv, ErrorNamesPosition) {
  try {
    load_csv(write_temp("pos.csv", "a,b,c\n1,2,3\n4,oops,6\n"), 2, true);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("2"), std::string::npos) << msg;
  }
}

TEST(LoadCsv, NumericLabels) {
  const Dataset d = load_csv(write_temp("num.csv", "x,y\n1,10\n2,20\n"), 1, true);
  ASSERT_EQ(d.targets.rows(), 2);
  EXPECT_EQ(d.targets(1, 0), 20.0);
}

TEST(Standardize, PopulationDeviation) {
  const Dataset d = standardize(column({1.0, 2.0, 3.0}));
  EXPECT_NEAR(d.inputs(0, 0), -1.2247449, 5e-8);
  EXPECT_NEAR(d.inputs(1, 0), 0.0, 1e-15);
  EXPECT_NEAR(d.inputs(2, 0), 1.2247449, 5e-8);
  EXPECT_NEAR(d.inputs(2, 0), 1.0 / std::sqrt(2.0 / 3.0), 1e-15);
}

TEST(Standardize, IdempotentAndInvertible) {
  std::mt19937_64 rng(4);
  std::normal_distribution<double> g(3.0, 2.0);
  Dataset d;
  d.inputs.resize(50, 4);
  for (Eigen::Index i = 0; i < d.inputs.size(); ++i) d.inputs.data()[i] = g(rng);
  const Dataset once = standardize(d);
  const Dataset twice = standardize(once);
  EXPECT_LE((once.inputs - twice.inputs).cwiseAbs().maxCoeff(), 1e-12);
  const Dataset back = destandardize(twice);
  EXPECT_LE((back.inputs - d.inputs).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Standardize, ConstantColumnRejected) {
  Dataset d;
  d.inputs.resize(3, 2);
  d.inputs << 1, 5, 2, 5, 3, 5;
  try {
    standardize(d);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find('1'), std::string::npos);
  }
}

TEST(MinMax, Examples) {
  Matrix t(3, 1);
  t << 10, 20, 15;
  const Matrix n = minmax_normalize(t);
  EXPECT_EQ(n(0, 0), 0.0);
  EXPECT_EQ(n(1, 0), 1.0);
  EXPECT_EQ(n(2, 0), 0.5);
  Matrix u(2, 1);
  u << 0, 1;
  EXPECT_TRUE(minmax_normalize(u) == u);
  Matrix c(2, 1);
  c << 5, 5;
  EXPECT_THROW(minmax_normalize(c), DataError);
}

TEST(LabelEncode, Examples) {
  const Matrix a = label_encode({"R", "M", "R"});
  EXPECT_EQ(a(0, 0), 1.0);
  EXPECT_EQ(a(1, 0), 0.0);
  EXPECT_EQ(a(2, 0), 1.0);
  const Matrix b = label_encode({"0", "1"});
  EXPECT_EQ(b(0, 0), 0.0);
  EXPECT_EQ(b(1, 0), 1.0);
  EXPECT_THROW(label_encode({"a", "b", "c"}), DataError);
  EXPECT_THROW(label_encode({"a", "a"}), DataError);
}

TEST(Split, HalfOf208) {
  std::vector<double> labels(208);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 3 == 0 ? 1.0 : 0.0;
  const Dataset d = indexed(208, labels);
  for (bool strat : {false, true}) {
    auto [train, test] = split(d, 0.5, 7, strat);
    EXPECT_EQ(train.rows(), 104);
    EXPECT_EQ(test.rows(), 104);
  }
}

TEST(Split, DeterministicPartition) {
  std::vector<double> labels(37);
  for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = i % 2 ? 1.0 : 0.0;
  const Dataset d = indexed(37, labels);
  auto [a1, b1] = split(d, 0.3, 99, true);
  auto [a2, b2] = split(d, 0.3, 99, true);
  EXPECT_TRUE(a1.inputs == a2.inputs);
  EXPECT_TRUE(b1.inputs == b2.inputs);
  EXPECT_EQ(b1.rows(), 12);  // ceil(37 * 0.3)
  std::multiset<double> seen;
  for (Eigen::Index i = 0; i < a1.rows(); ++i) seen.insert(a1.inputs(i, 0));
  for (Eigen::Index i = 0; i < b1.rows(); ++i) seen.insert(b1.inputs(i, 0));
  std::multiset<double> all;
  for (int i = 0; i < 37; ++i) all.insert(i);
  EXPECT_EQ(seen, all);
  // Labels travel with their rows.
  for (Eigen::Index i = 0; i < b1.rows(); ++i) {
    EXPECT_EQ(b1.targets(i, 0), labels[static_cast<std::size_t>(b1.inputs(i, 0))]);
  }
}

TEST(Split, StratifiedFourRows) {
  const Dataset d = indexed(4, {0.0, 0.0, 1.0, 1.0});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    auto [train, test] = split(d, 0.5, seed, true);
    ASSERT_EQ(train.rows(), 2);
    EXPECT_EQ(train.targets.sum(), 1.0);
    EXPECT_EQ(test.targets.sum(), 1.0);
  }
}

TEST(Split, StratifyNeedsBinary) {
  const Dataset d = indexed(4, {0.0, 2.0, 1.0, 1.0});
  EXPECT_THROW(split(d, 0.5, 1, true), DataError);
}

TEST(Normalization, TargetRoundTrip) {
  Dataset d = indexed(5, {3.0, 7.5, -2.0, 10.0, 4.25});
  const Dataset n = normalize_targets(d);
  EXPECT_EQ(n.targets.minCoeff(), 0.0);
  EXPECT_EQ(n.targets.maxCoeff(), 1.0);
  const Matrix back = n.target_norm.invert(n.targets);
  EXPECT_LE((back - d.targets).cwiseAbs().maxCoeff(), 1e-10);
}
