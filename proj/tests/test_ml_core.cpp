#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <vector>

#include "fairbbr/ml/cross_validate.hpp"
#include "fairbbr/ml/data.hpp"
#include "fairbbr/ml/evaluate.hpp"
#include "fairbbr/ml/mlp.hpp"
#include "fairbbr/rng.hpp"

namespace fairbbr::ml {
namespace {

Matrix column(const std::vector<double>& v) {
  Matrix X(v.size(), 1);
  for (size_t i = 0; i < v.size(); ++i) X.at(i, 0) = v[i];
  return X;
}

TEST(Standardizer, TwoPointColumn) {
  Standardizer s;
  s.fit(column({1, 3}));
  EXPECT_DOUBLE_EQ(s.means()[0], 2.0);
  EXPECT_DOUBLE_EQ(s.stds()[0], 1.0);
  auto t = s.transform(column({1, 3}));
  EXPECT_DOUBLE_EQ(t.at(0, 0), -1.0);
  EXPECT_DOUBLE_EQ(t.at(1, 0), 1.0);
}

TEST(Standardizer, ConstantColumnMapsToZero) {
  Standardizer s;
  s.fit(column({5, 5, 5}));
  auto t = s.transform(column({5, 5, 5}));
  for (size_t i = 0; i < 3; ++i) EXPECT_DOUBLE_EQ(t.at(i, 0), 0.0);
}

TEST(Standardizer, EmptyInputThrows) {
  Standardizer s;
  EXPECT_THROW(s.fit(Matrix(0, 2)), EmptyInput);
}

// Oracle: recompute the moments of the transformed matrix.
TEST(Standardizer, TransformedMomentsAreZeroOne) {
  Rng rng(2024);
  Matrix X(500, 2);
  for (size_t r = 0; r < X.rows; ++r) {
    X.at(r, 0) = rng.uniform(-5, 20);
    X.at(r, 1) = rng.normal(3.0, 7.0);
  }
  Standardizer s;
  s.fit(X);
  Matrix t = s.transform(X);
  for (size_t c = 0; c < 2; ++c) {
    double mean = 0;
    for (size_t r = 0; r < t.rows; ++r) mean += t.at(r, c);
    mean /= static_cast<double>(t.rows);
    double var = 0;
    for (size_t r = 0; r < t.rows; ++r) var += (t.at(r, c) - mean) * (t.at(r, c) - mean);
    var /= static_cast<double>(t.rows);
    EXPECT_LT(std::abs(mean), 1e-9);
    EXPECT_LT(std::abs(std::sqrt(var) - 1.0), 1e-9);
  }
}

TEST(TrainTestSplit, SizesAndDeterminism) {
  auto s = train_test_split(10, 0.2, 7);
  EXPECT_EQ(s.test.size(), 2u);
  EXPECT_EQ(s.train.size(), 8u);

  auto s2 = train_test_split(10, 0.2, 7);
  EXPECT_EQ(s.train, s2.train);
  EXPECT_EQ(s.test, s2.test);

  std::set<size_t> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  EXPECT_EQ(all.size(), 10u);  // disjoint and exhaustive

  EXPECT_THROW(train_test_split(1, 0.2, 7), TooFewRows);
}

TEST(KFold, FoldSizesPartitionTheData) {
  std::vector<size_t> seen;
  auto report = kfold_cv(100, 5, 3,
                         [&](const std::vector<size_t>& train,
                             const std::vector<size_t>& test, uint64_t) {
                           EXPECT_EQ(test.size(), 20u);
                           EXPECT_EQ(train.size(), 80u);
                           seen.insert(seen.end(), test.begin(), test.end());
                           return 1.0;
                         });
  EXPECT_EQ(report.k, 5);
  std::sort(seen.begin(), seen.end());
  for (size_t i = 0; i < 100; ++i) EXPECT_EQ(seen[i], i);
  EXPECT_THROW(kfold_cv(10, 1, 3, [](auto&, auto&, uint64_t) { return 0.0; }), InvalidK);
  EXPECT_THROW(kfold_cv(3, 5, 3, [](auto&, auto&, uint64_t) { return 0.0; }), InvalidK);
}

// An oracle model that memorizes labels scores a perfect mean.
TEST(KFold, MemorizingOracleScoresOne) {
  Rng rng(5);
  std::vector<int> y(60);
  for (auto& v : y) v = static_cast<int>(rng.bounded(2));
  auto report = kfold_cv(y.size(), 5, 11,
                         [&](const std::vector<size_t>&, const std::vector<size_t>& test,
                             uint64_t) {
                           std::vector<int> preds, labels;
                           for (size_t i : test) {
                             preds.push_back(y[i]);
                             labels.push_back(y[i]);
                           }
                           return classification_accuracy(preds, labels);
                         });
  EXPECT_DOUBLE_EQ(report.mean, 1.0);
  EXPECT_DOUBLE_EQ(report.stddev, 0.0);
}

// Label-frequency oracle: a constant-Low predictor on a 70% Low dataset
// scores 0.70 within fold-balance noise.
TEST(KFold, ConstantPredictorMatchesLabelFrequency) {
  std::vector<int> y(200);
  for (size_t i = 0; i < y.size(); ++i) y[i] = i < 140 ? 0 : 1;  // 70% class 0
  auto report = kfold_cv(y.size(), 5, 17,
                         [&](const std::vector<size_t>&, const std::vector<size_t>& test,
                             uint64_t) {
                           std::vector<int> preds(test.size(), 0);
                           std::vector<int> labels;
                           for (size_t i : test) labels.push_back(y[i]);
                           return classification_accuracy(preds, labels);
                         });
  EXPECT_NEAR(report.mean, 0.70, 0.05);
}

TEST(Evaluate, CountsCorrectPredictions) {
  std::vector<int> labels{1, 0, 1, 1};
  std::vector<int> perfect = labels;
  EXPECT_DOUBLE_EQ(classification_accuracy(perfect, labels), 1.0);
  std::vector<int> preds{1, 0, 1, 0};
  EXPECT_DOUBLE_EQ(classification_accuracy(preds, labels), 0.75);
  std::vector<int> empty;
  EXPECT_THROW(classification_accuracy(empty, empty), EmptyTestSet);
}

TEST(Evaluate, RegressionScores) {
  std::vector<double> targets{1.0, 2.0, 4.0};
  auto exact = evaluate_regression(targets, targets);
  EXPECT_DOUBLE_EQ(exact.mse, 0.0);
  EXPECT_DOUBLE_EQ(exact.tolerance_accuracy, 1.0);

  std::vector<double> preds{1.05, 2.5, 4.0};  // within 10%: yes, no, yes
  auto s = evaluate_regression(preds, targets, 0.10);
  EXPECT_NEAR(s.tolerance_accuracy, 2.0 / 3.0, 1e-12);
}

// Adam against a hand-computed 3-step trace on a 1-parameter quadratic
// f(x) = (x - 3)^2 from x = 0, lr = 0.1 (values from the standard
// bias-corrected recurrence evaluated independently).
TEST(Adam, MatchesHandComputedTrace) {
  std::vector<double> theta{0.0};
  AdamOptimizer adam(1, 0.1);
  auto grad = [&] { return std::vector<double>{2.0 * (theta[0] - 3.0)}; };
  adam.step(theta, grad());
  EXPECT_NEAR(theta[0], 0.09999999983333335, 1e-12);
  adam.step(theta, grad());
  EXPECT_NEAR(theta[0], 0.19989729258521102, 1e-12);
  adam.step(theta, grad());
  EXPECT_NEAR(theta[0], 0.29961847654925267, 1e-12);
}

}  // namespace
}  // namespace fairbbr::ml
