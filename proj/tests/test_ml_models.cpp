#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "fairbbr/ml/artifact.hpp"
#include "fairbbr/ml/cross_validate.hpp"
#include "fairbbr/ml/data.hpp"
#include "fairbbr/ml/evaluate.hpp"
#include "fairbbr/ml/mlp.hpp"
#include "fairbbr/ml/svm.hpp"
#include "fairbbr/ml/tree.hpp"
#include "fairbbr/rng.hpp"

namespace fairbbr::ml {
namespace {

double training_accuracy(const DecisionTree& tree, const Matrix& X,
                         const std::vector<int>& y) {
  std::vector<int> preds;
  for (size_t i = 0; i < X.rows; ++i) preds.push_back(tree.predict(X.row(i)));
  return classification_accuracy(preds, y);
}

TEST(DecisionTree, PureRootIsASingleLeaf) {
  Matrix X(4, 1);
  for (size_t i = 0; i < 4; ++i) X.at(i, 0) = static_cast<double>(i);
  std::vector<int> y{1, 1, 1, 1};
  DecisionTree tree;
  tree.fit(X, y);
  EXPECT_EQ(tree.nodes().size(), 1u);
  EXPECT_EQ(tree.nodes()[0].leaf_class, 1);
  EXPECT_DOUBLE_EQ(training_accuracy(tree, X, y), 1.0);
}

// 1-D data separable at 0.5: the learned threshold must land in
// (max value below, min value above].
TEST(DecisionTree, SeparableThresholdBetweenClasses) {
  Matrix X(6, 1);
  std::vector<int> y;
  std::vector<double> values{0.1, 0.3, 0.45, 0.62, 0.8, 0.9};
  for (size_t i = 0; i < values.size(); ++i) {
    X.at(i, 0) = values[i];
    y.push_back(values[i] > 0.5 ? 1 : 0);
  }
  DecisionTree tree;
  tree.fit(X, y);
  ASSERT_EQ(tree.depth(), 1);
  double threshold = tree.nodes()[0].threshold;
  EXPECT_GT(threshold, 0.45);
  EXPECT_LE(threshold, 0.62);
  EXPECT_DOUBLE_EQ(training_accuracy(tree, X, y), 1.0);
}

TEST(DecisionTree, GiniOfBalancedNode) {
  EXPECT_DOUBLE_EQ(gini_impurity(50, 50), 0.5);
  EXPECT_DOUBLE_EQ(gini_impurity(10, 0), 0.0);
}

TEST(DecisionTree, EmptyInputThrows) {
  DecisionTree tree;
  EXPECT_THROW(tree.fit(Matrix(0, 1), {}), EmptyInput);
}

// Training accuracy never decreases as max depth grows.
TEST(DecisionTree, AccuracyMonotoneInDepth) {
  Rng rng(77);
  Matrix X(300, 2);
  std::vector<int> y;
  for (size_t i = 0; i < X.rows; ++i) {
    X.at(i, 0) = rng.uniform(0, 1);
    X.at(i, 1) = rng.uniform(0, 1);
    // noisy checkerboard: depth helps, noise keeps it imperfect
    int label = (X.at(i, 0) > 0.5) ^ (X.at(i, 1) > 0.5) ? 1 : 0;
    if (rng.uniform01() < 0.1) label = 1 - label;
    y.push_back(label);
  }
  double prev = 0;
  for (int depth : {1, 2, 4, 8, 16}) {
    DecisionTree tree(DecisionTree::Params{depth, 2});
    tree.fit(X, y);
    double acc = training_accuracy(tree, X, y);
    EXPECT_GE(acc, prev - 1e-12) << "depth " << depth;
    prev = acc;
  }
}

Matrix gaussian_blobs(std::vector<int>& y, double separation, size_t n, uint64_t seed) {
  Rng rng(seed);
  Matrix X(n, 2);
  y.clear();
  for (size_t i = 0; i < n; ++i) {
    int label = static_cast<int>(i % 2);
    double cx = label == 1 ? separation : -separation;
    X.at(i, 0) = rng.normal(cx, 1.0);
    X.at(i, 1) = rng.normal(0.0, 1.0);
    y.push_back(label);
  }
  return X;
}

TEST(LinearSvm, SeparatesWideBlobs) {
  std::vector<int> y;
  Matrix X = gaussian_blobs(y, 4.0, 200, 9);  // margin >= 2 sigma by construction
  Standardizer s;
  s.fit(X);
  Matrix Xs = s.transform(X);
  LinearSvm svm(LinearSvm::Params{0.01, 60});
  svm.fit(Xs, y, 42);
  std::vector<int> preds;
  for (size_t i = 0; i < Xs.rows; ++i) preds.push_back(svm.predict(Xs.row(i)));
  EXPECT_DOUBLE_EQ(classification_accuracy(preds, y), 1.0);
}

TEST(LinearSvm, HingeLossZeroAtMargin) {
  EXPECT_DOUBLE_EQ(hinge_loss(1.0), 0.0);
  EXPECT_DOUBLE_EQ(hinge_loss(2.5), 0.0);
  EXPECT_DOUBLE_EQ(hinge_loss(0.0), 1.0);
  EXPECT_DOUBLE_EQ(hinge_loss(-1.0), 2.0);
}

TEST(LinearSvm, SingleClassThrows) {
  Matrix X(4, 1);
  std::vector<int> y{1, 1, 1, 1};
  LinearSvm svm;
  EXPECT_THROW(svm.fit(X, y, 1), SingleClassData);
}

// Regularization path: huge lambda shrinks the weights to nothing and the
// classifier collapses to (near) majority voting.
TEST(LinearSvm, LargeLambdaShrinksWeights) {
  std::vector<int> y;
  Matrix X = gaussian_blobs(y, 1.0, 300, 13);
  for (size_t i = 240; i < 300; ++i) y[i] = 0;  // 70/30 majority class 0

  LinearSvm weak(LinearSvm::Params{1e4, 40});
  weak.fit(X, y, 3);
  EXPECT_LT(weak.weight_norm(), 1e-2);

  std::vector<int> preds;
  for (size_t i = 0; i < X.rows; ++i) preds.push_back(weak.predict(X.row(i)));
  double majority = 0.0;
  for (int label : y) majority += label == 0 ? 1.0 : 0.0;
  majority /= static_cast<double>(y.size());
  double acc = classification_accuracy(preds, y);
  EXPECT_NEAR(acc, majority, 0.06);

  LinearSvm strong(LinearSvm::Params{0.01, 40});
  strong.fit(X, y, 3);
  EXPECT_GT(strong.weight_norm(), weak.weight_norm());
}

TEST(LinearSvm, DeterministicUnderSeed) {
  std::vector<int> y;
  Matrix X = gaussian_blobs(y, 2.0, 100, 21);
  LinearSvm a(LinearSvm::Params{0.01, 20});
  LinearSvm b(LinearSvm::Params{0.01, 20});
  a.fit(X, y, 5);
  b.fit(X, y, 5);
  EXPECT_EQ(a.weights(), b.weights());
  EXPECT_DOUBLE_EQ(a.bias(), b.bias());
}

Matrix xor_dataset(std::vector<int>& y, uint64_t seed) {
  Rng rng(seed);
  Matrix X(200, 2);
  y.clear();
  for (size_t i = 0; i < X.rows; ++i) {
    int a = static_cast<int>(i % 2);
    int b = static_cast<int>((i / 2) % 2);
    X.at(i, 0) = a + rng.normal(0.0, 0.05);
    X.at(i, 1) = b + rng.normal(0.0, 0.05);
    y.push_back(a ^ b);
  }
  return X;
}

// XOR is not linearly separable; one hidden ReLU layer must crack it.
TEST(MlpClassifier, LearnsXor) {
  for (uint64_t seed : {1u, 2u, 3u}) {
    std::vector<int> y;
    Matrix X = xor_dataset(y, 100 + seed);
    Standardizer s;
    s.fit(X);
    Matrix Xs = s.transform(X);
    Mlp mlp = fit_mlp_classifier(Xs, y, 16, 0.001, 2000, seed);
    std::vector<int> preds;
    for (size_t i = 0; i < Xs.rows; ++i) preds.push_back(mlp.predict_class(Xs.row(i)));
    EXPECT_GE(classification_accuracy(preds, y), 0.99) << "seed " << seed;
  }
}

TEST(MlpClassifier, IdenticalInputsGiveMajorityAccuracy) {
  Matrix X(10, 2);  // all-zero rows: no information
  std::vector<int> y{1, 1, 1, 1, 1, 1, 0, 0, 0, 0};
  Mlp mlp = fit_mlp_classifier(X, y, 8, 0.01, 200, 7);
  std::vector<int> preds;
  for (size_t i = 0; i < X.rows; ++i) preds.push_back(mlp.predict_class(X.row(i)));
  EXPECT_DOUBLE_EQ(classification_accuracy(preds, y), 0.6);
}

TEST(MlpClassifier, SingleClassThrows) {
  Matrix X(4, 1);
  std::vector<int> y{1, 1, 1, 1};
  EXPECT_THROW(fit_mlp_classifier(X, y, 4, 0.01, 10, 1), SingleClassData);
}

// Analytic gradients against central finite differences at random
// parameter points, both losses.
TEST(Mlp, GradientMatchesFiniteDifferences) {
  Rng rng(31337);
  for (auto task : {Mlp::Task::Classification, Mlp::Task::Regression}) {
    Matrix X(40, 3);
    std::vector<double> y(40);
    for (size_t i = 0; i < X.rows; ++i) {
      for (size_t c = 0; c < 3; ++c) X.at(i, c) = rng.normal(0, 1);
      y[i] = task == Mlp::Task::Classification ? static_cast<double>(rng.bounded(2))
                                               : rng.normal(0, 1);
    }
    Mlp mlp(3, 8, task, 99);
    // Nudge away from the ReLU kinks so the finite difference is clean.
    for (auto& p : mlp.parameters()) p += rng.normal(0, 0.1);
    auto grad = mlp.gradient(X, y);

    const double h = 1e-6;
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
      size_t idx = static_cast<size_t>(rng.bounded(mlp.param_count()));
      double saved = mlp.parameters()[idx];
      mlp.parameters()[idx] = saved + h;
      double up = mlp.loss(X, y);
      mlp.parameters()[idx] = saved - h;
      double down = mlp.loss(X, y);
      mlp.parameters()[idx] = saved;
      double numeric = (up - down) / (2 * h);
      if (std::abs(numeric) < 1e-7 && std::abs(grad[idx]) < 1e-7) continue;
      double rel = std::abs(grad[idx] - numeric) /
                   std::max({std::abs(grad[idx]), std::abs(numeric), 1e-12});
      EXPECT_LT(rel, 1e-4) << "param " << idx;
      ++checked;
    }
    EXPECT_GE(checked, 10);
  }
}

TEST(MlpRegressor, FitsLinearFunction) {
  Matrix X(100, 1);
  std::vector<double> y(100);
  for (size_t i = 0; i < 100; ++i) {
    double x = -1.0 + 2.0 * static_cast<double>(i) / 99.0;
    X.at(i, 0) = x;
    y[i] = 2.0 * x;
  }
  auto result = fit_mlp_regressor(X, y, 16, 0.01, 1000, 4);
  EXPECT_LT(result.model.loss(X, y), 1e-3);
  ASSERT_EQ(result.trace.size(), 10u);  // epochs 0, 100, ..., 900
  EXPECT_EQ(result.trace.front().first, 0);
  EXPECT_EQ(result.trace.back().first, 900);
  EXPECT_LT(result.trace.back().second, result.trace.front().second);
}

TEST(MlpRegressor, ConstantTargetConvergesToBias) {
  Matrix X(50, 1);
  std::vector<double> y(50, 3.5);
  Rng rng(8);
  for (size_t i = 0; i < 50; ++i) X.at(i, 0) = rng.uniform(-1, 1);
  auto result = fit_mlp_regressor(X, y, 8, 0.01, 1000, 2);
  EXPECT_LT(result.model.loss(X, y), 1e-3);
  std::vector<double> probe{0.123};
  EXPECT_NEAR(result.model.predict_value(probe), 3.5, 0.1);
}

TEST(MlpRegressor, NonFiniteTargetThrows) {
  Matrix X(2, 1);
  std::vector<double> y{1.0, std::nan("")};
  EXPECT_THROW(fit_mlp_regressor(X, y, 4, 0.01, 10, 1), NonFiniteTarget);
}

TEST(MlpRegressor, DeterministicUnderSeed) {
  Matrix X(30, 1);
  std::vector<double> y(30);
  Rng rng(91);
  for (size_t i = 0; i < 30; ++i) {
    X.at(i, 0) = rng.uniform(-1, 1);
    y[i] = std::sin(X.at(i, 0));
  }
  auto a = fit_mlp_regressor(X, y, 8, 0.01, 200, 6);
  auto b = fit_mlp_regressor(X, y, 8, 0.01, 200, 6);
  EXPECT_EQ(a.model.parameters(), b.model.parameters());
  EXPECT_EQ(a.trace, b.trace);
}

// All three classifiers on a dataset whose label is an exact threshold of
// one feature.
TEST(Classifiers, ThresholdLabelGivesHighCvMeans) {
  Rng rng(55);
  Matrix X(400, 2);
  std::vector<int> y;
  for (size_t i = 0; i < X.rows; ++i) {
    X.at(i, 0) = rng.uniform(0, 100);    // block size-ish
    X.at(i, 1) = rng.uniform(0, 200);    // throughput-ish
    y.push_back(X.at(i, 1) > 100 ? 1 : 0);
  }
  for (auto kind : {ClassifierSpec::Kind::LinearSvm, ClassifierSpec::Kind::DecisionTree,
                    ClassifierSpec::Kind::Mlp}) {
    ClassifierSpec spec;
    spec.kind = kind;
    spec.mlp_epochs = 800;
    auto report = kfold_cv_classifier(spec, X, y, 5, 2024);
    EXPECT_GE(report.mean, 0.95) << to_string(kind);
  }
}

TEST(Artifacts, RoundTripPreservesPredictions) {
  std::vector<int> y;
  Matrix X = gaussian_blobs(y, 2.0, 120, 77);

  ClassifierSpec spec;
  spec.kind = ClassifierSpec::Kind::DecisionTree;
  auto trained = train_classifier(spec, X, y, 5);

  ModelArtifact a;
  a.kind = "decision_tree";
  a.scaler = trained.scaler;
  a.model = std::get<DecisionTree>(trained.model);
  auto restored = ModelArtifact::from_json(a.to_json());
  for (size_t i = 0; i < X.rows; ++i) {
    EXPECT_EQ(restored.predict_class(X.row(i)), trained.predict(X.row(i)));
  }

  // Regressor artifact carries the target moments back out.
  Matrix Xr(50, 1);
  std::vector<double> yr(50);
  for (size_t i = 0; i < 50; ++i) {
    Xr.at(i, 0) = static_cast<double>(i) / 25.0 - 1.0;
    yr[i] = 5.0 * Xr.at(i, 0) + 20.0;
  }
  Standardizer xs;
  xs.fit(Xr);
  TargetScaler ts;
  ts.fit(yr);
  std::vector<double> ys(50);
  for (size_t i = 0; i < 50; ++i) ys[i] = ts.transform(yr[i]);
  auto reg = fit_mlp_regressor(xs.transform(Xr), ys, 8, 0.01, 500, 3);

  ModelArtifact ra;
  ra.kind = "mlp_regressor";
  ra.scaler = xs;
  ra.model = reg.model;
  ra.trace = reg.trace;
  ra.target_mean = ts.mean();
  ra.target_std = ts.stddev();
  auto rr = ModelArtifact::from_json(ra.to_json());
  std::vector<double> probe{0.5};
  EXPECT_NEAR(rr.predict_value(probe), 5.0 * 0.5 + 20.0, 1.0);
  EXPECT_EQ(rr.trace, reg.trace);
}

}  // namespace
}  // namespace fairbbr::ml
