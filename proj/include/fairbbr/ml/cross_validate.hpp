#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <string>
#include <variant>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/ml/data.hpp"
#include "fairbbr/ml/evaluate.hpp"
#include "fairbbr/ml/mlp.hpp"
#include "fairbbr/ml/svm.hpp"
#include "fairbbr/ml/tree.hpp"
#include "fairbbr/rng.hpp"

namespace fairbbr::ml {

struct CvReport {
  std::vector<double> fold_accuracies;
  double mean = 0;
  double stddev = 0;
  int k = 0;
};

inline double mean_of(std::span<const double> v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double stddev_of(std::span<const double> v) {
  double m = mean_of(v);
  double s = 0;
  for (double x : v) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(v.size()));
}

// k disjoint, exhaustive folds from a seeded shuffle; fold f is scored by
// a model trained on the rest. Fold seeds derive from (seed, fold), so a
// parallel schedule would consume identical randomness.
template <typename RunFold>
CvReport kfold_cv(size_t n, int k, uint64_t seed, RunFold&& run_fold) {
  if (k < 2) throw InvalidK("k must be >= 2");
  if (n < static_cast<size_t>(k)) throw InvalidK("need at least k rows");

  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {0xf01dULL}));
  rng.shuffle(order);

  CvReport report;
  report.k = k;
  size_t base = n / static_cast<size_t>(k);
  size_t extra = n % static_cast<size_t>(k);
  size_t start = 0;
  for (int fold = 0; fold < k; ++fold) {
    size_t len = base + (static_cast<size_t>(fold) < extra ? 1 : 0);
    std::vector<size_t> test(order.begin() + static_cast<long>(start),
                             order.begin() + static_cast<long>(start + len));
    std::vector<size_t> train;
    train.reserve(n - len);
    train.insert(train.end(), order.begin(), order.begin() + static_cast<long>(start));
    train.insert(train.end(), order.begin() + static_cast<long>(start + len), order.end());
    start += len;
    report.fold_accuracies.push_back(
        run_fold(train, test, derive_seed(seed, {0xf01dULL, static_cast<uint64_t>(fold)})));
  }
  report.mean = mean_of(report.fold_accuracies);
  report.stddev = stddev_of(report.fold_accuracies);
  return report;
}

struct ClassifierSpec {
  enum class Kind : uint8_t { LinearSvm, DecisionTree, Mlp };
  Kind kind = Kind::LinearSvm;
  LinearSvm::Params svm;
  DecisionTree::Params tree;
  int mlp_hidden = 16;
  double mlp_lr = 0.001;
  int mlp_epochs = 2000;
};

inline const char* to_string(ClassifierSpec::Kind k) {
  switch (k) {
    case ClassifierSpec::Kind::LinearSvm:    return "linear_svm";
    case ClassifierSpec::Kind::DecisionTree: return "decision_tree";
    case ClassifierSpec::Kind::Mlp:          return "mlp_classifier";
  }
  return "?";
}

// A fitted classifier plus the scaler that standardized its training rows;
// predictions take raw feature rows.
struct TrainedClassifier {
  Standardizer scaler;
  std::variant<LinearSvm, DecisionTree, Mlp> model;

  int predict(std::span<const double> raw) const {
    auto x = scaler.transform_row(raw);
    return std::visit([&](const auto& m) -> int { return predict_with(m, x); }, model);
  }

 private:
  static int predict_with(const LinearSvm& m, std::span<const double> x) {
    return m.predict(x);
  }
  static int predict_with(const DecisionTree& m, std::span<const double> x) {
    return m.predict(x);
  }
  static int predict_with(const Mlp& m, std::span<const double> x) {
    return m.predict_class(x);
  }
};

inline TrainedClassifier train_classifier(const ClassifierSpec& spec, const Matrix& X,
                                          const std::vector<int>& y, uint64_t seed) {
  TrainedClassifier out;
  out.scaler.fit(X);
  Matrix Xs = out.scaler.transform(X);
  switch (spec.kind) {
    case ClassifierSpec::Kind::LinearSvm: {
      LinearSvm svm(spec.svm);
      svm.fit(Xs, y, seed);
      out.model = std::move(svm);
      break;
    }
    case ClassifierSpec::Kind::DecisionTree: {
      DecisionTree tree(spec.tree);
      tree.fit(Xs, y);
      out.model = std::move(tree);
      break;
    }
    case ClassifierSpec::Kind::Mlp: {
      out.model =
          fit_mlp_classifier(Xs, y, spec.mlp_hidden, spec.mlp_lr, spec.mlp_epochs, seed);
      break;
    }
  }
  return out;
}

inline CvReport kfold_cv_classifier(const ClassifierSpec& spec, const Matrix& X,
                                    const std::vector<int>& y, int k, uint64_t seed) {
  return kfold_cv(X.rows, k, seed,
                  [&](const std::vector<size_t>& train, const std::vector<size_t>& test,
                      uint64_t fold_seed) {
                    auto model = train_classifier(spec, X.select(train),
                                                  select(y, train), fold_seed);
                    std::vector<int> preds;
                    preds.reserve(test.size());
                    for (size_t i : test) preds.push_back(model.predict(X.row(i)));
                    return classification_accuracy(preds, select(y, test));
                  });
}

struct RepeatedCvReport {
  std::vector<double> run_means;  // one CV mean per seeded run
  double mean = 0;
  double stddev = 0;
  int num_runs = 0;
};

inline RepeatedCvReport repeated_cv_classifier(const ClassifierSpec& spec, const Matrix& X,
                                               const std::vector<int>& y, int k,
                                               uint64_t seed, int num_runs) {
  RepeatedCvReport out;
  out.num_runs = num_runs;
  for (int run = 0; run < num_runs; ++run) {
    out.run_means.push_back(
        kfold_cv_classifier(spec, X, y, k, derive_seed(seed, {static_cast<uint64_t>(run)}))
            .mean);
  }
  out.mean = mean_of(out.run_means);
  out.stddev = stddev_of(out.run_means);
  return out;
}

}  // namespace fairbbr::ml
