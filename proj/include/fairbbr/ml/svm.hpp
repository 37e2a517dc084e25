#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/ml/data.hpp"
#include "fairbbr/rng.hpp"

namespace fairbbr::ml {

inline double hinge_loss(double margin) { return std::max(0.0, 1.0 - margin); }

// Soft-margin linear SVM trained with the Pegasos stochastic subgradient
// schedule (step 1/(lambda t)); the bias stays unregularized. Class 1 maps
// to +1, class 0 to -1.
class LinearSvm {
 public:
  struct Params {
    double lambda = 0.01;
    int epochs = 40;
  };

  LinearSvm() = default;
  explicit LinearSvm(const Params& params) : params_(params) {}

  void fit(const Matrix& X, const std::vector<int>& y, uint64_t seed) {
    bool has0 = false, has1 = false;
    for (int label : y) (label == 1 ? has1 : has0) = true;
    if (!has0 || !has1) throw SingleClassData("svm needs both classes in training data");

    w_.assign(X.cols, 0.0);
    b_ = 0.0;
    Rng rng(derive_seed(seed, {0x5f3759dfULL}));
    std::vector<size_t> order(X.rows);
    for (size_t i = 0; i < X.rows; ++i) order[i] = i;

    int64_t t = 0;
    for (int epoch = 0; epoch < params_.epochs; ++epoch) {
      rng.shuffle(order);
      for (size_t i : order) {
        ++t;
        double eta = 1.0 / (params_.lambda * static_cast<double>(t));
        double label = y[i] == 1 ? 1.0 : -1.0;
        double margin = label * decision(X.row(i));
        double shrink = 1.0 - eta * params_.lambda;
        for (size_t c = 0; c < X.cols; ++c) w_[c] *= shrink;
        if (margin < 1.0) {
          for (size_t c = 0; c < X.cols; ++c) w_[c] += eta * label * X.at(i, c);
          b_ += eta * label;
        }
      }
    }
  }

  double decision(std::span<const double> x) const {
    double d = b_;
    for (size_t c = 0; c < x.size(); ++c) d += w_[c] * x[c];
    return d;
  }

  int predict(std::span<const double> x) const { return decision(x) >= 0.0 ? 1 : 0; }

  // lambda/2 ||w||^2 + mean hinge loss; the regularization-path test
  // watches this push ||w|| to zero.
  double objective(const Matrix& X, const std::vector<int>& y) const {
    double norm_sq = 0;
    for (double w : w_) norm_sq += w * w;
    double hinge = 0;
    for (size_t i = 0; i < X.rows; ++i) {
      double label = y[i] == 1 ? 1.0 : -1.0;
      hinge += hinge_loss(label * decision(X.row(i)));
    }
    return 0.5 * params_.lambda * norm_sq + hinge / static_cast<double>(X.rows);
  }

  double weight_norm() const {
    double s = 0;
    for (double w : w_) s += w * w;
    return std::sqrt(s);
  }

  const std::vector<double>& weights() const { return w_; }
  double bias() const { return b_; }
  const Params& params() const { return params_; }
  void set_state(std::vector<double> w, double b) {
    w_ = std::move(w);
    b_ = b;
  }

 private:
  Params params_;
  std::vector<double> w_;
  double b_ = 0;
};

}  // namespace fairbbr::ml
