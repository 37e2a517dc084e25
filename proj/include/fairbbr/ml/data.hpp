#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/metrics.hpp"
#include "fairbbr/rng.hpp"

namespace fairbbr::ml {

// Dense row-major matrix; all the models here are small enough that this
// is the only structure needed.
struct Matrix {
  size_t rows = 0;
  size_t cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(size_t r, size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

  double& at(size_t r, size_t c) { return data[r * cols + c]; }
  double at(size_t r, size_t c) const { return data[r * cols + c]; }

  std::span<const double> row(size_t r) const {
    return std::span<const double>(data.data() + r * cols, cols);
  }

  Matrix select(std::span<const size_t> indices) const {
    Matrix out(indices.size(), cols);
    for (size_t i = 0; i < indices.size(); ++i) {
      for (size_t c = 0; c < cols; ++c) out.at(i, c) = at(indices[i], c);
    }
    return out;
  }
};

template <typename T>
std::vector<T> select(const std::vector<T>& v, std::span<const size_t> indices) {
  std::vector<T> out;
  out.reserve(indices.size());
  for (size_t i : indices) out.push_back(v[i]);
  return out;
}

// Classification view of a measurement dataset: X = (block_size,
// throughput), y = latency class.
inline Matrix feature_matrix(const Dataset& d) {
  Matrix X(d.rows.size(), 2);
  for (size_t i = 0; i < d.rows.size(); ++i) {
    X.at(i, 0) = d.rows[i].block_size;
    X.at(i, 1) = d.rows[i].throughput;
  }
  return X;
}

inline std::vector<int> label_vector(const Dataset& d) {
  std::vector<int> y;
  y.reserve(d.rows.size());
  for (const auto& r : d.rows) y.push_back(r.label == LatencyClass::High ? 1 : 0);
  return y;
}

// Per-feature z-scoring with population moments; constant features map
// to 0.
class Standardizer {
 public:
  void fit(const Matrix& X) {
    if (X.rows == 0) throw EmptyInput("cannot fit a standardizer on no rows");
    means_.assign(X.cols, 0.0);
    stds_.assign(X.cols, 0.0);
    for (size_t c = 0; c < X.cols; ++c) {
      double sum = 0;
      for (size_t r = 0; r < X.rows; ++r) sum += X.at(r, c);
      means_[c] = sum / static_cast<double>(X.rows);
      double sq = 0;
      for (size_t r = 0; r < X.rows; ++r) {
        double d = X.at(r, c) - means_[c];
        sq += d * d;
      }
      stds_[c] = std::sqrt(sq / static_cast<double>(X.rows));
    }
  }

  Matrix transform(const Matrix& X) const {
    Matrix out(X.rows, X.cols);
    for (size_t r = 0; r < X.rows; ++r) {
      for (size_t c = 0; c < X.cols; ++c) {
        out.at(r, c) = transform_one(X.at(r, c), c);
      }
    }
    return out;
  }

  std::vector<double> transform_row(std::span<const double> x) const {
    std::vector<double> out(x.size());
    for (size_t c = 0; c < x.size(); ++c) out[c] = transform_one(x[c], c);
    return out;
  }

  const std::vector<double>& means() const { return means_; }
  const std::vector<double>& stds() const { return stds_; }
  void set_moments(std::vector<double> means, std::vector<double> stds) {
    means_ = std::move(means);
    stds_ = std::move(stds);
  }

 private:
  double transform_one(double v, size_t c) const {
    return stds_[c] == 0.0 ? 0.0 : (v - means_[c]) / stds_[c];
  }

  std::vector<double> means_;
  std::vector<double> stds_;
};

// Scalar standardization for regression targets.
class TargetScaler {
 public:
  void fit(std::span<const double> y) {
    if (y.empty()) throw EmptyInput("cannot fit a target scaler on no values");
    double sum = 0;
    for (double v : y) sum += v;
    mean_ = sum / static_cast<double>(y.size());
    double sq = 0;
    for (double v : y) sq += (v - mean_) * (v - mean_);
    std_ = std::sqrt(sq / static_cast<double>(y.size()));
  }

  double transform(double v) const { return std_ == 0.0 ? 0.0 : (v - mean_) / std_; }
  double inverse(double v) const { return std_ == 0.0 ? mean_ : v * std_ + mean_; }
  double mean() const { return mean_; }
  double stddev() const { return std_; }

 private:
  double mean_ = 0;
  double std_ = 1;
};

struct SplitIndices {
  std::vector<size_t> train;
  std::vector<size_t> test;
};

// |test| = round(test_fraction * n); seeded shuffle makes the partition a
// pure function of (n, fraction, seed).
inline SplitIndices train_test_split(size_t n, double test_fraction, uint64_t seed) {
  if (n < 2) throw TooFewRows("need at least 2 rows to split");
  std::vector<size_t> order(n);
  for (size_t i = 0; i < n; ++i) order[i] = i;
  Rng rng(derive_seed(seed, {0x5e117u}));
  rng.shuffle(order);
  auto test_n = static_cast<size_t>(std::llround(test_fraction * static_cast<double>(n)));
  SplitIndices out;
  out.test.assign(order.begin(), order.begin() + static_cast<long>(test_n));
  out.train.assign(order.begin() + static_cast<long>(test_n), order.end());
  return out;
}

}  // namespace fairbbr::ml
