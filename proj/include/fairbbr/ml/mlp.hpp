#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/ml/data.hpp"
#include "fairbbr/rng.hpp"

namespace fairbbr::ml {

// Adam with bias-corrected first and second moments over a flat parameter
// vector.
class AdamOptimizer {
 public:
  AdamOptimizer(size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
                double eps = 1e-8)
      : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps), m_(n, 0.0), v_(n, 0.0) {}

  void step(std::vector<double>& params, const std::vector<double>& grad) {
    ++t_;
    double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
      m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * grad[i];
      v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * grad[i] * grad[i];
      double m_hat = m_[i] / bc1;
      double v_hat = v_[i] / bc2;
      params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + eps_);
    }
  }

  int64_t steps_taken() const { return t_; }

 private:
  double lr_, beta1_, beta2_, eps_;
  std::vector<double> m_, v_;
  int64_t t_ = 0;
};

// One-hidden-layer perceptron, ReLU hidden activation, scalar output.
// Classification runs a sigmoid + cross-entropy head, regression a linear
// + MSE head. Parameters live in one flat vector: [W1, b1, W2, b2].
class Mlp {
 public:
  enum class Task : uint8_t { Classification, Regression };

  Mlp() = default;

  Mlp(int inputs, int hidden, Task task, uint64_t seed)
      : inputs_(inputs), hidden_(hidden), task_(task) {
    params_.assign(param_count(), 0.0);
    Rng rng(derive_seed(seed, {0x31415926ULL}));
    double limit1 = std::sqrt(6.0 / static_cast<double>(inputs_ + hidden_));
    double limit2 = std::sqrt(6.0 / static_cast<double>(hidden_ + 1));
    for (int i = 0; i < hidden_ * inputs_; ++i) {
      params_[static_cast<size_t>(i)] = rng.uniform(-limit1, limit1);
    }
    for (int i = 0; i < hidden_; ++i) {
      params_[w2_offset() + static_cast<size_t>(i)] = rng.uniform(-limit2, limit2);
    }
  }

  size_t param_count() const {
    return static_cast<size_t>(hidden_ * inputs_ + hidden_ + hidden_ + 1);
  }

  double raw_output(std::span<const double> x) const {
    double z2 = params_[b2_offset()];
    for (int h = 0; h < hidden_; ++h) {
      double z1 = params_[b1_offset() + static_cast<size_t>(h)];
      for (int c = 0; c < inputs_; ++c) {
        z1 += params_[static_cast<size_t>(h * inputs_ + c)] * x[static_cast<size_t>(c)];
      }
      if (z1 > 0) z2 += params_[w2_offset() + static_cast<size_t>(h)] * z1;
    }
    return z2;
  }

  double predict_value(std::span<const double> x) const { return raw_output(x); }
  int predict_class(std::span<const double> x) const { return raw_output(x) >= 0 ? 1 : 0; }

  double loss(const Matrix& X, const std::vector<double>& y) const {
    double total = 0;
    for (size_t i = 0; i < X.rows; ++i) {
      double z = raw_output(X.row(i));
      if (task_ == Task::Classification) {
        total += std::max(z, 0.0) - z * y[i] + std::log1p(std::exp(-std::abs(z)));
      } else {
        total += (z - y[i]) * (z - y[i]);
      }
    }
    return total / static_cast<double>(X.rows);
  }

  std::vector<double> gradient(const Matrix& X, const std::vector<double>& y) const {
    std::vector<double> grad(param_count(), 0.0);
    std::vector<double> z1(static_cast<size_t>(hidden_));
    double inv_n = 1.0 / static_cast<double>(X.rows);
    for (size_t i = 0; i < X.rows; ++i) {
      auto x = X.row(i);
      double z2 = params_[b2_offset()];
      for (int h = 0; h < hidden_; ++h) {
        double a = params_[b1_offset() + static_cast<size_t>(h)];
        for (int c = 0; c < inputs_; ++c) {
          a += params_[static_cast<size_t>(h * inputs_ + c)] * x[static_cast<size_t>(c)];
        }
        z1[static_cast<size_t>(h)] = a;
        if (a > 0) z2 += params_[w2_offset() + static_cast<size_t>(h)] * a;
      }
      double dz2;
      if (task_ == Task::Classification) {
        double p = 1.0 / (1.0 + std::exp(-z2));
        dz2 = (p - y[i]) * inv_n;
      } else {
        dz2 = 2.0 * (z2 - y[i]) * inv_n;
      }
      grad[b2_offset()] += dz2;
      for (int h = 0; h < hidden_; ++h) {
        double a = z1[static_cast<size_t>(h)];
        if (a <= 0) continue;
        grad[w2_offset() + static_cast<size_t>(h)] += dz2 * a;
        double dz1 = dz2 * params_[w2_offset() + static_cast<size_t>(h)];
        grad[b1_offset() + static_cast<size_t>(h)] += dz1;
        for (int c = 0; c < inputs_; ++c) {
          grad[static_cast<size_t>(h * inputs_ + c)] += dz1 * x[static_cast<size_t>(c)];
        }
      }
    }
    return grad;
  }

  std::vector<double>& parameters() { return params_; }
  const std::vector<double>& parameters() const { return params_; }
  int inputs() const { return inputs_; }
  int hidden() const { return hidden_; }
  Task task() const { return task_; }

  void restore(int inputs, int hidden, Task task, std::vector<double> params) {
    inputs_ = inputs;
    hidden_ = hidden;
    task_ = task;
    params_ = std::move(params);
  }

 private:
  size_t b1_offset() const { return static_cast<size_t>(hidden_ * inputs_); }
  size_t w2_offset() const { return static_cast<size_t>(hidden_ * inputs_ + hidden_); }
  size_t b2_offset() const {
    return static_cast<size_t>(hidden_ * inputs_ + hidden_ + hidden_);
  }

  int inputs_ = 0;
  int hidden_ = 0;
  Task task_ = Task::Classification;
  std::vector<double> params_;
};

struct MlpTrainResult {
  Mlp model;
  // (epoch, loss before that epoch's update), logged every trace_every.
  std::vector<std::pair<int, double>> trace;
};

// Full-batch training; deterministic in (data, hyperparameters, seed).
inline MlpTrainResult train_mlp(const Matrix& X, const std::vector<double>& y,
                                Mlp::Task task, int hidden, double lr, int epochs,
                                uint64_t seed, int trace_every = 100) {
  if (X.rows == 0) throw EmptyInput("mlp needs training data");
  for (double v : y) {
    if (!std::isfinite(v)) throw NonFiniteTarget("target contains a non-finite value");
  }
  if (task == Mlp::Task::Classification) {
    bool has0 = false, has1 = false;
    for (double v : y) (v > 0.5 ? has1 : has0) = true;
    if (!has0 || !has1) throw SingleClassData("mlp classifier needs both classes");
  }

  MlpTrainResult result;
  result.model = Mlp(static_cast<int>(X.cols), hidden, task, seed);
  AdamOptimizer adam(result.model.param_count(), lr);
  for (int epoch = 0; epoch < epochs; ++epoch) {
    double loss = result.model.loss(X, y);
    if (trace_every > 0 && epoch % trace_every == 0) result.trace.emplace_back(epoch, loss);
    auto grad = result.model.gradient(X, y);
    adam.step(result.model.parameters(), grad);
  }
  return result;
}

inline Mlp fit_mlp_classifier(const Matrix& X, const std::vector<int>& y, int hidden = 16,
                              double lr = 0.001, int epochs = 2000, uint64_t seed = 1) {
  std::vector<double> targets(y.size());
  for (size_t i = 0; i < y.size(); ++i) targets[i] = y[i] == 1 ? 1.0 : 0.0;
  return train_mlp(X, targets, Mlp::Task::Classification, hidden, lr, epochs, seed, 0)
      .model;
}

inline MlpTrainResult fit_mlp_regressor(const Matrix& X, const std::vector<double>& y,
                                        int hidden = 16, double lr = 0.01,
                                        int epochs = 1000, uint64_t seed = 1) {
  return train_mlp(X, y, Mlp::Task::Regression, hidden, lr, epochs, seed, 100);
}

}  // namespace fairbbr::ml
