#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "fairbbr/errors.hpp"

namespace fairbbr::ml {

inline double classification_accuracy(std::span<const int> predictions,
                                      std::span<const int> labels) {
  if (labels.empty()) throw EmptyTestSet("no test rows to score");
  size_t correct = 0;
  for (size_t i = 0; i < labels.size(); ++i) {
    if (predictions[i] == labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(labels.size());
}

struct RegressionScores {
  double mse = 0;
  // Fraction of predictions within tolerance * |target| of the target.
  double tolerance_accuracy = 0;
};

inline RegressionScores evaluate_regression(std::span<const double> predictions,
                                            std::span<const double> targets,
                                            double tolerance = 0.10) {
  if (targets.empty()) throw EmptyTestSet("no test rows to score");
  RegressionScores s;
  size_t within = 0;
  for (size_t i = 0; i < targets.size(); ++i) {
    double err = predictions[i] - targets[i];
    s.mse += err * err;
    if (std::abs(err) <= tolerance * std::abs(targets[i])) ++within;
  }
  s.mse /= static_cast<double>(targets.size());
  s.tolerance_accuracy = static_cast<double>(within) / static_cast<double>(targets.size());
  return s;
}

}  // namespace fairbbr::ml
