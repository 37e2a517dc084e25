#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/ml/data.hpp"

namespace fairbbr::ml {

inline double gini_impurity(int64_t count0, int64_t count1) {
  double n = static_cast<double>(count0 + count1);
  if (n == 0) return 0.0;
  double p0 = static_cast<double>(count0) / n;
  double p1 = static_cast<double>(count1) / n;
  return 1.0 - p0 * p0 - p1 * p1;
}

// CART for binary labels: greedy splits minimizing weighted Gini impurity,
// stopping at pure nodes, fewer than min_samples_split rows, max depth, or
// when no split strictly improves. Candidate thresholds are midpoints of
// adjacent distinct feature values; ties resolve to the lowest feature
// index and threshold, which keeps training deterministic.
class DecisionTree {
 public:
  struct Params {
    int max_depth = 16;
    size_t min_samples_split = 2;
  };

  struct Node {
    int feature = -1;
    double threshold = 0;
    int left = -1;
    int right = -1;
    int leaf_class = -1;
  };

  DecisionTree() = default;
  explicit DecisionTree(const Params& params) : params_(params) {}

  void fit(const Matrix& X, const std::vector<int>& y) {
    if (X.rows == 0 || X.cols == 0) throw EmptyInput("decision tree needs data");
    nodes_.clear();
    std::vector<size_t> indices(X.rows);
    for (size_t i = 0; i < X.rows; ++i) indices[i] = i;
    build(X, y, indices, 0);
  }

  int predict(std::span<const double> x) const {
    int node = 0;
    while (nodes_[static_cast<size_t>(node)].leaf_class < 0) {
      const Node& n = nodes_[static_cast<size_t>(node)];
      node = x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<size_t>(node)].leaf_class;
  }

  const std::vector<Node>& nodes() const { return nodes_; }
  void set_nodes(std::vector<Node> nodes) { nodes_ = std::move(nodes); }
  const Params& params() const { return params_; }

  int depth() const { return depth_of(0); }

 private:
  int depth_of(int node) const {
    const Node& n = nodes_[static_cast<size_t>(node)];
    if (n.leaf_class >= 0) return 0;
    return 1 + std::max(depth_of(n.left), depth_of(n.right));
  }

  int build(const Matrix& X, const std::vector<int>& y, std::vector<size_t>& indices,
            int depth) {
    int64_t c1 = 0;
    for (size_t i : indices) c1 += y[i];
    int64_t c0 = static_cast<int64_t>(indices.size()) - c1;

    int me = static_cast<int>(nodes_.size());
    nodes_.push_back(Node{});
    bool stop = c0 == 0 || c1 == 0 || indices.size() < params_.min_samples_split ||
                depth >= params_.max_depth;
    if (!stop) {
      auto [feature, threshold, gain] = best_split(X, y, indices, c0, c1);
      if (gain <= 1e-12) {
        stop = true;
      } else {
        std::vector<size_t> left, right;
        for (size_t i : indices) {
          (X.at(i, static_cast<size_t>(feature)) <= threshold ? left : right)
              .push_back(i);
        }
        nodes_[static_cast<size_t>(me)].feature = feature;
        nodes_[static_cast<size_t>(me)].threshold = threshold;
        int l = build(X, y, left, depth + 1);
        int r = build(X, y, right, depth + 1);
        nodes_[static_cast<size_t>(me)].left = l;
        nodes_[static_cast<size_t>(me)].right = r;
        return me;
      }
    }
    nodes_[static_cast<size_t>(me)].leaf_class = c1 > c0 ? 1 : 0;
    return me;
  }

  // Returns (feature, threshold, impurity decrease).
  std::tuple<int, double, double> best_split(const Matrix& X, const std::vector<int>& y,
                                             const std::vector<size_t>& indices,
                                             int64_t c0, int64_t c1) const {
    double parent = gini_impurity(c0, c1);
    double n = static_cast<double>(indices.size());
    int best_feature = -1;
    double best_threshold = 0;
    double best_weighted = parent;

    std::vector<size_t> sorted = indices;
    for (size_t f = 0; f < X.cols; ++f) {
      std::sort(sorted.begin(), sorted.end(), [&](size_t a, size_t b) {
        double va = X.at(a, f), vb = X.at(b, f);
        if (va != vb) return va < vb;
        return a < b;
      });
      int64_t l0 = 0, l1 = 0;
      for (size_t pos = 0; pos + 1 < sorted.size(); ++pos) {
        l0 += 1 - y[sorted[pos]];
        l1 += y[sorted[pos]];
        double here = X.at(sorted[pos], f);
        double next = X.at(sorted[pos + 1], f);
        if (here == next) continue;
        double nl = static_cast<double>(pos + 1);
        double nr = n - nl;
        double weighted = (nl * gini_impurity(l0, l1) +
                           nr * gini_impurity(c0 - l0, c1 - l1)) /
                          n;
        if (weighted < best_weighted - 1e-12) {
          best_weighted = weighted;
          best_feature = static_cast<int>(f);
          best_threshold = (here + next) / 2.0;
        }
      }
    }
    return {best_feature, best_threshold, parent - best_weighted};
  }

  Params params_;
  std::vector<Node> nodes_;
};

}  // namespace fairbbr::ml
