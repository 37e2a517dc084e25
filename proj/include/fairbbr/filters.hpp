#pragma once

#include <cstdint>
#include <deque>
#include <optional>

namespace fairbbr {

// Running extremum over a trailing window of keyed samples.
//
// Keys must be fed in non-decreasing order (round indices or timestamps).
// A sample (k, v) is live at current key c while c - k <= horizon.
// Monotonic deque: amortized O(1) per update, and the estimate equals a
// brute-force scan of every live sample (the unit tests hold it to that).
// Shrinking or growing the horizon mid-stream stays exact: evicted entries
// are always dominated by a newer, at-least-as-extreme sample.
template <bool kMax>
class WindowedExtremumFilter {
 public:
  explicit WindowedExtremumFilter(int64_t horizon) : horizon_(horizon) {}

  void set_horizon(int64_t horizon) { horizon_ = horizon; }
  int64_t horizon() const { return horizon_; }

  void update(int64_t key, double value) {
    while (!q_.empty() && displaces(value, q_.back().value)) q_.pop_back();
    q_.push_back({key, value});
    expire(key);
  }

  std::optional<double> estimate(int64_t current) {
    expire(current);
    if (q_.empty()) return std::nullopt;
    return q_.front().value;
  }

  double estimate_or(int64_t current, double fallback) {
    return estimate(current).value_or(fallback);
  }

  bool empty() const { return q_.empty(); }
  void reset() { q_.clear(); }

 private:
  struct Entry {
    int64_t key;
    double value;
  };

  // Equal values displace older entries so the estimate's recency refreshes.
  static bool displaces(double incoming, double held) {
    return kMax ? incoming >= held : incoming <= held;
  }

  void expire(int64_t current) {
    while (!q_.empty() && current - q_.front().key > horizon_) q_.pop_front();
  }

  std::deque<Entry> q_;
  int64_t horizon_;
};

using WindowedMaxFilter = WindowedExtremumFilter<true>;
using WindowedMinFilter = WindowedExtremumFilter<false>;

}  // namespace fairbbr
