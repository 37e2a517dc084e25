#pragma once

#include <cmath>
#include <compare>
#include <cstdint>

namespace fairbbr {

// Simulation clock. Nanosecond integers: equal-time events compare exactly
// and no floating-point drift can reorder an event trace between runs.
class SimTime {
 public:
  constexpr SimTime() = default;

  static constexpr SimTime from_ns(int64_t v) { return SimTime(v); }
  static SimTime from_seconds(double s) {
    return SimTime(static_cast<int64_t>(std::llround(s * 1e9)));
  }
  static SimTime from_millis(double ms) { return from_seconds(ms * 1e-3); }

  constexpr int64_t ns() const { return ns_; }
  constexpr double seconds() const { return static_cast<double>(ns_) * 1e-9; }

  friend constexpr auto operator<=>(SimTime a, SimTime b) = default;
  friend constexpr SimTime operator+(SimTime a, SimTime b) {
    return SimTime(a.ns_ + b.ns_);
  }
  friend constexpr SimTime operator-(SimTime a, SimTime b) {
    return SimTime(a.ns_ - b.ns_);
  }

 private:
  constexpr explicit SimTime(int64_t v) : ns_(v) {}
  int64_t ns_ = 0;
};

}  // namespace fairbbr
