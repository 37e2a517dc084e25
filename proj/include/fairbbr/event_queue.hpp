#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <utility>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/time.hpp"

namespace fairbbr {

enum class EventKind : uint8_t {
  PacketArrival,
  LinkServiceDone,
  TimerFire,
  PacingTick,
};

struct EventHandle {
  uint64_t seq;
};

// Deterministic scheduler. Execution order is (time, insertion seq); two
// events at the same instant run in the order they were scheduled.
class EventQueue {
 public:
  EventHandle schedule(SimTime at, EventKind kind, std::function<void()> fn) {
    if (at < now_) throw SchedulingInPast("event scheduled before current time");
    heap_.push_back(Item{at, next_seq_, kind, std::move(fn)});
    std::push_heap(heap_.begin(), heap_.end(), later);
    return EventHandle{next_seq_++};
  }

  // Executes every event with time <= until; the clock ends at until.
  void run_until(SimTime until) {
    while (!heap_.empty() && heap_.front().at <= until) {
      std::pop_heap(heap_.begin(), heap_.end(), later);
      Item it = std::move(heap_.back());
      heap_.pop_back();
      now_ = it.at;
      it.fn();
    }
    if (until > now_) now_ = until;
  }

  // Executes the single earliest event. Returns false when none is pending.
  bool step() {
    if (heap_.empty()) return false;
    std::pop_heap(heap_.begin(), heap_.end(), later);
    Item it = std::move(heap_.back());
    heap_.pop_back();
    now_ = it.at;
    it.fn();
    return true;
  }

  SimTime now() const { return now_; }
  size_t pending() const { return heap_.size(); }

 private:
  struct Item {
    SimTime at;
    uint64_t seq;
    EventKind kind;
    std::function<void()> fn;
  };

  static bool later(const Item& a, const Item& b) {
    if (a.at != b.at) return a.at > b.at;
    return a.seq > b.seq;
  }

  std::vector<Item> heap_;
  SimTime now_;
  uint64_t next_seq_ = 0;
};

}  // namespace fairbbr
