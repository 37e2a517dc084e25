#pragma once

#include <cmath>
#include <cstdint>
#include <deque>
#include <optional>
#include <string>
#include <vector>

#include "fairbbr/errors.hpp"
#include "fairbbr/time.hpp"

namespace fairbbr {

enum class LatencyClass : uint8_t { Low, High };

inline const char* to_string(LatencyClass c) {
  return c == LatencyClass::Low ? "Low" : "High";
}

// Low iff avg_latency <= threshold; the boundary belongs to Low.
inline LatencyClass label_latency(double avg_latency_s, double threshold_s = 1.0) {
  if (avg_latency_s < 0) throw NegativeLatency("avg_latency must be >= 0");
  return avg_latency_s <= threshold_s ? LatencyClass::Low : LatencyClass::High;
}

// One per-flow measurement window. send_rate is the configured offered
// rate; throughput counts deliveries attributed to the window (see
// FlowWindowRecorder). avg_latency is absent when nothing was delivered.
struct MetricsRow {
  double window_start = 0;  // seconds
  std::string flow_id;
  double send_rate = 0;   // messages/s offered
  double block_size = 0;  // buffer size of the flow's bottleneck, packets
  double throughput = 0;  // messages/s delivered
  std::optional<double> avg_latency;  // seconds

  friend bool operator==(const MetricsRow&, const MetricsRow&) = default;
};

enum class Provenance : uint8_t { Simulator, Imported };

// Feature view consumed by the ML layer: (block_size, throughput) plus the
// thresholded label. Rows without a latency never reach a Dataset.
struct DatasetRow {
  double block_size = 0;
  double throughput = 0;
  double avg_latency = 0;
  LatencyClass label = LatencyClass::Low;

  friend bool operator==(const DatasetRow&, const DatasetRow&) = default;
};

struct Dataset {
  std::vector<DatasetRow> rows;
  Provenance provenance = Provenance::Simulator;
};

inline Dataset dataset_from_rows(const std::vector<MetricsRow>& rows,
                                 double threshold_s = 1.0,
                                 Provenance provenance = Provenance::Simulator) {
  Dataset d;
  d.provenance = provenance;
  for (const auto& r : rows) {
    if (!r.avg_latency.has_value()) continue;
    if (!std::isfinite(r.block_size) || !std::isfinite(r.throughput) ||
        !std::isfinite(*r.avg_latency)) {
      continue;
    }
    d.rows.push_back({r.block_size, r.throughput, *r.avg_latency,
                      label_latency(*r.avg_latency, threshold_s)});
  }
  return d;
}

// Accumulates one flow's sent/delivered events into 1 s windows.
//
// Deliveries are attributed to windows at no more than the configured send
// rate per window; the surplus of a drain burst carries into following
// windows together with its latencies. Totals are exact and every emitted
// row satisfies throughput <= send_rate.
class FlowWindowRecorder {
 public:
  FlowWindowRecorder(std::string flow_id, double send_rate_mps, double block_size,
                     double window_len_s = 1.0)
      : flow_id_(std::move(flow_id)),
        send_rate_(send_rate_mps),
        block_size_(block_size),
        window_len_(window_len_s) {}

  void on_offered(SimTime /*now*/) { ++offered_; }

  void on_delivered(double latency_s, SimTime /*now*/) {
    pending_.push_back(latency_s);
  }

  // Closes the window [window_start, window_start + len). Unused whole
  // units of allowance expire with the window; only the fractional part
  // carries, so a fractional send_rate still attributes correctly.
  std::optional<MetricsRow> close_window(double window_start_s) {
    budget_ += send_rate_ * window_len_;
    double whole = std::floor(budget_ + 1e-9);
    budget_ -= whole;
    size_t take = std::min(pending_.size(), static_cast<size_t>(whole));

    MetricsRow row;
    row.window_start = window_start_s;
    row.flow_id = flow_id_;
    row.send_rate = send_rate_;
    row.block_size = block_size_;
    row.throughput = static_cast<double>(take) / window_len_;
    if (take > 0) {
      double sum = 0;
      for (size_t i = 0; i < take; ++i) sum += pending_[i];
      row.avg_latency = sum / static_cast<double>(take);
      pending_.erase(pending_.begin(), pending_.begin() + static_cast<long>(take));
    }
    return row;
  }

  int64_t offered() const { return offered_; }
  size_t pending_deliveries() const { return pending_.size(); }

 private:
  std::string flow_id_;
  double send_rate_;
  double block_size_;
  double window_len_;
  std::deque<double> pending_;
  double budget_ = 0;  // attribution allowance, accrues send_rate per window
  int64_t offered_ = 0;
};

}  // namespace fairbbr
