#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>

#include "fairbbr/errors.hpp"
#include "fairbbr/filters.hpp"
#include "fairbbr/time.hpp"

namespace fairbbr {

enum class BbrMode : uint8_t { Startup, Drain, ProbeBw, ProbeRtt };

inline const char* to_string(BbrMode m) {
  switch (m) {
    case BbrMode::Startup:  return "startup";
    case BbrMode::Drain:    return "drain";
    case BbrMode::ProbeBw:  return "probe_bw";
    case BbrMode::ProbeRtt: return "probe_rtt";
  }
  return "?";
}

struct BbrParams {
  // 2/ln2 doubles the sending rate each round while the pipe is filling;
  // its inverse drains the queue the overshoot left behind.
  double startup_pacing_gain = 2.8853900817779268;  // 2 / ln 2
  double drain_pacing_gain = 0.3465735902799726;    // ln 2 / 2
  double cwnd_gain_startup = 2.0;
  double cwnd_gain_probe_bw = 2.0;
  std::array<double, 8> probe_bw_gains{1.25, 0.75, 1, 1, 1, 1, 1, 1};
  int64_t btlbw_window_rounds = 10;
  double rtprop_window_s = 10.0;
  double probe_rtt_duration_s = 0.2;
  int64_t min_cwnd_packets = 4;
  // Bandwidth must keep growing by this factor per round or startup ends.
  double full_bw_growth = 1.25;
  int full_bw_rounds = 3;
  double initial_rtt_guess_s = 0.1;
  int probe_bw_entry_phase = 2;
};

// One delivery-rate / RTT measurement, taken per ACK.
struct AckSample {
  double rtt_s = 0;
  double delivery_rate_bps = 0;
  bool app_limited = false;
  bool round_start = false;
};

// Single-path BBR: windowed max-filter over delivery rate (BtlBW), windowed
// min-filter over RTT (RTprop), and the Startup/Drain/ProbeBW/ProbeRTT
// state machine driving pacing rate and cwnd.
class BbrEngine {
 public:
  BbrEngine(const BbrParams& params, double packet_bits)
      : params_(params),
        packet_bits_(packet_bits),
        btlbw_(params.btlbw_window_rounds - 1),
        rtprop_(SimTime::from_seconds(params.rtprop_window_s).ns()),
        gains_(params.probe_bw_gains) {}

  BbrEngine(double packet_bits) : BbrEngine(BbrParams{}, packet_bits) {}

  void on_ack(const AckSample& s, SimTime now, int64_t inflight_packets) {
    if (s.rtt_s <= 0) throw InvalidSample("rtt sample must be > 0");
    if (s.delivery_rate_bps < 0) throw InvalidSample("delivery rate must be >= 0");

    now_ns_ = now.ns();
    if (s.round_start) ++round_count_;

    // A sample at or below the current floor refreshes the staleness stamp
    // even when the estimate value does not change.
    auto floor = rtprop_.estimate(now.ns());
    if (!floor.has_value() || s.rtt_s <= *floor) rtprop_stamp_ = now;
    rtprop_.update(now.ns(), s.rtt_s);

    // App-limited samples underestimate the path; they may only raise the
    // filter, never occupy window slots that would mask real capacity.
    double bw = btlbw_.estimate_or(round_count_, 0.0);
    if (!s.app_limited || s.delivery_rate_bps >= bw) {
      btlbw_.update(round_count_, s.delivery_rate_bps);
    }

    switch (mode_) {
      case BbrMode::Startup:
        if (s.round_start && !s.app_limited) check_full_pipe();
        if (full_pipe_) enter_drain();
        break;
      case BbrMode::Drain:
        if (inflight_packets <= bdp_packets(1.0)) enter_probe_bw(now);
        break;
      case BbrMode::ProbeBw:
        advance_cycle(now);
        break;
      case BbrMode::ProbeRtt:
        break;
    }

    if (mode_ != BbrMode::ProbeRtt && rtprop_expired(now)) enter_probe_rtt();
    if (mode_ == BbrMode::ProbeRtt) handle_probe_rtt(now, inflight_packets);
  }

  // ProbeBW phase advances once per RTprop interval; pacing gain follows
  // the 8-entry vector.
  void advance_cycle(SimTime now) {
    if (mode_ != BbrMode::ProbeBw) return;
    SimTime interval = SimTime::from_seconds(rtprop_s_or_guess());
    if (now - cycle_stamp_ >= interval) {
      cycle_phase_ = (cycle_phase_ + 1) % 8;
      cycle_stamp_ = now;
    }
  }

  double pacing_rate_bps() const {
    double bw = bandwidth_for_pacing_bps();
    switch (mode_) {
      case BbrMode::Startup:  return params_.startup_pacing_gain * bw;
      case BbrMode::Drain:    return params_.drain_pacing_gain * bw;
      case BbrMode::ProbeBw:  return gains_[static_cast<size_t>(cycle_phase_)] * bw;
      case BbrMode::ProbeRtt: return bw;
    }
    return bw;
  }

  double pacing_gain() const {
    switch (mode_) {
      case BbrMode::Startup:  return params_.startup_pacing_gain;
      case BbrMode::Drain:    return params_.drain_pacing_gain;
      case BbrMode::ProbeBw:  return gains_[static_cast<size_t>(cycle_phase_)];
      case BbrMode::ProbeRtt: return 1.0;
    }
    return 1.0;
  }

  int64_t cwnd_packets() const {
    if (mode_ == BbrMode::ProbeRtt) return params_.min_cwnd_packets;
    double gain = (mode_ == BbrMode::ProbeBw) ? params_.cwnd_gain_probe_bw
                                              : params_.cwnd_gain_startup;
    return std::max(bdp_packets(gain), params_.min_cwnd_packets);
  }

  // gain x BtlBW x RTprop in whole packets (ceiling); 0 when either
  // estimate is still missing.
  int64_t bdp_packets(double gain) const {
    auto bw = btlbw_bps();
    auto rt = rtprop_s();
    if (!bw.has_value() || !rt.has_value()) return 0;
    return static_cast<int64_t>(std::ceil(gain * (*bw) * (*rt) / packet_bits_));
  }

  std::optional<double> btlbw_bps() const {
    return const_cast<WindowedMaxFilter&>(btlbw_).estimate(round_count_);
  }
  std::optional<double> rtprop_s() const {
    return const_cast<WindowedMinFilter&>(rtprop_).estimate(now_ns_);
  }

  BbrMode mode() const { return mode_; }
  int cycle_phase() const { return cycle_phase_; }
  int64_t round_count() const { return round_count_; }
  bool full_pipe() const { return full_pipe_; }
  const BbrParams& params() const { return params_; }
  double packet_bits() const { return packet_bits_; }

  // The fairness layer substitutes its coupling weight into phases 2..7.
  void set_gain_vector(const std::array<double, 8>& gains) { gains_ = gains; }
  const std::array<double, 8>& gain_vector() const { return gains_; }

 private:
  void check_full_pipe() {
    double bw = btlbw_.estimate_or(round_count_, 0.0);
    if (bw >= full_bw_ * params_.full_bw_growth) {
      full_bw_ = bw;
      full_bw_count_ = 0;
      return;
    }
    if (++full_bw_count_ >= params_.full_bw_rounds) full_pipe_ = true;
  }

  void enter_drain() { mode_ = BbrMode::Drain; }

  void enter_probe_bw(SimTime now) {
    mode_ = BbrMode::ProbeBw;
    cycle_phase_ = params_.probe_bw_entry_phase;
    cycle_stamp_ = now;
  }

  void enter_probe_rtt() {
    mode_ = BbrMode::ProbeRtt;
    probe_rtt_done_ = std::nullopt;
  }

  void handle_probe_rtt(SimTime now, int64_t inflight_packets) {
    if (inflight_packets > params_.min_cwnd_packets) return;
    if (!probe_rtt_done_.has_value()) {
      probe_rtt_done_ = now + SimTime::from_seconds(params_.probe_rtt_duration_s);
      return;
    }
    if (now >= *probe_rtt_done_) {
      rtprop_stamp_ = now;
      if (full_pipe_) {
        enter_probe_bw(now);
      } else {
        mode_ = BbrMode::Startup;
      }
    }
  }

  bool rtprop_expired(SimTime now) const {
    return (now - rtprop_stamp_) > SimTime::from_seconds(params_.rtprop_window_s);
  }

  double rtprop_s_or_guess() const {
    return rtprop_s().value_or(params_.initial_rtt_guess_s);
  }

  // Before the first delivery-rate sample lands, pace as if min_cwnd
  // packets were crossing a path with the guessed RTT.
  double bandwidth_for_pacing_bps() const {
    auto bw = btlbw_bps();
    if (bw.has_value() && *bw > 0) return *bw;
    return static_cast<double>(params_.min_cwnd_packets) * packet_bits_ /
           rtprop_s_or_guess();
  }

  BbrParams params_;
  double packet_bits_;

  BbrMode mode_ = BbrMode::Startup;
  WindowedMaxFilter btlbw_;
  WindowedMinFilter rtprop_;
  std::array<double, 8> gains_;

  int64_t round_count_ = 0;
  double full_bw_ = 0;
  int full_bw_count_ = 0;
  bool full_pipe_ = false;

  int cycle_phase_ = 0;
  SimTime cycle_stamp_;

  SimTime rtprop_stamp_;
  std::optional<SimTime> probe_rtt_done_;
  int64_t now_ns_ = 0;
};

}  // namespace fairbbr
