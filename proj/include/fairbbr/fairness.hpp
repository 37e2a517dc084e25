#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairbbr/bbr.hpp"
#include "fairbbr/errors.hpp"
#include "fairbbr/filters.hpp"
#include "fairbbr/metrics.hpp"
#include "fairbbr/time.hpp"

namespace fairbbr {

// Subflows of one multipath connection that funnel through the same
// capacity-limiting link.
struct SharedBottleneckSet {
  int set_id = 0;
  int bottleneck_link = -1;
  std::vector<std::string> members;  // sorted

  size_t n() const { return members.size(); }
};

struct GroupingResult {
  std::vector<SharedBottleneckSet> sets;
  std::vector<std::string> independent;
  std::map<std::string, double> initial_alpha;  // 1/n_i per set member
};

struct SubflowPath {
  std::string id;
  std::vector<int> links;
};

// Groups subflows by the minimum-capacity link of their configured path
// (ties broken toward the lowest link index). Detection is topology ground
// truth; there is no statistical inference here.
inline GroupingResult group_shared_bottlenecks(std::span<const double> link_rate_bps,
                                               const std::vector<SubflowPath>& subflows) {
  std::map<int, std::vector<std::string>> by_bottleneck;
  for (const auto& sf : subflows) {
    if (sf.links.empty()) {
      throw ConfigError("subflow '" + sf.id + "' has no path");
    }
    int bottleneck = -1;
    for (int link : sf.links) {
      if (link < 0 || static_cast<size_t>(link) >= link_rate_bps.size()) {
        throw ConfigError("subflow '" + sf.id + "' references missing link");
      }
      if (bottleneck < 0 || link_rate_bps[static_cast<size_t>(link)] <
                                link_rate_bps[static_cast<size_t>(bottleneck)]) {
        bottleneck = link;
      }
    }
    by_bottleneck[bottleneck].push_back(sf.id);
  }

  GroupingResult out;
  int next_id = 0;
  for (auto& [link, ids] : by_bottleneck) {
    std::sort(ids.begin(), ids.end());
    if (ids.size() < 2) {
      out.independent.push_back(ids.front());
      continue;
    }
    SharedBottleneckSet set;
    set.set_id = next_id++;
    set.bottleneck_link = link;
    set.members = ids;
    for (const auto& id : ids) {
      out.initial_alpha[id] = 1.0 / static_cast<double>(ids.size());
    }
    out.sets.push_back(std::move(set));
  }
  std::sort(out.independent.begin(), out.independent.end());
  return out;
}

enum class AlphaMode : uint8_t {
  // One alpha for every member: max over the set's BtlBW estimates divided
  // by their sum (the formula taken literally).
  SharedMax,
  // Each member gets its own BtlBW over the sum; the shares total 1.
  PerSubflow,
};

inline std::map<std::string, double> compute_alpha(
    const SharedBottleneckSet& set, const std::map<std::string, double>& btlbw_bps,
    AlphaMode mode) {
  if (set.members.empty()) throw EmptySet("shared-bottleneck set has no members");
  double sum = 0;
  double max = 0;
  for (const auto& id : set.members) {
    auto it = btlbw_bps.find(id);
    if (it == btlbw_bps.end() || it->second <= 0) {
      throw NonPositiveBandwidth("subflow '" + id + "' lacks a positive BtlBW estimate");
    }
    sum += it->second;
    max = std::max(max, it->second);
  }
  std::map<std::string, double> alpha;
  for (const auto& id : set.members) {
    alpha[id] = (mode == AlphaMode::SharedMax) ? max / sum : btlbw_bps.at(id) / sum;
  }
  return alpha;
}

// max delivery rate over the trailing window times RTT', in whole packets.
inline int64_t compute_bdp(double max_rate_bps, double rtt_s, double packet_bits) {
  if (rtt_s <= 0) throw InvalidRtt("rtt must be > 0");
  if (max_rate_bps < 0) throw InvalidSample("max rate must be >= 0");
  return static_cast<int64_t>(std::ceil(max_rate_bps * rtt_s / packet_bits));
}

// Pacing is paused (rate 0) while more than a BDP is in flight; it resumes
// once the pipe drains back to the BDP. The boundary itself still paces.
inline double coupled_pacing_rate(double gain, double max_rate_bps,
                                  int64_t inflight_packets, int64_t bdp_packets) {
  return inflight_packets <= bdp_packets ? gain * max_rate_bps : 0.0;
}

// Probe and drain phases keep their standard gains; the coupling weight
// replaces the six cruise phases.
inline std::array<double, 8> gain_vector(double alpha) {
  if (!(alpha > 0.0) || alpha > 1.0) {
    throw AlphaOutOfRange("alpha must be in (0, 1]");
  }
  return {1.25, 0.75, alpha, alpha, alpha, alpha, alpha, alpha};
}

inline double jain_index(std::span<const double> throughputs) {
  if (throughputs.empty()) throw EmptyInput("jain index of empty set");
  double sum = 0;
  double sum_sq = 0;
  for (double x : throughputs) {
    if (x < 0) throw std::invalid_argument("jain index requires non-negative values");
    sum += x;
    sum_sq += x * x;
  }
  if (sum_sq == 0) throw AllZero("jain index of all-zero throughputs");
  double n = static_cast<double>(throughputs.size());
  return sum * sum / (n * sum_sq);
}

inline double jain_index(const std::vector<double>& v) {
  return jain_index(std::span<const double>(v.data(), v.size()));
}

// One advice step per control interval: a subflow predicted High that is
// under its fair share gets 10% more aggressive; one predicted Low that is
// over its fair share yields 10%. Everything stays inside [alpha_min, 1].
inline std::map<std::string, double> ml_advise_alpha(
    const std::map<std::string, double>& alpha,
    const std::map<std::string, LatencyClass>& predictions,
    const std::map<std::string, double>& throughput_share, double alpha_min = 0.05,
    double alpha_max = 1.0) {
  double fair_share = 1.0 / static_cast<double>(alpha.size());
  std::map<std::string, double> out;
  for (const auto& [id, a] : alpha) {
    auto pred = predictions.find(id);
    auto share = throughput_share.find(id);
    if (pred == predictions.end() || share == throughput_share.end()) {
      throw MissingPrediction("subflow '" + id + "' has no prediction or share");
    }
    double next = a;
    if (pred->second == LatencyClass::High && share->second < fair_share) {
      next = std::min(a * 1.1, alpha_max);
    } else if (pred->second == LatencyClass::Low && share->second > fair_share) {
      next = std::max(a * 0.9, alpha_min);
    }
    out[id] = next;
  }
  return out;
}

enum class RttPrimeMode : uint8_t {
  UseMax,  // windowed maximum RTT, as the coupling algorithm states
  UseMin,  // RTprop, the conventional BDP basis
};

struct CoupledParams {
  AlphaMode alpha_mode = AlphaMode::SharedMax;
  RttPrimeMode rtt_prime = RttPrimeMode::UseMax;
  // Window W for max{x_r(t)}; 0 means 10 x RTT', tracked dynamically.
  double w_window_s = 0.0;
  double rtt_max_window_s = 10.0;
  double alpha_min = 0.05;
  double alpha_max = 1.0;
};

// Per-subflow coupling state layered over a baseline engine. Coupling is
// active only in ProbeBW and ProbeRTT; Startup and Drain behave exactly as
// single-path BBR.
class CoupledSubflowCc {
 public:
  CoupledSubflowCc(const BbrParams& bbr_params, double packet_bits,
                   const CoupledParams& params, double initial_alpha)
      : base_(bbr_params, packet_bits),
        params_(params),
        alpha_formula_(initial_alpha),
        max_rate_(w_horizon_ns(bbr_params.initial_rtt_guess_s)),
        rtt_max_(SimTime::from_seconds(params.rtt_max_window_s).ns()) {
    apply_alpha();
  }

  void on_ack(const AckSample& s, SimTime now, int64_t inflight_packets) {
    base_.on_ack(s, now, inflight_packets);
    rtt_max_.update(now.ns(), s.rtt_s);
    max_rate_.set_horizon(w_horizon_ns(rtt_prime_s(now)));
    max_rate_.update(now.ns(), s.delivery_rate_bps);
  }

  double pacing_rate_bps(SimTime now, int64_t inflight_packets) {
    BbrMode m = base_.mode();
    if (m != BbrMode::ProbeBw && m != BbrMode::ProbeRtt) {
      return base_.pacing_rate_bps();
    }
    max_rate_.set_horizon(w_horizon_ns(rtt_prime_s(now)));
    auto rate = max_rate_.estimate(now.ns());
    if (!rate.has_value()) return base_.pacing_rate_bps();
    double gain = (m == BbrMode::ProbeBw)
                      ? base_.gain_vector()[static_cast<size_t>(base_.cycle_phase())]
                      : 1.0;
    int64_t bdp = compute_bdp(*rate, rtt_prime_s(now), base_.packet_bits());
    return coupled_pacing_rate(gain, *rate, inflight_packets, bdp);
  }

  int64_t cwnd_packets() const { return base_.cwnd_packets(); }

  double rtt_prime_s(SimTime now) {
    double fallback =
        base_.rtprop_s().value_or(base_.params().initial_rtt_guess_s);
    if (params_.rtt_prime == RttPrimeMode::UseMin) return fallback;
    return rtt_max_.estimate_or(now.ns(), fallback);
  }

  std::optional<double> max_rate_bps(SimTime now) {
    max_rate_.set_horizon(w_horizon_ns(rtt_prime_s(now)));
    return max_rate_.estimate(now.ns());
  }

  void set_formula_alpha(double alpha) {
    alpha_formula_ = alpha;
    apply_alpha();
  }

  // Multiplicative ML advice; the effective weight stays in
  // [alpha_min, alpha_max].
  void nudge_ml_factor(double factor) {
    ml_factor_ = std::clamp(ml_factor_ * factor, params_.alpha_min, 1.0 / params_.alpha_min);
    apply_alpha();
  }

  double effective_alpha() const {
    return std::clamp(alpha_formula_ * ml_factor_, params_.alpha_min,
                      params_.alpha_max);
  }

  BbrEngine& base() { return base_; }
  const BbrEngine& base() const { return base_; }
  const CoupledParams& params() const { return params_; }

 private:
  void apply_alpha() { base_.set_gain_vector(gain_vector(effective_alpha())); }

  int64_t w_horizon_ns(double rtt_prime) const {
    double w = params_.w_window_s > 0 ? params_.w_window_s : 10.0 * rtt_prime;
    return SimTime::from_seconds(w).ns();
  }

  BbrEngine base_;
  CoupledParams params_;
  double alpha_formula_;
  double ml_factor_ = 1.0;
  WindowedMaxFilter max_rate_;  // x_r(t) over [T - W, T], keys in ns
  WindowedMaxFilter rtt_max_;   // RTT' source, keys in ns
};

// Recomputes the coupling weights of one set from its members' current
// BtlBW estimates. Members without an estimate yet keep their 1/n init.
inline void refresh_set_alpha(const SharedBottleneckSet& set,
                              const std::map<std::string, CoupledSubflowCc*>& members,
                              AlphaMode mode) {
  std::map<std::string, double> btlbw;
  for (const auto& id : set.members) {
    auto bw = members.at(id)->base().btlbw_bps();
    if (!bw.has_value() || *bw <= 0) return;
    btlbw[id] = *bw;
  }
  auto alpha = compute_alpha(set, btlbw, mode);
  for (const auto& [id, a] : alpha) members.at(id)->set_formula_alpha(a);
}

}  // namespace fairbbr
