#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "fairbbr/bbr.hpp"
#include "fairbbr/errors.hpp"
#include "fairbbr/event_queue.hpp"
#include "fairbbr/fairness.hpp"
#include "fairbbr/metrics.hpp"
#include "fairbbr/rng.hpp"
#include "fairbbr/time.hpp"

namespace fairbbr {

struct LinkConfig {
  std::string id;
  double rate_bps = 1e6;
  double prop_delay_s = 0.05;
  int64_t buffer_packets = 50;
};

enum class ArrivalProcess : uint8_t { Poisson, Uniform };
enum class CcAlgorithm : uint8_t { Bbr, Coupled, CoupledMl };

inline const char* to_string(CcAlgorithm a) {
  switch (a) {
    case CcAlgorithm::Bbr:       return "bbr";
    case CcAlgorithm::Coupled:   return "coupled";
    case CcAlgorithm::CoupledMl: return "coupled_ml";
  }
  return "?";
}

struct FlowConfig {
  std::string id;
  std::vector<std::string> path;  // link ids, sender to receiver
  double send_rate_mps = 100;     // offered messages/s
  int64_t message_bytes = 1250;
  double start_s = 0;
  double stop_s = -1;  // < 0: offered until the end of the run
  ArrivalProcess arrival = ArrivalProcess::Poisson;
};

struct SimConfig {
  double duration_s = 60;
  uint64_t seed = 1;
  CcAlgorithm algorithm = CcAlgorithm::Bbr;
  BbrParams bbr;
  CoupledParams coupled;
  std::vector<LinkConfig> links;
  std::vector<FlowConfig> flows;
  double measurement_window_s = 1.0;
  double control_interval_s = 1.0;  // ml advice cadence
  double min_rto_s = 0.010;
  double rto_srtt_multiple = 2.0;
  double pacing_burst_packets = 2.0;
  // The packet scheduler releases at slightly under the controller's
  // asked-for rate so a solo flow cannot queue behind its own clock and
  // lose sight of the RTT floor.
  double pacing_margin = 0.01;
  bool record_trace = false;
};

struct FlowStats {
  int64_t copies_sent = 0;
  int64_t copies_delivered = 0;
  int64_t copies_dropped = 0;
  int64_t copies_retransmitted = 0;
  int64_t msgs_offered = 0;
  int64_t msgs_delivered = 0;

  // Copies still in queues or in propagation.
  int64_t in_flight() const { return copies_sent - copies_delivered - copies_dropped; }

  friend bool operator==(const FlowStats&, const FlowStats&) = default;
};

struct RunStats {
  std::vector<std::pair<std::string, FlowStats>> per_flow;
  FlowStats totals;

  friend bool operator==(const RunStats&, const RunStats&) = default;
};

enum class TraceKind : uint8_t {
  Send,
  Admit,
  Drop,
  ServiceDone,
  Deliver,
  Ack,
  Timeout,
  ModeChange,
};

struct TraceEntry {
  int64_t t_ns;
  TraceKind kind;
  uint32_t flow;
  int64_t a;
  int64_t b;

  friend bool operator==(const TraceEntry&, const TraceEntry&) = default;
};

enum class AdmissionResult : uint8_t { Accepted, Dropped };

// A packet copy in the network. The head of a queue is the copy in
// service; occupancy counts it.
struct PacketCopy {
  uint32_t flow;
  int64_t msg;
  uint32_t copy_seq;
  int hop;
};

struct DropTailQueue {
  int64_t capacity;
  std::deque<PacketCopy> items;

  AdmissionResult enqueue(const PacketCopy& c) {
    if (static_cast<int64_t>(items.size()) >= capacity) return AdmissionResult::Dropped;
    items.push_back(c);
    return AdmissionResult::Accepted;
  }
  int64_t occupancy() const { return static_cast<int64_t>(items.size()); }
};

// Per-interval features handed to a latency predictor in coupled_ml mode.
struct ControlObservation {
  std::string flow_id;
  double block_size = 0;
  double throughput_mps = 0;
  std::optional<double> interval_avg_latency_s;
  double share = 0;
};

using LatencyPredictor = std::function<LatencyClass(const ControlObservation&)>;

// Thresholds the interval's measured latency; the fallback advisor when no
// trained model artifact is supplied.
inline LatencyPredictor threshold_oracle_predictor(double threshold_s = 1.0) {
  return [threshold_s](const ControlObservation& obs) {
    if (!obs.interval_avg_latency_s.has_value()) return LatencyClass::Low;
    return label_latency(*obs.interval_avg_latency_s, threshold_s);
  };
}

// Deterministic discrete-event network simulation: one run is a pure
// function of (config, seed). Messages arrive at the sender, are paced out
// by the congestion controller, cross drop-tail links, and are acked over a
// delay-only return path. Lost copies retransmit on a 2 x SRTT timer and a
// message's delivery latency runs from its offer time, so retransmissions
// and sender backlog both count.
class Simulator {
 public:
  explicit Simulator(SimConfig cfg) : cfg_(std::move(cfg)) {
    validate();
    build_links();
    build_flows();
    group_coupled_flows();
    schedule_initial_events();
  }

  RunStats run() { return run_until(cfg_.duration_s); }

  RunStats run_until(double t_s) {
    queue_.run_until(SimTime::from_seconds(t_s));
    return stats();
  }

  RunStats stats() const {
    RunStats rs;
    for (const auto& f : flows_) {
      rs.per_flow.emplace_back(f.cfg.id, f.stats);
      rs.totals.copies_sent += f.stats.copies_sent;
      rs.totals.copies_delivered += f.stats.copies_delivered;
      rs.totals.copies_dropped += f.stats.copies_dropped;
      rs.totals.copies_retransmitted += f.stats.copies_retransmitted;
      rs.totals.msgs_offered += f.stats.msgs_offered;
      rs.totals.msgs_delivered += f.stats.msgs_delivered;
    }
    return rs;
  }

  const std::vector<MetricsRow>& metrics_rows() const { return rows_; }
  const std::vector<TraceEntry>& trace() const { return trace_; }
  const GroupingResult& grouping() const { return grouping_; }
  SimTime now() const { return queue_.now(); }
  const SimConfig& config() const { return cfg_; }

  void set_predictor(LatencyPredictor p) { predictor_ = std::move(p); }

  const BbrEngine& engine(size_t flow_index) const {
    const FlowRt& f = flows_.at(flow_index);
    return f.coupled ? f.coupled->base() : *f.base;
  }

  // Delivered messages per second per flow over [from_s, to_s), measured
  // from attributed metric rows.
  std::vector<double> flow_throughputs_mps(double from_s, double to_s) const {
    std::vector<double> out(flows_.size(), 0.0);
    double span = to_s - from_s;
    for (const auto& row : rows_) {
      if (row.window_start < from_s || row.window_start >= to_s) continue;
      for (size_t i = 0; i < flows_.size(); ++i) {
        if (flows_[i].cfg.id == row.flow_id) {
          out[i] += row.throughput * cfg_.measurement_window_s / span;
          break;
        }
      }
    }
    return out;
  }

 private:
  struct BacklogEntry {
    int64_t msg;
    bool retx;
  };

  struct MsgRec {
    int64_t created_ns;
    uint32_t current_copy = 0;
    bool acked = false;
    bool delivered = false;
  };

  struct CopyRec {
    int64_t sent_ns;
    int64_t delivered_snapshot;
    int64_t prior_ack_ns;  // start of this copy's rate-sample window
    bool app_limited;
    bool voided = false;
    bool acked = false;
  };

  struct LinkRt {
    LinkConfig cfg;
    int64_t prop_ns;
    DropTailQueue queue;
    bool busy = false;
  };

  struct FlowRt {
    FlowConfig cfg;
    std::vector<int> path;
    double msg_bits;
    int64_t start_ns;
    int64_t stop_ns;
    int64_t ack_delay_ns;
    double bottleneck_buffer;

    Rng arrival_rng{0};
    std::deque<BacklogEntry> backlog;
    std::vector<MsgRec> msgs;
    std::vector<CopyRec> copies;

    int64_t cc_inflight = 0;
    int64_t delivered_copies = 0;
    int64_t next_round_delivered = 0;
    int64_t last_ack_ns = 0;
    double srtt_s;
    bool srtt_seeded = false;

    double credit_bits = 0;
    int64_t last_accrual_ns = 0;
    bool tick_pending = false;

    std::unique_ptr<BbrEngine> base;
    std::unique_ptr<CoupledSubflowCc> coupled;
    int set_index = -1;

    FlowStats stats;
    std::unique_ptr<FlowWindowRecorder> recorder;
    int64_t next_window = 0;

    // per control-interval accounting for the ML advisor
    int64_t tick_prev_msgs_delivered = 0;
    double interval_latency_sum = 0;
    int64_t interval_latency_cnt = 0;

    BbrMode last_mode = BbrMode::Startup;
  };

  void validate() const {
    if (cfg_.duration_s <= 0) throw ConfigError("duration_s must be > 0");
    if (cfg_.links.empty()) throw ConfigError("topology has no links");
    for (size_t i = 0; i < cfg_.links.size(); ++i) {
      const auto& l = cfg_.links[i];
      if (l.rate_bps <= 0)
        throw ConfigError("links[" + std::to_string(i) + "].rate_bps must be > 0");
      if (l.prop_delay_s < 0)
        throw ConfigError("links[" + std::to_string(i) + "].delay must be >= 0");
      if (l.buffer_packets < 1)
        throw ConfigError("links[" + std::to_string(i) + "].buffer_packets must be >= 1");
    }
    for (size_t i = 0; i < cfg_.flows.size(); ++i) {
      const auto& f = cfg_.flows[i];
      if (f.path.empty())
        throw ConfigError("flows[" + std::to_string(i) + "].path is empty");
      if (f.message_bytes <= 0)
        throw ConfigError("flows[" + std::to_string(i) + "].message_bytes must be > 0");
      if (f.send_rate_mps < 0)
        throw ConfigError("flows[" + std::to_string(i) + "].send_rate_mps must be >= 0");
      if (f.start_s < 0)
        throw ConfigError("flows[" + std::to_string(i) + "].start_s must be >= 0");
    }
  }

  void build_links() {
    for (const auto& lc : cfg_.links) {
      LinkRt l;
      l.cfg = lc;
      l.prop_ns = SimTime::from_seconds(lc.prop_delay_s).ns();
      l.queue.capacity = lc.buffer_packets;
      links_.push_back(std::move(l));
    }
  }

  int link_index(const std::string& id) const {
    for (size_t i = 0; i < cfg_.links.size(); ++i) {
      if (cfg_.links[i].id == id) return static_cast<int>(i);
    }
    return -1;
  }

  void build_flows() {
    for (const auto& fc : cfg_.flows) {
      FlowRt f;
      f.cfg = fc;
      for (const auto& lid : fc.path) {
        int li = link_index(lid);
        if (li < 0) {
          throw ConfigError("flow '" + fc.id + "' references missing link '" + lid + "'");
        }
        f.path.push_back(li);
      }
      f.msg_bits = static_cast<double>(fc.message_bytes) * 8.0;
      f.start_ns = SimTime::from_seconds(fc.start_s).ns();
      double stop = fc.stop_s < 0 ? cfg_.duration_s : fc.stop_s;
      f.stop_ns = SimTime::from_seconds(stop).ns();
      int64_t ack = 0;
      double min_rate = links_[static_cast<size_t>(f.path[0])].cfg.rate_bps;
      double buffer = links_[static_cast<size_t>(f.path[0])].cfg.buffer_packets;
      for (int li : f.path) {
        ack += links_[static_cast<size_t>(li)].prop_ns;
        const auto& lc = links_[static_cast<size_t>(li)].cfg;
        if (lc.rate_bps < min_rate) {
          min_rate = lc.rate_bps;
          buffer = static_cast<double>(lc.buffer_packets);
        }
      }
      f.ack_delay_ns = ack;
      f.bottleneck_buffer = buffer;
      // Arrival randomness depends on (seed, flow id) only, so sweeping
      // buffer sizes replays identical offer streams.
      f.arrival_rng = Rng(derive_seed(cfg_.seed, {fnv1a64(fc.id)}));
      f.srtt_s = cfg_.bbr.initial_rtt_guess_s;
      f.recorder = std::make_unique<FlowWindowRecorder>(
          fc.id, fc.send_rate_mps, f.bottleneck_buffer, cfg_.measurement_window_s);
      f.next_window =
          static_cast<int64_t>(std::floor(fc.start_s / cfg_.measurement_window_s));
      f.base = std::make_unique<BbrEngine>(cfg_.bbr, f.msg_bits);
      flows_.push_back(std::move(f));
    }
  }

  void group_coupled_flows() {
    if (cfg_.algorithm == CcAlgorithm::Bbr) return;
    std::vector<double> rates;
    for (const auto& l : links_) rates.push_back(l.cfg.rate_bps);
    std::vector<SubflowPath> paths;
    for (const auto& f : flows_) paths.push_back({f.cfg.id, f.path});
    grouping_ = group_shared_bottlenecks(rates, paths);
    for (size_t si = 0; si < grouping_.sets.size(); ++si) {
      for (const auto& member : grouping_.sets[si].members) {
        for (auto& f : flows_) {
          if (f.cfg.id != member) continue;
          f.set_index = static_cast<int>(si);
          f.coupled = std::make_unique<CoupledSubflowCc>(
              cfg_.bbr, f.msg_bits, cfg_.coupled, grouping_.initial_alpha.at(member));
          f.base.reset();
        }
      }
    }
  }

  void schedule_initial_events() {
    for (uint32_t fi = 0; fi < flows_.size(); ++fi) {
      FlowRt& f = flows_[fi];
      if (f.cfg.send_rate_mps <= 0) continue;
      int64_t first = f.start_ns + (f.cfg.arrival == ArrivalProcess::Poisson
                                        ? next_interarrival_ns(f)
                                        : 0);
      if (first <= f.stop_ns) schedule_arrival(fi, first);
    }
    schedule_window_tick();
    if (cfg_.algorithm == CcAlgorithm::CoupledMl) {
      predictor_ = threshold_oracle_predictor();
      schedule_control_tick();
    }
  }

  int64_t next_interarrival_ns(FlowRt& f) {
    if (f.cfg.arrival == ArrivalProcess::Uniform) {
      return SimTime::from_seconds(1.0 / f.cfg.send_rate_mps).ns();
    }
    return SimTime::from_seconds(f.arrival_rng.exponential(f.cfg.send_rate_mps)).ns();
  }

  void schedule_arrival(uint32_t fi, int64_t at_ns) {
    queue_.schedule(SimTime::from_ns(at_ns), EventKind::TimerFire,
                    [this, fi] { on_arrival(fi); });
  }

  void on_arrival(uint32_t fi) {
    FlowRt& f = flows_[fi];
    int64_t now = queue_.now().ns();
    int64_t msg_id = static_cast<int64_t>(f.msgs.size());
    f.msgs.push_back(MsgRec{now});
    ++f.stats.msgs_offered;
    f.recorder->on_offered(queue_.now());
    f.backlog.push_back({msg_id, false});

    int64_t next = now + next_interarrival_ns(f);
    if (next <= f.stop_ns) schedule_arrival(fi, next);
    try_send(fi);
  }

  double pacing_rate_bps(FlowRt& f) {
    double asked = f.coupled ? f.coupled->pacing_rate_bps(queue_.now(), f.cc_inflight)
                             : f.base->pacing_rate_bps();
    return asked * (1.0 - cfg_.pacing_margin);
  }

  int64_t cwnd_packets(const FlowRt& f) const {
    return f.coupled ? f.coupled->cwnd_packets() : f.base->cwnd_packets();
  }

  BbrMode cc_mode(const FlowRt& f) const {
    return f.coupled ? f.coupled->base().mode() : f.base->mode();
  }

  void accrue_credit(FlowRt& f) {
    int64_t now = queue_.now().ns();
    double rate = pacing_rate_bps(f);
    double dt_s = static_cast<double>(now - f.last_accrual_ns) * 1e-9;
    double burst = cfg_.pacing_burst_packets * f.msg_bits;
    f.credit_bits = std::min(f.credit_bits + dt_s * rate, burst);
    f.last_accrual_ns = now;
  }

  int64_t rto_ns(const FlowRt& f) const {
    double rto = std::max(cfg_.rto_srtt_multiple * f.srtt_s, cfg_.min_rto_s);
    return SimTime::from_seconds(rto).ns();
  }

  void try_send(uint32_t fi) {
    FlowRt& f = flows_[fi];
    accrue_credit(f);
    while (!f.backlog.empty() && f.cc_inflight < cwnd_packets(f) &&
           f.credit_bits >= f.msg_bits) {
      BacklogEntry entry = f.backlog.front();
      f.backlog.pop_front();
      f.credit_bits -= f.msg_bits;
      send_copy(fi, entry);
    }
    maybe_schedule_pacing_tick(fi);
  }

  void send_copy(uint32_t fi, const BacklogEntry& entry) {
    FlowRt& f = flows_[fi];
    int64_t now = queue_.now().ns();
    uint32_t copy_seq = static_cast<uint32_t>(f.copies.size());
    int64_t window_start = f.delivered_copies > 0 ? f.last_ack_ns : now;
    f.copies.push_back(
        CopyRec{now, f.delivered_copies, window_start, f.backlog.empty()});
    f.msgs[static_cast<size_t>(entry.msg)].current_copy = copy_seq;
    ++f.cc_inflight;
    ++f.stats.copies_sent;
    if (entry.retx) ++f.stats.copies_retransmitted;
    trace(TraceKind::Send, fi, entry.msg, copy_seq);

    int64_t deadline = now + rto_ns(f);
    int64_t msg = entry.msg;
    queue_.schedule(SimTime::from_ns(deadline), EventKind::TimerFire,
                    [this, fi, msg, copy_seq] { on_rto(fi, msg, copy_seq); });

    link_arrival(f.path[0], PacketCopy{fi, entry.msg, copy_seq, 0});
  }

  void maybe_schedule_pacing_tick(uint32_t fi) {
    FlowRt& f = flows_[fi];
    if (f.backlog.empty() || f.tick_pending) return;
    if (f.cc_inflight >= cwnd_packets(f)) return;  // the next ack retriggers
    double rate = pacing_rate_bps(f);
    if (rate <= 0) return;  // pacing paused; acks drain inflight and retrigger
    double need = f.msg_bits - f.credit_bits;
    int64_t dt = std::max<int64_t>(
        1, static_cast<int64_t>(std::ceil(need / rate * 1e9)));
    f.tick_pending = true;
    queue_.schedule(queue_.now() + SimTime::from_ns(dt), EventKind::PacingTick,
                    [this, fi] {
                      flows_[fi].tick_pending = false;
                      try_send(fi);
                    });
  }

  void link_arrival(int li, const PacketCopy& c) {
    LinkRt& l = links_[static_cast<size_t>(li)];
    if (l.queue.enqueue(c) == AdmissionResult::Dropped) {
      ++flows_[c.flow].stats.copies_dropped;
      trace(TraceKind::Drop, c.flow, c.msg, li);
      return;
    }
    trace(TraceKind::Admit, c.flow, c.msg, li);
    if (!l.busy) start_service(li);
  }

  void start_service(int li) {
    LinkRt& l = links_[static_cast<size_t>(li)];
    l.busy = true;
    const PacketCopy& c = l.queue.items.front();
    double bits = flows_[c.flow].msg_bits;
    int64_t svc = std::max<int64_t>(
        1, static_cast<int64_t>(std::llround(bits / l.cfg.rate_bps * 1e9)));
    queue_.schedule(queue_.now() + SimTime::from_ns(svc), EventKind::LinkServiceDone,
                    [this, li] { on_service_done(li); });
  }

  void on_service_done(int li) {
    LinkRt& l = links_[static_cast<size_t>(li)];
    PacketCopy c = l.queue.items.front();
    l.queue.items.pop_front();
    l.busy = false;
    trace(TraceKind::ServiceDone, c.flow, c.msg, li);
    if (!l.queue.items.empty()) start_service(li);

    const FlowRt& f = flows_[c.flow];
    SimTime at = queue_.now() + SimTime::from_ns(l.prop_ns);
    c.hop += 1;
    if (static_cast<size_t>(c.hop) == f.path.size()) {
      queue_.schedule(at, EventKind::PacketArrival, [this, c] { on_dest_arrival(c); });
    } else {
      int next = f.path[static_cast<size_t>(c.hop)];
      queue_.schedule(at, EventKind::PacketArrival,
                      [this, next, c] { link_arrival(next, c); });
    }
  }

  void on_dest_arrival(const PacketCopy& c) {
    FlowRt& f = flows_[c.flow];
    ++f.stats.copies_delivered;
    trace(TraceKind::Deliver, c.flow, c.msg, c.copy_seq);
    MsgRec& m = f.msgs[static_cast<size_t>(c.msg)];
    if (!m.delivered) {
      m.delivered = true;
      ++f.stats.msgs_delivered;
      double latency =
          static_cast<double>(queue_.now().ns() - m.created_ns) * 1e-9;
      f.recorder->on_delivered(latency, queue_.now());
      f.interval_latency_sum += latency;
      ++f.interval_latency_cnt;
    }
    queue_.schedule(queue_.now() + SimTime::from_ns(f.ack_delay_ns),
                    EventKind::PacketArrival,
                    [this, c] { on_ack_arrival(c); });
  }

  void on_ack_arrival(const PacketCopy& c) {
    FlowRt& f = flows_[c.flow];
    CopyRec& rec = f.copies[c.copy_seq];
    int64_t now = queue_.now().ns();

    ++f.delivered_copies;
    double rtt_s = static_cast<double>(now - rec.sent_ns) * 1e-9;
    // Canonical delivery-rate sample: the acks landing in
    // (window_start, now] over that same span. Unbiased on a steady
    // stream, unlike delivered-per-RTT which overcounts by one packet.
    int64_t interval_ns = now - rec.prior_ack_ns;
    double data_packets =
        static_cast<double>(f.delivered_copies - rec.delivered_snapshot);
    double rate_bps = interval_ns > 0
                          ? data_packets * f.msg_bits / (1e-9 * interval_ns)
                          : data_packets * f.msg_bits / rtt_s;
    f.last_ack_ns = now;
    bool round_start = false;
    if (rec.delivered_snapshot >= f.next_round_delivered) {
      round_start = true;
      f.next_round_delivered = f.delivered_copies;
    }

    if (!rec.voided && !rec.acked) {
      rec.acked = true;
      --f.cc_inflight;
    }
    f.msgs[static_cast<size_t>(c.msg)].acked = true;

    if (!f.srtt_seeded) {
      f.srtt_s = rtt_s;
      f.srtt_seeded = true;
    } else {
      f.srtt_s = 0.875 * f.srtt_s + 0.125 * rtt_s;
    }

    AckSample sample{rtt_s, rate_bps, rec.app_limited, round_start};
    BbrMode before = cc_mode(f);
    if (f.coupled) {
      f.coupled->on_ack(sample, queue_.now(), f.cc_inflight);
      refresh_alpha(f.set_index);
    } else {
      f.base->on_ack(sample, queue_.now(), f.cc_inflight);
    }
    BbrMode after = cc_mode(f);
    if (after != before) {
      trace(TraceKind::ModeChange, c.flow, static_cast<int64_t>(before),
            static_cast<int64_t>(after));
    }
    trace(TraceKind::Ack, c.flow, c.msg, c.copy_seq);
    try_send(c.flow);
  }

  void on_rto(uint32_t fi, int64_t msg, uint32_t copy_seq) {
    FlowRt& f = flows_[fi];
    MsgRec& m = f.msgs[static_cast<size_t>(msg)];
    if (m.acked || m.current_copy != copy_seq) return;
    CopyRec& rec = f.copies[copy_seq];
    if (rec.acked || rec.voided) return;
    rec.voided = true;
    --f.cc_inflight;
    f.backlog.push_front({msg, true});
    trace(TraceKind::Timeout, fi, msg, copy_seq);
    try_send(fi);
  }

  void refresh_alpha(int set_index) {
    if (set_index < 0) return;
    const auto& set = grouping_.sets[static_cast<size_t>(set_index)];
    std::map<std::string, CoupledSubflowCc*> members;
    for (auto& f : flows_) {
      if (f.set_index == set_index) members[f.cfg.id] = f.coupled.get();
    }
    refresh_set_alpha(set, members, cfg_.coupled.alpha_mode);
  }

  void schedule_window_tick() {
    double next = (window_ticks_done_ + 1) * cfg_.measurement_window_s;
    if (next > cfg_.duration_s + 1e-9) return;
    queue_.schedule(SimTime::from_seconds(next), EventKind::TimerFire,
                    [this] { on_window_tick(); });
  }

  void on_window_tick() {
    ++window_ticks_done_;
    int64_t closing = window_ticks_done_ - 1;  // window [closing, closing+1)
    for (auto& f : flows_) {
      if (closing < f.next_window) continue;
      auto row = f.recorder->close_window(static_cast<double>(closing) *
                                          cfg_.measurement_window_s);
      if (row.has_value()) rows_.push_back(std::move(*row));
      f.next_window = closing + 1;
    }
    schedule_window_tick();
  }

  void schedule_control_tick() {
    double next = (control_ticks_done_ + 1) * cfg_.control_interval_s;
    if (next > cfg_.duration_s + 1e-9) return;
    queue_.schedule(SimTime::from_seconds(next), EventKind::TimerFire,
                    [this] { on_control_tick(); });
  }

  // Applies the advice rule to each shared set once per control interval:
  // an under-share member predicted High gets alpha * 1.1, an over-share
  // member predicted Low gets alpha * 0.9.
  void on_control_tick() {
    ++control_ticks_done_;
    for (const auto& set : grouping_.sets) {
      std::vector<FlowRt*> members;
      int64_t total_delta = 0;
      for (auto& f : flows_) {
        if (f.set_index >= 0 &&
            grouping_.sets[static_cast<size_t>(f.set_index)].set_id == set.set_id) {
          members.push_back(&f);
          total_delta += f.stats.msgs_delivered - f.tick_prev_msgs_delivered;
        }
      }
      double fair_share = 1.0 / static_cast<double>(set.n());
      for (FlowRt* f : members) {
        int64_t delta = f->stats.msgs_delivered - f->tick_prev_msgs_delivered;
        ControlObservation obs;
        obs.flow_id = f->cfg.id;
        obs.block_size = f->bottleneck_buffer;
        obs.throughput_mps = static_cast<double>(delta) / cfg_.control_interval_s;
        if (f->interval_latency_cnt > 0) {
          obs.interval_avg_latency_s =
              f->interval_latency_sum / static_cast<double>(f->interval_latency_cnt);
        }
        obs.share = total_delta > 0
                        ? static_cast<double>(delta) / static_cast<double>(total_delta)
                        : fair_share;
        LatencyClass pred = predictor_(obs);
        if (pred == LatencyClass::High && obs.share < fair_share) {
          f->coupled->nudge_ml_factor(1.1);
        } else if (pred == LatencyClass::Low && obs.share > fair_share) {
          f->coupled->nudge_ml_factor(0.9);
        }
      }
      for (FlowRt* f : members) {
        f->tick_prev_msgs_delivered = f->stats.msgs_delivered;
        f->interval_latency_sum = 0;
        f->interval_latency_cnt = 0;
      }
    }
    schedule_control_tick();
  }

  void trace(TraceKind kind, uint32_t flow, int64_t a, int64_t b) {
    if (!cfg_.record_trace) return;
    trace_.push_back(TraceEntry{queue_.now().ns(), kind, flow, a, b});
  }

  SimConfig cfg_;
  EventQueue queue_;
  std::vector<LinkRt> links_;
  std::vector<FlowRt> flows_;
  GroupingResult grouping_;
  std::vector<MetricsRow> rows_;
  std::vector<TraceEntry> trace_;
  LatencyPredictor predictor_;
  int64_t window_ticks_done_ = 0;
  int64_t control_ticks_done_ = 0;
};

}  // namespace fairbbr
