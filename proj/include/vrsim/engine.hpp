// Deterministic TTI-clocked downlink simulation: binds scenario geometry,
// the channel model, traffic generation, and per-BS schedulers; produces the
// delivery metrics (share of bitplanes delivered within their deadline).
#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "vrsim/channel.hpp"
#include "vrsim/geometry.hpp"
#include "vrsim/scheduler.hpp"
#include "vrsim/traffic.hpp"

namespace vrsim::engine {

struct SimConfig {
  double duration_s = 300.0;  // full-scale transmission time; desk configs use 10
  double warmup_s = 1.0;      // bitplanes generated before this are not scored
  std::uint64_t seed = 1;
  std::size_t n_users = 10;

  channel::ChannelConfig channel;
  sched::SchedulerConfig scheduler;
  traffic::FlowConfig flow;  // one flow of this shape per user

  geom::BuildingMap map;
  std::vector<geom::Point> bs_positions;
  double bs_height_m = 10.0;
  double user_height_m = 1.5;

  // --- test and diagnostic hooks ---
  // Fixed user drop instead of seed-driven placement.
  std::vector<geom::Point> user_positions_override;
  // Fixed link rates [bs][user][band], band-major last; bypasses geometry and
  // channel entirely (micro-scenarios and the reference-engine comparison).
  std::vector<double> rate_override_bps;
  bool collect_latency_samples = false;
  bool collect_events = false;
  bool collect_delivery_bitmap = false;  // per-plane in-deadline bits
  bool audit_conservation = false;       // revalidate bit ledgers every TTI
  std::string trace_path;                // per-TTI schedule CSV when non-empty
};

inline constexpr int kMaxBands = 2;  // primary + dual-connectivity secondary

struct LatencyStats {
  std::uint64_t count = 0;
  double mean = 0.0;
  double min = 0.0;
  double max = 0.0;
};

struct UserCounts {
  std::uint64_t generated = 0;
  std::uint64_t delivered_in_deadline = 0;
  std::uint64_t delivered_late = 0;
  std::uint64_t expired = 0;
};

enum class EventKind : std::uint8_t { Delivery, Expiry };

struct Event {
  double t = 0.0;
  EventKind kind = EventKind::Delivery;
  std::uint32_t user = 0;
  std::uint32_t frame = 0;
  std::uint32_t plane = 0;
};

// Exact bit accounting over bitplane copies. All counters are in bits of
// copy size; enqueued = delivered + expired + cancelled + live at all times.
struct ConservationLedger {
  std::uint64_t enqueued_bits = 0;
  std::uint64_t delivered_bits = 0;   // copies fully transmitted
  std::uint64_t expired_bits = 0;     // copies dropped at their deadline
  std::uint64_t cancelled_bits = 0;   // duplicate copies removed after delivery
  std::uint64_t live_size_bits = 0;   // copies still queued (full sizes)
  std::uint64_t live_remaining_bits = 0;  // untransmitted remainder of the above
};

struct RunMetrics {
  // Bitplane-level counts over post-warmup planes.
  std::uint64_t generated = 0;
  std::uint64_t delivered_in_deadline = 0;
  std::uint64_t delivered_late = 0;
  std::uint64_t expired = 0;
  std::uint64_t in_flight_at_end = 0;
  std::optional<double> success_pct;  // absent when generated == 0

  LatencyStats latency;  // completion minus generation, delivered planes
  std::vector<UserCounts> per_user;
  ConservationLedger ledger;

  std::vector<double> latency_samples;            // when collect_latency_samples
  std::vector<Event> events;                      // when collect_events
  // One byte per bitplane per user (1 = delivered within deadline), covering
  // all planes including warmup; used for the dual-connectivity superset check.
  std::vector<std::vector<std::uint8_t>> delivered_in_deadline_bitmap;
};

std::optional<double> success_percentage(const RunMetrics& m);

// Throws ConfigError on inconsistent configuration, before any simulation.
void validate_sim_config(const SimConfig& cfg);

RunMetrics run(const SimConfig& cfg);

struct Replication {
  double mean = 0.0;
  double stddev = 0.0;
  double ci95_low = 0.0;
  double ci95_high = 0.0;
  std::vector<double> per_seed;
};

// Independent runs, one per seed (fresh placement and shadowing); aggregates
// success_pct with a normal-approximation 95% interval. Runs execute in
// parallel when OpenMP is available; results are ordered by seed position.
Replication replicate(const SimConfig& cfg, const std::vector<std::uint64_t>& seeds);

// Sample mean / stddev / normal CI95 of arbitrary values (n >= 1).
Replication summarize(const std::vector<double>& values);

}  // namespace vrsim::engine
