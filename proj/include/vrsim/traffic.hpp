// Downlink flow generation: fixed-size bitplanes with generation,
// availability, and deadline times. VR flows are real-time (available at
// generation, dropped on expiry); traditional video prefetches ahead and
// never drops — the jitter-buffer abstraction.
#pragma once

#include <cstdint>
#include <vector>

namespace vrsim::traffic {

enum class Kind { VR, TraditionalVideo };

struct FlowConfig {
  Kind kind = Kind::VR;
  double bit_rate_bps = 768e6;  // Advanced-phase-scale default
  double refresh_hz = 120.0;
  std::uint32_t bitplane_bits = 1578;
  double deadline_ms = 7.0;   // downlink share of the interaction budget
  double prefetch_ms = 0.0;   // TraditionalVideo only
  bool drop_on_expiry = true;
};

// Flow with the documented per-kind defaults applied.
FlowConfig default_flow(Kind kind);

struct Bitplane {
  std::uint64_t flow_id = 0;
  std::uint32_t frame_index = 0;
  std::uint32_t plane_index = 0;
  std::uint32_t size_bits = 0;
  double gen_time = 0.0;
  double avail_time = 0.0;
  double deadline = 0.0;
};

// Throws ConfigError on invariant violations (rates/planes > 0, VR with a
// prefetch window, degenerate frame size).
void validate_flow(const FlowConfig& cfg);

// Bits per frame, rounded to the nearest integer bit.
std::uint64_t frame_bits(const FlowConfig& cfg);

// ceil(frame_bits / bitplane_bits); the last plane of a frame may be partial.
std::uint64_t frame_bitplane_count(const FlowConfig& cfg);

std::uint32_t plane_size_bits(const FlowConfig& cfg, std::uint64_t plane_index);

// Number of frames generated strictly before `duration_s` (frame k is
// generated at k / refresh_hz; frame 0 always exists for positive durations).
std::uint64_t frame_count(const FlowConfig& cfg, double duration_s);

double frame_gen_time(const FlowConfig& cfg, std::uint64_t frame_index);
double frame_avail_time(const FlowConfig& cfg, std::uint64_t frame_index);
double frame_deadline(const FlowConfig& cfg, std::uint64_t frame_index);

// Full materialized list, ordered by (gen_time, plane_index). The engine
// streams planes instead of calling this; it exists for tests and tooling.
std::vector<Bitplane> generate(const FlowConfig& cfg, double duration_s,
                               std::uint64_t flow_id = 0);

}  // namespace vrsim::traffic
