#include "vrsim/traffic.hpp"

#include <algorithm>
#include <cmath>

#include "vrsim/errors.hpp"

namespace vrsim::traffic {

FlowConfig default_flow(Kind kind) {
  FlowConfig cfg;
  cfg.kind = kind;
  if (kind == Kind::TraditionalVideo) {
    cfg.prefetch_ms = 100.0;
    cfg.drop_on_expiry = false;
  } else {
    cfg.prefetch_ms = 0.0;
    cfg.drop_on_expiry = true;
  }
  return cfg;
}

void validate_flow(const FlowConfig& cfg) {
  if (!(cfg.bit_rate_bps > 0.0)) throw ConfigError("flow: bit_rate_bps must be > 0");
  if (!(cfg.refresh_hz > 0.0)) throw ConfigError("flow: refresh_hz must be > 0");
  if (cfg.bitplane_bits == 0) throw ConfigError("flow: bitplane_bits must be > 0");
  if (!(cfg.deadline_ms > 0.0)) throw ConfigError("flow: deadline_ms must be > 0");
  if (cfg.prefetch_ms < 0.0) throw ConfigError("flow: prefetch_ms must be >= 0");
  if (cfg.kind == Kind::VR && cfg.prefetch_ms != 0.0)
    throw ConfigError("flow: VR flows take prefetch_ms = 0");
  if (frame_bits(cfg) == 0)
    throw ConfigError("flow: bit_rate_bps/refresh_hz rounds to an empty frame");
}

std::uint64_t frame_bits(const FlowConfig& cfg) {
  return static_cast<std::uint64_t>(std::llround(cfg.bit_rate_bps / cfg.refresh_hz));
}

std::uint64_t frame_bitplane_count(const FlowConfig& cfg) {
  const std::uint64_t bits = frame_bits(cfg);
  return (bits + cfg.bitplane_bits - 1) / cfg.bitplane_bits;
}

std::uint32_t plane_size_bits(const FlowConfig& cfg, std::uint64_t plane_index) {
  const std::uint64_t planes = frame_bitplane_count(cfg);
  if (plane_index + 1 < planes) return cfg.bitplane_bits;
  const std::uint64_t tail = frame_bits(cfg) - (planes - 1) * cfg.bitplane_bits;
  return static_cast<std::uint32_t>(tail);
}

std::uint64_t frame_count(const FlowConfig& cfg, double duration_s) {
  if (!(duration_s > 0.0)) return 0;
  // Frames with gen_time strictly below duration. The 1e-9 slack keeps exact
  // multiples (10 s at 120 Hz) from gaining a frame through rounding; frame 0
  // always exists for a positive duration.
  const double x = duration_s * cfg.refresh_hz;
  const auto n = static_cast<std::uint64_t>(std::ceil(x - 1e-9));
  return std::max<std::uint64_t>(n, 1);
}

double frame_gen_time(const FlowConfig& cfg, std::uint64_t frame_index) {
  return static_cast<double>(frame_index) / cfg.refresh_hz;
}

double frame_avail_time(const FlowConfig& cfg, std::uint64_t frame_index) {
  const double gen = frame_gen_time(cfg, frame_index);
  if (cfg.kind == Kind::TraditionalVideo)
    return std::max(0.0, gen - cfg.prefetch_ms * 1e-3);
  return gen;
}

double frame_deadline(const FlowConfig& cfg, std::uint64_t frame_index) {
  return frame_gen_time(cfg, frame_index) + cfg.deadline_ms * 1e-3;
}

std::vector<Bitplane> generate(const FlowConfig& cfg, double duration_s,
                               std::uint64_t flow_id) {
  validate_flow(cfg);
  const std::uint64_t frames = frame_count(cfg, duration_s);
  const std::uint64_t planes = frame_bitplane_count(cfg);
  std::vector<Bitplane> out;
  out.reserve(frames * planes);
  for (std::uint64_t k = 0; k < frames; ++k) {
    Bitplane b;
    b.flow_id = flow_id;
    b.frame_index = static_cast<std::uint32_t>(k);
    b.gen_time = frame_gen_time(cfg, k);
    b.avail_time = frame_avail_time(cfg, k);
    b.deadline = frame_deadline(cfg, k);
    for (std::uint64_t p = 0; p < planes; ++p) {
      b.plane_index = static_cast<std::uint32_t>(p);
      b.size_bits = plane_size_bits(cfg, p);
      out.push_back(b);
    }
  }
  return out;
}

}  // namespace vrsim::traffic
