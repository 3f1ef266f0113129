// VR service-requirement model: per-phase device parameters and the bit-rate
// arithmetic that maps them to downlink QoS targets.
#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vrsim::qos {

// Device/technology parameters for one VR development phase.
struct PhaseSpec {
  std::string name;
  std::string experience_duration;  // label only, not used numerically
  std::uint64_t video_w = 0;        // full-view equirect resolution
  std::uint64_t video_h = 0;
  std::uint64_t eye_w = 0;          // per-eye panel resolution
  std::uint64_t eye_h = 0;
  std::uint64_t fov_h_deg = 0;      // per-eye field of view, degrees
  std::uint64_t fov_v_deg = 0;
  std::uint64_t bits_per_color = 0;
  std::uint64_t refresh_hz = 0;
  std::uint64_t pixels_per_degree = 0;
  double rtt_budget_ms = 0.0;
  double packet_loss = 0.0;
};

// Derived service requirement for one phase.
struct QosRequirement {
  std::uint64_t uncompressed_bps = 0;  // exact integer
  double full_view_20to1_bps = 0.0;
  double fov_20to1_bps = 0.0;
  double full_view_300to1_bps = 0.0;
  double fov_300to1_bps = 0.0;
  double rtt_budget_ms = 0.0;
  double downlink_deadline_ms = 0.0;
  double packet_loss = 0.0;
};

inline constexpr double kDefaultDownlinkShare = 0.7;

// Raw full-view rate: one full frame is w*h pixels, 3 color channels of
// bits_per_color each, refreshed refresh_hz times per second. Exact in 64-bit
// for every phase in the table (largest is ~1.9e12).
std::uint64_t uncompressed_full_view_rate(std::uint64_t width, std::uint64_t height,
                                          std::uint64_t bits_per_color,
                                          std::uint64_t refresh_hz);

// Field-of-view-only rate: both eye panels instead of the full sphere.
std::uint64_t fov_rate(std::uint64_t eye_width, std::uint64_t eye_height,
                       std::uint64_t bits_per_color, std::uint64_t refresh_hz);

// Rate after compression. Throws std::invalid_argument for ratio < 1.
double compressed_rate(double uncompressed_bps, double ratio);

// Share of the motion-to-photon budget granted to the downlink.
// Throws std::invalid_argument unless rtt_ms >= 0 and 0 < share <= 1.
double downlink_delay_budget_ms(double rtt_ms, double share = kDefaultDownlinkShare);

// The five built-in phases, in table order.
const std::vector<PhaseSpec>& phases();

// Spec lookup by name; throws std::invalid_argument for unknown names.
const PhaseSpec& phase(const std::string& name);

QosRequirement phase_requirements(const PhaseSpec& spec);

// Human-readable rate ("10.62 Gbps", "531 Mbps").
std::string format_rate(double bps);

// Requirements table as CSV, one column per phase. Contains both the
// rounded display rows of the reference table and exact bits-per-second rows for
// machine consumption.
std::string qos_table_csv();

}  // namespace vrsim::qos
