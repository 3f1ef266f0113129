#include "vrsim/qos.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>
#include <stdexcept>

namespace vrsim::qos {

std::uint64_t uncompressed_full_view_rate(std::uint64_t width, std::uint64_t height,
                                          std::uint64_t bits_per_color,
                                          std::uint64_t refresh_hz) {
  return width * height * 3 * bits_per_color * refresh_hz;
}

std::uint64_t fov_rate(std::uint64_t eye_width, std::uint64_t eye_height,
                       std::uint64_t bits_per_color, std::uint64_t refresh_hz) {
  return 2 * eye_width * eye_height * 3 * bits_per_color * refresh_hz;
}

double compressed_rate(double uncompressed_bps, double ratio) {
  if (!(ratio >= 1.0))
    throw std::invalid_argument("compression ratio must be >= 1");
  if (!(uncompressed_bps >= 0.0))
    throw std::invalid_argument("uncompressed rate must be >= 0");
  return uncompressed_bps / ratio;
}

double downlink_delay_budget_ms(double rtt_ms, double share) {
  if (!(rtt_ms >= 0.0)) throw std::invalid_argument("rtt must be >= 0");
  if (!(share > 0.0 && share <= 1.0))
    throw std::invalid_argument("downlink share must be in (0, 1]");
  return rtt_ms * share;
}

const std::vector<PhaseSpec>& phases() {
  // Bit depth for the Human Perception row is pinned by its uncompressed
  // rate: 12 bits per color reproduces 1007.77 Gbps exactly.
  static const std::vector<PhaseSpec> table = {
      {"Pre-VR", "less than 20 minutes", 3840, 1920, 1080, 1080, 100, 100, 8, 60,
       10, 10.0, 1e-6},
      {"Entry-Level VR", "less than 20 minutes", 7680, 3840, 1920, 1920, 110, 110,
       8, 90, 17, 10.0, 1e-6},
      {"Advanced VR", "less than an hour", 11520, 5760, 3840, 3840, 120, 120, 10,
       120, 32, 5.0, 1e-6},
      {"Human Perception", "/", 21600, 10800, 9000, 8100, 150, 135, 12, 120, 60,
       10.0, 1e-6},
      {"Ultimate VR", "more than an hour", 23040, 11520, 9600, 9600, 150, 150, 12,
       200, 64, 5.0, 1e-6},
  };
  return table;
}

const PhaseSpec& phase(const std::string& name) {
  for (const auto& p : phases())
    if (p.name == name) return p;
  throw std::invalid_argument("unknown VR phase: " + name);
}

QosRequirement phase_requirements(const PhaseSpec& spec) {
  QosRequirement req;
  req.uncompressed_bps = uncompressed_full_view_rate(spec.video_w, spec.video_h,
                                                     spec.bits_per_color,
                                                     spec.refresh_hz);
  const double full = static_cast<double>(req.uncompressed_bps);
  const double fov = static_cast<double>(
      fov_rate(spec.eye_w, spec.eye_h, spec.bits_per_color, spec.refresh_hz));
  req.full_view_20to1_bps = compressed_rate(full, 20.0);
  req.fov_20to1_bps = compressed_rate(fov, 20.0);
  req.full_view_300to1_bps = compressed_rate(full, 300.0);
  req.fov_300to1_bps = compressed_rate(fov, 300.0);
  req.rtt_budget_ms = spec.rtt_budget_ms;
  req.downlink_deadline_ms = downlink_delay_budget_ms(spec.rtt_budget_ms);
  req.packet_loss = spec.packet_loss;
  return req;
}

std::string format_rate(double bps) {
  char buf[64];
  if (bps >= 1e9) {
    std::snprintf(buf, sizeof buf, "%.2f Gbps", bps / 1e9);
  } else {
    std::snprintf(buf, sizeof buf, "%.0f Mbps", bps / 1e6);
  }
  return buf;
}

namespace {

std::string exact_bps(double bps) {
  // All table rates are integral; print them without float noise.
  char buf[32];
  std::snprintf(buf, sizeof buf, "%lld", static_cast<long long>(std::llround(bps)));
  return buf;
}

}  // namespace

std::string qos_table_csv() {
  const auto& specs = phases();
  std::vector<QosRequirement> reqs;
  reqs.reserve(specs.size());
  for (const auto& s : specs) reqs.push_back(phase_requirements(s));

  std::ostringstream out;
  auto row = [&](const std::string& name, auto cell) {
    out << name;
    for (std::size_t i = 0; i < specs.size(); ++i) out << ',' << cell(i);
    out << '\n';
  };

  row("Requirement", [&](std::size_t i) { return specs[i].name; });
  row("Experience Duration",
      [&](std::size_t i) { return specs[i].experience_duration; });
  row("Video Resolution", [&](std::size_t i) {
    return std::to_string(specs[i].video_w) + "x" + std::to_string(specs[i].video_h);
  });
  row("Single-eye Resolution", [&](std::size_t i) {
    return std::to_string(specs[i].eye_w) + "x" + std::to_string(specs[i].eye_h);
  });
  row("Field-of-View (Single-eye)", [&](std::size_t i) {
    return std::to_string(specs[i].fov_h_deg) + "x" + std::to_string(specs[i].fov_v_deg);
  });
  row("Bit per Color (RGB)",
      [&](std::size_t i) { return std::to_string(specs[i].bits_per_color); });
  row("Refresh Rate",
      [&](std::size_t i) { return std::to_string(specs[i].refresh_hz); });
  row("Pixel per Degree",
      [&](std::size_t i) { return std::to_string(specs[i].pixels_per_degree); });
  row("Uncompressed Bit Rate (Progressive 1:1)", [&](std::size_t i) {
    return format_rate(static_cast<double>(reqs[i].uncompressed_bps));
  });
  row("Transmitting Bit Rate (Low-latency Compression 20:1)", [&](std::size_t i) {
    return format_rate(reqs[i].full_view_20to1_bps) + " (Full-view); " +
           format_rate(reqs[i].fov_20to1_bps) + " (FoV)";
  });
  row("Transmitting Bit Rate (Lossy Compression 300:1)", [&](std::size_t i) {
    return format_rate(reqs[i].full_view_300to1_bps) + " (Full-view); " +
           format_rate(reqs[i].fov_300to1_bps) + " (FoV)";
  });
  row("Typical Round Trip Time (RTT)", [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0f ms", specs[i].rtt_budget_ms);
    return std::string(buf);
  });
  row("Typical Packet Loss", [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.0e", specs[i].packet_loss);
    return std::string(buf);
  });

  // Machine rows: exact values in bits per second.
  row("Uncompressed Bit Rate (bps)",
      [&](std::size_t i) { return std::to_string(reqs[i].uncompressed_bps); });
  row("Transmitting Bit Rate 20:1 Full-view (bps)",
      [&](std::size_t i) { return exact_bps(reqs[i].full_view_20to1_bps); });
  row("Transmitting Bit Rate 20:1 FoV (bps)",
      [&](std::size_t i) { return exact_bps(reqs[i].fov_20to1_bps); });
  row("Transmitting Bit Rate 300:1 Full-view (bps)",
      [&](std::size_t i) { return exact_bps(reqs[i].full_view_300to1_bps); });
  row("Transmitting Bit Rate 300:1 FoV (bps)",
      [&](std::size_t i) { return exact_bps(reqs[i].fov_300to1_bps); });
  row("Downlink Delay Budget (ms)", [&](std::size_t i) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", reqs[i].downlink_deadline_ms);
    return std::string(buf);
  });
  return out.str();
}

}  // namespace vrsim::qos
