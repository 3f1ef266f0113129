// 28 GHz urban-microcell channel: distance-law path loss with LoS/NLoS
// branches, log-normal shadowing, wall/indoor penetration, SINR and the
// capped spectral-efficiency rate map.
#pragma once

#include <cstdint>
#include <span>

#include "vrsim/geometry.hpp"
#include "vrsim/rng.hpp"

namespace vrsim::channel {

struct ChannelConfig {
  double carrier_ghz = 28.0;
  double bandwidth_hz = 400e6;  // per band
  double tx_power_dbm = 30.0;
  double tx_gain_db = 10.0;
  double rx_gain_db = 10.0;
  double noise_figure_db = 7.0;
  double shadowing_sigma_los_db = 4.0;
  double shadowing_sigma_nlos_db = 7.82;
  double wall_loss_db = 20.0;
  double indoor_loss_db_per_m = 0.5;
  double se_max = 7.8;  // bits/s/Hz cap
};

// Frozen per-(BS, user, band) link characterization; SINR/rate are filled in
// per TTI once the interferer set is known.
struct LinkState {
  bool los = false;
  double distance_3d_m = 0.0;
  double pathloss_db = 0.0;
  double shadowing_db = 0.0;
  double penetration_db = 0.0;
  double rx_power_dbm = 0.0;  // tx + gains - pathloss - penetration - shadowing
};

// Distance floor for the path-loss law. Geometry below this is out of the
// model's validity range and is clamped inside link_budget().
inline constexpr double kMinPathlossDistanceM = 10.0;

// LoS street-canyon path loss in dB. Pre-breakpoint: 32.4 + 21 log10(d) +
// 20 log10(fc); past the breakpoint distance the steeper second branch takes
// over (never below the first branch's value at the breakpoint, so the law
// stays monotone). Heights enter the breakpoint via effective antenna
// heights (h - 1 m). Throws std::invalid_argument for d <= 0.
double pathloss_los(double d3d_m, double fc_ghz, double bs_height_m = 10.0,
                    double user_height_m = 1.5);

// NLoS: max of the LoS law and 32.4 + 31.9 log10(d) + 20 log10(fc).
double pathloss_nlos(double d3d_m, double fc_ghz, double bs_height_m = 10.0,
                     double user_height_m = 1.5);

// wall_crossings * wall_loss + indoor_m * indoor_loss.
double penetration_loss(int wall_crossings, double indoor_m,
                        const ChannelConfig& cfg);

double noise_dbm(const ChannelConfig& cfg);

// Full link characterization. Shadowing is drawn from `shadow` (one normal
// draw, sigma chosen by LoS class); callers hand each link its own stream so
// links can be evaluated in any order or in parallel.
LinkState link_budget(geom::Point bs, double bs_height, geom::Point user,
                      double user_height, const geom::BuildingMap& map,
                      const ChannelConfig& cfg, Rng& shadow);

// Linear-domain SINR of a serving signal against noise plus interferers.
double sinr_db(double serving_rx_dbm, std::span<const double> interferer_rx_dbm,
               const ChannelConfig& cfg);

// bandwidth * min(log2(1 + sinr_linear), se_max).
double achievable_rate_bps(double sinr_db_value, const ChannelConfig& cfg);

}  // namespace vrsim::channel
