#include "vrsim/channel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace vrsim::channel {

namespace {

constexpr double kSpeedOfLight = 3.0e8;  // propagation constant of the cited law

double breakpoint_distance_m(double fc_ghz, double bs_height_m,
                             double user_height_m) {
  // Effective antenna heights: 1 m environment height subtracted.
  const double h_bs = bs_height_m - 1.0;
  const double h_ut = user_height_m - 1.0;
  return 4.0 * h_bs * h_ut * (fc_ghz * 1e9) / kSpeedOfLight;
}

}  // namespace

double pathloss_los(double d3d_m, double fc_ghz, double bs_height_m,
                    double user_height_m) {
  if (!(d3d_m > 0.0)) throw std::invalid_argument("pathloss: distance must be > 0");
  const double pl1 = 32.4 + 21.0 * std::log10(d3d_m) + 20.0 * std::log10(fc_ghz);
  const double dbp = breakpoint_distance_m(fc_ghz, bs_height_m, user_height_m);
  if (!(d3d_m > dbp)) return pl1;
  const double dh = bs_height_m - user_height_m;
  const double pl2 = 32.4 + 40.0 * std::log10(d3d_m) + 20.0 * std::log10(fc_ghz) -
                     9.5 * std::log10(dbp * dbp + dh * dh);
  // The two branches meet at dbp only approximately; never step downward.
  const double pl1_at_bp = 32.4 + 21.0 * std::log10(dbp) + 20.0 * std::log10(fc_ghz);
  return std::max(pl2, pl1_at_bp);
}

double pathloss_nlos(double d3d_m, double fc_ghz, double bs_height_m,
                     double user_height_m) {
  const double nlos =
      32.4 + 31.9 * std::log10(d3d_m) + 20.0 * std::log10(fc_ghz);
  return std::max(pathloss_los(d3d_m, fc_ghz, bs_height_m, user_height_m), nlos);
}

double penetration_loss(int wall_crossings, double indoor_m,
                        const ChannelConfig& cfg) {
  if (wall_crossings < 0 || indoor_m < 0.0)
    throw std::invalid_argument("penetration_loss: negative input");
  return wall_crossings * cfg.wall_loss_db + indoor_m * cfg.indoor_loss_db_per_m;
}

double noise_dbm(const ChannelConfig& cfg) {
  return -174.0 + 10.0 * std::log10(cfg.bandwidth_hz) + cfg.noise_figure_db;
}

LinkState link_budget(geom::Point bs, double bs_height, geom::Point user,
                      double user_height, const geom::BuildingMap& map,
                      const ChannelConfig& cfg, Rng& shadow) {
  LinkState link;
  const auto profile = geom::path_profile(bs, user, map);
  link.los = profile.wall_crossings == 0;
  link.distance_3d_m = geom::distance_3d(bs, bs_height, user, user_height);
  const double d = std::max(link.distance_3d_m, kMinPathlossDistanceM);
  link.pathloss_db = link.los
                         ? pathloss_los(d, cfg.carrier_ghz, bs_height, user_height)
                         : pathloss_nlos(d, cfg.carrier_ghz, bs_height, user_height);
  link.penetration_db =
      penetration_loss(profile.wall_crossings, profile.indoor_m, cfg);
  const double sigma =
      link.los ? cfg.shadowing_sigma_los_db : cfg.shadowing_sigma_nlos_db;
  link.shadowing_db = shadow.next_normal(0.0, sigma);
  link.rx_power_dbm = cfg.tx_power_dbm + cfg.tx_gain_db + cfg.rx_gain_db -
                      link.pathloss_db - link.penetration_db - link.shadowing_db;
  return link;
}

double sinr_db(double serving_rx_dbm, std::span<const double> interferer_rx_dbm,
               const ChannelConfig& cfg) {
  const double serving_mw = std::pow(10.0, serving_rx_dbm / 10.0);
  double denom_mw = std::pow(10.0, noise_dbm(cfg) / 10.0);
  for (const double i_dbm : interferer_rx_dbm)
    denom_mw += std::pow(10.0, i_dbm / 10.0);
  return 10.0 * std::log10(serving_mw / denom_mw);
}

double achievable_rate_bps(double sinr_db_value, const ChannelConfig& cfg) {
  if (std::isinf(sinr_db_value) && sinr_db_value < 0.0) return 0.0;
  const double sinr_lin = std::pow(10.0, sinr_db_value / 10.0);
  const double se = std::min(std::log2(1.0 + sinr_lin), cfg.se_max);
  return cfg.bandwidth_hz * se;
}

}  // namespace vrsim::channel
