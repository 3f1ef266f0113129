#include "vrsim/scheduler.hpp"

#include <algorithm>
#include <stdexcept>

namespace vrsim::sched {

std::pair<std::size_t, std::size_t> rr_pick(
    std::span<const std::size_t> backlogged, std::size_t cursor) {
  if (backlogged.empty()) throw std::invalid_argument("rr_pick: no backlogged users");
  auto it = std::upper_bound(backlogged.begin(), backlogged.end(), cursor);
  if (it == backlogged.end()) it = backlogged.begin();  // wrap
  return {*it, *it};
}

std::size_t pf_pick(std::span<const std::size_t> backlogged,
                    std::span<const double> inst_rate_bps,
                    std::span<const double> avg_bps) {
  if (backlogged.empty()) throw std::invalid_argument("pf_pick: no backlogged users");
  std::size_t best = backlogged.front();
  double best_metric = -1.0;
  for (const std::size_t u : backlogged) {
    const double metric = inst_rate_bps[u] / std::max(avg_bps[u], kPfFloorBps);
    if (metric > best_metric) {
      best_metric = metric;
      best = u;
    }
  }
  return best;
}

double pf_update(double avg_bps, double served_rate_bps, std::uint32_t tc) {
  if (tc < 1) throw std::invalid_argument("pf_update: time constant must be >= 1");
  const double w = 1.0 / static_cast<double>(tc);
  return (1.0 - w) * avg_bps + w * served_rate_bps;
}

}  // namespace vrsim::sched
