// Per-TTI downlink scheduling primitives: round-robin and proportional-fair
// user selection and the PF throughput average. The per-BS queue machinery
// lives in the engine; these functions are the policy core.
#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

namespace vrsim::sched {

enum class Discipline { RoundRobin, ProportionalFair };
enum class Connectivity { Single, Dual };

struct SchedulerConfig {
  Discipline discipline = Discipline::RoundRobin;
  double tti_s = 125e-6;  // mmWave numerology slot
  std::uint32_t pf_time_constant_ttis = 100;
  Connectivity connectivity = Connectivity::Single;
};

// Floor for PF average throughput, prevents division blow-up.
inline constexpr double kPfFloorBps = 1.0;

// Next backlogged slot strictly after `cursor` in cyclic order; the new
// cursor is the pick itself. `backlogged` holds slot indices in ascending
// order and must be non-empty.
std::pair<std::size_t, std::size_t> rr_pick(
    std::span<const std::size_t> backlogged, std::size_t cursor);

// Argmax of inst_rate/avg over the backlogged slots, ties to the lowest
// index. `inst_rate_bps` and `avg_bps` are indexed by slot; averages are
// floored at kPfFloorBps.
std::size_t pf_pick(std::span<const std::size_t> backlogged,
                    std::span<const double> inst_rate_bps,
                    std::span<const double> avg_bps);

// Exponential moving average advance; served_rate is 0 on TTIs where the
// slot was not scheduled.
double pf_update(double avg_bps, double served_rate_bps, std::uint32_t tc);

}  // namespace vrsim::sched
