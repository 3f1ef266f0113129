// Brute-force reference implementation of the scheduling rules, kept
// deliberately naive (flat arrays, linear scans, no precomputation or
// incremental state) so it can serve as an independent oracle for the
// optimized engine and as the serial baseline for benchmarks.
#pragma once

#include "vrsim/engine.hpp"

namespace vrsim::reference {

// Replays cfg step by step. Requires fixed link rates
// (cfg.rate_override_bps) — the reference does not model the channel.
// Throws ConfigError otherwise.
engine::RunMetrics run_reference(const engine::SimConfig& cfg);

}  // namespace vrsim::reference
