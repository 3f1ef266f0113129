// Benchmark: optimized engine vs the deliberately naive serial reference on
// identical fixed-rate scenarios (asserting equal results), plus replicate()
// wall time at several OpenMP thread counts.
#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "vrsim/engine.hpp"
#include "vrsim/geometry.hpp"
#include "vrsim/reference.hpp"

using vrsim::engine::RunMetrics;
using vrsim::engine::SimConfig;

namespace {

double seconds(std::chrono::steady_clock::duration d) {
  return std::chrono::duration<double>(d).count();
}

template <typename F>
double best_of(int reps, F&& f) {
  double best = 1e300;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const double dt = seconds(std::chrono::steady_clock::now() - t0);
    if (dt < best) best = dt;
  }
  return best;
}

SimConfig fixed_rate_config(vrsim::sched::Discipline d,
                            vrsim::sched::Connectivity c) {
  SimConfig cfg;
  cfg.duration_s = 10.0;
  cfg.warmup_s = 1.0;
  cfg.n_users = 8;
  cfg.scheduler.discipline = d;
  cfg.scheduler.connectivity = c;
  cfg.flow.bit_rate_bps = 1.2e6;  // ~7 bitplanes per frame, queues churn
  cfg.bs_positions = {{0.0, 0.0}, {500.0, 0.0}};
  for (std::size_t u = 0; u < cfg.n_users; ++u)
    cfg.user_positions_override.push_back(
        {40.0 + 60.0 * static_cast<double>(u), 25.0});
  cfg.rate_override_bps.assign(cfg.bs_positions.size() * cfg.n_users *
                                   vrsim::engine::kMaxBands,
                               0.0);
  for (std::size_t bs = 0; bs < cfg.bs_positions.size(); ++bs)
    for (std::size_t u = 0; u < cfg.n_users; ++u)
      for (int band = 0; band < vrsim::engine::kMaxBands; ++band)
        cfg.rate_override_bps[(bs * cfg.n_users + u) * vrsim::engine::kMaxBands +
                              band] =
            0.4e6 + 0.25e6 * static_cast<double>(u) + 0.1e6 * (bs ? 1 : 0);
  return cfg;
}

bool equal(const RunMetrics& a, const RunMetrics& b) {
  return a.generated == b.generated &&
         a.delivered_in_deadline == b.delivered_in_deadline &&
         a.delivered_late == b.delivered_late && a.expired == b.expired &&
         a.in_flight_at_end == b.in_flight_at_end &&
         a.latency.count == b.latency.count && a.latency.mean == b.latency.mean &&
         a.ledger.enqueued_bits == b.ledger.enqueued_bits &&
         a.ledger.delivered_bits == b.ledger.delivered_bits &&
         a.ledger.expired_bits == b.ledger.expired_bits &&
         a.ledger.cancelled_bits == b.ledger.cancelled_bits &&
         a.ledger.live_size_bits == b.ledger.live_size_bits &&
         a.ledger.live_remaining_bits == b.ledger.live_remaining_bits;
}

int head_to_head() {
  std::printf("engine vs serial reference (identical fixed-rate scenarios)\n");
  std::printf("%-24s %12s %12s %8s %s\n", "scenario", "engine[ms]", "reference[ms]",
              "speedup", "results");
  int rc = 0;
  const struct {
    const char* name;
    vrsim::sched::Discipline d;
    vrsim::sched::Connectivity c;
  } cases[] = {
      {"rr/single", vrsim::sched::Discipline::RoundRobin,
       vrsim::sched::Connectivity::Single},
      {"pf/single", vrsim::sched::Discipline::ProportionalFair,
       vrsim::sched::Connectivity::Single},
      {"rr/dual", vrsim::sched::Discipline::RoundRobin,
       vrsim::sched::Connectivity::Dual},
      {"pf/dual", vrsim::sched::Discipline::ProportionalFair,
       vrsim::sched::Connectivity::Dual},
  };
  for (const auto& cs : cases) {
    const auto cfg = fixed_rate_config(cs.d, cs.c);
    RunMetrics me, mr;
    const double te = best_of(3, [&] { me = vrsim::engine::run(cfg); });
    const double tr = best_of(3, [&] { mr = vrsim::reference::run_reference(cfg); });
    const bool ok = equal(me, mr);
    if (!ok) rc = 1;
    std::printf("%-24s %12.2f %12.2f %7.2fx %s\n", cs.name, te * 1e3, tr * 1e3,
                tr / te, ok ? "equal" : "MISMATCH");
  }
  return rc;
}

void replicate_scaling() {
  SimConfig cfg;
  cfg.duration_s = 2.0;
  cfg.warmup_s = 0.5;
  cfg.n_users = 10;
  cfg.flow.bit_rate_bps = 48e6;
  cfg.map = vrsim::geom::campus_map();
  cfg.bs_positions = vrsim::geom::campus_bs_positions();
  const std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5, 6, 7, 8};

  std::printf("\nreplicate() over %zu seeds, campus scenario\n", seeds.size());
  std::printf("%8s %12s %12s\n", "threads", "wall[ms]", "mean[%]");
#ifdef _OPENMP
  const int hw = omp_get_max_threads();
  int counts[] = {1, 2, 4, hw};
#else
  int counts[] = {1};
#endif
  std::vector<int> done;
  for (const int n : counts) {
    if (std::find(done.begin(), done.end(), n) != done.end()) continue;
    done.push_back(n);
#ifdef _OPENMP
    omp_set_num_threads(n);
#endif
    vrsim::engine::Replication rep;
    const auto t0 = std::chrono::steady_clock::now();
    rep = vrsim::engine::replicate(cfg, seeds);
    const double dt = seconds(std::chrono::steady_clock::now() - t0);
    std::printf("%8d %12.2f %12.4f\n", n, dt * 1e3, rep.mean);
  }
}

}  // namespace

int main() {
  const int rc = head_to_head();
  replicate_scaling();
  return rc;
}
