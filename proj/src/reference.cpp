#include "vrsim/reference.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "vrsim/errors.hpp"

namespace vrsim::reference {

namespace {

enum class CopyState : std::uint8_t { Pending, Delivered, Dropped, Cancelled };

// One bitplane copy on one band. The whole traffic horizon is materialized
// up front; "queued" simply means Pending with avail <= now.
struct RefCopy {
  std::uint32_t frame;
  std::uint32_t plane;
  std::uint32_t size;
  std::uint32_t remaining;
  double avail;
  double deadline;
  CopyState state = CopyState::Pending;
};

struct RefUserBand {
  std::vector<RefCopy> copies;  // (frame, plane) order
  std::size_t scan = 0;         // copies before this index are finished
  double pf_avg = 0.0;
  bool pf_init = false;
};

struct PlaneScore {
  bool delivered = false;
  int failed = 0;
};

std::uint64_t steps_before(double x) {
  if (!(x > 0.0)) return 0;
  return std::max<std::uint64_t>(
      static_cast<std::uint64_t>(std::ceil(x - 1e-9)), 1);
}

}  // namespace

engine::RunMetrics run_reference(const engine::SimConfig& cfg) {
  engine::validate_sim_config(cfg);
  if (cfg.rate_override_bps.empty())
    throw ConfigError("reference engine requires fixed link rates");

  const std::size_t n_users = cfg.n_users;
  const int n_bs = static_cast<int>(cfg.bs_positions.size());
  const bool dual = cfg.scheduler.connectivity == sched::Connectivity::Dual;
  const int n_bands = dual ? 2 : 1;
  const bool pf = cfg.scheduler.discipline == sched::Discipline::ProportionalFair;
  const double tti_s = cfg.scheduler.tti_s;
  const std::uint32_t tc = cfg.scheduler.pf_time_constant_ttis;

  // Association by 3D distance, redone from scratch. Without explicit user
  // positions every user sits on BS 0 (single connectivity only; validation
  // rejects the dual case).
  std::vector<int> primary(n_users, 0), secondary(n_users, 0);
  if (!cfg.user_positions_override.empty()) {
    for (std::size_t u = 0; u < n_users; ++u) {
      std::vector<std::pair<double, int>> ranked;
      for (int b = 0; b < n_bs; ++b)
        ranked.emplace_back(
            geom::distance_3d(cfg.user_positions_override[u], cfg.user_height_m,
                              cfg.bs_positions[b], cfg.bs_height_m),
            b);
      std::stable_sort(
          ranked.begin(), ranked.end(),
          [](const auto& a, const auto& b) { return a.first < b.first; });
      primary[u] = ranked[0].second;
      if (dual) secondary[u] = ranked[1].second;
    }
  }

  const auto planes = traffic::generate(cfg.flow, cfg.duration_s);
  const std::uint64_t planes_per_frame = traffic::frame_bitplane_count(cfg.flow);
  const std::uint64_t n_frames = traffic::frame_count(cfg.flow, cfg.duration_s);
  const std::uint64_t k_first =
      cfg.warmup_s <= 0.0 ? 0 : steps_before(cfg.warmup_s * cfg.flow.refresh_hz);

  // state[band][user]
  std::vector<std::vector<RefUserBand>> state(
      n_bands, std::vector<RefUserBand>(n_users));
  for (int band = 0; band < n_bands; ++band)
    for (std::size_t u = 0; u < n_users; ++u) {
      auto& copies = state[band][u].copies;
      copies.reserve(planes.size());
      for (const auto& p : planes)
        copies.push_back({p.frame_index, p.plane_index, p.size_bits, p.size_bits,
                          p.avail_time, p.deadline, CopyState::Pending});
    }

  std::vector<std::vector<PlaneScore>> score(
      n_users, std::vector<PlaneScore>(n_frames * planes_per_frame));

  engine::RunMetrics m;
  m.per_user.assign(n_users, {});
  const std::uint64_t counted = n_frames - std::min(k_first, n_frames);
  for (auto& uc : m.per_user) uc.generated = counted * planes_per_frame;
  m.generated = counted * planes_per_frame * n_users;
  if (cfg.collect_delivery_bitmap) {
    m.delivered_in_deadline_bitmap.assign(n_users, {});
    for (auto& v : m.delivered_in_deadline_bitmap)
      v.assign(n_frames * planes_per_frame, 0);
  }
  double latency_sum = 0.0;

  const int copies_per_plane = dual ? 2 : 1;

  auto on_delivery = [&](std::size_t u, const RefCopy& c, double t_end) {
    auto& sc = score[u][c.frame * planes_per_frame + c.plane];
    if (sc.delivered) return;  // duplicate copy finished after the first
    sc.delivered = true;
    const bool in_deadline = t_end <= c.deadline;
    if (cfg.collect_delivery_bitmap && in_deadline)
      m.delivered_in_deadline_bitmap[u][c.frame * planes_per_frame + c.plane] = 1;
    if (cfg.collect_events)
      m.events.push_back({t_end, engine::EventKind::Delivery,
                          static_cast<std::uint32_t>(u), c.frame, c.plane});
    if (c.frame < k_first) return;
    if (in_deadline) {
      ++m.per_user[u].delivered_in_deadline;
      ++m.delivered_in_deadline;
    } else {
      ++m.per_user[u].delivered_late;
      ++m.delivered_late;
    }
    const double lat = t_end - traffic::frame_gen_time(cfg.flow, c.frame);
    if (m.latency.count == 0) {
      m.latency.min = lat;
      m.latency.max = lat;
    } else {
      m.latency.min = std::min(m.latency.min, lat);
      m.latency.max = std::max(m.latency.max, lat);
    }
    ++m.latency.count;
    latency_sum += lat;
    if (cfg.collect_latency_samples) m.latency_samples.push_back(lat);
  };

  auto on_copy_expiry = [&](std::size_t u, const RefCopy& c, double t) {
    auto& sc = score[u][c.frame * planes_per_frame + c.plane];
    ++sc.failed;
    if (sc.delivered || sc.failed != copies_per_plane) return;
    if (cfg.collect_events)
      m.events.push_back({t, engine::EventKind::Expiry,
                          static_cast<std::uint32_t>(u), c.frame, c.plane});
    if (c.frame < k_first) return;
    ++m.per_user[u].expired;
    ++m.expired;
  };

  // Per-(band, bs) member lists sorted by user id, plus RR cursors.
  std::vector<std::vector<std::vector<std::size_t>>> members(
      n_bands, std::vector<std::vector<std::size_t>>(n_bs));
  for (int band = 0; band < n_bands; ++band)
    for (std::size_t u = 0; u < n_users; ++u)
      members[band][band == 0 ? primary[u] : secondary[u]].push_back(u);
  std::vector<std::vector<std::size_t>> rr_cursor(n_bands,
                                                  std::vector<std::size_t>(n_bs));
  for (int band = 0; band < n_bands; ++band)
    for (int bs = 0; bs < n_bs; ++bs) {
      std::sort(members[band][bs].begin(), members[band][bs].end());
      rr_cursor[band][bs] =
          members[band][bs].empty() ? 0 : members[band][bs].size() - 1;
    }

  auto rate_of = [&](int band, int bs, std::size_t u) {
    return cfg.rate_override_bps[(bs * n_users + u) * engine::kMaxBands + band];
  };
  auto plane_done = [&](std::size_t u, const RefCopy& c) {
    return score[u][c.frame * planes_per_frame + c.plane].delivered;
  };

  const std::uint64_t n_ttis = steps_before(cfg.duration_s / tti_s);
  for (std::uint64_t tti = 0; tti < n_ttis; ++tti) {
    const double t = static_cast<double>(tti) * tti_s;
    const double t_end = static_cast<double>(tti + 1) * tti_s;
    for (int band = 0; band < n_bands; ++band) {
      // Head-of-queue maintenance in (bs, user) order: lazy cancellation of
      // already-delivered planes (secondary band only), then expiry drops.
      for (int bs = 0; bs < n_bs; ++bs) {
        for (const std::size_t u : members[band][bs]) {
          auto& ub = state[band][u];
          while (ub.scan < ub.copies.size()) {
            RefCopy& c = ub.copies[ub.scan];
            if (c.state != CopyState::Pending) {
              ++ub.scan;
              continue;
            }
            if (c.avail > t) break;  // not yet enqueued
            if (band == 1 && plane_done(u, c)) {
              c.state = CopyState::Cancelled;
              continue;
            }
            if (cfg.flow.drop_on_expiry && c.deadline < t) {
              c.state = CopyState::Dropped;
              on_copy_expiry(u, c, t);
              continue;
            }
            break;
          }
        }
      }
      // Backlog flags, then serve each active BS in ascending order.
      auto backlogged = [&](std::size_t u) {
        const auto& ub = state[band][u];
        for (std::size_t i = ub.scan; i < ub.copies.size(); ++i) {
          const RefCopy& c = ub.copies[i];
          if (c.state != CopyState::Pending) continue;
          return c.avail <= t;
        }
        return false;
      };
      std::vector<bool> active(n_bs, false);
      for (int bs = 0; bs < n_bs; ++bs)
        for (const std::size_t u : members[band][bs])
          if (backlogged(u)) {
            active[bs] = true;
            break;
          }
      for (int bs = 0; bs < n_bs; ++bs) {
        if (!active[bs]) continue;
        const auto& users = members[band][bs];
        std::vector<std::size_t> ready;  // positions into `users`
        for (std::size_t i = 0; i < users.size(); ++i)
          if (backlogged(users[i])) ready.push_back(i);

        // PF: the first computed rate seeds a slot's average, after which
        // the slot participates in every update of an active TTI.
        if (pf)
          for (const std::size_t i : ready) {
            auto& ub = state[band][users[i]];
            if (!ub.pf_init) {
              ub.pf_avg = rate_of(band, bs, users[i]);
              ub.pf_init = true;
            }
          }

        std::size_t pick_pos;
        if (pf) {
          double best = -1.0;
          pick_pos = ready.front();
          for (const std::size_t i : ready) {
            const std::size_t u = users[i];
            const double metric =
                rate_of(band, bs, u) /
                std::max(state[band][u].pf_avg, sched::kPfFloorBps);
            if (metric > best) {
              best = metric;
              pick_pos = i;
            }
          }
        } else {
          const std::size_t cursor = rr_cursor[band][bs];
          pick_pos = ready.front();  // wrap default
          for (const std::size_t i : ready)
            if (i > cursor) {
              pick_pos = i;
              break;
            }
          rr_cursor[band][bs] = pick_pos;
        }

        const std::size_t u = users[pick_pos];
        const double rate = rate_of(band, bs, u);
        auto budget = static_cast<std::uint64_t>(rate * tti_s);
        auto& ub = state[band][u];
        for (std::size_t i = ub.scan; budget > 0 && i < ub.copies.size(); ++i) {
          RefCopy& c = ub.copies[i];
          if (c.state != CopyState::Pending) continue;
          if (band == 1 && plane_done(u, c)) {
            c.state = CopyState::Cancelled;
            continue;
          }
          if (c.avail > t) break;
          if (c.remaining <= budget) {
            budget -= c.remaining;
            c.remaining = 0;
            c.state = CopyState::Delivered;
            on_delivery(u, c, t_end);
          } else {
            c.remaining -= static_cast<std::uint32_t>(budget);
            budget = 0;
          }
        }

        if (pf)
          for (const std::size_t mu : users) {
            auto& mub = state[band][mu];
            if (!mub.pf_init) continue;
            const double served_rate = mu == u ? rate : 0.0;
            const double w = 1.0 / static_cast<double>(tc);
            mub.pf_avg = (1.0 - w) * mub.pf_avg + w * served_rate;
          }
      }
    }
  }

  // Final ledger from copy states. A copy was enqueued iff it became
  // available by the last TTI start; untouched later copies never entered.
  const double t_last = static_cast<double>(n_ttis - 1) * tti_s;
  for (int band = 0; band < n_bands; ++band)
    for (std::size_t u = 0; u < n_users; ++u)
      for (const RefCopy& c : state[band][u].copies) {
        if (c.state == CopyState::Pending && c.avail > t_last) continue;
        m.ledger.enqueued_bits += c.size;
        switch (c.state) {
          case CopyState::Delivered:
            m.ledger.delivered_bits += c.size;
            break;
          case CopyState::Dropped:
            m.ledger.expired_bits += c.size;
            break;
          case CopyState::Cancelled:
            m.ledger.cancelled_bits += c.size;
            break;
          case CopyState::Pending:
            m.ledger.live_size_bits += c.size;
            m.ledger.live_remaining_bits += c.remaining;
            break;
        }
      }

  m.in_flight_at_end =
      m.generated - m.delivered_in_deadline - m.delivered_late - m.expired;
  if (m.latency.count > 0)
    m.latency.mean = latency_sum / static_cast<double>(m.latency.count);
  m.success_pct = engine::success_percentage(m);
  return m;
}

}  // namespace vrsim::reference
