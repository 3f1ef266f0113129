#include "vrsim/engine.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <stdexcept>

#include "vrsim/errors.hpp"
#include "vrsim/rng.hpp"

namespace vrsim::engine {

namespace {

// Steps with start time strictly below x steps-of-1; tolerant of the
// last-ulp noise in duration/tti and duration*refresh products, and never
// zero for positive x (step 0 always runs).
std::uint64_t count_steps(double x) {
  if (!(x > 0.0)) return 0;
  const auto n = static_cast<std::uint64_t>(std::ceil(x - 1e-9));
  return std::max<std::uint64_t>(n, 1);
}

struct Copy {
  std::uint32_t frame;
  std::uint32_t plane;
  std::uint32_t remaining;
};

struct Slot {
  std::uint32_t user = 0;
  std::deque<Copy> q;
  std::uint64_t next_frame = 0;  // traffic generation cursor
  double pf_avg = 0.0;
  bool pf_init = false;
};

// One BS on one band: TDMA scheduler over its assigned users.
struct Machine {
  std::vector<Slot> slots;  // ascending user id
  std::size_t rr_cursor = 0;
  // scratch, reused every TTI
  std::vector<std::size_t> backlogged;
  std::vector<double> rate;
  std::vector<double> avg;
};

struct PlaneTimes {
  std::vector<double> gen, avail, deadline;
};

class Sim {
 public:
  explicit Sim(const SimConfig& cfg) : cfg_(cfg) { build(); }
  RunMetrics take() && { return std::move(metrics_); }
  void run_loop();

 private:
  void build();
  void maintain(Machine& m, int band, double t);
  void serve(Machine& m, int bs, int band, std::uint64_t tti);
  void on_delivery(std::uint32_t user, const Copy& c, double t_end);
  void on_copy_expiry(std::uint32_t user, const Copy& c, double t);
  void audit() const;

  double rx_mw(int band, int bs, std::uint32_t user) const {
    return rx_mw_[(band * n_bs_ + bs) * n_users_ + user];
  }
  double fixed_rate(int band, int bs, std::uint32_t user) const {
    return cfg_.rate_override_bps[(bs * n_users_ + user) * kMaxBands + band];
  }
  std::uint64_t plane_key(const Copy& c) const {
    return c.frame * planes_per_frame_ + c.plane;
  }
  bool plane_delivered(std::uint32_t user, const Copy& c) const {
    return plane_state_[user][plane_key(c)] & 1;
  }

  const SimConfig& cfg_;
  std::size_t n_users_ = 0;
  int n_bs_ = 0;
  int n_bands_ = 1;
  bool dual_ = false;
  std::uint64_t n_frames_ = 0;
  std::uint64_t k_first_ = 0;  // first post-warmup frame
  std::uint64_t planes_per_frame_ = 0;
  std::vector<std::uint32_t> plane_sizes_;
  PlaneTimes times_;
  std::vector<double> rx_mw_;        // [band][bs][user] linear received power
  std::vector<Machine> machines_;    // [band][bs]
  std::vector<std::uint8_t> active_; // per bs, scratch
  double noise_mw_ = 0.0;
  // Per-user per-plane state in dual mode: bit0 delivered, bits 1..2 failed
  // copy count. Single mode counts directly and leaves this empty.
  std::vector<std::vector<std::uint8_t>> plane_state_;
  std::ofstream trace_;
  RunMetrics metrics_;
  double latency_sum_ = 0.0;
};

void Sim::build() {
  validate_sim_config(cfg_);
  n_users_ = cfg_.n_users;
  n_bs_ = static_cast<int>(cfg_.bs_positions.size());
  dual_ = cfg_.scheduler.connectivity == sched::Connectivity::Dual;
  n_bands_ = dual_ ? 2 : 1;

  n_frames_ = traffic::frame_count(cfg_.flow, cfg_.duration_s);
  planes_per_frame_ = traffic::frame_bitplane_count(cfg_.flow);
  plane_sizes_.resize(planes_per_frame_);
  for (std::uint64_t p = 0; p < planes_per_frame_; ++p)
    plane_sizes_[p] = traffic::plane_size_bits(cfg_.flow, p);
  times_.gen.resize(n_frames_);
  times_.avail.resize(n_frames_);
  times_.deadline.resize(n_frames_);
  for (std::uint64_t k = 0; k < n_frames_; ++k) {
    times_.gen[k] = traffic::frame_gen_time(cfg_.flow, k);
    times_.avail[k] = traffic::frame_avail_time(cfg_.flow, k);
    times_.deadline[k] = traffic::frame_deadline(cfg_.flow, k);
  }
  k_first_ = count_steps(cfg_.warmup_s * cfg_.flow.refresh_hz);
  if (cfg_.warmup_s <= 0.0) k_first_ = 0;

  // User drop and BS association.
  std::vector<geom::Point> users = cfg_.user_positions_override;
  if (users.empty() && cfg_.rate_override_bps.empty())
    users = geom::place_users(cfg_.map, n_users_, cfg_.seed);

  std::vector<std::size_t> primary(n_users_, 0), secondary(n_users_, 0);
  if (cfg_.rate_override_bps.empty() || !users.empty()) {
    for (std::size_t u = 0; u < n_users_; ++u) {
      const auto order = geom::rank_bs(users[u], cfg_.user_height_m,
                                       cfg_.bs_positions, cfg_.bs_height_m);
      primary[u] = order[0];
      if (dual_) secondary[u] = order[1];
    }
  }

  // Frozen link budgets. Per-link RNG streams keyed by (band, bs, user) make
  // draws independent of evaluation order, so the loop is parallel-safe and
  // enabling the secondary band never perturbs primary-band draws.
  noise_mw_ = std::pow(10.0, channel::noise_dbm(cfg_.channel) / 10.0);
  if (cfg_.rate_override_bps.empty()) {
    rx_mw_.assign(static_cast<std::size_t>(n_bands_) * n_bs_ * n_users_, 0.0);
#pragma omp parallel for collapse(2) schedule(static) if (n_users_ > 64)
    for (int bs = 0; bs < n_bs_; ++bs) {
      for (std::size_t u = 0; u < n_users_; ++u) {
        for (int band = 0; band < n_bands_; ++band) {
          Rng shadow(cfg_.seed, stream_id(kStreamShadow, band, bs, u));
          const auto link = channel::link_budget(
              cfg_.bs_positions[bs], cfg_.bs_height_m, users[u],
              cfg_.user_height_m, cfg_.map, cfg_.channel, shadow);
          rx_mw_[(static_cast<std::size_t>(band) * n_bs_ + bs) * n_users_ + u] =
              std::pow(10.0, link.rx_power_dbm / 10.0);
        }
      }
    }
  }

  machines_.assign(static_cast<std::size_t>(n_bands_) * n_bs_, {});
  for (int band = 0; band < n_bands_; ++band) {
    const auto& assoc = band == 0 ? primary : secondary;
    for (std::size_t u = 0; u < n_users_; ++u) {
      auto& m = machines_[static_cast<std::size_t>(band) * n_bs_ + assoc[u]];
      m.slots.push_back({});
      m.slots.back().user = static_cast<std::uint32_t>(u);
    }
  }
  for (auto& m : machines_) {
    std::sort(m.slots.begin(), m.slots.end(),
              [](const Slot& a, const Slot& b) { return a.user < b.user; });
    m.rr_cursor = m.slots.empty() ? 0 : m.slots.size() - 1;  // first pick: slot 0
    m.backlogged.reserve(m.slots.size());
    m.rate.assign(m.slots.size(), 0.0);
    m.avg.assign(m.slots.size(), 0.0);
  }
  active_.assign(n_bs_, 0);

  if (dual_) {
    plane_state_.assign(n_users_, {});
    for (auto& v : plane_state_)
      v.assign(n_frames_ * planes_per_frame_, 0);
  }
  if (cfg_.collect_delivery_bitmap) {
    metrics_.delivered_in_deadline_bitmap.assign(n_users_, {});
    for (auto& v : metrics_.delivered_in_deadline_bitmap)
      v.assign(n_frames_ * planes_per_frame_, 0);
  }

  metrics_.per_user.assign(n_users_, {});
  const std::uint64_t counted_frames = n_frames_ - std::min(k_first_, n_frames_);
  for (auto& uc : metrics_.per_user) uc.generated = counted_frames * planes_per_frame_;
  metrics_.generated = counted_frames * planes_per_frame_ * n_users_;

  if (!cfg_.trace_path.empty()) {
    trace_.open(cfg_.trace_path);
    if (!trace_) throw std::runtime_error("cannot open trace file " + cfg_.trace_path);
    trace_.precision(17);
    trace_ << "tti,bs,band,user,rate_bps,bits_served\n";
  }
}

void Sim::maintain(Machine& m, int band, double t) {
  const bool secondary = band == 1;
  for (auto& s : m.slots) {
    while (s.next_frame < n_frames_ && times_.avail[s.next_frame] <= t) {
      for (std::uint64_t p = 0; p < planes_per_frame_; ++p) {
        s.q.push_back({static_cast<std::uint32_t>(s.next_frame),
                       static_cast<std::uint32_t>(p), plane_sizes_[p]});
        metrics_.ledger.enqueued_bits += plane_sizes_[p];
        metrics_.ledger.live_size_bits += plane_sizes_[p];
        metrics_.ledger.live_remaining_bits += plane_sizes_[p];
      }
      ++s.next_frame;
    }
    while (!s.q.empty()) {
      const Copy c = s.q.front();
      const std::uint32_t size = plane_sizes_[c.plane];
      if (secondary && plane_delivered(s.user, c)) {
        metrics_.ledger.cancelled_bits += size;
        metrics_.ledger.live_size_bits -= size;
        metrics_.ledger.live_remaining_bits -= c.remaining;
        s.q.pop_front();
        continue;
      }
      if (cfg_.flow.drop_on_expiry && times_.deadline[c.frame] < t) {
        metrics_.ledger.expired_bits += size;
        metrics_.ledger.live_size_bits -= size;
        metrics_.ledger.live_remaining_bits -= c.remaining;
        s.q.pop_front();
        on_copy_expiry(s.user, c, t);
        continue;
      }
      break;
    }
  }
}

void Sim::serve(Machine& m, int bs, int band, std::uint64_t tti) {
  const double t = static_cast<double>(tti) * cfg_.scheduler.tti_s;
  const double t_end = static_cast<double>(tti + 1) * cfg_.scheduler.tti_s;
  const bool secondary = band == 1;
  const bool pf = cfg_.scheduler.discipline == sched::Discipline::ProportionalFair;

  // Instantaneous rates for backlogged slots under this TTI's interferer set.
  for (const std::size_t si : m.backlogged) {
    Slot& s = m.slots[si];
    double rate;
    if (!cfg_.rate_override_bps.empty()) {
      rate = fixed_rate(band, bs, s.user);
    } else {
      double denom = noise_mw_;
      for (int b = 0; b < n_bs_; ++b)
        if (b != bs && active_[b]) denom += rx_mw(band, b, s.user);
      const double se = std::log2(1.0 + rx_mw(band, bs, s.user) / denom);
      rate = cfg_.channel.bandwidth_hz * std::min(se, cfg_.channel.se_max);
    }
    m.rate[si] = rate;
    if (pf && !s.pf_init) {  // first computed rate seeds the average
      s.pf_avg = rate;
      s.pf_init = true;
    }
  }

  std::size_t pick;
  if (pf) {
    for (std::size_t i = 0; i < m.slots.size(); ++i) m.avg[i] = m.slots[i].pf_avg;
    pick = sched::pf_pick(m.backlogged, m.rate, m.avg);
  } else {
    const auto r = sched::rr_pick(m.backlogged, m.rr_cursor);
    pick = r.first;
    m.rr_cursor = r.second;
  }

  Slot& s = m.slots[pick];
  auto budget = static_cast<std::uint64_t>(m.rate[pick] * cfg_.scheduler.tti_s);
  std::uint64_t served = 0;
  while (budget > 0 && !s.q.empty()) {
    Copy& c = s.q.front();
    const std::uint32_t size = plane_sizes_[c.plane];
    if (secondary && plane_delivered(s.user, c)) {
      metrics_.ledger.cancelled_bits += size;
      metrics_.ledger.live_size_bits -= size;
      metrics_.ledger.live_remaining_bits -= c.remaining;
      s.q.pop_front();
      continue;
    }
    if (times_.avail[c.frame] > t) break;  // future frames are untouchable
    if (c.remaining <= budget) {
      budget -= c.remaining;
      served += c.remaining;
      metrics_.ledger.live_remaining_bits -= c.remaining;
      metrics_.ledger.live_size_bits -= size;
      metrics_.ledger.delivered_bits += size;
      const Copy done = c;
      s.q.pop_front();
      on_delivery(s.user, done, t_end);
    } else {
      c.remaining -= static_cast<std::uint32_t>(budget);
      served += budget;
      metrics_.ledger.live_remaining_bits -= budget;
      budget = 0;
    }
  }

  if (pf) {
    for (std::size_t i = 0; i < m.slots.size(); ++i) {
      Slot& sl = m.slots[i];
      if (!sl.pf_init) continue;
      const double served_rate = i == pick ? m.rate[i] : 0.0;
      sl.pf_avg = sched::pf_update(sl.pf_avg, served_rate,
                                   cfg_.scheduler.pf_time_constant_ttis);
    }
  }

  if (trace_.is_open() && served > 0)
    trace_ << tti << ',' << bs << ',' << band << ',' << s.user << ','
           << m.rate[pick] << ',' << served << '\n';
}

void Sim::on_delivery(std::uint32_t user, const Copy& c, double t_end) {
  if (dual_) {
    auto& st = plane_state_[user][plane_key(c)];
    if (st & 1) return;  // duplicate copy finished after the plane was counted
    st |= 1;
  }
  const bool in_deadline = t_end <= times_.deadline[c.frame];
  if (cfg_.collect_delivery_bitmap && in_deadline)
    metrics_.delivered_in_deadline_bitmap[user][plane_key(c)] = 1;
  if (cfg_.collect_events)
    metrics_.events.push_back({t_end, EventKind::Delivery, user, c.frame, c.plane});
  if (c.frame < k_first_) return;  // warmup planes are not scored
  auto& uc = metrics_.per_user[user];
  if (in_deadline) {
    ++uc.delivered_in_deadline;
    ++metrics_.delivered_in_deadline;
  } else {
    ++uc.delivered_late;
    ++metrics_.delivered_late;
  }
  const double lat = t_end - times_.gen[c.frame];
  auto& ls = metrics_.latency;
  if (ls.count == 0) {
    ls.min = lat;
    ls.max = lat;
  } else {
    ls.min = std::min(ls.min, lat);
    ls.max = std::max(ls.max, lat);
  }
  ++ls.count;
  latency_sum_ += lat;
  if (cfg_.collect_latency_samples) metrics_.latency_samples.push_back(lat);
}

void Sim::on_copy_expiry(std::uint32_t user, const Copy& c, double t) {
  bool plane_expired;
  if (dual_) {
    auto& st = plane_state_[user][plane_key(c)];
    st += 2;  // bump failed-copy count
    plane_expired = !(st & 1) && (st >> 1) == 2;
  } else {
    plane_expired = true;
  }
  if (!plane_expired) return;
  if (cfg_.collect_events)
    metrics_.events.push_back({t, EventKind::Expiry, user, c.frame, c.plane});
  if (c.frame < k_first_) return;
  ++metrics_.per_user[user].expired;
  ++metrics_.expired;
}

void Sim::audit() const {
  std::uint64_t size = 0, remaining = 0;
  for (const auto& m : machines_)
    for (const auto& s : m.slots)
      for (const auto& c : s.q) {
        size += plane_sizes_[c.plane];
        remaining += c.remaining;
      }
  const auto& l = metrics_.ledger;
  const bool ok =
      size == l.live_size_bits && remaining == l.live_remaining_bits &&
      l.enqueued_bits ==
          l.delivered_bits + l.expired_bits + l.cancelled_bits + l.live_size_bits &&
      l.live_remaining_bits <= l.live_size_bits;
  if (!ok) throw std::logic_error("bit conservation violated");
}

void Sim::run_loop() {
  const std::uint64_t n_ttis = count_steps(cfg_.duration_s / cfg_.scheduler.tti_s);
  for (std::uint64_t tti = 0; tti < n_ttis; ++tti) {
    const double t = static_cast<double>(tti) * cfg_.scheduler.tti_s;
    for (int band = 0; band < n_bands_; ++band) {
      Machine* band_machines = &machines_[static_cast<std::size_t>(band) * n_bs_];
      for (int bs = 0; bs < n_bs_; ++bs) {
        Machine& m = band_machines[bs];
        maintain(m, band, t);
        m.backlogged.clear();
        for (std::size_t i = 0; i < m.slots.size(); ++i) {
          const auto& q = m.slots[i].q;
          if (!q.empty() && times_.avail[q.front().frame] <= t)
            m.backlogged.push_back(i);
        }
        active_[bs] = m.backlogged.empty() ? 0 : 1;
      }
      for (int bs = 0; bs < n_bs_; ++bs)
        if (active_[bs]) serve(band_machines[bs], bs, band, tti);
    }
    if (cfg_.audit_conservation) audit();
  }

  metrics_.in_flight_at_end = metrics_.generated - metrics_.delivered_in_deadline -
                              metrics_.delivered_late - metrics_.expired;
  if (metrics_.latency.count > 0)
    metrics_.latency.mean = latency_sum_ / static_cast<double>(metrics_.latency.count);
  metrics_.success_pct = success_percentage(metrics_);
}

}  // namespace

std::optional<double> success_percentage(const RunMetrics& m) {
  if (m.generated == 0) return std::nullopt;
  return 100.0 * static_cast<double>(m.delivered_in_deadline) /
         static_cast<double>(m.generated);
}

void validate_sim_config(const SimConfig& cfg) {
  if (!(cfg.duration_s > 0.0)) throw ConfigError("duration_s must be > 0");
  if (!(cfg.warmup_s >= 0.0 && cfg.warmup_s < cfg.duration_s))
    throw ConfigError("warmup_s must satisfy 0 <= warmup_s < duration_s");
  if (cfg.bs_positions.empty()) throw ConfigError("scenario: no base stations");
  if (cfg.scheduler.connectivity == sched::Connectivity::Dual &&
      cfg.bs_positions.size() < 2)
    throw ConfigError("dual connectivity requires at least 2 base stations");
  if (!(cfg.scheduler.tti_s > 0.0)) throw ConfigError("tti_s must be > 0");
  if (cfg.scheduler.pf_time_constant_ttis < 1)
    throw ConfigError("pf_time_constant_ttis must be >= 1");
  traffic::validate_flow(cfg.flow);
  if (!cfg.user_positions_override.empty() &&
      cfg.user_positions_override.size() != cfg.n_users)
    throw ConfigError("user position override does not match n_users");
  if (!cfg.rate_override_bps.empty()) {
    const std::size_t want = cfg.bs_positions.size() * cfg.n_users * kMaxBands;
    if (cfg.rate_override_bps.size() != want)
      throw ConfigError("rate override must hold n_bs * n_users * 2 entries");
    for (const double r : cfg.rate_override_bps)
      if (!(r >= 0.0)) throw ConfigError("rate override entries must be >= 0");
    if (cfg.scheduler.connectivity == sched::Connectivity::Dual &&
        cfg.user_positions_override.empty() && cfg.n_users > 0)
      throw ConfigError(
          "dual connectivity with a rate override needs explicit user positions "
          "to define the primary/secondary association");
  } else {
    geom::Scenario s{cfg.map, cfg.bs_positions, cfg.bs_height_m,
                     cfg.user_positions_override, cfg.user_height_m};
    geom::validate_scenario(s);
  }
}

RunMetrics run(const SimConfig& cfg) {
  Sim sim(cfg);
  sim.run_loop();
  return std::move(sim).take();
}

Replication summarize(const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Replication r;
  r.per_seed = values;
  double sum = 0.0;
  for (const double v : values) sum += v;
  const auto n = static_cast<double>(values.size());
  r.mean = sum / n;
  if (values.size() > 1) {
    double ss = 0.0;
    for (const double v : values) ss += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(ss / (n - 1.0));
  }
  const double half = 1.959963984540054 * r.stddev / std::sqrt(n);
  r.ci95_low = r.mean - half;
  r.ci95_high = r.mean + half;
  return r;
}

Replication replicate(const SimConfig& cfg, const std::vector<std::uint64_t>& seeds) {
  if (seeds.empty()) throw std::invalid_argument("replicate: need at least one seed");
  std::vector<double> success(seeds.size(), 0.0);
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic)
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    try {
      SimConfig c = cfg;
      c.seed = seeds[i];
      const auto m = run(c);
      if (!m.success_pct)
        throw std::runtime_error("run generated no scorable traffic");
      success[i] = *m.success_pct;
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);
  return summarize(success);
}

}  // namespace vrsim::engine
