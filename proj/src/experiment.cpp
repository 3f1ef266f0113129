#include "vrsim/experiment.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>

#include "vrsim/errors.hpp"

namespace vrsim::expt {

namespace fs = std::filesystem;

namespace {

std::string_view trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto pos = s.find(sep, start);
    const auto tok = trim(s.substr(start, pos - start));
    out.emplace_back(tok);
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  // A single trailing separator is tolerated.
  if (out.size() > 1 && out.back().empty()) out.pop_back();
  return out;
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 1469598103934665603ull;
  for (const unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string num(double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

std::string hex64(std::uint64_t v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v, 16);
  return "0x" + std::string(buf, r.ptr);
}

std::uint64_t steps_before(double x) {
  if (!(x > 0.0)) return 0;
  return std::max<std::uint64_t>(
      static_cast<std::uint64_t>(std::ceil(x - 1e-9)), 1);
}

struct Parser {
  std::string origin;
  int line_no = 0;

  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line_no) + ": " + msg);
  }

  double number(const std::string& key, std::string_view tok) const {
    const std::string s(tok);
    if (s.empty()) fail("empty value for " + key);
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end != s.c_str() + s.size() || !std::isfinite(v))
      fail("invalid value for " + key + ": \"" + s + "\"");
    return v;
  }

  std::uint64_t integer(const std::string& key, std::string_view tok) const {
    std::uint64_t v = 0;
    const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (r.ec != std::errc{} || r.ptr != tok.data() + tok.size())
      fail("invalid value for " + key + ": \"" + std::string(tok) +
           "\" (expected a non-negative integer)");
    return v;
  }

  sched::Discipline discipline(const std::string& key, std::string_view tok) const {
    if (tok == "rr") return sched::Discipline::RoundRobin;
    if (tok == "pf") return sched::Discipline::ProportionalFair;
    fail("invalid value for " + key + ": \"" + std::string(tok) +
         "\" (expected rr|pf)");
  }

  sched::Connectivity connectivity(const std::string& key,
                                   std::string_view tok) const {
    if (tok == "single") return sched::Connectivity::Single;
    if (tok == "dual") return sched::Connectivity::Dual;
    fail("invalid value for " + key + ": \"" + std::string(tok) +
         "\" (expected single|dual)");
  }

  traffic::Kind kind(const std::string& key, std::string_view tok) const {
    if (tok == "vr") return traffic::Kind::VR;
    if (tok == "traditional") return traffic::Kind::TraditionalVideo;
    fail("invalid value for " + key + ": \"" + std::string(tok) +
         "\" (expected vr|traditional)");
  }
};

std::string curve_token(const Curve& c) {
  std::string s;
  s += token(c.discipline);
  s += ':';
  s += token(c.connectivity);
  s += ':';
  s += token(c.traffic);
  return s;
}

std::string join_u64(const std::vector<std::uint64_t>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::string flow_line(const traffic::FlowConfig& f) {
  std::string s;
  s += "bit_rate_bps=" + num(f.bit_rate_bps);
  s += " refresh_hz=" + num(f.refresh_hz);
  s += " bitplane_bits=" + std::to_string(f.bitplane_bits);
  s += " deadline_ms=" + num(f.deadline_ms);
  s += " prefetch_ms=" + num(f.prefetch_ms);
  s += " drop_on_expiry=" + std::to_string(f.drop_on_expiry ? 1 : 0);
  return s;
}

std::string fingerprint(const ExperimentSpec& spec) {
  const auto& b = spec.base;
  std::string s = "# downlink bitplane-delivery sweep\n";
  s += "# sim: duration_s=" + num(b.duration_s) + " warmup_s=" + num(b.warmup_s) +
       "\n";
  std::string bs;
  for (std::size_t i = 0; i < b.bs_positions.size(); ++i) {
    if (i) bs += ';';
    bs += num(b.bs_positions[i].x) + ',' + num(b.bs_positions[i].y);
  }
  s += "# scenario: map_fnv1a=" + hex64(fnv1a(geom::map_to_text(b.map))) +
       " buildings=" + std::to_string(b.map.buildings.size()) + " bounds=" +
       num(b.map.bounds.xmin) + ',' + num(b.map.bounds.ymin) + ',' +
       num(b.map.bounds.xmax) + ',' + num(b.map.bounds.ymax) +
       " bs_positions=" + bs + " bs_height_m=" + num(b.bs_height_m) +
       " user_height_m=" + num(b.user_height_m) + "\n";
  const auto& c = b.channel;
  s += "# channel: carrier_ghz=" + num(c.carrier_ghz) +
       " bandwidth_hz=" + num(c.bandwidth_hz) +
       " tx_power_dbm=" + num(c.tx_power_dbm) + " tx_gain_db=" + num(c.tx_gain_db) +
       " rx_gain_db=" + num(c.rx_gain_db) +
       " noise_figure_db=" + num(c.noise_figure_db) +
       " shadowing_sigma_los_db=" + num(c.shadowing_sigma_los_db) +
       " shadowing_sigma_nlos_db=" + num(c.shadowing_sigma_nlos_db) +
       " wall_loss_db=" + num(c.wall_loss_db) +
       " indoor_loss_db_per_m=" + num(c.indoor_loss_db_per_m) +
       " se_max=" + num(c.se_max) + "\n";
  s += "# scheduler: tti_s=" + num(b.scheduler.tti_s) + " pf_time_constant_ttis=" +
       std::to_string(b.scheduler.pf_time_constant_ttis) + "\n";
  bool have_kind[2] = {false, false};
  for (const auto& cv : spec.curves)
    have_kind[cv.traffic == traffic::Kind::TraditionalVideo ? 1 : 0] = true;
  for (int k = 0; k < 2; ++k) {
    if (!have_kind[k]) continue;
    const auto kind =
        k == 0 ? traffic::Kind::VR : traffic::Kind::TraditionalVideo;
    Curve cv;
    cv.traffic = kind;
    const auto cfg = make_sim_config(spec, cv, spec.n_users_axis.front());
    s += "# flow ";
    s += token(kind);
    s += ": " + flow_line(cfg.flow) + "\n";
  }
  std::string curves;
  for (std::size_t i = 0; i < spec.curves.size(); ++i) {
    if (i) curves += ',';
    curves += curve_token(spec.curves[i]);
  }
  s += "# sweep: n_users=" + join_u64({spec.n_users_axis.begin(),
                                       spec.n_users_axis.end()}) +
       " curves=" + curves + " seeds=" + join_u64(spec.seeds) + "\n";
  return s;
}

void write_file(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open output file " + path.string());
  out << content;
  out.flush();
  if (!out) {
    out.close();
    std::error_code ec;
    fs::remove(path, ec);
    throw std::runtime_error("failed while writing " + path.string());
  }
}

}  // namespace

std::string_view token(sched::Discipline d) {
  return d == sched::Discipline::RoundRobin ? "rr" : "pf";
}

std::string_view token(sched::Connectivity c) {
  return c == sched::Connectivity::Single ? "single" : "dual";
}

std::string_view token(traffic::Kind k) {
  return k == traffic::Kind::VR ? "vr" : "traditional";
}

ExperimentSpec parse_config_text(std::string_view text, const std::string& origin,
                                 const fs::path& base_dir) {
  ExperimentSpec spec;
  spec.base.duration_s = 10.0;  // desk scale; full scale via config or flag
  spec.base.map = geom::campus_map();
  spec.base.bs_positions = geom::campus_bs_positions();

  Parser p{origin, 0};
  std::string section;
  std::set<std::string> seen;
  std::string map_path;
  std::vector<sched::Discipline> scheds{sched::Discipline::RoundRobin};
  std::vector<sched::Connectivity> conns{sched::Connectivity::Single};
  std::vector<traffic::Kind> kinds{traffic::Kind::VR};
  bool axis_given = false, curves_given = false;

  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++p.line_no;
    std::string_view line = raw;
    if (const auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;

    if (line.front() == '[') {
      if (line.back() != ']') p.fail("malformed section header");
      section = std::string(line.substr(1, line.size() - 2));
      if (section != "sim" && section != "scenario" && section != "channel" &&
          section != "flow" && section != "scheduler" && section != "sweep" &&
          section != "output")
        p.fail("unknown section \"[" + section + "]\"");
      continue;
    }

    const auto eq = line.find('=');
    if (eq == std::string_view::npos) p.fail("expected key = value");
    const std::string key{trim(line.substr(0, eq))};
    const std::string value{trim(line.substr(eq + 1))};
    if (key.empty()) p.fail("empty key");
    if (section.empty()) p.fail("key \"" + key + "\" outside any section");
    if (!seen.insert(section + "." + key).second)
      p.fail("duplicate key \"" + key + "\" in [" + section + "]");

    auto& b = spec.base;
    if (section == "sim") {
      if (key == "duration_s") b.duration_s = p.number(key, value);
      else if (key == "warmup_s") b.warmup_s = p.number(key, value);
      else p.fail("unknown key \"" + key + "\" in [sim]");
    } else if (section == "scenario") {
      if (key == "map") {
        map_path = value;
      } else if (key == "bs_positions") {
        b.bs_positions.clear();
        for (const auto& pair : split_list(value, ';')) {
          const auto xy = split_list(pair, ',');
          if (xy.size() != 2)
            p.fail("invalid value for bs_positions: \"" + pair +
                   "\" (expected x,y)");
          b.bs_positions.push_back(
              {p.number(key, xy[0]), p.number(key, xy[1])});
        }
        if (b.bs_positions.empty()) p.fail("bs_positions must not be empty");
      } else if (key == "bs_height_m") {
        b.bs_height_m = p.number(key, value);
      } else if (key == "user_height_m") {
        b.user_height_m = p.number(key, value);
      } else {
        p.fail("unknown key \"" + key + "\" in [scenario]");
      }
    } else if (section == "channel") {
      auto& c = b.channel;
      if (key == "carrier_ghz") c.carrier_ghz = p.number(key, value);
      else if (key == "bandwidth_hz") c.bandwidth_hz = p.number(key, value);
      else if (key == "tx_power_dbm") c.tx_power_dbm = p.number(key, value);
      else if (key == "tx_gain_db") c.tx_gain_db = p.number(key, value);
      else if (key == "rx_gain_db") c.rx_gain_db = p.number(key, value);
      else if (key == "noise_figure_db") c.noise_figure_db = p.number(key, value);
      else if (key == "shadowing_sigma_los_db")
        c.shadowing_sigma_los_db = p.number(key, value);
      else if (key == "shadowing_sigma_nlos_db")
        c.shadowing_sigma_nlos_db = p.number(key, value);
      else if (key == "wall_loss_db") c.wall_loss_db = p.number(key, value);
      else if (key == "indoor_loss_db_per_m")
        c.indoor_loss_db_per_m = p.number(key, value);
      else if (key == "se_max") c.se_max = p.number(key, value);
      else p.fail("unknown key \"" + key + "\" in [channel]");
    } else if (section == "flow") {
      if (key == "bit_rate_bps") spec.flow.bit_rate_bps = p.number(key, value);
      else if (key == "refresh_hz") spec.flow.refresh_hz = p.number(key, value);
      else if (key == "bitplane_bits")
        spec.flow.bitplane_bits = static_cast<std::uint32_t>(p.integer(key, value));
      else if (key == "deadline_ms") spec.flow.deadline_ms = p.number(key, value);
      else if (key == "prefetch_ms") spec.flow.prefetch_ms = p.number(key, value);
      else p.fail("unknown key \"" + key + "\" in [flow]");
    } else if (section == "scheduler") {
      if (key == "tti_s") b.scheduler.tti_s = p.number(key, value);
      else if (key == "pf_time_constant_ttis")
        b.scheduler.pf_time_constant_ttis =
            static_cast<std::uint32_t>(p.integer(key, value));
      else p.fail("unknown key \"" + key + "\" in [scheduler]");
    } else if (section == "sweep") {
      if (key == "n_users") {
        spec.n_users_axis.clear();
        for (const auto& tok : split_list(value, ','))
          spec.n_users_axis.push_back(p.integer(key, tok));
        if (spec.n_users_axis.empty()) p.fail("n_users list must not be empty");
      } else if (key == "schedulers") {
        axis_given = true;
        scheds.clear();
        for (const auto& tok : split_list(value, ','))
          scheds.push_back(p.discipline(key, tok));
        if (scheds.empty()) p.fail("schedulers list must not be empty");
      } else if (key == "connectivity") {
        axis_given = true;
        conns.clear();
        for (const auto& tok : split_list(value, ','))
          conns.push_back(p.connectivity(key, tok));
        if (conns.empty()) p.fail("connectivity list must not be empty");
      } else if (key == "traffic") {
        axis_given = true;
        kinds.clear();
        for (const auto& tok : split_list(value, ','))
          kinds.push_back(p.kind(key, tok));
        if (kinds.empty()) p.fail("traffic list must not be empty");
      } else if (key == "curves") {
        curves_given = true;
        spec.curves.clear();
        for (const auto& tok : split_list(value, ',')) {
          const auto parts = split_list(tok, ':');
          if (parts.size() != 3)
            p.fail("invalid value for curves: \"" + tok +
                   "\" (expected scheduler:connectivity:traffic)");
          spec.curves.push_back({p.discipline(key, parts[0]),
                                 p.connectivity(key, parts[1]),
                                 p.kind(key, parts[2])});
        }
        if (spec.curves.empty()) p.fail("curves list must not be empty");
      } else if (key == "seeds") {
        spec.seeds.clear();
        for (const auto& tok : split_list(value, ',')) {
          if (const auto dots = tok.find(".."); dots != std::string::npos) {
            const auto lo = p.integer(key, trim(std::string_view(tok).substr(0, dots)));
            const auto hi =
                p.integer(key, trim(std::string_view(tok).substr(dots + 2)));
            if (hi < lo)
              p.fail("invalid seed range \"" + tok + "\" (low > high)");
            if (hi - lo >= 1000000) p.fail("seed range \"" + tok + "\" too large");
            for (std::uint64_t s = lo; s <= hi; ++s) spec.seeds.push_back(s);
          } else {
            spec.seeds.push_back(p.integer(key, tok));
          }
        }
        if (spec.seeds.empty()) p.fail("seeds list must not be empty");
      } else {
        p.fail("unknown key \"" + key + "\" in [sweep]");
      }
    } else if (section == "output") {
      if (key == "csv") spec.out_csv = value;
      else if (key == "per_run") spec.per_run_csv = value;
      else p.fail("unknown key \"" + key + "\" in [output]");
    }
  }

  p.line_no = 0;  // whole-file diagnostics below
  if (curves_given && axis_given)
    p.fail("\"curves\" cannot be combined with the schedulers/connectivity/"
           "traffic axes");
  if (!curves_given) {
    spec.curves.clear();
    for (const auto d : scheds)
      for (const auto c : conns)
        for (const auto k : kinds) spec.curves.push_back({d, c, k});
  }

  if (!map_path.empty())
    spec.base.map = geom::load_map((base_dir / map_path).string());

  validate_spec(spec);
  return spec;
}

void validate_spec(const ExperimentSpec& spec) {
  const auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (!(spec.base.duration_s > 0.0)) fail("duration_s must be > 0");
  if (!(spec.base.warmup_s >= 0.0 && spec.base.warmup_s < spec.base.duration_s))
    fail("warmup_s must satisfy 0 <= warmup_s < duration_s");
  if (!(spec.base.channel.carrier_ghz > 0.0)) fail("carrier_ghz must be > 0");
  if (!(spec.base.channel.bandwidth_hz > 0.0)) fail("bandwidth_hz must be > 0");
  if (!(spec.base.channel.se_max > 0.0)) fail("se_max must be > 0");
  if (!(spec.base.channel.shadowing_sigma_los_db >= 0.0))
    fail("shadowing_sigma_los_db must be >= 0");
  if (!(spec.base.channel.shadowing_sigma_nlos_db >= 0.0))
    fail("shadowing_sigma_nlos_db must be >= 0");
  if (!(spec.base.channel.wall_loss_db >= 0.0)) fail("wall_loss_db must be >= 0");
  if (!(spec.base.channel.indoor_loss_db_per_m >= 0.0))
    fail("indoor_loss_db_per_m must be >= 0");
  if (!(spec.base.bs_height_m >= 0.0)) fail("bs_height_m must be >= 0");
  if (!(spec.base.user_height_m >= 0.0)) fail("user_height_m must be >= 0");
  if (spec.flow.bit_rate_bps && !(*spec.flow.bit_rate_bps > 0.0))
    fail("bit_rate_bps must be > 0");
  if (spec.flow.refresh_hz && !(*spec.flow.refresh_hz > 0.0))
    fail("refresh_hz must be > 0");
  if (spec.flow.bitplane_bits && *spec.flow.bitplane_bits == 0)
    fail("bitplane_bits must be >= 1");
  if (spec.flow.deadline_ms && !(*spec.flow.deadline_ms > 0.0))
    fail("deadline_ms must be > 0");
  if (spec.flow.prefetch_ms && !(*spec.flow.prefetch_ms >= 0.0))
    fail("prefetch_ms must be >= 0");
  if (spec.n_users_axis.empty()) fail("n_users list must not be empty");
  for (const auto n : spec.n_users_axis)
    if (n == 0) fail("n_users entries must be >= 1");
  if (spec.curves.empty()) fail("curves list must not be empty");
  if (spec.seeds.empty()) fail("seeds list must not be empty");
  if (spec.out_csv.empty()) fail("output csv path must not be empty");

  // Per-curve dry validation: a representative config per curve must pass
  // the engine checks and leave at least one scored frame.
  for (const auto& curve : spec.curves) {
    const auto cfg = make_sim_config(spec, curve, spec.n_users_axis.front());
    engine::validate_sim_config(cfg);
    const auto frames = traffic::frame_count(cfg.flow, cfg.duration_s);
    const auto k_first =
        cfg.warmup_s <= 0.0 ? 0 : steps_before(cfg.warmup_s * cfg.flow.refresh_hz);
    if (k_first >= frames)
      fail("warmup_s leaves no scored frames (duration_s too small)");
  }
}

ExperimentSpec parse_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config_text(text.str(), path, fs::path(path).parent_path());
}

std::size_t planned_runs(const ExperimentSpec& spec) {
  return spec.curves.size() * spec.n_users_axis.size() * spec.seeds.size();
}

engine::SimConfig make_sim_config(const ExperimentSpec& spec, const Curve& curve,
                                  std::size_t n_users) {
  engine::SimConfig cfg = spec.base;
  cfg.n_users = n_users;
  cfg.scheduler.discipline = curve.discipline;
  cfg.scheduler.connectivity = curve.connectivity;
  cfg.flow = traffic::default_flow(curve.traffic);
  const auto& f = spec.flow;
  if (f.bit_rate_bps) cfg.flow.bit_rate_bps = *f.bit_rate_bps;
  if (f.refresh_hz) cfg.flow.refresh_hz = *f.refresh_hz;
  if (f.bitplane_bits) cfg.flow.bitplane_bits = *f.bitplane_bits;
  if (f.deadline_ms) cfg.flow.deadline_ms = *f.deadline_ms;
  if (f.prefetch_ms && curve.traffic == traffic::Kind::TraditionalVideo)
    cfg.flow.prefetch_ms = *f.prefetch_ms;
  return cfg;
}

ExperimentResult run_experiment(const ExperimentSpec& spec) {
  const std::string head = fingerprint(spec);
  ExperimentResult res;
  res.summary_csv =
      head +
      "n_users,scheduler,connectivity,traffic,mean_success_pct,stddev,"
      "ci95_low,ci95_high,runs\n";
  const bool detail = !spec.per_run_csv.empty();
  if (detail)
    res.per_run_csv =
        head + "n_users,scheduler,connectivity,traffic,seed,success_pct\n";

  for (const auto& curve : spec.curves) {
    const std::string label = std::string(token(curve.discipline)) + ',' +
                              std::string(token(curve.connectivity)) + ',' +
                              std::string(token(curve.traffic));
    for (const auto n : spec.n_users_axis) {
      const auto cfg = make_sim_config(spec, curve, n);
      const auto rep = engine::replicate(cfg, spec.seeds);
      res.summary_csv += std::to_string(n) + ',' + label + ',' + num(rep.mean) +
                         ',' + num(rep.stddev) + ',' + num(rep.ci95_low) + ',' +
                         num(rep.ci95_high) + ',' +
                         std::to_string(spec.seeds.size()) + '\n';
      if (detail)
        for (std::size_t i = 0; i < spec.seeds.size(); ++i)
          res.per_run_csv += std::to_string(n) + ',' + label + ',' +
                             std::to_string(spec.seeds[i]) + ',' +
                             num(rep.per_seed[i]) + '\n';
    }
  }
  return res;
}

fs::path resolve_out_path(const std::string& path) {
  fs::path p{path};
  const char* dir = std::getenv("VRSIM_OUT_DIR");
  if (dir != nullptr && *dir != '\0' && p.is_relative()) return fs::path(dir) / p;
  return p;
}

void write_experiment(const ExperimentSpec& spec) {
  const auto res = run_experiment(spec);
  write_file(resolve_out_path(spec.out_csv), res.summary_csv);
  if (!spec.per_run_csv.empty())
    write_file(resolve_out_path(spec.per_run_csv), res.per_run_csv);
}

}  // namespace vrsim::expt
