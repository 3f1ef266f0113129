#include "vrsim/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include "vrsim/errors.hpp"
#include "vrsim/rng.hpp"

namespace vrsim::geom {

namespace {

// Fixed symbolic perturbation applied to query segments. Two irrationally
// related components so a shifted segment cannot stay collinear with any
// axis-aligned or rational-slope wall.
constexpr double kEpsX = 1e-9;
constexpr double kEpsY = 1.6180339887498949e-9;

double cross(Point o, Point a, Point b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

bool lex_less(Point a, Point b) {
  return a.x < b.x || (a.x == b.x && a.y < b.y);
}

// Proper-intersection parameter of segment ab with edge pq, appended to ts.
// With perturbed queries, touching cases have no stable meaning and resolve
// to whichever side the arithmetic lands on; either answer is consistent.
void edge_crossing(Point a, Point b, Point p, Point q, std::vector<double>& ts) {
  const double d1 = cross(a, b, p);
  const double d2 = cross(a, b, q);
  if ((d1 > 0.0) == (d2 > 0.0)) return;
  const double d3 = cross(p, q, a);
  const double d4 = cross(p, q, b);
  if ((d3 > 0.0) == (d4 > 0.0)) return;
  ts.push_back(d3 / (d3 - d4));
}

}  // namespace

double distance_2d(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

double distance_3d(Point a, double height_a, Point b, double height_b) {
  return std::hypot(a.x - b.x, a.y - b.y, height_a - height_b);
}

bool point_in_polygon(Point p, const Polygon& poly) {
  bool inside = false;
  const std::size_t n = poly.v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& vi = poly.v[i];
    const Point& vj = poly.v[j];
    if ((vi.y > p.y) != (vj.y > p.y)) {
      const double x_int = vi.x + (p.y - vi.y) * (vj.x - vi.x) / (vj.y - vi.y);
      if (p.x < x_int) inside = !inside;
    }
  }
  return inside;
}

bool point_indoor(Point p, const BuildingMap& map) {
  for (const auto& b : map.buildings)
    if (point_in_polygon(p, b)) return true;
  return false;
}

PathProfile path_profile(Point a, Point b, const BuildingMap& map) {
  if (a == b) return {0, 0.0};
  // Canonical endpoint order makes the perturbed query — and therefore the
  // result — exactly symmetric in (a, b).
  if (lex_less(b, a)) std::swap(a, b);
  a.x += kEpsX;
  a.y += kEpsY;
  b.x += kEpsX;
  b.y += kEpsY;

  const double len = distance_2d(a, b);
  PathProfile out;
  std::vector<double> ts;
  for (const auto& poly : map.buildings) {
    ts.clear();
    const std::size_t n = poly.v.size();
    for (std::size_t i = 0, j = n - 1; i < n; j = i++)
      edge_crossing(a, b, poly.v[j], poly.v[i], ts);
    out.wall_crossings += static_cast<int>(ts.size());

    // Indoor length: split [0,1] at the crossings and classify each piece by
    // its midpoint.
    ts.push_back(0.0);
    ts.push_back(1.0);
    std::sort(ts.begin(), ts.end());
    for (std::size_t i = 0; i + 1 < ts.size(); ++i) {
      const double tm = 0.5 * (ts[i] + ts[i + 1]);
      const Point mid{a.x + tm * (b.x - a.x), a.y + tm * (b.y - a.y)};
      if (point_in_polygon(mid, poly)) out.indoor_m += (ts[i + 1] - ts[i]) * len;
    }
  }
  return out;
}

bool is_los(Point a, Point b, const BuildingMap& map) {
  if (a == b) return true;
  return path_profile(a, b, map).wall_crossings == 0;
}

std::vector<Point> place_users(const BuildingMap& map, std::size_t n,
                               std::uint64_t seed) {
  Rng rng(seed, kStreamPlacement);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = map.bounds.xmin + rng.next_double() * map.bounds.width();
    const double y = map.bounds.ymin + rng.next_double() * map.bounds.height();
    out.push_back({x, y});
  }
  return out;
}

std::vector<std::size_t> rank_bs(Point user, double user_height,
                                 const std::vector<Point>& bs, double bs_height) {
  if (bs.empty()) throw std::invalid_argument("rank_bs: no base stations");
  std::vector<std::size_t> idx(bs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t i, std::size_t j) {
    return distance_3d(user, user_height, bs[i], bs_height) <
           distance_3d(user, user_height, bs[j], bs_height);
  });
  return idx;
}

namespace {

double polygon_area2(const Polygon& p) {
  double a = 0.0;
  const std::size_t n = p.v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++)
    a += p.v[j].x * p.v[i].y - p.v[i].x * p.v[j].y;
  return a;  // twice signed area, > 0 for CCW
}

bool segments_properly_intersect(Point a, Point b, Point p, Point q) {
  const double d1 = cross(a, b, p);
  const double d2 = cross(a, b, q);
  const double d3 = cross(p, q, a);
  const double d4 = cross(p, q, b);
  return ((d1 > 0.0) != (d2 > 0.0)) && ((d3 > 0.0) != (d4 > 0.0));
}

}  // namespace

void validate_map(const BuildingMap& map) {
  if (!(map.bounds.xmin < map.bounds.xmax && map.bounds.ymin < map.bounds.ymax))
    throw ConfigError("map: bounds must have positive extent");
  for (std::size_t bi = 0; bi < map.buildings.size(); ++bi) {
    const auto& poly = map.buildings[bi];
    const std::string tag = "map: building " + std::to_string(bi);
    const std::size_t n = poly.v.size();
    if (n < 3) throw ConfigError(tag + ": fewer than 3 vertices");
    for (const auto& p : poly.v)
      if (!map.bounds.contains(p)) throw ConfigError(tag + ": vertex outside bounds");
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        if (poly.v[i] == poly.v[j]) throw ConfigError(tag + ": duplicate vertex");
    if (!(polygon_area2(poly) > 0.0))
      throw ConfigError(tag + ": vertices must be counter-clockwise");
    // Simplicity: no two non-adjacent edges may cross.
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        if (j == i + 1 || (i == 0 && j == n - 1)) continue;
        if (segments_properly_intersect(poly.v[i], poly.v[(i + 1) % n], poly.v[j],
                                        poly.v[(j + 1) % n]))
          throw ConfigError(tag + ": self-intersecting outline");
      }
    }
  }
  // No nesting: a building's vertex inside another building.
  for (std::size_t i = 0; i < map.buildings.size(); ++i)
    for (std::size_t j = 0; j < map.buildings.size(); ++j)
      if (i != j && point_in_polygon(map.buildings[i].v[0], map.buildings[j]))
        throw ConfigError("map: building " + std::to_string(i) +
                          " is nested inside building " + std::to_string(j));
}

void validate_scenario(const Scenario& s) {
  validate_map(s.map);
  if (s.bs_positions.empty()) throw ConfigError("scenario: no base stations");
  for (const auto& p : s.bs_positions)
    if (!s.map.bounds.contains(p))
      throw ConfigError("scenario: base station outside map bounds");
  for (const auto& p : s.user_positions)
    if (!s.map.bounds.contains(p))
      throw ConfigError("scenario: user outside map bounds");
  if (!(s.bs_height_m > 0.0) || !(s.user_height_m > 0.0))
    throw ConfigError("scenario: heights must be positive");
}

BuildingMap parse_map(std::istream& in, const std::string& name) {
  BuildingMap map;
  bool have_bounds = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto at = name + ":" + std::to_string(lineno);
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    if (!have_bounds) {
      std::string kw;
      ls >> kw;
      if (kw != "bounds") throw ConfigError(at + ": expected 'bounds xmin ymin xmax ymax'");
      if (!(ls >> map.bounds.xmin >> map.bounds.ymin >> map.bounds.xmax >>
            map.bounds.ymax))
        throw ConfigError(at + ": malformed bounds line");
      have_bounds = true;
      continue;
    }
    Polygon poly;
    std::string tok;
    while (ls >> tok) {
      const auto comma = tok.find(',');
      if (comma == std::string::npos)
        throw ConfigError(at + ": vertex '" + tok + "' is not x,y");
      try {
        std::size_t usedx = 0, usedy = 0;
        const double x = std::stod(tok.substr(0, comma), &usedx);
        const double y = std::stod(tok.substr(comma + 1), &usedy);
        if (usedx != comma || usedy != tok.size() - comma - 1)
          throw std::invalid_argument("trailing characters");
        poly.v.push_back({x, y});
      } catch (const std::exception&) {
        throw ConfigError(at + ": vertex '" + tok + "' is not numeric");
      }
    }
    if (poly.v.empty()) throw ConfigError(at + ": empty polygon line");
    map.buildings.push_back(std::move(poly));
  }
  if (!have_bounds) throw ConfigError(name + ": missing bounds line");
  validate_map(map);
  return map;
}

BuildingMap load_map(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("map: cannot open '" + path + "'");
  return parse_map(in, path);
}

std::string map_to_text(const BuildingMap& map) {
  std::ostringstream out;
  out.precision(17);
  out << "bounds " << map.bounds.xmin << ' ' << map.bounds.ymin << ' '
      << map.bounds.xmax << ' ' << map.bounds.ymax << '\n';
  for (const auto& poly : map.buildings) {
    for (std::size_t i = 0; i < poly.v.size(); ++i)
      out << (i ? " " : "") << poly.v[i].x << ',' << poly.v[i].y;
    out << '\n';
  }
  return out.str();
}

BuildingMap campus_map() {
  // Synthetic stand-in for a riverside campus: axis-aligned city blocks with
  // street canyons. Coordinates in meters; see docs/map-format.md.
  auto rect = [](double x0, double y0, double x1, double y1) {
    return Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}};
  };
  BuildingMap map;
  map.bounds = {0.0, 0.0, 500.0, 350.0};
  map.buildings = {
      rect(30, 30, 110, 90),    rect(150, 20, 230, 80),   rect(280, 30, 350, 95),
      rect(410, 40, 470, 110),  rect(30, 150, 95, 230),   rect(150, 150, 215, 210),
      rect(300, 150, 345, 215), rect(420, 160, 480, 240), rect(60, 270, 140, 330),
      rect(190, 280, 330, 330), rect(390, 270, 460, 330),
  };
  return map;
}

const std::vector<Point>& campus_bs_positions() {
  static const std::vector<Point> bs = {{125, 115}, {250, 235}, {375, 115}};
  return bs;
}

}  // namespace vrsim::geom
