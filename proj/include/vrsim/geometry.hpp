// 2D map geometry: building footprints, LoS / wall-crossing / indoor-distance
// queries, user placement, and the map file loader.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace vrsim::geom {

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

// Simple (non-self-intersecting) counter-clockwise polygon.
struct Polygon {
  std::vector<Point> v;
};

struct Bounds {
  double xmin = 0.0, ymin = 0.0, xmax = 0.0, ymax = 0.0;
  bool contains(Point p) const {
    return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax;
  }
  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
};

struct BuildingMap {
  Bounds bounds;
  std::vector<Polygon> buildings;
};

struct PathProfile {
  int wall_crossings = 0;
  double indoor_m = 0.0;
};

// Base stations and users over a map. Heights enter only via 3D distances.
struct Scenario {
  BuildingMap map;
  std::vector<Point> bs_positions;
  double bs_height_m = 10.0;
  std::vector<Point> user_positions;
  double user_height_m = 1.5;
};

double distance_2d(Point a, Point b);
double distance_3d(Point a, double height_a, Point b, double height_b);

// Even-odd point containment (boundary points resolve by the half-open edge
// rule; callers needing robustness pass perturbed points).
bool point_in_polygon(Point p, const Polygon& poly);
bool point_indoor(Point p, const BuildingMap& map);

// Wall crossings and indoor length of segment ab. Both endpoints must lie in
// bounds. Degenerate inputs (segment through a vertex, collinear with an
// edge, endpoint on a wall) are resolved by translating the query segment by
// a fixed 1e-9 m epsilon, so results are always well-defined and symmetric
// in (a, b).
PathProfile path_profile(Point a, Point b, const BuildingMap& map);

bool is_los(Point a, Point b, const BuildingMap& map);

// n user positions uniform over bounds (indoor allowed), deterministic per seed.
std::vector<Point> place_users(const BuildingMap& map, std::size_t n,
                               std::uint64_t seed);

// BS indices by ascending 3D distance from the user; ties by lower index.
// Throws std::invalid_argument on an empty BS list.
std::vector<std::size_t> rank_bs(Point user, double user_height,
                                 const std::vector<Point>& bs, double bs_height);

// Structural checks (simple polygons, >= 3 vertices, CCW, inside bounds,
// no nesting). Throws ConfigError describing the first violation.
void validate_map(const BuildingMap& map);
void validate_scenario(const Scenario& s);

// Map file I/O. Grammar: '#' comments and blank lines ignored; first data
// line "bounds xmin ymin xmax ymax"; every further data line is one polygon
// as whitespace-separated "x,y" vertex pairs. Documented in docs/map-format.md.
BuildingMap parse_map(std::istream& in, const std::string& name);
BuildingMap load_map(const std::string& path);
std::string map_to_text(const BuildingMap& map);

// Built-in synthetic campus: axis-aligned city blocks around three BS sites.
// Identical to maps/campus.map in the repo.
BuildingMap campus_map();
const std::vector<Point>& campus_bs_positions();

}  // namespace vrsim::geom
