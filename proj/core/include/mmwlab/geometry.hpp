#pragma once

// Point processes, the Boolean rectangle building field and the geometric
// queries the association and simulation layers are built on.

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "mmwlab/scenario.hpp"

namespace mmwlab {

using Rng = std::mt19937_64;

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend Point operator+(Point a, Point b) { return {a.x + b.x, a.y + b.y}; }
  friend Point operator-(Point a, Point b) { return {a.x - b.x, a.y - b.y}; }
  friend Point operator*(double s, Point a) { return {s * a.x, s * a.y}; }
  friend bool operator==(Point, Point) = default;
};

inline double dot(Point a, Point b) { return a.x * b.x + a.y * b.y; }
inline double cross(Point a, Point b) { return a.x * b.y - a.y * b.x; }
inline double norm(Point a) { return std::hypot(a.x, a.y); }
inline double distance(Point a, Point b) { return norm(a - b); }

/// Unsigned angle between two direction vectors, in [0, pi].
inline double angle_between(Point a, Point b) {
  return std::atan2(std::abs(cross(a, b)), dot(a, b));
}

/// Square observation window centred at the origin. Processes are sampled on
/// the margin-expanded square; metrics are evaluated at the origin.
struct Window {
  double half_width = 500.0;
  double margin = 0.0;

  double expanded_half_width() const { return half_width + margin; }
  /// Expanded window area in km^2.
  double expanded_area_km2() const {
    const double side = 2.0 * expanded_half_width();
    return side * side * 1e-6;
  }
};

struct Wall {
  Point v1;
  Point v2;
  std::size_t owner = 0;  // building index within its field
  int index = 0;          // 0 = +width side, 1 = -width side, 2 = +length end, 3 = -length end

  Point midpoint() const { return 0.5 * (v1 + v2); }
  double length() const { return distance(v1, v2); }
};

/// Rectangle of the Boolean model; orientation is the angle of the length
/// axis in [0, pi).
struct Building {
  Point center;
  double length = 0.0;
  double width = 0.0;
  double orientation = 0.0;

  /// Coordinates of p in the building's own frame (length axis = x).
  Point to_local(Point p) const;
  Point to_world(Point local) const;

  /// Closed-set membership.
  bool contains(Point p) const;
  /// Euclidean distance from p to the rectangle (0 inside or on boundary).
  double distance_to(Point p) const;
  /// Wall i, with vertices in a fixed order (see Wall::index).
  Wall wall(int i, std::size_t owner = 0) const;
  /// Unit outward normal of wall i.
  Point outward_normal(int i) const;
  double circumradius() const { return 0.5 * std::hypot(length, width); }
};

enum class RegionClass { Near, Far, Indoor };

const char* to_string(RegionClass c);

/// Sampled building rectangles plus a uniform-grid index. Immutable after
/// construction; every query is const.
class BuildingField {
public:
  BuildingField() = default;
  explicit BuildingField(std::vector<Building> buildings);

  std::span<const Building> buildings() const { return buildings_; }
  bool empty() const { return buildings_.empty(); }
  std::size_t size() const { return buildings_.size(); }

  bool is_indoor(Point p) const;
  RegionClass classify(Point p, double d_c) const;
  bool los(Point p, Point q) const;
  /// Index of the building closest to p (ties: smaller index).
  std::optional<std::size_t> nearest_building(Point p) const;
  /// Smallest index of a building closer than d to p.
  std::optional<std::size_t> first_building_within(Point p, double d) const;

  /// Same field translated by -offset.
  BuildingField shifted(Point offset) const;

private:
  template <class F>
  void for_each_in_box(double x0, double y0, double x1, double y1, F&& f) const;

  std::vector<Building> buildings_;
  double origin_x_ = 0.0;
  double origin_y_ = 0.0;
  double cell_ = 1.0;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<std::uint32_t> cell_start_;
  std::vector<std::uint32_t> cell_items_;
};

/// True iff the open segment (a, b) misses the closed rectangle.
bool segment_clear_of(const Building& b, Point a, Point q);

/// Homogeneous PPP with the given density (per km^2) on the expanded window.
std::vector<Point> sample_ppp(const Window& window, double density_km2, Rng& rng);

enum class Orientation { Uniform, AxisAligned };

/// Boolean model: PPP centres (lambda_ell) with fixed d_l x d_w rectangles.
/// Centres are drawn on the window grown by one building half-diagonal so
/// rectangles reaching into the window from outside are present.
BuildingField sample_buildings(const Window& window, const ScenarioParams& params, Rng& rng,
                               Orientation orientation = Orientation::Uniform);

/// PPP of density_km2 restricted to the near-building band of width d_c
/// (excluding indoor points). Each point is generated exactly once even
/// when bands of overlapping buildings intersect.
std::vector<Point> sample_near_band(const BuildingField& field, double d_c,
                                    double density_km2, Rng& rng);

RegionClass classify_point(Point p, const BuildingField& field, double d_c);
bool los_between(Point p, Point q, const BuildingField& field);

/// Facing wall of the nearest building: among the walls of that rectangle
/// whose outer side contains bs, the one with smallest perpendicular
/// distance (ties: smaller wall index). Throws NoBuildingError on an empty
/// field and DomainError if bs is indoors.
Wall nearest_wall(Point bs, const BuildingField& field);

/// Angle subtended at bs by the wall contracted to beta times its length
/// around its midpoint, in [0, pi]. Zero for a degenerate wall.
double discovery_angle(Point bs, const Wall& wall, double beta);

struct TaggedPoint {
  Point p;
  const char* kind;
};

/// CSV dump with a `buildings` section (cx,cy,len,wid,orient) followed by a
/// `points` section (x,y,kind).
void write_drop_dump(std::ostream& out, const BuildingField& field,
                     std::span<const TaggedPoint> points);

}  // namespace mmwlab
