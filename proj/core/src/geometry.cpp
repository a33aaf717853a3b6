#include "mmwlab/geometry.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mmwlab/errors.hpp"

namespace mmwlab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t poisson_count(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  std::poisson_distribution<std::size_t> count(mean);
  return count(rng);
}

// Liang-Barsky clip of the segment a + s (b - a), s in [0, 1], against the
// closed box. Returns the parameter interval inside the box, if any.
std::optional<std::pair<double, double>> clip_to_box(Point a, Point b, double x0, double y0,
                                                     double x1, double y1) {
  double lo = 0.0;
  double hi = 1.0;
  const Point d = b - a;
  const double p[4] = {-d.x, d.x, -d.y, d.y};
  const double q[4] = {a.x - x0, x1 - a.x, a.y - y0, y1 - a.y};
  for (int i = 0; i < 4; ++i) {
    if (p[i] == 0.0) {
      if (q[i] < 0.0) return std::nullopt;
      continue;
    }
    const double r = q[i] / p[i];
    if (p[i] < 0.0) {
      lo = std::max(lo, r);
    } else {
      hi = std::min(hi, r);
    }
    if (lo > hi) return std::nullopt;
  }
  return std::make_pair(lo, hi);
}

}  // namespace

const char* to_string(RegionClass c) {
  switch (c) {
    case RegionClass::Near: return "near";
    case RegionClass::Far: return "far";
    case RegionClass::Indoor: return "indoor";
  }
  return "?";
}

// ---------------------------------------------------------------------------
// Building

Point Building::to_local(Point p) const {
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  const Point d = p - center;
  return {c * d.x + s * d.y, -s * d.x + c * d.y};
}

Point Building::to_world(Point local) const {
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  return {center.x + c * local.x - s * local.y, center.y + s * local.x + c * local.y};
}

bool Building::contains(Point p) const {
  const Point l = to_local(p);
  return std::abs(l.x) <= 0.5 * length && std::abs(l.y) <= 0.5 * width;
}

double Building::distance_to(Point p) const {
  const Point l = to_local(p);
  const double dx = std::max(std::abs(l.x) - 0.5 * length, 0.0);
  const double dy = std::max(std::abs(l.y) - 0.5 * width, 0.0);
  return std::hypot(dx, dy);
}

Wall Building::wall(int i, std::size_t owner) const {
  const double hl = 0.5 * length;
  const double hw = 0.5 * width;
  Point a;
  Point b;
  switch (i) {
    case 0: a = {-hl, hw}; b = {hl, hw}; break;
    case 1: a = {-hl, -hw}; b = {hl, -hw}; break;
    case 2: a = {hl, -hw}; b = {hl, hw}; break;
    case 3: a = {-hl, -hw}; b = {-hl, hw}; break;
    default: throw DomainError("wall index must be in [0, 4)");
  }
  return Wall{to_world(a), to_world(b), owner, i};
}

Point Building::outward_normal(int i) const {
  static constexpr Point kLocal[4] = {{0, 1}, {0, -1}, {1, 0}, {-1, 0}};
  const Point n = kLocal[i];
  const double c = std::cos(orientation);
  const double s = std::sin(orientation);
  return {c * n.x - s * n.y, s * n.x + c * n.y};
}

bool segment_clear_of(const Building& b, Point a, Point q) {
  const Point la = b.to_local(a);
  const Point lq = b.to_local(q);
  const auto span = clip_to_box(la, lq, -0.5 * b.length, -0.5 * b.width, 0.5 * b.length,
                                0.5 * b.width);
  if (!span) return true;
  // Open segment: touching only at an endpoint does not block.
  return !(span->second > 0.0 && span->first < 1.0);
}

// ---------------------------------------------------------------------------
// BuildingField

BuildingField::BuildingField(std::vector<Building> buildings)
    : buildings_(std::move(buildings)) {
  if (buildings_.empty()) return;

  double x0 = kInf, y0 = kInf, x1 = -kInf, y1 = -kInf;
  double max_radius = 0.0;
  for (const auto& b : buildings_) {
    const double r = b.circumradius();
    max_radius = std::max(max_radius, r);
    x0 = std::min(x0, b.center.x - r);
    y0 = std::min(y0, b.center.y - r);
    x1 = std::max(x1, b.center.x + r);
    y1 = std::max(y1, b.center.y + r);
  }
  cell_ = std::max(2.0 * max_radius, 1.0);
  origin_x_ = x0;
  origin_y_ = y0;
  nx_ = std::max(1, static_cast<int>(std::ceil((x1 - x0) / cell_)));
  ny_ = std::max(1, static_cast<int>(std::ceil((y1 - y0) / cell_)));

  // Counting sort of (cell, building) pairs into CSR arrays.
  const auto cells = static_cast<std::size_t>(nx_) * static_cast<std::size_t>(ny_);
  std::vector<std::uint32_t> counts(cells + 1, 0);
  auto cell_range = [&](const Building& b) {
    const double r = b.circumradius();
    const int ix0 = std::clamp(static_cast<int>((b.center.x - r - origin_x_) / cell_), 0, nx_ - 1);
    const int ix1 = std::clamp(static_cast<int>((b.center.x + r - origin_x_) / cell_), 0, nx_ - 1);
    const int iy0 = std::clamp(static_cast<int>((b.center.y - r - origin_y_) / cell_), 0, ny_ - 1);
    const int iy1 = std::clamp(static_cast<int>((b.center.y + r - origin_y_) / cell_), 0, ny_ - 1);
    return std::array<int, 4>{ix0, ix1, iy0, iy1};
  };
  for (const auto& b : buildings_) {
    const auto [ix0, ix1, iy0, iy1] = cell_range(b);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix) ++counts[static_cast<std::size_t>(iy) * nx_ + ix + 1];
  }
  for (std::size_t i = 1; i <= cells; ++i) counts[i] += counts[i - 1];
  cell_start_ = counts;
  cell_items_.resize(cell_start_.back());
  std::vector<std::uint32_t> fill(cell_start_.begin(), cell_start_.end() - 1);
  for (std::uint32_t id = 0; id < buildings_.size(); ++id) {
    const auto [ix0, ix1, iy0, iy1] = cell_range(buildings_[id]);
    for (int iy = iy0; iy <= iy1; ++iy)
      for (int ix = ix0; ix <= ix1; ++ix)
        cell_items_[fill[static_cast<std::size_t>(iy) * nx_ + ix]++] = id;
  }
}

template <class F>
void BuildingField::for_each_in_box(double x0, double y0, double x1, double y1, F&& f) const {
  if (buildings_.empty()) return;
  const int ix0 = std::max(0, static_cast<int>(std::floor((x0 - origin_x_) / cell_)));
  const int iy0 = std::max(0, static_cast<int>(std::floor((y0 - origin_y_) / cell_)));
  const int ix1 = std::min(nx_ - 1, static_cast<int>(std::floor((x1 - origin_x_) / cell_)));
  const int iy1 = std::min(ny_ - 1, static_cast<int>(std::floor((y1 - origin_y_) / cell_)));
  for (int iy = iy0; iy <= iy1; ++iy) {
    for (int ix = ix0; ix <= ix1; ++ix) {
      const auto cell = static_cast<std::size_t>(iy) * nx_ + ix;
      for (auto k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
        if (!f(cell_items_[k])) return;
      }
    }
  }
}

bool BuildingField::is_indoor(Point p) const {
  bool inside = false;
  for_each_in_box(p.x, p.y, p.x, p.y, [&](std::uint32_t id) {
    inside = buildings_[id].contains(p);
    return !inside;
  });
  return inside;
}

RegionClass BuildingField::classify(Point p, double d_c) const {
  bool indoor = false;
  double nearest = kInf;
  for_each_in_box(p.x - d_c, p.y - d_c, p.x + d_c, p.y + d_c, [&](std::uint32_t id) {
    const double d = buildings_[id].distance_to(p);
    if (d == 0.0 && buildings_[id].contains(p)) {
      indoor = true;
      return false;
    }
    nearest = std::min(nearest, d);
    return true;
  });
  if (indoor) return RegionClass::Indoor;
  return nearest < d_c ? RegionClass::Near : RegionClass::Far;
}

bool BuildingField::los(Point p, Point q) const {
  if (buildings_.empty()) return true;
  const double gx1 = origin_x_ + nx_ * cell_;
  const double gy1 = origin_y_ + ny_ * cell_;
  const auto span = clip_to_box(p, q, origin_x_, origin_y_, gx1, gy1);
  if (!span) return true;

  // Amanatides-Woo traversal of the grid cells the clipped segment crosses.
  const Point d = q - p;
  const Point a = p + span->first * d;
  const Point b = p + span->second * d;
  int ix = std::clamp(static_cast<int>((a.x - origin_x_) / cell_), 0, nx_ - 1);
  int iy = std::clamp(static_cast<int>((a.y - origin_y_) / cell_), 0, ny_ - 1);
  const int ex = std::clamp(static_cast<int>((b.x - origin_x_) / cell_), 0, nx_ - 1);
  const int ey = std::clamp(static_cast<int>((b.y - origin_y_) / cell_), 0, ny_ - 1);
  const int sx = d.x > 0 ? 1 : (d.x < 0 ? -1 : 0);
  const int sy = d.y > 0 ? 1 : (d.y < 0 ? -1 : 0);
  const double seg = b.x - a.x;
  const double segy = b.y - a.y;
  auto boundary_t = [&](double start, double delta, int i, int step, double org) {
    if (step == 0) return kInf;
    const double edge = org + (i + (step > 0 ? 1 : 0)) * cell_;
    return (edge - start) / delta;
  };
  double tx = boundary_t(a.x, seg, ix, sx, origin_x_);
  double ty = boundary_t(a.y, segy, iy, sy, origin_y_);
  const double dtx = sx != 0 ? cell_ / std::abs(seg) : kInf;
  const double dty = sy != 0 ? cell_ / std::abs(segy) : kInf;

  const int max_steps = nx_ + ny_ + 2;
  for (int step = 0; step <= max_steps; ++step) {
    const auto cell = static_cast<std::size_t>(iy) * nx_ + ix;
    for (auto k = cell_start_[cell]; k < cell_start_[cell + 1]; ++k) {
      if (!segment_clear_of(buildings_[cell_items_[k]], p, q)) return false;
    }
    if (ix == ex && iy == ey) break;
    if (tx < ty) {
      tx += dtx;
      ix += sx;
    } else {
      ty += dty;
      iy += sy;
    }
    if (ix < 0 || iy < 0 || ix >= nx_ || iy >= ny_) break;
  }
  return true;
}

std::optional<std::size_t> BuildingField::nearest_building(Point p) const {
  if (buildings_.empty()) return std::nullopt;
  const double extent = std::max(nx_, ny_) * cell_;
  const double outside = std::max({origin_x_ - p.x, p.x - (origin_x_ + nx_ * cell_),
                                   origin_y_ - p.y, p.y - (origin_y_ + ny_ * cell_), 0.0});
  double radius = cell_ + outside;
  for (;;) {
    std::size_t best = buildings_.size();
    double best_d = kInf;
    for_each_in_box(p.x - radius, p.y - radius, p.x + radius, p.y + radius,
                    [&](std::uint32_t id) {
                      const double d = buildings_[id].distance_to(p);
                      if (d < best_d || (d == best_d && id < best)) {
                        best_d = d;
                        best = id;
                      }
                      return true;
                    });
    // Every building within `radius` has been visited, so a hit inside the
    // radius is the global minimum.
    if (best_d <= radius) return best;
    if (radius > extent + outside) break;
    radius *= 2.0;
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < buildings_.size(); ++i) {
    if (buildings_[i].distance_to(p) < buildings_[best].distance_to(p)) best = i;
  }
  return best;
}

std::optional<std::size_t> BuildingField::first_building_within(Point p, double d) const {
  std::optional<std::size_t> first;
  for_each_in_box(p.x - d, p.y - d, p.x + d, p.y + d, [&](std::uint32_t id) {
    if ((!first || id < *first) && buildings_[id].distance_to(p) < d) first = id;
    return true;
  });
  return first;
}

BuildingField BuildingField::shifted(Point offset) const {
  std::vector<Building> moved(buildings_.begin(), buildings_.end());
  for (auto& b : moved) b.center = b.center - offset;
  return BuildingField(std::move(moved));
}

// ---------------------------------------------------------------------------
// Sampling

std::vector<Point> sample_ppp(const Window& window, double density_km2, Rng& rng) {
  const double h = window.expanded_half_width();
  const auto n = poisson_count(density_km2 * window.expanded_area_km2(), rng);
  std::uniform_real_distribution<double> coord(-h, h);
  std::vector<Point> points;
  points.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double x = coord(rng);
    const double y = coord(rng);
    points.push_back({x, y});
  }
  return points;
}

BuildingField sample_buildings(const Window& window, const ScenarioParams& params, Rng& rng,
                               Orientation orientation) {
  const Window grown{window.half_width,
                     window.margin + 0.5 * std::hypot(params.d_l, params.d_w)};
  const auto centers = sample_ppp(grown, params.lambda_ell, rng);
  std::uniform_real_distribution<double> angle(0.0, std::numbers::pi);
  std::vector<Building> buildings;
  buildings.reserve(centers.size());
  for (const auto& c : centers) {
    const double o = orientation == Orientation::Uniform ? angle(rng) : 0.0;
    buildings.push_back({c, params.d_l, params.d_w, o});
  }
  return BuildingField(std::move(buildings));
}

std::vector<Point> sample_near_band(const BuildingField& field, double d_c, double density_km2,
                                    Rng& rng) {
  std::vector<Point> points;
  const auto buildings = field.buildings();
  for (std::size_t i = 0; i < buildings.size(); ++i) {
    const auto& b = buildings[i];
    const double hx = 0.5 * b.length + d_c;
    const double hy = 0.5 * b.width + d_c;
    const auto n = poisson_count(density_km2 * 4.0 * hx * hy * 1e-6, rng);
    std::uniform_real_distribution<double> ux(-hx, hx);
    std::uniform_real_distribution<double> uy(-hy, hy);
    for (std::size_t k = 0; k < n; ++k) {
      const double lx = ux(rng);
      const double ly = uy(rng);
      const Point p = b.to_world({lx, ly});
      const double d = b.distance_to(p);
      if (!(d > 0.0 && d < d_c)) continue;
      if (field.is_indoor(p)) continue;
      // Generated once: only by the lowest-index building whose band holds p.
      if (field.first_building_within(p, d_c) == i) points.push_back(p);
    }
  }
  return points;
}

// ---------------------------------------------------------------------------
// Free-function queries

RegionClass classify_point(Point p, const BuildingField& field, double d_c) {
  return field.classify(p, d_c);
}

bool los_between(Point p, Point q, const BuildingField& field) { return field.los(p, q); }

Wall nearest_wall(Point bs, const BuildingField& field) {
  const auto id = field.nearest_building(bs);
  if (!id) throw NoBuildingError("nearest_wall: building field is empty");
  const Building& b = field.buildings()[*id];
  int best = -1;
  double best_d = kInf;
  for (int i = 0; i < 4; ++i) {
    const Wall w = b.wall(i, *id);
    const double perpendicular = dot(bs - w.v1, b.outward_normal(i));
    if (perpendicular > 0.0 && perpendicular < best_d) {
      best_d = perpendicular;
      best = i;
    }
  }
  if (best < 0) throw DomainError("nearest_wall: point lies inside its nearest building");
  return b.wall(best, *id);
}

double discovery_angle(Point bs, const Wall& wall, double beta) {
  if (wall.v1 == wall.v2) return 0.0;
  const Point p1 = 0.5 * ((1.0 - beta) * wall.v2 + (1.0 + beta) * wall.v1);
  const Point p2 = 0.5 * ((1.0 - beta) * wall.v1 + (1.0 + beta) * wall.v2);
  return angle_between(p1 - bs, p2 - bs);
}

void write_drop_dump(std::ostream& out, const BuildingField& field,
                     std::span<const TaggedPoint> points) {
  out << "# buildings\ncx,cy,len,wid,orient\n";
  for (const auto& b : field.buildings()) {
    fmt::print(out, "{:.6f},{:.6f},{:.6f},{:.6f},{:.9f}\n", b.center.x, b.center.y, b.length,
               b.width, b.orientation);
  }
  out << "# points\nx,y,kind\n";
  for (const auto& tp : points) {
    fmt::print(out, "{:.6f},{:.6f},{}\n", tp.p.x, tp.p.y, tp.kind);
  }
}

}  // namespace mmwlab
