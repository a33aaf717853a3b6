#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

#include "mmwlab/errors.hpp"
#include "mmwlab/geometry.hpp"

using namespace mmwlab;

namespace {

constexpr double kPi = std::numbers::pi;

BuildingField single_axis_aligned(double l = 30.0, double w = 10.0) {
  return BuildingField({Building{{0.0, 0.0}, l, w, 0.0}});
}

// Point-in-rectangle via the rectangle's corner polygon, independent of
// Building::contains.
struct Corners {
  Point c[4];
};

Corners corners_of(const Building& b) {
  const double ca = std::cos(b.orientation), sa = std::sin(b.orientation);
  const Point u{ca * 0.5 * b.length, sa * 0.5 * b.length};
  const Point v{-sa * 0.5 * b.width, ca * 0.5 * b.width};
  return {{b.center - u - v, b.center + u - v, b.center + u + v, b.center - u + v}};
}

bool inside_polygon(const Corners& k, Point p) {
  // Counter-clockwise corners: inside (closed) iff left of or on every edge.
  for (int i = 0; i < 4; ++i) {
    const Point a = k.c[i], b = k.c[(i + 1) % 4];
    if (cross(b - a, p - a) < -1e-12) return false;
  }
  return true;
}

bool sampled_clear(const std::vector<Corners>& rects, const std::vector<Building>& bs, Point p,
                   Point q, int samples) {
  for (std::size_t r = 0; r < rects.size(); ++r) {
    // Skip rectangles the segment cannot reach.
    const Point d = q - p;
    const double len2 = dot(d, d);
    double s = len2 > 0 ? std::clamp(dot(bs[r].center - p, d) / len2, 0.0, 1.0) : 0.0;
    if (distance(p + s * d, bs[r].center) > bs[r].circumradius() + 1e-9) continue;
    for (int i = 1; i < samples; ++i) {
      const double f = static_cast<double>(i) / samples;
      if (inside_polygon(rects[r], p + f * d)) return false;
    }
  }
  return true;
}

double segment_distance(Point p, Point a, Point b) {
  const Point d = b - a;
  const double s = std::clamp(dot(p - a, d) / dot(d, d), 0.0, 1.0);
  return distance(p, a + s * d);
}

}  // namespace

TEST_CASE("PPP with zero density is empty") {
  Rng rng(1);
  CHECK(sample_ppp(Window{500.0, 0.0}, 0.0, rng).empty());
}

TEST_CASE("PPP count has the Poisson mean") {
  const Window w{500.0, 0.0};  // 1 km^2
  double total = 0.0;
  const int seeds = 10000;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    total += static_cast<double>(sample_ppp(w, 400.0, rng).size());
  }
  const double mean = total / seeds;
  CHECK(std::abs(mean - 400.0) <= 3.0 * std::sqrt(400.0) / 100.0);
}

TEST_CASE("PPP points lie in the expanded window and repeat per seed") {
  const Window w{100.0, 20.0};
  Rng a(9), b(9);
  const auto pa = sample_ppp(w, 2000.0, a);
  const auto pb = sample_ppp(w, 2000.0, b);
  CHECK(pa == pb);
  for (const auto& p : pa) {
    CHECK(std::abs(p.x) <= 120.0);
    CHECK(std::abs(p.y) <= 120.0);
  }
}

TEST_CASE("building sampling: exact sizes, orientations in [0, pi)") {
  ScenarioParams p;
  p.lambda_ell = 400.0;
  Rng rng(3);
  const auto field = sample_buildings(Window{300.0, 0.0}, p, rng);
  REQUIRE_FALSE(field.empty());
  for (const auto& b : field.buildings()) {
    CHECK(b.length == 30.0);
    CHECK(b.width == 10.0);
    CHECK(b.orientation >= 0.0);
    CHECK(b.orientation < kPi);
    for (int i = 0; i < 4; ++i) {
      const Wall w = b.wall(i);
      CHECK(w.length() == doctest::Approx(i < 2 ? 30.0 : 10.0).epsilon(1e-12));
    }
  }
  Rng rng2(3);
  ScenarioParams none = p;
  none.lambda_ell = 0.0;
  CHECK(sample_buildings(Window{300.0, 0.0}, none, rng2).empty());
}

TEST_CASE("Boolean indoor fraction matches 1 - exp(-lambda d_l d_w)") {
  ScenarioParams p;
  p.lambda_ell = 400.0;
  const double expected = 1.0 - std::exp(-0.12);
  std::uniform_real_distribution<double> coord(-150.0, 150.0);
  std::size_t inside = 0, total = 0;
  for (int s = 0; s < 400; ++s) {
    Rng rng(static_cast<std::uint64_t>(1000 + s));
    const auto field = sample_buildings(Window{150.0, 0.0}, p, rng);
    for (int k = 0; k < 100; ++k) {
      inside += field.is_indoor({coord(rng), coord(rng)}) ? 1 : 0;
      ++total;
    }
  }
  const double frac = static_cast<double>(inside) / static_cast<double>(total);
  // Points within one field are correlated; the stderr below is a per-field
  // bound (100 points share a field) so it is conservative.
  const double sigma = std::sqrt(expected * (1 - expected) / 400.0);
  CHECK(std::abs(frac - expected) <= 3.0 * sigma);
  CHECK(std::abs(frac - 0.1131) < 0.02);
}

TEST_CASE("classification examples and partition") {
  const auto field = single_axis_aligned();
  CHECK(classify_point({0.0, 0.0}, field, 2.0) == RegionClass::Indoor);
  CHECK(classify_point({0.0, 6.0}, field, 2.0) == RegionClass::Near);
  CHECK(classify_point({0.0, 8.0}, field, 2.0) == RegionClass::Far);
  CHECK(classify_point({3.0, 4.0}, BuildingField{}, 2.0) == RegionClass::Far);

  ScenarioParams p;
  p.lambda_ell = 800.0;
  Rng rng(5);
  const auto dense = sample_buildings(Window{100.0, 0.0}, p, rng);
  std::uniform_real_distribution<double> coord(-100.0, 100.0);
  for (int k = 0; k < 5000; ++k) {
    const Point q{coord(rng), coord(rng)};
    const auto c = classify_point(q, dense, 2.0);
    bool indoor = false;
    double nearest = 1e300;
    for (const auto& b : dense.buildings()) {
      indoor |= inside_polygon(corners_of(b), q);
      nearest = std::min(nearest, b.distance_to(q));
    }
    if (indoor) {
      CHECK(c == RegionClass::Indoor);
    } else {
      CHECK(c == (nearest < 2.0 ? RegionClass::Near : RegionClass::Far));
    }
  }
}

TEST_CASE("LOS examples") {
  CHECK(los_between({-50, 0}, {50, 0}, BuildingField{}));
  const auto field = single_axis_aligned();
  CHECK_FALSE(los_between({-50, 0}, {50, 0}, field));
  CHECK(los_between({-50, 20}, {50, 20}, field));
  // Grazing the closed boundary blocks.
  CHECK_FALSE(los_between({-50, 5}, {50, 5}, field));
  // Touching only at an endpoint does not.
  CHECK(los_between({0, 5}, {0, 50}, field));
}

TEST_CASE("LOS agrees with a dense sampling oracle and is symmetric") {
  ScenarioParams p;
  p.lambda_ell = 300.0;
  Rng rng(11);
  const auto field = sample_buildings(Window{60.0, 0.0}, p, rng);
  std::vector<Building> bs(field.buildings().begin(), field.buildings().end());
  std::vector<Corners> rects;
  for (const auto& b : bs) rects.push_back(corners_of(b));
  std::uniform_real_distribution<double> coord(-90.0, 90.0);
  int disagreements = 0;
  int blocked = 0;
  const int cases = 100000;
  for (int k = 0; k < cases; ++k) {
    const Point a{coord(rng), coord(rng)};
    const Point b{coord(rng), coord(rng)};
    const bool fast = field.los(a, b);
    CHECK(fast == field.los(b, a));
    bool oracle = sampled_clear(rects, bs, a, b, 10000);
    if (oracle != fast) oracle = sampled_clear(rects, bs, a, b, 1000000);
    disagreements += oracle != fast;
    blocked += !fast;
  }
  CHECK(disagreements == 0);
  CHECK(blocked > cases / 10);
}

TEST_CASE("nearest wall examples") {
  const auto field = single_axis_aligned();
  const Wall w = nearest_wall({0.0, 30.0}, field);
  CHECK(w.v1 == Point{-15.0, 5.0});
  CHECK(w.v2 == Point{15.0, 5.0});
  CHECK_THROWS_AS(nearest_wall({0, 0}, BuildingField{}), NoBuildingError);

  // Equidistant from two buildings: the first sampled wins.
  const BuildingField two({Building{{0.0, 20.0}, 30.0, 10.0, 0.0},
                           Building{{0.0, -20.0}, 30.0, 10.0, 0.0}});
  CHECK(nearest_wall({0.0, 0.0}, two).owner == 0);
}

TEST_CASE("nearest wall matches a brute-force oracle") {
  ScenarioParams p;
  p.lambda_ell = 500.0;
  Rng rng(21);
  std::uniform_real_distribution<double> coord(-120.0, 120.0);
  int checked = 0;
  for (int s = 0; s < 40; ++s) {
    const auto field = sample_buildings(Window{120.0, 0.0}, p, rng);
    if (field.empty()) continue;
    for (int k = 0; k < 250; ++k) {
      const Point q{coord(rng), coord(rng)};
      if (field.is_indoor(q)) continue;
      // Nearest building by wall-segment distance; ties to the smaller index.
      std::size_t best = 0;
      double best_d = 1e300;
      for (std::size_t i = 0; i < field.size(); ++i) {
        const auto k4 = corners_of(field.buildings()[i]);
        double d = 1e300;
        for (int e = 0; e < 4; ++e) d = std::min(d, segment_distance(q, k4.c[e], k4.c[(e + 1) % 4]));
        if (d < best_d - 1e-9) {
          best_d = d;
          best = i;
        }
      }
      // Facing walls: q strictly outside the wall's supporting line. Among
      // them the smallest perpendicular distance, ties to smaller index.
      const Building& b = field.buildings()[best];
      int best_wall = -1;
      double best_perp = 1e300;
      for (int i = 0; i < 4; ++i) {
        const Wall w = b.wall(i);
        const Point mid = w.midpoint();
        const Point out = mid - b.center;  // points away from the centre
        const double perp = dot(q - mid, out) / norm(out);
        if (perp > 0 && perp < best_perp) {
          best_perp = perp;
          best_wall = i;
        }
      }
      REQUIRE(best_wall >= 0);
      const Wall got = nearest_wall(q, field);
      CHECK(got.owner == best);
      CHECK(got.index == best_wall);
      ++checked;
    }
  }
  CHECK(checked > 5000);
}

TEST_CASE("discovery angle examples") {
  const Wall w{{-10.0, 20.0}, {10.0, 20.0}, 0, 0};
  CHECK(discovery_angle({0, 0}, w, 1.0) == doctest::Approx(2 * std::atan(0.5)).epsilon(1e-12));
  CHECK(discovery_angle({0, 0}, w, 1.0) == doctest::Approx(0.9273).epsilon(1e-4));
  CHECK(discovery_angle({0, 0}, w, 0.5) == doctest::Approx(2 * std::atan(0.25)).epsilon(1e-12));
  CHECK(discovery_angle({0, 0}, w, 0.5) == doctest::Approx(0.4900).epsilon(1e-4));
  CHECK(discovery_angle({3, -7}, w, 0.0) == 0.0);
  CHECK(discovery_angle({0, 0}, Wall{{1, 1}, {1, 1}, 0, 0}, 1.0) == 0.0);
  // A BS straddling an axis still sees the subtended angle.
  const Wall left{{-20.0, -10.0}, {-20.0, 10.0}, 0, 0};
  CHECK(discovery_angle({0, 0}, left, 1.0) == doctest::Approx(2 * std::atan(0.5)).epsilon(1e-12));
}

TEST_CASE("discovery angle: rigid-motion invariance and monotone in beta") {
  Rng rng(31);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  std::uniform_real_distribution<double> ang(0.0, 2 * kPi);
  for (int k = 0; k < 2000; ++k) {
    const Point bs{u(rng), u(rng)};
    const Wall w{{u(rng), u(rng)}, {u(rng), u(rng)}, 0, 0};
    const double phi = ang(rng);
    const Point shift{u(rng), u(rng)};
    auto move = [&](Point p) {
      return Point{std::cos(phi) * p.x - std::sin(phi) * p.y + shift.x,
                   std::sin(phi) * p.x + std::cos(phi) * p.y + shift.y};
    };
    const Wall mw{move(w.v1), move(w.v2), 0, 0};
    double prev = -1.0;
    for (int i = 0; i <= 20; ++i) {
      const double beta = i / 20.0;
      const double a = discovery_angle(bs, w, beta);
      CHECK(std::abs(a - discovery_angle(move(bs), mw, beta)) <= 1e-9);
      CHECK(a >= 0.0);
      CHECK(a <= kPi);
      CHECK(a >= prev - 1e-12);
      prev = a;
    }
  }
}

TEST_CASE("near band sampling: density and uniqueness") {
  // Isolated building: band area is 2 (l + w) d_c + pi d_c^2.
  const auto field = single_axis_aligned();
  const double d_c = 2.0;
  const double area_km2 = (2.0 * 40.0 * d_c + kPi * d_c * d_c) * 1e-6;
  const double density = 1e6;
  const double expected = density * area_km2;
  double total = 0.0;
  const int seeds = 400;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(s));
    const auto pts = sample_near_band(field, d_c, density, rng);
    total += static_cast<double>(pts.size());
    for (const auto& p : pts) CHECK(classify_point(p, field, d_c) == RegionClass::Near);
  }
  const double mean = total / seeds;
  CHECK(std::abs(mean - expected) <= 3.0 * std::sqrt(expected / seeds));

  // Overlapping bands: no point generated twice, union covered at the
  // nominal density (checked against a Monte Carlo estimate of the union).
  const BuildingField pair({Building{{0.0, 0.0}, 30.0, 10.0, 0.0},
                            Building{{0.0, 12.0}, 30.0, 10.0, 0.3}});
  Rng area_rng(99);
  std::uniform_real_distribution<double> cx(-25.0, 25.0), cy(-25.0, 35.0);
  std::size_t hits = 0;
  const std::size_t probes = 400000;
  for (std::size_t k = 0; k < probes; ++k) {
    hits += classify_point({cx(area_rng), cy(area_rng)}, pair, d_c) == RegionClass::Near;
  }
  const double union_km2 = 50.0 * 60.0 * static_cast<double>(hits) / probes * 1e-6;
  double count = 0.0;
  for (int s = 0; s < seeds; ++s) {
    Rng rng(static_cast<std::uint64_t>(5000 + s));
    const auto pts = sample_near_band(pair, d_c, density, rng);
    std::set<std::pair<double, double>> unique;
    for (const auto& p : pts) unique.insert({p.x, p.y});
    CHECK(unique.size() == pts.size());
    count += static_cast<double>(pts.size());
  }
  const double union_expected = density * union_km2;
  CHECK(std::abs(count / seeds - union_expected) <=
        3.0 * std::sqrt(union_expected / seeds) + 0.01 * union_expected);
}

TEST_CASE("shifted field moves every query") {
  const auto field = single_axis_aligned();
  const auto moved = field.shifted({10.0, -5.0});
  CHECK(moved.is_indoor({-10.0, 5.0}));
  CHECK_FALSE(moved.is_indoor({10.0, 0.0}));
  CHECK(moved.los({-60.0, 25.0}, {40.0, 25.0}));
  CHECK_FALSE(moved.los({-60.0, 5.0}, {40.0, 5.0}));
}

TEST_CASE("drop dump has both sections") {
  const auto field = single_axis_aligned();
  const TaggedPoint pts[] = {{{1.0, 2.0}, "bs"}, {{3.0, 4.0}, "ue"}};
  std::ostringstream out;
  write_drop_dump(out, field, pts);
  const auto text = out.str();
  CHECK(text.find("# buildings\ncx,cy,len,wid,orient\n") == 0);
  CHECK(text.find("# points\nx,y,kind\n") != std::string::npos);
  CHECK(text.find("3.000000,4.000000,ue") != std::string::npos);
}
