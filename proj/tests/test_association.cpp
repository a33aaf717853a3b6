#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "mmwlab/association.hpp"
#include "mmwlab/geometry.hpp"
#include "mmwlab/simulate.hpp"

using namespace mmwlab;

namespace {

constexpr double kPi = std::numbers::pi;

// One 20 x 10 building whose lower wall runs from (-10, 20) to (10, 20).
BuildingField single_building() { return BuildingField({Building{{0.0, 25.0}, 20.0, 10.0, 0.0}}); }

struct RandomDrop {
  BuildingField field;
  std::vector<Point> bss;
  std::vector<Point> ues;
};

RandomDrop random_drop(std::uint64_t seed) {
  ScenarioParams p;
  p.lambda_b = 600.0;
  p.lambda_ell = 500.0;
  Window w{150.0, 0.0};
  auto rng = make_stream(seed, 1);
  RandomDrop d;
  d.field = sample_buildings(w, p, rng);
  for (const Point b : sample_ppp(w, p.lambda_b, rng)) {
    if (!d.field.is_indoor(b)) d.bss.push_back(b);
  }
  for (const Point u : sample_ppp(w, 3000.0, rng)) {
    if (!d.field.is_indoor(u)) d.ues.push_back(u);
  }
  return d;
}

}  // namespace

TEST_CASE("zero bias makes every BS an O-BS") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = random_drop(s);
    for (const auto& st : classify_all(d.bss, d.field, kPi / 6, 0.0)) {
      CHECK(st.role == BsRole::OBs);
      CHECK(st.discovery_range == 2 * kPi);
    }
  }
}

TEST_CASE("D-BS classification against the wall angle") {
  const auto field = single_building();
  const auto dbs = classify_bs({0.0, 0.0}, field, kPi / 6, 1.0);
  CHECK(dbs.role == BsRole::DBs);
  CHECK(dbs.discovery_range == doctest::Approx(2 * std::atan(0.5)).epsilon(1e-12));
  CHECK(dbs.boresight == doctest::Approx(kPi / 2).epsilon(1e-12));
  REQUIRE(dbs.nearest_wall.has_value());
  CHECK(dbs.nearest_wall->midpoint().y == doctest::Approx(20.0));
  CHECK(classify_bs({0.0, 0.0}, field, kPi, 1.0).role == BsRole::OBs);
  CHECK(classify_bs({0.0, 0.0}, BuildingField{}, kPi / 6, 1.0).role == BsRole::OBs);
  // Classification is a pure function of its inputs.
  const auto again = classify_bs({0.0, 0.0}, field, kPi / 6, 1.0);
  CHECK(again.role == dbs.role);
  CHECK(again.boresight == dbs.boresight);
}

TEST_CASE("averaged RSRP") {
  ScenarioParams p;
  BsState bs;
  const BuildingField empty;
  CHECK(rsrp({10.0, 0.0}, bs, empty, p) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(rsrp({10.0, 0.0}, bs, empty, p, 2.5) == doctest::Approx(2.5).epsilon(1e-15));
  const auto field = single_building();
  CHECK(rsrp({0.0, 40.0}, bs, field, p) == 0.0);
}

TEST_CASE("discovery cone is closed") {
  BsState bs;
  bs.role = BsRole::DBs;
  bs.boresight = 0.0;
  bs.discovery_range = 1.0;
  CHECK(bs.in_cone({10 * std::cos(0.5), 10 * std::sin(0.5)}));
  CHECK(bs.in_cone({10 * std::cos(-0.5), 10 * std::sin(-0.5)}));
  CHECK_FALSE(bs.in_cone({10 * std::cos(0.5 + 1e-6), 10 * std::sin(0.5 + 1e-6)}));
  ScenarioParams p;
  const BuildingField empty;
  CHECK(rsrp({10 * std::cos(0.5), 10 * std::sin(0.5)}, bs, empty, p) > 0.0);
  CHECK(rsrp({-10.0, 0.0}, bs, empty, p) == 0.0);
  CHECK(rsrp({-10.0, 0.0}, bs, empty, p, std::nullopt, RsrpPhase::ReversePilot) > 0.0);
}

TEST_CASE("a D-BS facing away loses the UE to a farther O-BS") {
  ScenarioParams p;
  p.theta = kPi / 6;
  const auto field = single_building();
  const std::vector<Point> sites{{0.0, 0.0}, {0.0, -80.0}};
  const auto bss = classify_all(sites, field, p.theta, 1.0);
  REQUIRE(bss[0].role == BsRole::DBs);
  REQUIRE(bss[1].role == BsRole::OBs);
  const std::vector<Point> ues{{0.0, -30.0}};
  const auto a = associate_all(bss, ues, field, p);
  REQUIRE(a.serving[0].has_value());
  CHECK(*a.serving[0] == 1);
  CHECK(a.path[0] == AssociationPath::ReferenceSignal);
  CHECK(a.members[1] == std::vector<std::size_t>{0});
  CHECK(a.members[0].empty());
}

TEST_CASE("reverse pilot reaches a D-BS outside its cone") {
  ScenarioParams p;
  p.theta = kPi / 6;
  const auto field = single_building();
  const std::vector<Point> sites{{0.0, 0.0}, {0.0, 200.0}};
  const auto bss = classify_all(sites, field, p.theta, 1.0);
  REQUIRE(bss[0].role == BsRole::DBs);
  REQUIRE(bss[1].role == BsRole::OBs);
  const std::vector<Point> ues{{0.0, -30.0}, {0.0, 35.0}};
  const auto a = associate_all(bss, ues, field, p);
  REQUIRE(a.serving[0].has_value());
  CHECK(*a.serving[0] == 0);
  CHECK(a.path[0] == AssociationPath::ReversePilot);
  CHECK(a.rsrp[0] == doctest::Approx(100.0 / 900.0));
  REQUIRE(a.serving[1].has_value());
  CHECK(*a.serving[1] == 1);
}

TEST_CASE("UE with no LOS BS is uncovered") {
  ScenarioParams p;
  const auto field = single_building();
  const std::vector<Point> sites{{0.0, 0.0}};
  const auto bss = classify_all(sites, field, p.theta, 0.5);
  const std::vector<Point> ues{{0.0, 50.0}};
  const auto a = associate_all(bss, ues, field, p);
  CHECK_FALSE(a.serving[0].has_value());
  CHECK(a.path[0] == AssociationPath::Uncovered);
  CHECK(a.rsrp[0] == 0.0);
}

TEST_CASE("zero bias association equals max-RSRP association") {
  ScenarioParams p;
  p.theta = kPi / 6;
  for (std::uint64_t s = 0; s < 10; ++s) {
    const auto d = random_drop(100 + s);
    const auto bss = classify_all(d.bss, d.field, p.theta, 0.0);
    const auto a = associate_all(bss, d.ues, d.field, p);
    CHECK(a == associate_max_rsrp(bss, d.ues, d.field, p));
    for (std::size_t u = 0; u < d.ues.size(); ++u) {
      CHECK(a.path[u] != AssociationPath::ReversePilot);
    }
  }
}

TEST_CASE("D-BS count is nondecreasing in the bias") {
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = random_drop(200 + s);
    std::size_t prev = 0;
    for (int i = 0; i <= 20; ++i) {
      std::size_t count = 0;
      for (const auto& st : classify_all(d.bss, d.field, kPi / 6, i / 20.0)) {
        count += st.role == BsRole::DBs;
      }
      CHECK(count >= prev);
      prev = count;
    }
    CHECK(prev > 0);
  }
}

TEST_CASE("association links are positive and reference links lie in their cones") {
  ScenarioParams p;
  p.theta = kPi / 6;
  for (std::uint64_t s = 0; s < 5; ++s) {
    const auto d = random_drop(300 + s);
    const auto bss = classify_all(d.bss, d.field, p.theta, 0.8);
    const auto a = associate_all(bss, d.ues, d.field, p);
    CHECK(a == associate_all(bss, d.ues, d.field, p));
    std::size_t members = 0;
    for (const auto& m : a.members) members += m.size();
    std::size_t served = 0;
    for (std::size_t u = 0; u < d.ues.size(); ++u) {
      if (!a.serving[u]) {
        CHECK(a.path[u] == AssociationPath::Uncovered);
        continue;
      }
      ++served;
      const auto& bs = bss[*a.serving[u]];
      CHECK(a.rsrp[u] > 0.0);
      CHECK(d.field.los(d.ues[u], bs.position));
      if (a.path[u] == AssociationPath::ReferenceSignal) CHECK(bs.in_cone(d.ues[u]));
    }
    CHECK(served == members);
  }
}

TEST_CASE("uniform scheduler") {
  Association a;
  a.members = {{}, {7}, {2, 4, 5, 9}};
  auto rng = make_stream(5, 3);
  CHECK_FALSE(schedule(0, a, rng).has_value());
  for (int i = 0; i < 100; ++i) CHECK(schedule(1, a, rng) == std::optional<std::size_t>{7});

  constexpr int kDraws = 100000;
  std::vector<int> hits(10, 0);
  for (int i = 0; i < kDraws; ++i) ++hits[*schedule(2, a, rng)];
  const double expect = kDraws / 4.0;
  const double sigma = std::sqrt(kDraws * 0.25 * 0.75);
  for (std::size_t u : {2, 4, 5, 9}) CHECK(std::abs(hits[u] - expect) <= 3 * sigma);

  auto r1 = make_stream(11, 3);
  auto r2 = make_stream(11, 3);
  for (int i = 0; i < 50; ++i) CHECK(schedule(2, a, r1) == schedule(2, a, r2));
}

TEST_CASE("association dump") {
  Association a;
  a.serving = {std::size_t{3}, std::nullopt};
  a.path = {AssociationPath::ReversePilot, AssociationPath::Uncovered};
  a.rsrp = {0.25, 0.0};
  std::ostringstream out;
  write_association_dump(out, a);
  CHECK(out.str() == "ue_id,bs_id,path,rsrp\n0,3,reverse_pilot,0.25\n1,,uncovered,0\n");
}
