#include "mmwlab/association.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace mmwlab {

namespace {

// Absorbs round-off when a UE sits exactly on the cone edge.
constexpr double kConeSlack = 1e-12;

double received(Point ue, const BsState& bs, const ScenarioParams& params, double h) {
  return params.g_m * h * std::pow(distance(ue, bs.position), -params.alpha);
}

std::vector<std::size_t> by_distance(Point ue, std::span<const BsState> bss,
                                     std::vector<double>& d2) {
  d2.resize(bss.size());
  for (std::size_t i = 0; i < bss.size(); ++i) {
    const Point v = bss[i].position - ue;
    d2[i] = dot(v, v);
  }
  std::vector<std::size_t> order(bss.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return d2[a] < d2[b] || (d2[a] == d2[b] && a < b);
  });
  return order;
}

Association make_empty(std::size_t n_ue, std::size_t n_bs) {
  Association a;
  a.serving.assign(n_ue, std::nullopt);
  a.path.assign(n_ue, AssociationPath::Uncovered);
  a.rsrp.assign(n_ue, 0.0);
  a.members.assign(n_bs, {});
  return a;
}

void attach(Association& a, std::size_t ue, std::size_t bs, AssociationPath path, double power) {
  a.serving[ue] = bs;
  a.path[ue] = path;
  a.rsrp[ue] = power;
  a.members[bs].push_back(ue);
}

// Both schemes pick the closest qualifying BS: averaged RSRP is g_m r^-alpha
// for every BS, so maximum power is minimum distance.
Association associate(std::span<const BsState> bss, std::span<const Point> ues,
                      const BuildingField& field, const ScenarioParams& params, bool use_cones) {
  Association a = make_empty(ues.size(), bss.size());
  std::vector<double> d2;
  for (std::size_t u = 0; u < ues.size(); ++u) {
    const auto order = by_distance(ues[u], bss, d2);
    std::optional<std::size_t> nearest_los;
    std::optional<std::size_t> in_cone;
    for (const std::size_t b : order) {
      if (!field.los(ues[u], bss[b].position)) continue;
      if (!nearest_los) nearest_los = b;
      if (!use_cones || bss[b].in_cone(ues[u])) {
        in_cone = b;
        break;
      }
    }
    if (in_cone) {
      attach(a, u, *in_cone, AssociationPath::ReferenceSignal, received(ues[u], bss[*in_cone], params, 1.0));
    } else if (nearest_los) {
      attach(a, u, *nearest_los, AssociationPath::ReversePilot,
             received(ues[u], bss[*nearest_los], params, 1.0));
    }
  }
  return a;
}

}  // namespace

const char* to_string(BsRole role) { return role == BsRole::DBs ? "D-BS" : "O-BS"; }

const char* to_string(AssociationPath path) {
  switch (path) {
    case AssociationPath::ReferenceSignal: return "reference_signal";
    case AssociationPath::ReversePilot: return "reverse_pilot";
    case AssociationPath::Uncovered: return "uncovered";
  }
  return "?";
}

bool BsState::in_cone(Point ue) const {
  if (role == BsRole::OBs) return true;
  const Point axis{std::cos(boresight), std::sin(boresight)};
  return angle_between(ue - position, axis) <= 0.5 * discovery_range + kConeSlack;
}

BsState classify_bs(Point bs, const BuildingField& field, double theta, double beta) {
  BsState state;
  state.position = bs;
  if (field.empty()) return state;
  const Wall wall = nearest_wall(bs, field);
  state.nearest_wall = wall;
  const double range = discovery_angle(bs, wall, beta);
  if (theta <= range) {
    const Point to_mid = wall.midpoint() - bs;
    state.role = BsRole::DBs;
    state.boresight = std::atan2(to_mid.y, to_mid.x);
    state.discovery_range = range;
  }
  return state;
}

std::vector<BsState> classify_all(std::span<const Point> bss, const BuildingField& field,
                                  double theta, double beta) {
  std::vector<BsState> out;
  out.reserve(bss.size());
  for (const Point p : bss) out.push_back(classify_bs(p, field, theta, beta));
  return out;
}

double rsrp(Point ue, const BsState& bs, const BuildingField& field, const ScenarioParams& params,
            std::optional<double> fading, RsrpPhase phase) {
  if (!field.los(ue, bs.position)) return 0.0;
  if (phase == RsrpPhase::ReferenceSignal && !bs.in_cone(ue)) return 0.0;
  return received(ue, bs, params, fading.value_or(1.0));
}

Association associate_all(std::span<const BsState> bss, std::span<const Point> ues,
                          const BuildingField& field, const ScenarioParams& params) {
  return associate(bss, ues, field, params, true);
}

Association associate_max_rsrp(std::span<const BsState> bss, std::span<const Point> ues,
                               const BuildingField& field, const ScenarioParams& params) {
  return associate(bss, ues, field, params, false);
}

std::optional<std::size_t> schedule(std::size_t bs, const Association& association, Rng& rng) {
  const auto& cell = association.members.at(bs);
  if (cell.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, cell.size() - 1);
  return cell[pick(rng)];
}

void write_association_dump(std::ostream& out, const Association& a) {
  fmt::print(out, "ue_id,bs_id,path,rsrp\n");
  for (std::size_t u = 0; u < a.serving.size(); ++u) {
    if (a.serving[u]) {
      fmt::print(out, "{},{},{},{:.10g}\n", u, *a.serving[u], to_string(a.path[u]), a.rsrp[u]);
    } else {
      fmt::print(out, "{},,{},0\n", u, to_string(a.path[u]));
    }
  }
}

}  // namespace mmwlab
