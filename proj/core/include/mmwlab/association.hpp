#pragma once

// Building-aware association: D-BS/O-BS roles, discovery cones, the
// reference-signal / reverse-pilot association steps and per-cell
// scheduling.

#include <cstddef>
#include <iosfwd>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include "mmwlab/geometry.hpp"
#include "mmwlab/scenario.hpp"

namespace mmwlab {

enum class BsRole { OBs, DBs };

const char* to_string(BsRole role);

struct BsState {
  Point position;
  BsRole role = BsRole::OBs;
  /// Cone centre in rad (direction to the nearest wall midpoint for a D-BS).
  double boresight = 0.0;
  /// Full cone width in rad; 2 pi for an O-BS.
  double discovery_range = 2.0 * std::numbers::pi;
  std::optional<Wall> nearest_wall;

  /// Closed cone test: the UE direction is at most discovery_range / 2 from
  /// the boresight.
  bool in_cone(Point ue) const;
};

/// Role of a BS for the given beamwidth and bias. Without buildings every BS
/// is an O-BS. The BS must be outdoors.
BsState classify_bs(Point bs, const BuildingField& field, double theta, double beta);

std::vector<BsState> classify_all(std::span<const Point> bss, const BuildingField& field,
                                  double theta, double beta);

enum class AssociationPath { ReferenceSignal, ReversePilot, Uncovered };

const char* to_string(AssociationPath path);

struct Association {
  std::vector<std::optional<std::size_t>> serving;  // per UE
  std::vector<AssociationPath> path;                // per UE
  std::vector<double> rsrp;                         // averaged, per UE; 0 if uncovered
  std::vector<std::vector<std::size_t>> members;    // per BS, ascending UE id

  bool operator==(const Association&) const = default;
};

/// Which phase the received power is measured in.
enum class RsrpPhase {
  ReferenceSignal,  // only UEs inside the discovery cone hear the BS
  ReversePilot,     // cone ignored
};

/// Received power at ue from bs: 0 without LOS (or outside the cone in the
/// reference-signal phase), else g_m h r^-alpha. Without `fading` the
/// averaged value (h = 1) is returned.
double rsrp(Point ue, const BsState& bs, const BuildingField& field, const ScenarioParams& params,
            std::optional<double> fading = std::nullopt,
            RsrpPhase phase = RsrpPhase::ReferenceSignal);

/// Reference-signal association with reverse-pilot fallback. Ties on RSRP go
/// to the smaller BS index.
Association associate_all(std::span<const BsState> bss, std::span<const Point> ues,
                          const BuildingField& field, const ScenarioParams& params);

/// Plain max-RSRP association ignoring roles and cones.
Association associate_max_rsrp(std::span<const BsState> bss, std::span<const Point> ues,
                               const BuildingField& field, const ScenarioParams& params);

/// Uniformly random member of the cell of bs; nullopt for an empty cell.
std::optional<std::size_t> schedule(std::size_t bs, const Association& association, Rng& rng);

/// CSV with columns ue_id,bs_id,path,rsrp; uncovered UEs have an empty bs_id.
void write_association_dump(std::ostream& out, const Association& association);

}  // namespace mmwlab
