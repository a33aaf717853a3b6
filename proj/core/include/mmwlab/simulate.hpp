#pragma once

// Monte Carlo engine. FullGeometry drops buildings, BSs and UEs, runs the
// association protocol and measures the SIR of a typical UE at the origin.
// LosBall replaces geometric blockage by the average LOS disk and
// region-wise interferer thinning; it is the model the analysis describes.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mmwlab/analytic.hpp"
#include "mmwlab/association.hpp"
#include "mmwlab/geometry.hpp"
#include "mmwlab/scenario.hpp"

namespace mmwlab {

enum class SimMode { FullGeometry, LosBall };

/// Association rule used in FullGeometry drops.
enum class Scheme { BuildingAware, MaxRsrp };

/// Interferer model inside the LOS ball.
enum class Thinning {
  /// Each interferer is kept with the region's equivalent-density
  /// probability and radiates with g_m.
  EquivalentDensity,
  /// Every interferer is kept; its gain is g_m with the region's main-lobe
  /// probability and g_s otherwise.
  BinaryGain,
};

const char* to_string(SimMode mode);

struct SimOptions {
  SimMode mode = SimMode::LosBall;
  Scheme scheme = Scheme::BuildingAware;
  Thinning thinning = Thinning::EquivalentDensity;
  /// Idle BSs transmit in a uniformly random direction instead of staying
  /// silent.
  bool always_transmit = false;
  Orientation orientation = Orientation::Uniform;
  /// FullGeometry window half-width and margin, in units of R_L.
  double window_half_width_rl = 1.0;
  double window_margin_rl = 1.0;
  /// Offset of a wall-attached typical UE from the wall midpoint, m.
  double wall_epsilon = 1e-3;
  AnalyticOptions analytic{};
};

enum class TypicalKind { Near, Far };

const char* to_string(TypicalKind kind);

struct TypicalPlacement {
  TypicalKind kind = TypicalKind::Far;
  /// Wall the UE is attached to (shifted coordinates), for Near placements.
  std::optional<Wall> wall;
};

/// One FullGeometry realisation in coordinates where the typical UE is the
/// origin. UE 0 is the typical UE.
struct NetworkDrop {
  Window window;
  BuildingField field;
  std::vector<BsState> bss;
  std::vector<Point> ues;
  std::vector<RegionClass> ue_class;
  TypicalPlacement typical;
  Association association;
  std::uint64_t seed = 0;
};

/// Per-drop outcome for the typical UE.
struct SampleRecord {
  std::uint64_t seed = 0;
  TypicalKind kind = TypicalKind::Far;
  bool uncovered = false;
  AssociationPath path = AssociationPath::Uncovered;
  /// SIR and SINR, linear; +inf without interference (and noise).
  double sir = 0.0;
  double sinr = 0.0;
  bool covered = false;
  double rate_bps = 0.0;
  /// Other UEs sharing the serving cell.
  std::size_t n_cell = 0;
  std::size_t interferers = 0;        // active LOS interferers
  std::size_t mainlobe_hits = 0;      // of which radiate with g_m

  bool operator==(const SampleRecord&) const = default;
};

struct MetricSummary {
  double mean = 0.0;
  double stderr_ = 0.0;
  double half_width = 0.0;  // 1.96 stderr
  std::size_t count = 0;

  bool operator==(const MetricSummary&) const = default;
};

struct EstimateSummary {
  /// Unconditional: uncovered drops count as not covered.
  MetricSummary coverage;
  MetricSummary rate;
  /// Main-lobe share of active LOS interferers, over drops that have any.
  MetricSummary mainlobe_fraction;
  /// Coverage among drops with a serving BS.
  MetricSummary conditional_coverage;
  double uncovered_fraction = 0.0;
  std::size_t drops = 0;

  bool operator==(const EstimateSummary&) const = default;
};

/// Independent generator for one (seed, stream) pair.
Rng make_stream(std::uint64_t seed, std::uint32_t stream);

/// Builds, classifies and associates one FullGeometry drop.
NetworkDrop make_drop(const ScenarioParams& params, const SimOptions& options, std::uint64_t seed);

/// Schedules every cell and measures the typical UE of a drop.
SampleRecord evaluate_drop(const NetworkDrop& drop, const ScenarioParams& params,
                           const SimOptions& options);

/// One realisation in the requested mode.
SampleRecord realize(const ScenarioParams& params, const SimOptions& options, std::uint64_t seed);

/// Records for seeds seed_base .. seed_base + n_drops - 1, in seed order.
/// threads = 0 picks MMWLAB_THREADS or the hardware concurrency.
std::vector<SampleRecord> realize_many(const ScenarioParams& params, const SimOptions& options,
                                       std::size_t n_drops, std::uint64_t seed_base,
                                       unsigned threads = 0);

EstimateSummary summarize(std::span<const SampleRecord> records);

/// Requires n_drops >= 2. Result does not depend on the thread count.
EstimateSummary estimate(const ScenarioParams& params, const SimOptions& options,
                         std::size_t n_drops, std::uint64_t seed_base, unsigned threads = 0);

/// Worker count: MMWLAB_THREADS if set and positive, else hardware concurrency.
unsigned default_thread_count();

/// CSV with columns seed,sir_db,covered,rate_bps,n_cell,path,uncovered.
void write_trace(std::ostream& out, std::span<const SampleRecord> records);

}  // namespace mmwlab
