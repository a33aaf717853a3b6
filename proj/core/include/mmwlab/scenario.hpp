#pragma once

// Scenario parameters, validation, city presets and the key = value config
// format shared by every other module.

#include <array>
#include <iosfwd>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace mmwlab {

/// Densities are stored per km^2 (the unit people quote); formulas convert
/// with this factor to per m^2.
inline constexpr double kPerKm2ToPerM2 = 1e-6;

/// All model constants for one parameter point. Gains are linear.
struct ScenarioParams {
  double lambda_b = 600.0;     // BS density, per km^2
  double lambda_ell = 500.0;   // building density, per km^2
  double lambda_u = 2000.0;    // total UE intensity, per km^2
  double d_l = 30.0;           // building length, m
  double d_w = 10.0;           // building width, m
  double d_c = 2.0;            // near-building band width, m
  double gamma_c = 0.6;        // user concentration ratio
  double theta = std::numbers::pi / 4.0;  // half-power beamwidth, rad
  double g_m = 100.0;          // main-lobe gain (20 dB)
  double g_s = 1.0;            // side-lobe gain (0 dB)
  double alpha = 2.0;          // path-loss exponent
  double t = 10.0;             // SIR threshold (10 dB)
  double bandwidth_w = 500e6;  // Hz
  double beta = 0.0;           // association bias
  double tx_power_dbm = 23.0;
  bool include_noise = false;
  double noise_figure_db = 10.0;

  double lambda_b_m2() const { return lambda_b * kPerKm2ToPerM2; }
  double lambda_ell_m2() const { return lambda_ell * kPerKm2ToPerM2; }
  double lambda_u_m2() const { return lambda_u * kPerKm2ToPerM2; }

  /// Mean indoor area fraction lambda_ell * d_l * d_w (dimensionless).
  double indoor_fraction() const { return lambda_ell_m2() * d_l * d_w; }

  friend bool operator==(const ScenarioParams&, const ScenarioParams&) = default;
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationOutcome {
  std::vector<Violation> violations;

  bool accepted() const { return violations.empty(); }
  /// One "field: message" line per violation.
  std::string describe() const;
};

/// Checks every parameter invariant; collects all violations instead of
/// stopping at the first one.
ValidationOutcome validate(const ScenarioParams& params);

enum class CityName { Gangnam, Manhattan, Chicago };

struct CityPreset {
  std::string_view name;
  double lambda_ell;        // buildings per km^2
  double d_l;               // m
  double d_w;               // m
  double reference_los_m;   // reference average LOS distance, m
};

/// Reference building statistics, in the order Manhattan, Gangnam, Chicago.
const std::array<CityPreset, 3>& city_presets();

CityPreset preset(CityName name);
/// Case-insensitive lookup; throws NotFoundError for unknown names.
CityPreset preset(std::string_view name);

/// Copies a preset's building statistics into params.
ScenarioParams with_preset(ScenarioParams params, const CityPreset& city);

// Config file: one `key = value` per line, `#` starts a comment. Keys are
// the ScenarioParams field names plus `preset`. Gains g_m/g_s are given in
// dB and converted to linear on load. Unknown keys or unparsable values
// throw ConfigError.
ScenarioParams parse_config(std::istream& in, ScenarioParams base = {});
ScenarioParams load_config(const std::string& path, ScenarioParams base = {});

/// Sets a single field from its config spelling (gains in dB).
void set_param(ScenarioParams& params, std::string_view key, std::string_view value);
/// Sets a numeric field in the units of the struct (gains linear).
void set_numeric_param(ScenarioParams& params, std::string_view key, double value);

/// Stable single-line rendering of every field, in config units.
std::string describe(const ScenarioParams& params);

double db_to_linear(double db);
double linear_to_db(double linear);

}  // namespace mmwlab
