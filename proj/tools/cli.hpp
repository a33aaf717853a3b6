#pragma once

// Command implementations behind the mmwlab executable. Each command renders
// its full CSV output to a string so callers (and tests) can compare runs
// byte for byte.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmwlab/analytic.hpp"
#include "mmwlab/scenario.hpp"
#include "mmwlab/simulate.hpp"

namespace mmwlab::cli {

inline constexpr std::string_view kToolVersion = "0.1.0";
inline constexpr int kSchemaVersion = 1;

enum ExitCode : int { kOk = 0, kConfigError = 2, kNumericError = 3, kIoError = 4 };

enum class Objective { Coverage, Rate };

enum class Engine { Analytic, SimFull, SimLosBall };

const char* to_string(Engine engine);
Engine parse_engine(std::string_view name);

/// First output line: tool and schema version, command, seed, parameters.
std::string header_comment(std::string_view command, const ScenarioParams& params,
                           std::optional<std::uint64_t> seed);

std::string run_analytic(const ScenarioParams& params, const AnalyticOptions& opts);

std::string run_optimal_beta(const ScenarioParams& params, Objective objective,
                             const AnalyticOptions& opts);

struct SimulateRequest {
  SimOptions options{};
  std::size_t drops = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  /// Filled with the per-drop trace CSV when set.
  std::string* trace = nullptr;
};

std::string run_simulate(const ScenarioParams& params, const SimulateRequest& request);

struct SweepSpec {
  std::string key = "beta";
  double start = 0.0;
  double stop = 1.0;
  int steps = 11;
  std::vector<Engine> engines{Engine::Analytic};
  /// Adds beta_star and rate_gain = rate(beta*) / rate(0) columns.
  bool rate_gain = false;
  std::size_t drops = 1000;
  std::uint64_t seed = 1;
  SimOptions sim{};
};

/// Keys a sweep may vary.
const std::vector<std::string>& sweep_keys();

/// Rows in grid order for every engine. Throws ConfigError for an invalid
/// spec. `failed_rows` receives the number of rows whose status is not ok.
std::string run_sweep(const ScenarioParams& params, const SweepSpec& spec,
                      const AnalyticOptions& opts, unsigned threads,
                      std::size_t* failed_rows = nullptr, std::ostream* progress = nullptr);

std::string run_presets(bool rows, bool csv);

/// Full command-line entry point; returns the process exit code.
int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace mmwlab::cli
