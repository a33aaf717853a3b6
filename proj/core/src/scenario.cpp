#include "mmwlab/scenario.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

#include <fmt/format.h>

#include "mmwlab/errors.hpp"

namespace mmwlab {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

double parse_double(std::string_view key, std::string_view text) {
  double value = 0.0;
  const auto* begin = text.data();
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc{} || ptr != end) {
    throw ConfigError(fmt::format("{}: cannot parse '{}' as a number", key, text));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  const auto v = lower(text);
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw ConfigError(fmt::format("{}: cannot parse '{}' as a boolean", key, text));
}

}  // namespace

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double linear_to_db(double linear) { return 10.0 * std::log10(linear); }

std::string ValidationOutcome::describe() const {
  std::string out;
  for (const auto& v : violations) {
    out += v.field;
    out += ": ";
    out += v.message;
    out += '\n';
  }
  return out;
}

ValidationOutcome validate(const ScenarioParams& p) {
  ValidationOutcome outcome;
  auto require = [&](bool ok, std::string field, std::string message) {
    // NaN fails every comparison, so it lands here too.
    if (!ok) outcome.violations.push_back({std::move(field), std::move(message)});
  };

  require(p.lambda_b > 0.0, "lambda_b", "BS density must be > 0");
  require(p.lambda_ell > 0.0, "lambda_ell", "building density must be > 0");
  require(p.lambda_u > 0.0, "lambda_u", "UE density must be > 0");
  require(p.d_w > 0.0, "d_w", "building width must be > 0");
  require(p.d_l > p.d_w, "d_l", "building length must exceed width");
  require(p.d_c > 0.0, "d_c", "near-building band width must be > 0");
  require(p.indoor_fraction() < 1.0, "lambda_ell",
          fmt::format("indoor fraction lambda_ell*d_l*d_w = {:.6g} must be < 1",
                      p.indoor_fraction()));
  require(p.gamma_c >= 0.0 && p.gamma_c <= 1.0, "gamma_c", "must lie in [0, 1]");
  require(p.beta >= 0.0 && p.beta <= 1.0, "beta", "must lie in [0, 1]");
  require(p.theta > 0.0 && p.theta <= kTwoPi, "theta", "must lie in (0, 2*pi]");
  require(p.g_m > 0.0, "g_m", "main-lobe gain must be > 0");
  require(p.g_s >= 0.0 && p.g_s <= p.g_m, "g_s", "side-lobe gain must lie in [0, g_m]");
  require(p.alpha >= 2.0, "alpha", "path-loss exponent must be >= 2");
  require(p.t > 0.0, "t", "SIR threshold must be > 0");
  require(p.bandwidth_w > 0.0, "bandwidth_w", "bandwidth must be > 0");
  require(std::isfinite(p.tx_power_dbm), "tx_power_dbm", "must be finite");
  require(std::isfinite(p.noise_figure_db), "noise_figure_db", "must be finite");
  return outcome;
}

const std::array<CityPreset, 3>& city_presets() {
  static const std::array<CityPreset, 3> table{{
      {"Manhattan", 1467.0, 26.5, 20.83, 23.12},
      {"Gangnam", 1010.0, 22.41, 9.35, 62.40},
      {"Chicago", 474.0, 36.35, 21.48, 69.74},
  }};
  return table;
}

CityPreset preset(CityName name) {
  switch (name) {
    case CityName::Manhattan: return city_presets()[0];
    case CityName::Gangnam: return city_presets()[1];
    case CityName::Chicago: return city_presets()[2];
  }
  throw NotFoundError("unknown city");
}

CityPreset preset(std::string_view name) {
  const auto wanted = lower(name);
  for (const auto& city : city_presets()) {
    if (lower(city.name) == wanted) return city;
  }
  throw NotFoundError(fmt::format("unknown city preset '{}'", name));
}

ScenarioParams with_preset(ScenarioParams params, const CityPreset& city) {
  params.lambda_ell = city.lambda_ell;
  params.d_l = city.d_l;
  params.d_w = city.d_w;
  return params;
}

void set_numeric_param(ScenarioParams& p, std::string_view key, double value) {
  if (key == "lambda_b") p.lambda_b = value;
  else if (key == "lambda_ell") p.lambda_ell = value;
  else if (key == "lambda_u") p.lambda_u = value;
  else if (key == "d_l") p.d_l = value;
  else if (key == "d_w") p.d_w = value;
  else if (key == "d_c") p.d_c = value;
  else if (key == "gamma_c") p.gamma_c = value;
  else if (key == "theta") p.theta = value;
  else if (key == "g_m") p.g_m = value;
  else if (key == "g_s") p.g_s = value;
  else if (key == "alpha") p.alpha = value;
  else if (key == "t") p.t = value;
  else if (key == "bandwidth_w") p.bandwidth_w = value;
  else if (key == "beta") p.beta = value;
  else if (key == "tx_power_dbm") p.tx_power_dbm = value;
  else if (key == "noise_figure_db") p.noise_figure_db = value;
  else throw ConfigError(fmt::format("unknown parameter '{}'", key));
}

void set_param(ScenarioParams& p, std::string_view key, std::string_view value) {
  if (key == "include_noise") {
    p.include_noise = parse_bool(key, value);
  } else if (key == "preset") {
    p = with_preset(p, preset(value));
  } else if (key == "g_m" || key == "g_s") {
    set_numeric_param(p, key, db_to_linear(parse_double(key, value)));
  } else {
    set_numeric_param(p, key, parse_double(key, value));
  }
}

ScenarioParams parse_config(std::istream& in, ScenarioParams base) {
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::string_view view(line);
    if (const auto hash = view.find('#'); hash != std::string_view::npos) {
      view = view.substr(0, hash);
    }
    view = trim(view);
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(fmt::format("line {}: expected 'key = value'", line_no));
    }
    const auto key = trim(view.substr(0, eq));
    const auto value = trim(view.substr(eq + 1));
    if (key.empty() || value.empty()) {
      throw ConfigError(fmt::format("line {}: empty key or value", line_no));
    }
    try {
      set_param(base, key, value);
    } catch (const NotFoundError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    } catch (const ConfigError& e) {
      throw ConfigError(fmt::format("line {}: {}", line_no, e.what()));
    }
  }
  return base;
}

ScenarioParams load_config(const std::string& path, ScenarioParams base) {
  std::ifstream in(path);
  if (!in) throw std::ios_base::failure("cannot open config file '" + path + "'");
  return parse_config(in, base);
}

std::string describe(const ScenarioParams& p) {
  return fmt::format(
      "lambda_b={:.17g} lambda_ell={:.17g} lambda_u={:.17g} d_l={:.17g} d_w={:.17g} "
      "d_c={:.17g} gamma_c={:.17g} theta={:.17g} g_m={:.17g} g_s={:.17g} alpha={:.17g} "
      "t={:.17g} bandwidth_w={:.17g} beta={:.17g} tx_power_dbm={:.17g} include_noise={} "
      "noise_figure_db={:.17g}",
      p.lambda_b, p.lambda_ell, p.lambda_u, p.d_l, p.d_w, p.d_c, p.gamma_c, p.theta,
      linear_to_db(p.g_m), linear_to_db(p.g_s), p.alpha, p.t, p.bandwidth_w, p.beta,
      p.tx_power_dbm, p.include_noise ? "true" : "false", p.noise_figure_db);
}

}  // namespace mmwlab
