#pragma once

// Closed-form and quadrature evaluation of the building-aware association
// model: LOS distance, D-BS shrunk main-lobe radius, UE densities, SIR
// coverage of near- and far-building UEs, mean cell loads, average rate and
// the optimal association bias.
//
// Internally every density is converted to per m^2 and every length is in m.
// The coverage expressions are the alpha -> 2 limit and reject other alpha.

#include <optional>
#include <string>

#include "mmwlab/quadrature.hpp"
#include "mmwlab/scenario.hpp"

namespace mmwlab {

struct AnalyticOptions {
  QuadratureSettings quadrature{};
  /// Use the mean-load trigger and second branch exactly as typeset
  /// (R_beta < 0.68 sqrt(lambda_u), bare 1 in the bracket) instead of the
  /// dimensionally consistent reading.
  bool literal_load_form = false;
  double log_base = 2.0;
};

struct AnalyticReport {
  double beta = 0.0;
  double r_l = 0.0;       // m
  double r_beta = 0.0;    // m
  double lambda_n = 0.0;  // per km^2
  double lambda_r = 0.0;  // per km^2
  double p_a = 0.0;
  double p_ell = 0.0;
  double s_n = 0.0;
  double s_r = 0.0;
  double s = 0.0;
  double n_n = 0.0;
  double n_r = 0.0;
  double rate = 0.0;  // bit/s
  /// Set when the report was computed with the SNR factor applied.
  std::optional<double> snr_factor;
};

/// Average LOS distance of the Boolean blockage model, in m. nullopt means
/// the LOS distance is unbounded (no buildings).
std::optional<double> los_distance(double lambda_ell_km2, double d_l, double d_w);
/// Same, for validated params; throws DomainError when unbounded.
double los_distance(const ScenarioParams& params);

/// R_beta = max(R_L - beta d_l / (2 tan(theta/2)), 0). theta must be < pi.
double effective_mainlobe_radius(double r_l, double beta, double d_l, double theta);

/// Bias at which R_beta reaches R_L / 2; beyond it the near-building
/// coverage no longer depends on beta.
double near_freeze_bias(const ScenarioParams& params);

struct UeDensities {
  double lambda_n;  // per km^2, inside the near-building band
  double lambda_r;  // per km^2, elsewhere outdoors
};

/// Splits the UE intensity between the near-building band and the rest.
/// Throws DomainError if the band and the buildings cover the plane.
UeDensities ue_densities(const ScenarioParams& params);

/// Equivalent density thinning of interferers for the binary sector pattern.
double mainlobe_thinning_prob(double theta, double g_s, double g_m, double alpha);

/// Unclamped D-BS area ratio q(theta) of the near-building region 1.
double region1_dbs_ratio(double theta);
/// P_l = q (1 - p_a) + p_a with q clamped to [0, 1]. theta must be < pi.
double region1_interferer_prob(double theta, double p_a);

/// Closed form of int_a^b pi lambda_b r exp(-(pi/2) lambda_b r^2 x) dr
/// (lambda_b per km^2, a and b in m). Requires x > 0.
double rayleigh_kernel(double a, double b, double x, double lambda_b_km2);

/// E(a, b) = exp(-pi lambda_b a^2 / 2) - exp(-pi lambda_b b^2 / 2).
double half_moon_mass(double a, double b, double lambda_b_km2);
/// c1(x) = int_0^x pi lambda_b r^2 exp(-pi lambda_b r^2 / 2) dr in closed form.
double half_moon_moment(double x, double lambda_b_km2);

/// SIR coverage of a typical UE far from buildings (unconditional: includes
/// the probability that a LOS BS exists).
double coverage_far(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});
/// SIR coverage of a typical UE attached to a building wall.
double coverage_near(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});
/// gamma_c S_n + (1 - gamma_c) S_r.
double coverage(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});

/// -174 dBm/Hz + 10 log10(W) + noise figure.
double noise_power_dbm(const ScenarioParams& params);
/// Rayleigh SNR coverage factor exp(-t sigma^2 r^alpha / (P_tx g_m)).
double snr_factor(const ScenarioParams& params, double r);
double coverage_far_with_noise(const ScenarioParams& params, double beta,
                               const AnalyticOptions& opts = {});
double coverage_near_with_noise(const ScenarioParams& params, double beta,
                                const AnalyticOptions& opts = {});
/// SINR coverage under the independent SNR/SIR split.
double coverage_with_noise(const ScenarioParams& params, double beta,
                           const AnalyticOptions& opts = {});

struct CellAreas {
  double a_c;  // mean association area of an expanding O-BS, m^2
  double a_r;  // far-UE part of that area, m^2
};
CellAreas observed_cell_area(const ScenarioParams& params, double beta);

/// Mean number of other UEs in the cell serving a far-building UE.
double mean_load_far(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});
/// Mean number of other UEs in the cell serving a near-building UE.
double mean_load_near(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});

/// Average rate in bit/s. Uses the SINR coverage when params.include_noise.
double average_rate(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});

struct OptimalBias {
  double beta;
  double value;
};

/// Bias maximising the (SIR or, with include_noise, SINR) coverage.
OptimalBias optimal_bias_coverage(const ScenarioParams& params, const AnalyticOptions& opts = {});
/// Bias maximising the average rate; value is the rate in bit/s. In the
/// ultra-dense limit (lambda_u / lambda_b < 1e-3) this is the coverage
/// optimum.
OptimalBias optimal_bias_rate(const ScenarioParams& params, const AnalyticOptions& opts = {});
/// Rate optimum without the ultra-dense shortcut.
OptimalBias optimal_bias_rate_search(const ScenarioParams& params,
                                     const AnalyticOptions& opts = {});

/// Grid of `grid_points` uniform samples on [lo, hi] followed by a
/// golden-section refinement around the best sample to `beta_tol`. Ties on
/// the grid go to the larger argument.
template <class F>
OptimalBias maximize_on_interval(F&& f, double lo, double hi, int grid_points = 201,
                                 double beta_tol = 1e-4);

AnalyticReport analyze(const ScenarioParams& params, double beta, const AnalyticOptions& opts = {});

/// Fixed column order: beta,r_l,r_beta,lambda_n,lambda_r,p_a,p_ell,s_n,s_r,s,n_n,n_r,rate.
std::string analytic_csv_header();
std::string to_csv_row(const AnalyticReport& report);

// ---------------------------------------------------------------------------

template <class F>
OptimalBias maximize_on_interval(F&& f, double lo, double hi, int grid_points, double beta_tol) {
  if (grid_points < 2 || !(hi > lo)) {
    return {lo, f(lo)};
  }
  const double step = (hi - lo) / (grid_points - 1);
  auto at = [&](int i) { return i == grid_points - 1 ? hi : lo + step * i; };
  int best_i = 0;
  double best_v = f(at(0));
  for (int i = 1; i < grid_points; ++i) {
    const double v = f(at(i));
    if (v >= best_v) {
      best_v = v;
      best_i = i;
    }
  }

  double a = at(std::max(best_i - 1, 0));
  double b = at(std::min(best_i + 1, grid_points - 1));
  const double inv_phi = 0.6180339887498949;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > beta_tol) {
    if (fc > fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  const double refined = 0.5 * (a + b);
  const double refined_v = f(refined);
  if (refined_v > best_v) return {refined, refined_v};
  return {at(best_i), best_v};
}

}  // namespace mmwlab
