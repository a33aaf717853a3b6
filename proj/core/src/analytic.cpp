#include "mmwlab/analytic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <fmt/format.h>

#include "mmwlab/errors.hpp"

namespace mmwlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kClampSlack = 1e-8;

void require_analytic_alpha(const ScenarioParams& p) {
  if (p.alpha != 2.0) {
    throw DomainError(fmt::format("analytic coverage needs alpha = 2 (got {})", p.alpha));
  }
}

double clamp_probability(double value, const char* what) {
  if (!std::isfinite(value)) throw NumericError(fmt::format("{} is not finite", what), 0.0);
  if (value < -kClampSlack || value > 1.0 + kClampSlack) {
    throw NumericError(fmt::format("{} = {:.12g} lies outside [0, 1]", what, value),
                       std::max(-value, value - 1.0));
  }
  return std::clamp(value, 0.0, 1.0);
}

double gain_ratio(const ScenarioParams& p) { return p.g_s / p.g_m; }

// Multiplies an integrand by the SNR factor when requested.
template <class F>
auto with_noise(const ScenarioParams& p, bool noise, F f) {
  return [&p, noise, f](double r) {
    const double v = f(r);
    return noise ? v * snr_factor(p, r) : v;
  };
}

double far_coverage_impl(const ScenarioParams& p, double beta, const AnalyticOptions& opts,
                         bool noise) {
  require_analytic_alpha(p);
  const double lb = p.lambda_b_m2();
  const double r_l = los_distance(p);
  const double r_b = effective_mainlobe_radius(r_l, beta, p.d_l, p.theta);
  const double p_a = mainlobe_thinning_prob(p.theta, p.g_s, p.g_m, p.alpha);
  const double g = gain_ratio(p);
  const double t = p.t;
  const double rl2 = r_l * r_l;
  const double rb2 = r_b * r_b;

  auto inner = [=](double r) {
    if (r <= 0.0) return 0.0;
    const double r2 = r * r;
    const double x = 1.0 + p_a * t * std::log((t + rb2 / r2) / (1.0 + t)) +
                     g * t * std::log((t + rl2 / r2) / (t + rb2 / r2));
    return 2.0 * kPi * lb * r * std::exp(-kPi * lb * r2 * x);
  };
  auto outer = [=](double r) {
    const double r2 = r * r;
    const double x = 1.0 + g * t * std::log((t + rl2 / r2) / (t + 1.0));
    return 2.0 * kPi * lb * r * std::exp(-kPi * lb * r2 * x);
  };

  const double value = integrate(with_noise(p, noise, inner), 0.0, r_b, opts.quadrature) +
                       integrate(with_noise(p, noise, outer), r_b, r_l, opts.quadrature);
  return clamp_probability(value, "S_r");
}

double near_coverage_impl(const ScenarioParams& p, double beta, const AnalyticOptions& opts,
                          bool noise) {
  require_analytic_alpha(p);
  const double lb = p.lambda_b_m2();
  const double r_l = los_distance(p);
  const double r_b = effective_mainlobe_radius(r_l, beta, p.d_l, p.theta);
  const double p_a = mainlobe_thinning_prob(p.theta, p.g_s, p.g_m, p.alpha);
  const double p_ell = region1_interferer_prob(p.theta, p_a);
  const double g = gain_ratio(p);
  const double t = p.t;
  const double rl2 = r_l * r_l;
  const double m = std::max(r_b, 0.5 * r_l);
  const double r_1 = std::min(r_l - r_b, 0.5 * r_l);
  const double m2 = m * m;
  const double r1sq = r_1 * r_1;

  // Regions 2 and 3 seen from distance r; r_1 term depends on r only below m.
  auto tail = [=](double r2) {
    const double rho1 = std::max(m2, r2) / (r2 * t);
    return std::make_pair(rho1, g * t * std::log((1.0 + rl2 / (r2 * t)) / (1.0 + rho1)));
  };
  auto density = [=](double r2, double x) { return kPi * lb * std::exp(-0.5 * kPi * lb * r2 * x); };

  auto region_close = [=](double r) {
    if (r <= 0.0) return 0.0;
    const double r2 = r * r;
    const auto [rho1, side] = tail(r2);
    const double rho2 = r1sq / (r2 * t);
    const double x = 1.0 + p_ell * t * std::log((1.0 + rho2) / (1.0 + 1.0 / t)) +
                     p_a * t * std::log((1.0 + rho1) / (1.0 + rho2)) + side;
    return r * density(r2, x);
  };
  auto region_far = [=](double r) {
    if (r <= 0.0) return 0.0;
    const double r2 = r * r;
    const auto [rho1, side] = tail(r2);
    const double x = 1.0 + p_a * t * std::log((1.0 + rho1) / (1.0 + 1.0 / t)) + side;
    return r * density(r2, x);
  };

  // m >= r_1 always; splitting at m keeps the kink of max(m^2, r^2) on a
  // panel boundary.
  const double value = integrate(with_noise(p, noise, region_close), 0.0, r_1, opts.quadrature) +
                       integrate(with_noise(p, noise, region_far), r_1, m, opts.quadrature) +
                       integrate(with_noise(p, noise, region_far), m, r_l, opts.quadrature);
  return clamp_probability(value, "S_n");
}

double rate_from(const ScenarioParams& p, double s_n, double s_r, double n_n, double n_r,
                 const AnalyticOptions& opts) {
  const double spectral = std::log1p(p.t) / std::log(opts.log_base);
  return p.bandwidth_w * spectral *
         (p.gamma_c * s_n / (1.0 + n_n) + (1.0 - p.gamma_c) * s_r / (1.0 + n_r));
}

double coverage_for_objective(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  return p.include_noise ? coverage_with_noise(p, beta, opts) : coverage(p, beta, opts);
}

// Rate objective for the optimiser: a bias whose mean load is undefined
// (R_beta vanishing while the expansion branch is active) is infeasible.
double rate_objective(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  try {
    return average_rate(p, beta, opts);
  } catch (const DomainError&) {
    return -std::numeric_limits<double>::infinity();
  }
}

}  // namespace

std::optional<double> los_distance(double lambda_ell_km2, double d_l, double d_w) {
  if (!(lambda_ell_km2 > 0.0)) return std::nullopt;
  const double l = lambda_ell_km2 * kPerKm2ToPerM2;
  return kPi * std::sqrt(2.0 * std::exp(-l * d_l * d_w)) / (2.0 * l * (d_l + d_w));
}

double los_distance(const ScenarioParams& params) {
  const auto r = los_distance(params.lambda_ell, params.d_l, params.d_w);
  if (!r) throw DomainError("LOS distance is unbounded without buildings");
  return *r;
}

double effective_mainlobe_radius(double r_l, double beta, double d_l, double theta) {
  if (!(theta > 0.0 && theta < kPi)) {
    throw DomainError(fmt::format("D-BS geometry needs 0 < theta < pi (got {})", theta));
  }
  return std::max(r_l - beta * d_l / (2.0 * std::tan(0.5 * theta)), 0.0);
}

double near_freeze_bias(const ScenarioParams& p) {
  return std::tan(0.5 * p.theta) * los_distance(p) / p.d_l;
}

UeDensities ue_densities(const ScenarioParams& p) {
  const double l = p.lambda_ell_m2();
  const double band = 2.0 * l * (p.d_l + p.d_w) * p.d_c;
  const double indoor = l * p.d_l * p.d_w;
  if (band + indoor >= 1.0) {
    throw DomainError(fmt::format(
        "near-building band ({:.4g}) and indoor area ({:.4g}) cover the plane", band, indoor));
  }
  return {p.lambda_u * p.gamma_c * (1.0 - indoor) / band,
          p.lambda_u * (1.0 - p.gamma_c) * (1.0 - indoor) / (1.0 - band - indoor)};
}

double mainlobe_thinning_prob(double theta, double g_s, double g_m, double alpha) {
  const double main = theta / (2.0 * kPi);
  return main + (1.0 - main) * std::pow(g_s / g_m, 2.0 / alpha);
}

double region1_dbs_ratio(double theta) {
  const double s = std::sin(theta);
  const double h = std::tan(0.5 * theta);
  return ((kPi - theta) * (kPi - theta) / (4.0 * s * s) + 1.0 / (4.0 * std::tan(theta))) *
         8.0 * h * h / kPi;
}

double region1_interferer_prob(double theta, double p_a) {
  if (!(theta > 0.0 && theta < kPi)) {
    throw DomainError(fmt::format("region-1 ratio needs 0 < theta < pi (got {})", theta));
  }
  const double q = std::clamp(region1_dbs_ratio(theta), 0.0, 1.0);
  return q * (1.0 - p_a) + p_a;
}

double rayleigh_kernel(double a, double b, double x, double lambda_b_km2) {
  if (!(x > 0.0)) throw DomainError("rayleigh_kernel needs x > 0");
  const double c = 0.5 * kPi * lambda_b_km2 * kPerKm2ToPerM2 * x;
  // exp(-c a^2) - exp(-c b^2) without cancellation when a and b are close.
  return std::exp(-c * a * a) * -std::expm1(-c * (b * b - a * a)) / x;
}

double half_moon_mass(double a, double b, double lambda_b_km2) {
  const double c = 0.5 * kPi * lambda_b_km2 * kPerKm2ToPerM2;
  return std::exp(-c * a * a) * -std::expm1(-c * (b * b - a * a));
}

double half_moon_moment(double x, double lambda_b_km2) {
  const double l = lambda_b_km2 * kPerKm2ToPerM2;
  return std::erf(x * std::sqrt(0.5 * kPi * l)) / std::sqrt(2.0 * l) -
         x * std::exp(-0.5 * kPi * l * x * x);
}

double coverage_far(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  return far_coverage_impl(p, beta, opts, false);
}

double coverage_near(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  return near_coverage_impl(p, beta, opts, false);
}

double coverage(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  const double s_n = p.gamma_c > 0.0 ? coverage_near(p, beta, opts) : 0.0;
  const double s_r = p.gamma_c < 1.0 ? coverage_far(p, beta, opts) : 0.0;
  return p.gamma_c * s_n + (1.0 - p.gamma_c) * s_r;
}

double noise_power_dbm(const ScenarioParams& p) {
  return -174.0 + 10.0 * std::log10(p.bandwidth_w) + p.noise_figure_db;
}

double snr_factor(const ScenarioParams& p, double r) {
  const double sigma2_mw = std::pow(10.0, noise_power_dbm(p) / 10.0);
  const double tx_mw = std::pow(10.0, p.tx_power_dbm / 10.0);
  return std::exp(-p.t * sigma2_mw * std::pow(r, p.alpha) / (tx_mw * p.g_m));
}

double coverage_far_with_noise(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  return far_coverage_impl(p, beta, opts, true);
}

double coverage_near_with_noise(const ScenarioParams& p, double beta,
                                const AnalyticOptions& opts) {
  return near_coverage_impl(p, beta, opts, true);
}

double coverage_with_noise(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  const double s_n = p.gamma_c > 0.0 ? coverage_near_with_noise(p, beta, opts) : 0.0;
  const double s_r = p.gamma_c < 1.0 ? coverage_far_with_noise(p, beta, opts) : 0.0;
  return p.gamma_c * s_n + (1.0 - p.gamma_c) * s_r;
}

CellAreas observed_cell_area(const ScenarioParams& p, double beta) {
  const double lb = p.lambda_b_m2();
  const double r_l = los_distance(p);
  const double r_b = effective_mainlobe_radius(r_l, beta, p.d_l, p.theta);
  const double inner = kPi * r_b * r_b;
  const double half_len = 0.5 * beta * p.d_l;

  const double a_c =
      std::max(inner, kPi * r_l * r_l -
                          half_len * (kPi * lb * r_l * (r_l * r_l - r_b * r_b) -
                                      (2.0 / 3.0) * kPi * lb * (std::pow(r_l, 3) - std::pow(r_b, 3))));

  const double e = r_l - p.d_c;
  double a_r = 0.0;
  if (p.d_c > r_l - r_b) {
    a_r = kPi * e * e;
  } else {
    const double f = r_b - p.d_c;
    a_r = std::max(inner, kPi * e * e - half_len * kPi * lb *
                                            (e * (e * e - r_b * r_b) -
                                             2.0 * (std::pow(e, 3) - std::pow(f, 3)) / 3.0));
  }
  return {a_c, a_r};
}

double mean_load_far(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  const double lb = p.lambda_b_m2();
  const auto dens = ue_densities(p);
  const double ln = dens.lambda_n * kPerKm2ToPerM2;
  const double lr = dens.lambda_r * kPerKm2ToPerM2;
  const double r_l = los_distance(p);
  const double r_b = effective_mainlobe_radius(r_l, beta, p.d_l, p.theta);

  const double threshold =
      opts.literal_load_form ? 0.68 * std::sqrt(p.lambda_u_m2()) : 0.68 / std::sqrt(lb);
  const bool expands = r_b < threshold;
  if (!expands) {
    if (!opts.literal_load_form) return 1.28 * lr / lb;
    if (r_b <= 0.0) throw DomainError("mean load undefined: R_beta vanished");
    return 1.28 * lr / (kPi * lb * r_b * r_b);
  }
  if (r_b <= 0.0) throw DomainError("mean load undefined: R_beta vanished while expanding");
  const auto areas = observed_cell_area(p, beta);
  return 1.28 * ((areas.a_c - areas.a_r) * ln + areas.a_r * lr) / (lb * kPi * r_b * r_b);
}

double mean_load_near(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  const double lb_km2 = p.lambda_b;
  const double lb = p.lambda_b_m2();
  const auto dens = ue_densities(p);
  const double ln = dens.lambda_n * kPerKm2ToPerM2;
  const double lr = dens.lambda_r * kPerKm2ToPerM2;
  const double r_l = los_distance(p);
  const double r_b = effective_mainlobe_radius(r_l, beta, p.d_l, p.theta);
  const double r_1 = std::min(r_l - r_b, 0.5 * r_l);
  // The band edge cannot exceed the D-BS region it splits.
  const double dc = std::min(p.d_c, r_1);

  const double n_r = mean_load_far(p, beta, opts);
  const double dbs_part =
      0.64 * beta * p.d_l *
      (ln * half_moon_moment(dc, lb_km2) +
       (p.d_c * ln - 0.5 * p.d_c * lr) * half_moon_mass(dc, r_1, lb_km2) +
       lr * (half_moon_moment(r_1, lb_km2) - half_moon_moment(dc, lb_km2)));
  const double norm = -std::expm1(-0.5 * kPi * lb * r_l * r_l);
  return (half_moon_mass(r_1, r_l, lb_km2) * n_r + dbs_part) / norm;
}

double average_rate(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  const bool noise = p.include_noise;
  const double s_n = p.gamma_c > 0.0 ? near_coverage_impl(p, beta, opts, noise) : 0.0;
  const double s_r = p.gamma_c < 1.0 ? far_coverage_impl(p, beta, opts, noise) : 0.0;
  return rate_from(p, s_n, s_r, mean_load_near(p, beta, opts), mean_load_far(p, beta, opts),
                   opts);
}

OptimalBias optimal_bias_coverage(const ScenarioParams& p, const AnalyticOptions& opts) {
  auto objective = [&](double b) { return coverage_for_objective(p, b, opts); };
  const double b_f = near_freeze_bias(p);
  if (b_f < 1.0) {
    const auto inside = maximize_on_interval(objective, 0.0, b_f);
    const bool noise = p.include_noise;
    const double s_n = p.gamma_c > 0.0 ? near_coverage_impl(p, b_f, opts, noise) : 0.0;
    const double s_r = p.gamma_c < 1.0 ? far_coverage_impl(p, 1.0, opts, noise) : 0.0;
    const double s_end = p.gamma_c * s_n + (1.0 - p.gamma_c) * s_r;
    if (s_end >= inside.value) return {1.0, s_end};
    return inside;
  }
  return maximize_on_interval(objective, 0.0, 1.0);
}

OptimalBias optimal_bias_rate_search(const ScenarioParams& p, const AnalyticOptions& opts) {
  return maximize_on_interval([&](double b) { return rate_objective(p, b, opts); }, 0.0, 1.0);
}

OptimalBias optimal_bias_rate(const ScenarioParams& p, const AnalyticOptions& opts) {
  if (p.lambda_u / p.lambda_b < 1e-3) {
    const double beta = optimal_bias_coverage(p, opts).beta;
    return {beta, average_rate(p, beta, opts)};
  }
  return optimal_bias_rate_search(p, opts);
}

AnalyticReport analyze(const ScenarioParams& p, double beta, const AnalyticOptions& opts) {
  AnalyticReport r;
  r.beta = beta;
  r.r_l = los_distance(p);
  r.r_beta = effective_mainlobe_radius(r.r_l, beta, p.d_l, p.theta);
  const auto dens = ue_densities(p);
  r.lambda_n = dens.lambda_n;
  r.lambda_r = dens.lambda_r;
  r.p_a = mainlobe_thinning_prob(p.theta, p.g_s, p.g_m, p.alpha);
  r.p_ell = region1_interferer_prob(p.theta, r.p_a);
  const bool noise = p.include_noise;
  r.s_n = near_coverage_impl(p, beta, opts, noise);
  r.s_r = far_coverage_impl(p, beta, opts, noise);
  r.s = p.gamma_c * r.s_n + (1.0 - p.gamma_c) * r.s_r;
  r.n_r = mean_load_far(p, beta, opts);
  r.n_n = mean_load_near(p, beta, opts);
  r.rate = rate_from(p, r.s_n, r.s_r, r.n_n, r.n_r, opts);
  if (noise) r.snr_factor = snr_factor(p, r.r_l);
  return r;
}

std::string analytic_csv_header() {
  return "beta,r_l,r_beta,lambda_n,lambda_r,p_a,p_ell,s_n,s_r,s,n_n,n_r,rate";
}

std::string to_csv_row(const AnalyticReport& r) {
  return fmt::format("{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},{:.10g},"
                     "{:.10g},{:.10g},{:.10g},{:.10g}",
                     r.beta, r.r_l, r.r_beta, r.lambda_n, r.lambda_r, r.p_a, r.p_ell, r.s_n,
                     r.s_r, r.s, r.n_n, r.n_r, r.rate);
}

}  // namespace mmwlab
