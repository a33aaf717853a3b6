#include "mmwlab/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <mutex>
#include <numbers>
#include <ostream>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mmwlab/errors.hpp"

namespace mmwlab {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();

// Sub-stream ids. Each consumer owns one so that changing how many draws one
// stage makes never shifts another stage's randomness.
enum Stream : std::uint32_t { kGeometry = 1, kTypical = 2, kSchedule = 3, kFading = 4 };

constexpr int kPlacementAttempts = 10000;

double dbm_to_mw(double dbm) { return std::pow(10.0, dbm / 10.0); }

double noise_mw(const ScenarioParams& p) {
  return p.include_noise ? dbm_to_mw(noise_power_dbm(p)) : 0.0;
}

double spectral_efficiency(const ScenarioParams& p, const SimOptions& o) {
  return std::log1p(p.t) / std::log(o.analytic.log_base);
}

void finish(SampleRecord& rec, double signal, double interference, const ScenarioParams& p,
            const SimOptions& o) {
  const double noise = noise_mw(p);
  rec.sir = interference > 0.0 ? signal / interference : kInf;
  rec.sinr = interference + noise > 0.0 ? signal / (interference + noise) : kInf;
  rec.covered = (p.include_noise ? rec.sinr : rec.sir) > p.t;
  rec.rate_bps = rec.covered ? p.bandwidth_w / static_cast<double>(rec.n_cell + 1) *
                                   spectral_efficiency(p, o)
                             : 0.0;
}

// ---------------------------------------------------------------------------
// LOS-ball model

struct BallRegion {
  double outer;      // region holds distances <= outer
  double keep;       // equivalent-density keep probability
  double mainlobe;   // main-lobe probability for binary gains
};

SampleRecord realize_los_ball(const ScenarioParams& p, const SimOptions& o, std::uint64_t seed) {
  Rng typical = make_stream(seed, kTypical);
  Rng geometry = make_stream(seed, kGeometry);
  Rng load = make_stream(seed, kSchedule);
  Rng fading = make_stream(seed, kFading);

  SampleRecord rec;
  rec.seed = seed;
  rec.kind = std::bernoulli_distribution(p.gamma_c)(typical) ? TypicalKind::Near
                                                            : TypicalKind::Far;
  const bool near = rec.kind == TypicalKind::Near;

  const double r_l = los_distance(p);
  const double r_b = effective_mainlobe_radius(r_l, p.beta, p.d_l, p.theta);
  const double main = p.theta / (2.0 * kPi);
  const double side_keep = std::pow(p.g_s / p.g_m, 2.0 / p.alpha);
  const double p_a = mainlobe_thinning_prob(p.theta, p.g_s, p.g_m, p.alpha);

  std::vector<BallRegion> regions;
  if (near) {
    const double m = std::max(r_b, 0.5 * r_l);
    const double r_1 = std::min(r_l - r_b, 0.5 * r_l);
    const double q = std::clamp(region1_dbs_ratio(p.theta), 0.0, 1.0);
    regions = {{r_1, region1_interferer_prob(p.theta, p_a), q + (1.0 - q) * main},
               {m, p_a, main},
               {r_l, side_keep, 0.0}};
  } else {
    regions = {{r_b, p_a, main}, {r_l, side_keep, 0.0}};
  }
  auto region_of = [&](double x) -> const BallRegion& {
    for (const auto& r : regions) {
      if (x <= r.outer) return r;
    }
    return regions.back();
  };

  const double area = (near ? 0.5 : 1.0) * kPi * r_l * r_l;
  const double mean = p.lambda_b_m2() * area;
  const std::size_t n = std::poisson_distribution<std::size_t>(mean)(geometry);
  std::vector<double> dist(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (auto& d : dist) d = r_l * std::sqrt(unit(geometry));
  if (n == 0) {
    rec.uncovered = true;
    return rec;
  }
  const auto serving = static_cast<std::size_t>(
      std::min_element(dist.begin(), dist.end()) - dist.begin());
  rec.path = AssociationPath::ReferenceSignal;

  const double n_mean = near ? mean_load_near(p, p.beta, o.analytic)
                             : mean_load_far(p, p.beta, o.analytic);
  rec.n_cell = n_mean > 0.0 ? std::poisson_distribution<std::size_t>(n_mean)(load) : 0;

  const double tx = dbm_to_mw(p.tx_power_dbm);
  std::exponential_distribution<double> exp1(1.0);
  const double signal = tx * p.g_m * exp1(fading) * std::pow(dist[serving], -p.alpha);
  double interference = 0.0;
  for (std::size_t j = 0; j < n; ++j) {
    if (j == serving) continue;
    const auto& region = region_of(dist[j]);
    const double u = unit(fading);
    const double h = exp1(fading);
    double gain = 0.0;
    bool in_main = false;
    if (o.thinning == Thinning::EquivalentDensity) {
      in_main = u < region.keep;
      gain = in_main ? p.g_m : 0.0;
    } else {
      in_main = u < region.mainlobe;
      gain = in_main ? p.g_m : p.g_s;
    }
    if (gain <= 0.0) continue;
    ++rec.interferers;
    if (in_main) ++rec.mainlobe_hits;
    interference += tx * gain * h * std::pow(dist[j], -p.alpha);
  }
  finish(rec, signal, interference, p, o);
  return rec;
}

// ---------------------------------------------------------------------------
// Full geometry

struct Placement {
  Point origin;
  TypicalPlacement record;
};

std::optional<Placement> place_near(const BuildingField& field, double slack, double epsilon,
                                    Rng& rng) {
  std::vector<std::size_t> central;
  for (std::size_t i = 0; i < field.size(); ++i) {
    const Point c = field.buildings()[i].center;
    if (std::abs(c.x) <= slack && std::abs(c.y) <= slack) central.push_back(i);
  }
  if (central.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, central.size() - 1);
  std::uniform_int_distribution<int> pick_wall(0, 3);
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    const std::size_t id = central[pick(rng)];
    const Building& b = field.buildings()[id];
    const int w = pick_wall(rng);
    const Wall wall = b.wall(w, id);
    const Point p = wall.midpoint() + epsilon * b.outward_normal(w);
    if (field.is_indoor(p)) continue;
    return Placement{p, {TypicalKind::Near, wall}};
  }
  return std::nullopt;
}

std::optional<Placement> place_far(const BuildingField& field, double slack, double d_c,
                                   Rng& rng) {
  std::uniform_real_distribution<double> coord(-slack, slack);
  for (int attempt = 0; attempt < kPlacementAttempts; ++attempt) {
    const Point p{coord(rng), coord(rng)};
    if (p.x * p.x + p.y * p.y > slack * slack) continue;
    if (field.classify(p, d_c) != RegionClass::Far) continue;
    return Placement{p, {TypicalKind::Far, std::nullopt}};
  }
  return std::nullopt;
}

bool inside_square(Point p, double half) { return std::abs(p.x) <= half && std::abs(p.y) <= half; }

}  // namespace

const char* to_string(SimMode mode) {
  return mode == SimMode::FullGeometry ? "full" : "losball";
}

const char* to_string(TypicalKind kind) { return kind == TypicalKind::Near ? "near" : "far"; }

Rng make_stream(std::uint64_t seed, std::uint32_t stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    stream};
  return Rng(seq);
}

NetworkDrop make_drop(const ScenarioParams& p, const SimOptions& o, std::uint64_t seed) {
  const double r_l = los_distance(p);
  const double half = o.window_half_width_rl * r_l;
  const double margin = o.window_margin_rl * r_l;
  // The typical UE is drawn within `slack` of the centre; buildings get that
  // much extra room so the shifted field still covers the whole window.
  const double slack = 0.5 * half;

  Rng geometry = make_stream(seed, kGeometry);
  Rng typical = make_stream(seed, kTypical);

  const BuildingField raw =
      sample_buildings(Window{half, margin + slack}, p, geometry, o.orientation);

  std::optional<Placement> placement;
  if (std::bernoulli_distribution(p.gamma_c)(typical)) {
    placement = place_near(raw, slack, o.wall_epsilon, typical);
  }
  if (!placement) placement = place_far(raw, slack, p.d_c, typical);
  if (!placement) {
    throw NumericError("could not place the typical UE outdoors; indoor fraction too high", 0.0);
  }

  NetworkDrop drop;
  drop.seed = seed;
  drop.window = Window{half, margin};
  drop.field = raw.shifted(placement->origin);
  drop.typical = placement->record;
  if (drop.typical.wall) {
    drop.typical.wall->v1 = drop.typical.wall->v1 - placement->origin;
    drop.typical.wall->v2 = drop.typical.wall->v2 - placement->origin;
  }

  // Indoor BSs are dropped; the protocol only concerns outdoor cells.
  std::vector<Point> bs_points;
  for (const Point q : sample_ppp(drop.window, p.lambda_b, geometry)) {
    if (!drop.field.is_indoor(q)) bs_points.push_back(q);
  }

  const auto dens = ue_densities(p);
  const double extent = drop.window.expanded_half_width();
  drop.ues.push_back(Point{0.0, 0.0});
  drop.ue_class.push_back(drop.typical.kind == TypicalKind::Near ? RegionClass::Near
                                                                 : RegionClass::Far);
  for (const Point q : sample_near_band(drop.field, p.d_c, dens.lambda_n, geometry)) {
    if (!inside_square(q, extent)) continue;
    drop.ues.push_back(q);
    drop.ue_class.push_back(RegionClass::Near);
  }
  for (const Point q : sample_ppp(drop.window, dens.lambda_r, geometry)) {
    if (drop.field.classify(q, p.d_c) != RegionClass::Far) continue;
    drop.ues.push_back(q);
    drop.ue_class.push_back(RegionClass::Far);
  }

  drop.bss = classify_all(bs_points, drop.field, p.theta, p.beta);
  drop.association = o.scheme == Scheme::BuildingAware
                         ? associate_all(drop.bss, drop.ues, drop.field, p)
                         : associate_max_rsrp(drop.bss, drop.ues, drop.field, p);
  return drop;
}

SampleRecord evaluate_drop(const NetworkDrop& drop, const ScenarioParams& p,
                           const SimOptions& o) {
  Rng sched = make_stream(drop.seed, kSchedule);
  Rng fading = make_stream(drop.seed, kFading);

  SampleRecord rec;
  rec.seed = drop.seed;
  rec.kind = drop.typical.kind;
  const auto serving = drop.association.serving.at(0);
  rec.path = drop.association.path.at(0);
  if (!serving) {
    rec.uncovered = true;
    return rec;
  }
  rec.n_cell = drop.association.members[*serving].size() - 1;

  const Point origin{0.0, 0.0};
  const double tx = dbm_to_mw(p.tx_power_dbm);
  std::exponential_distribution<double> exp1(1.0);
  std::uniform_real_distribution<double> direction(-kPi, kPi);
  const double signal =
      tx * p.g_m * exp1(fading) * std::pow(norm(drop.bss[*serving].position), -p.alpha);

  double interference = 0.0;
  for (std::size_t b = 0; b < drop.bss.size(); ++b) {
    if (b == *serving) continue;
    const Point pos = drop.bss[b].position;
    Point beam;
    if (const auto ue = schedule(b, drop.association, sched)) {
      beam = drop.ues[*ue] - pos;
    } else if (o.always_transmit) {
      const double phi = direction(sched);
      beam = Point{std::cos(phi), std::sin(phi)};
    } else {
      continue;
    }
    if (!drop.field.los(origin, pos)) continue;
    const bool in_main = angle_between(origin - pos, beam) <= 0.5 * p.theta;
    const double gain = in_main ? p.g_m : p.g_s;
    const double h = exp1(fading);
    ++rec.interferers;
    if (in_main) ++rec.mainlobe_hits;
    interference += tx * gain * h * std::pow(norm(pos), -p.alpha);
  }
  finish(rec, signal, interference, p, o);
  return rec;
}

SampleRecord realize(const ScenarioParams& p, const SimOptions& o, std::uint64_t seed) {
  if (o.mode == SimMode::LosBall) return realize_los_ball(p, o, seed);
  return evaluate_drop(make_drop(p, o, seed), p, o);
}

unsigned default_thread_count() {
  if (const char* env = std::getenv("MMWLAB_THREADS")) {
    char* end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end != env && *end == '\0' && v > 0) return static_cast<unsigned>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

std::vector<SampleRecord> realize_many(const ScenarioParams& p, const SimOptions& o,
                                       std::size_t n_drops, std::uint64_t seed_base,
                                       unsigned threads) {
  std::vector<SampleRecord> out(n_drops);
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, std::max<std::size_t>(n_drops, 1)));

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n_drops) return;
      try {
        out[i] = realize(p, o, seed_base + i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        next = n_drops;
        return;
      }
    }
  };
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned k = 0; k < threads; ++k) pool.emplace_back(work);
  }
  if (failure) std::rethrow_exception(failure);
  return out;
}

namespace {

class Accumulator {
public:
  void add(double x) {
    ++n_;
    const double delta = x - mean_;
    mean_ += delta / static_cast<double>(n_);
    m2_ += delta * (x - mean_);
  }

  MetricSummary summary() const {
    MetricSummary s;
    s.count = n_;
    s.mean = mean_;
    if (n_ >= 2) {
      s.stderr_ = std::sqrt(m2_ / static_cast<double>(n_ - 1) / static_cast<double>(n_));
      s.half_width = 1.96 * s.stderr_;
    }
    return s;
  }

private:
  std::size_t n_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

}  // namespace

EstimateSummary summarize(std::span<const SampleRecord> records) {
  Accumulator coverage, rate, mainlobe, conditional;
  std::size_t uncovered = 0;
  for (const auto& r : records) {
    coverage.add(r.covered ? 1.0 : 0.0);
    rate.add(r.rate_bps);
    if (r.uncovered) {
      ++uncovered;
    } else {
      conditional.add(r.covered ? 1.0 : 0.0);
    }
    if (r.interferers > 0) {
      mainlobe.add(static_cast<double>(r.mainlobe_hits) / static_cast<double>(r.interferers));
    }
  }
  EstimateSummary s;
  s.coverage = coverage.summary();
  s.rate = rate.summary();
  s.mainlobe_fraction = mainlobe.summary();
  s.conditional_coverage = conditional.summary();
  s.drops = records.size();
  s.uncovered_fraction =
      records.empty() ? 0.0 : static_cast<double>(uncovered) / static_cast<double>(records.size());
  return s;
}

EstimateSummary estimate(const ScenarioParams& p, const SimOptions& o, std::size_t n_drops,
                         std::uint64_t seed_base, unsigned threads) {
  if (n_drops < 2) throw DomainError("estimate needs at least two drops");
  const auto records = realize_many(p, o, n_drops, seed_base, threads);
  return summarize(records);
}

void write_trace(std::ostream& out, std::span<const SampleRecord> records) {
  fmt::print(out, "seed,sir_db,covered,rate_bps,n_cell,path,uncovered\n");
  for (const auto& r : records) {
    const std::string sir_db = r.uncovered ? std::string("nan")
                               : std::isinf(r.sir) ? std::string("inf")
                                                   : fmt::format("{:.6f}", 10.0 * std::log10(r.sir));
    fmt::print(out, "{},{},{},{:.6f},{},{},{}\n", r.seed, sir_db, r.covered ? 1 : 0, r.rate_bps,
               r.n_cell, to_string(r.path), r.uncovered ? 1 : 0);
  }
}

}  // namespace mmwlab
