#include "cli.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <ios>
#include <mutex>
#include <ostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <fmt/format.h>
#include <fmt/ostream.h>

#include "mmwlab/errors.hpp"

namespace mmwlab::cli {

namespace {

std::string num(double v) { return fmt::format("{:.10g}", v); }

// CSV cells must not contain separators or line breaks.
std::string sanitize(std::string text) {
  std::replace(text.begin(), text.end(), ',', ';');
  std::replace(text.begin(), text.end(), '\n', ' ');
  return text;
}

ScenarioParams require_valid(const ScenarioParams& params) {
  const auto outcome = validate(params);
  if (!outcome.accepted()) throw ConfigError("invalid parameters:\n" + outcome.describe());
  return params;
}

std::string simulate_metadata(const ScenarioParams& p, const SimOptions& o, std::size_t drops) {
  std::string window = "none";
  if (o.mode == SimMode::FullGeometry) {
    const double r_l = los_distance(p);
    window = fmt::format("half_width_m={} margin_m={}", num(o.window_half_width_rl * r_l),
                         num(o.window_margin_rl * r_l));
  }
  return fmt::format(
      "# mode={} scheme={} thinning={} idle_bs={} drops={} window {} "
      "note=full-geometry interferers need a scheduled UE unlike the analysis\n",
      to_string(o.mode), o.scheme == Scheme::BuildingAware ? "building-aware" : "max-rsrp",
      o.thinning == Thinning::EquivalentDensity ? "equivalent-density" : "binary-gain",
      o.always_transmit ? "transmit" : "silent", drops, window);
}

struct KindSplit {
  double near = 0.0;
  double far = 0.0;
  std::size_t n_near = 0;
  std::size_t n_far = 0;
};

KindSplit split_by_kind(const std::vector<SampleRecord>& records) {
  KindSplit k;
  for (const auto& r : records) {
    if (r.kind == TypicalKind::Near) {
      k.near += r.covered ? 1.0 : 0.0;
      ++k.n_near;
    } else {
      k.far += r.covered ? 1.0 : 0.0;
      ++k.n_far;
    }
  }
  if (k.n_near) k.near /= static_cast<double>(k.n_near);
  if (k.n_far) k.far /= static_cast<double>(k.n_far);
  return k;
}

std::string sweep_header(const SweepSpec& spec) {
  std::string h =
      "key,value,engine,status,beta,r_l,s_n,s_r,s,n_n,n_r,rate,coverage_stderr,rate_stderr,"
      "uncovered_fraction";
  if (spec.rate_gain) h += ",beta_star,rate_gain";
  return h;
}

std::string sweep_row(const ScenarioParams& base, const SweepSpec& spec, double value,
                      Engine engine, const AnalyticOptions& opts) {
  const std::string prefix = fmt::format("{},{},{}", spec.key, num(value), to_string(engine));
  const std::size_t trailing = spec.rate_gain ? 13 : 11;
  auto failed = [&](const std::string& status) {
    return prefix + "," + sanitize(status) + std::string(trailing, ',');
  };

  ScenarioParams p = base;
  set_numeric_param(p, spec.key, value);
  const auto outcome = validate(p);
  if (!outcome.accepted()) return failed("invalid: " + outcome.describe());

  try {
    std::string cells;
    if (engine == Engine::Analytic) {
      const auto r = analyze(p, p.beta, opts);
      cells = fmt::format("ok,{},{},{},{},{},{},{},{},,,", num(p.beta), num(r.r_l), num(r.s_n),
                          num(r.s_r), num(r.s), num(r.n_n), num(r.n_r), num(r.rate));
      if (spec.rate_gain) {
        const auto best = optimal_bias_rate(p, opts);
        cells += fmt::format(",{},{}", num(best.beta), num(best.value / average_rate(p, 0.0, opts)));
      }
    } else {
      SimOptions so = spec.sim;
      so.analytic = opts;
      so.mode = engine == Engine::SimFull ? SimMode::FullGeometry : SimMode::LosBall;
      const auto records = realize_many(p, so, spec.drops, spec.seed, 1);
      const auto summary = summarize(records);
      const auto kinds = split_by_kind(records);
      cells = fmt::format("ok,{},{},{},{},{},,,{},{},{},{}", num(p.beta), num(los_distance(p)),
                          kinds.n_near ? num(kinds.near) : std::string(),
                          kinds.n_far ? num(kinds.far) : std::string(), num(summary.coverage.mean),
                          num(summary.rate.mean), num(summary.coverage.stderr_),
                          num(summary.rate.stderr_), num(summary.uncovered_fraction));
      if (spec.rate_gain) {
        const double beta_star = optimal_bias_rate(p, opts).beta;
        ScenarioParams at_star = p;
        at_star.beta = beta_star;
        ScenarioParams at_zero = p;
        at_zero.beta = 0.0;
        const double r_star = summarize(realize_many(at_star, so, spec.drops, spec.seed, 1)).rate.mean;
        const double r_zero = summarize(realize_many(at_zero, so, spec.drops, spec.seed, 1)).rate.mean;
        cells += fmt::format(",{},{}", num(beta_star),
                             r_zero > 0.0 ? num(r_star / r_zero) : std::string("nan"));
      }
    }
    return prefix + "," + cells;
  } catch (const std::exception& e) {
    return failed(std::string("error: ") + e.what());
  }
}

void write_output(const std::string& text, const std::string& path, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
    return;
  }
  std::ofstream file(path, std::ios::binary);
  if (!file) throw std::ios_base::failure("cannot open output file '" + path + "'");
  file << text;
  if (!file) throw std::ios_base::failure("failed writing output file '" + path + "'");
}

}  // namespace

const char* to_string(Engine engine) {
  switch (engine) {
    case Engine::Analytic: return "analytic";
    case Engine::SimFull: return "sim-full";
    case Engine::SimLosBall: return "sim-losball";
  }
  return "?";
}

Engine parse_engine(std::string_view name) {
  if (name == "analytic") return Engine::Analytic;
  if (name == "sim-full") return Engine::SimFull;
  if (name == "sim-losball") return Engine::SimLosBall;
  throw ConfigError(fmt::format("unknown engine '{}'", name));
}

std::string header_comment(std::string_view command, const ScenarioParams& params,
                           std::optional<std::uint64_t> seed) {
  return fmt::format("# mmwlab {} schema={} command={} seed={} {}\n", kToolVersion,
                     kSchemaVersion, command, seed ? std::to_string(*seed) : std::string("none"),
                     describe(params));
}

std::string run_analytic(const ScenarioParams& params, const AnalyticOptions& opts) {
  const auto p = require_valid(params);
  const auto report = analyze(p, p.beta, opts);
  std::string text = header_comment("analytic", p, std::nullopt);
  text += analytic_csv_header();
  text += '\n';
  text += to_csv_row(report);
  text += '\n';
  return text;
}

std::string run_optimal_beta(const ScenarioParams& params, Objective objective,
                             const AnalyticOptions& opts) {
  const auto p = require_valid(params);
  const auto best = objective == Objective::Coverage ? optimal_bias_coverage(p, opts)
                                                     : optimal_bias_rate(p, opts);
  std::string text = header_comment("optimal-beta", p, std::nullopt);
  text += "objective,beta,value\n";
  text += fmt::format("{},{},{}\n", objective == Objective::Coverage ? "coverage" : "rate",
                      num(best.beta), num(best.value));
  return text;
}

std::string run_simulate(const ScenarioParams& params, const SimulateRequest& req) {
  const auto p = require_valid(params);
  if (req.drops < 2) throw ConfigError("simulate needs at least two drops");
  const auto records = realize_many(p, req.options, req.drops, req.seed, req.threads);
  const auto s = summarize(records);
  if (req.trace) {
    std::ostringstream trace;
    write_trace(trace, records);
    *req.trace = trace.str();
  }
  std::string text = header_comment("simulate", p, req.seed);
  text += simulate_metadata(p, req.options, req.drops);
  text +=
      "mode,beta,drops,coverage,coverage_stderr,coverage_half_width,rate,rate_stderr,"
      "rate_half_width,mainlobe_fraction,mainlobe_stderr,mainlobe_count,conditional_coverage,"
      "uncovered_fraction\n";
  text += fmt::format("{},{},{},{},{},{},{},{},{},{},{},{},{},{}\n", to_string(req.options.mode),
                      num(p.beta), s.drops, num(s.coverage.mean), num(s.coverage.stderr_),
                      num(s.coverage.half_width), num(s.rate.mean), num(s.rate.stderr_),
                      num(s.rate.half_width), num(s.mainlobe_fraction.mean),
                      num(s.mainlobe_fraction.stderr_), s.mainlobe_fraction.count,
                      num(s.conditional_coverage.mean), num(s.uncovered_fraction));
  return text;
}

const std::vector<std::string>& sweep_keys() {
  static const std::vector<std::string> keys{"beta",     "lambda_ell", "theta", "gamma_c",
                                             "lambda_b", "alpha",      "t"};
  return keys;
}

std::string run_sweep(const ScenarioParams& params, const SweepSpec& spec,
                      const AnalyticOptions& opts, unsigned threads, std::size_t* failed_rows,
                      std::ostream* progress) {
  const auto& keys = sweep_keys();
  if (std::find(keys.begin(), keys.end(), spec.key) == keys.end()) {
    throw ConfigError(fmt::format("cannot sweep '{}'", spec.key));
  }
  if (spec.steps < 2) throw ConfigError("sweep needs steps >= 2");
  if (!(spec.start < spec.stop)) throw ConfigError("sweep needs start < stop");
  if (spec.engines.empty()) throw ConfigError("sweep needs at least one engine");
  if (spec.drops < 2) throw ConfigError("sweep needs at least two drops per point");

  const auto n_points = static_cast<std::size_t>(spec.steps);
  const std::size_t n_engines = spec.engines.size();
  const std::size_t n_tasks = n_points * n_engines;
  auto value_at = [&](std::size_t i) {
    return i + 1 == n_points ? spec.stop
                             : spec.start + (spec.stop - spec.start) * static_cast<double>(i) /
                                                static_cast<double>(n_points - 1);
  };

  std::vector<std::string> rows(n_tasks);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex progress_mutex;
  auto work = [&] {
    for (;;) {
      const std::size_t k = next.fetch_add(1);
      if (k >= n_tasks) return;
      rows[k] = sweep_row(params, spec, value_at(k / n_engines), spec.engines[k % n_engines], opts);
      const std::size_t finished = ++done;
      if (progress) {
        std::lock_guard lock(progress_mutex);
        fmt::print(*progress, "sweep {}/{}\n", finished, n_tasks);
      }
    }
  };
  if (threads == 0) threads = default_thread_count();
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n_tasks));
  if (threads <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work);
  }

  std::size_t failures = 0;
  std::string text = header_comment("sweep", params, spec.seed);
  text += sweep_header(spec);
  text += '\n';
  for (const auto& row : rows) {
    if (row.find(",ok,") == std::string::npos) ++failures;
    text += row;
    text += '\n';
  }
  if (failed_rows) *failed_rows = failures;
  return text;
}

std::string run_presets(bool rows, bool csv) {
  std::string text;
  if (csv) {
    text = "name,lambda_ell,d_l,d_w,reference_los_m,formula_los_m\n";
  } else {
    text = fmt::format("{:<10} {:>12} {:>8} {:>8} {:>16} {:>14}\n", "name", "lambda_ell",
                       "d_l", "d_w", "reference_los_m", "formula_los_m");
  }
  if (!rows) return text;
  for (const auto& c : city_presets()) {
    const double formula = *los_distance(c.lambda_ell, c.d_l, c.d_w);
    if (csv) {
      text += fmt::format("{},{},{},{},{},{:.2f}\n", c.name, c.lambda_ell, c.d_l, c.d_w,
                          c.reference_los_m, formula);
    } else {
      text += fmt::format("{:<10} {:>12} {:>8} {:>8} {:>16} {:>14.2f}\n", c.name, c.lambda_ell,
                          c.d_l, c.d_w, c.reference_los_m, formula);
    }
  }
  return text;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Building-aware mmWave association: analysis and simulation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(kToolVersion));

  std::string config_path;
  std::string preset_name;
  std::vector<std::string> overrides;
  std::optional<double> beta;
  std::string out_path;
  bool literal_load_form = false;
  double log_base = 2.0;

  auto add_params = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "key = value parameter file");
    sub->add_option("--preset", preset_name, "city preset (Manhattan, Gangnam, Chicago)");
    sub->add_option("--set", overrides, "override one parameter, key=value (repeatable)");
    sub->add_option("--beta", beta, "association bias in [0, 1]");
    sub->add_option("--out", out_path, "output file (default stdout)");
    sub->add_flag("--literal-eq9", literal_load_form,
                  "mean load with the typeset trigger and bracket instead of the consistent form");
    sub->add_option("--log-base", log_base, "logarithm base of the rate (default 2)");
  };

  auto* analytic_cmd = app.add_subcommand("analytic", "closed-form and quadrature report");
  add_params(analytic_cmd);

  auto* optimal_cmd = app.add_subcommand("optimal-beta", "optimal association bias");
  add_params(optimal_cmd);
  std::string objective_name = "coverage";
  optimal_cmd->add_option("--objective", objective_name, "coverage or rate")
      ->check(CLI::IsMember({"coverage", "rate"}));

  std::string mode_name = "full";
  std::size_t drops = 10000;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string scheme_name = "aware";
  std::string thinning_name = "equivalent";
  bool always_transmit = false;
  bool axis_aligned = false;
  std::string trace_path;
  std::string dump_path;

  auto add_sim = [&](CLI::App* sub) {
    sub->add_option("--mode", mode_name, "full or losball")->check(CLI::IsMember({"full", "losball"}));
    sub->add_option("--drops", drops, "number of Monte Carlo drops");
    sub->add_option("--seed", seed, "base seed; drop i uses seed + i");
    sub->add_option("--threads", threads, "worker threads (default MMWLAB_THREADS or all cores)");
    sub->add_option("--scheme", scheme_name, "aware or rsrp")->check(CLI::IsMember({"aware", "rsrp"}));
    sub->add_option("--thinning", thinning_name, "equivalent or binary (losball mode)")
        ->check(CLI::IsMember({"equivalent", "binary"}));
    sub->add_flag("--always-transmit", always_transmit, "idle BSs radiate in a random direction");
    sub->add_flag("--axis-aligned", axis_aligned, "buildings aligned with the axes");
  };

  auto* simulate_cmd = app.add_subcommand("simulate", "Monte Carlo estimate");
  add_params(simulate_cmd);
  add_sim(simulate_cmd);
  simulate_cmd->add_option("--trace", trace_path, "per-drop trace CSV");
  simulate_cmd->add_option("--dump-drop", dump_path,
                           "full-geometry first drop: buildings, points and association");

  auto* sweep_cmd = app.add_subcommand("sweep", "parameter sweep over one key");
  add_params(sweep_cmd);
  add_sim(sweep_cmd);
  SweepSpec spec;
  std::vector<std::string> engine_names{"analytic"};
  bool progress = false;
  sweep_cmd->add_option("--key", spec.key, "swept parameter")->check(CLI::IsMember(sweep_keys()));
  sweep_cmd->add_option("--start", spec.start, "first value")->required();
  sweep_cmd->add_option("--stop", spec.stop, "last value")->required();
  sweep_cmd->add_option("--steps", spec.steps, "number of grid points (>= 2)");
  sweep_cmd->add_option("--engines", engine_names, "analytic, sim-full, sim-losball")
      ->delimiter(',')
      ->check(CLI::IsMember({"analytic", "sim-full", "sim-losball"}));
  sweep_cmd->add_flag("--rate-gain", spec.rate_gain, "add beta_star and rate_gain columns");
  sweep_cmd->add_flag("--progress", progress, "print a line counter on stderr");

  auto* presets_cmd = app.add_subcommand("presets", "list the city building statistics");
  bool no_rows = false;
  bool presets_csv = false;
  presets_cmd->add_flag("--no-rows", no_rows, "header only");
  presets_cmd->add_flag("--csv", presets_csv, "machine-readable output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (presets_cmd->parsed()) {
      out << run_presets(!no_rows, presets_csv);
      return kOk;
    }

    ScenarioParams params;
    if (!config_path.empty()) params = load_config(config_path, params);
    if (!preset_name.empty()) params = with_preset(params, preset(preset_name));
    for (const auto& kv : overrides) {
      const auto eq = kv.find('=');
      if (eq == std::string::npos) throw ConfigError(fmt::format("--set expects key=value, got '{}'", kv));
      set_param(params, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (beta) params.beta = *beta;

    if (const auto outcome = validate(params); !outcome.accepted()) {
      err << "invalid configuration:\n" << outcome.describe();
      return kConfigError;
    }

    AnalyticOptions opts;
    opts.literal_load_form = literal_load_form;
    opts.log_base = log_base;

    SimOptions sim;
    sim.mode = mode_name == "losball" ? SimMode::LosBall : SimMode::FullGeometry;
    sim.scheme = scheme_name == "rsrp" ? Scheme::MaxRsrp : Scheme::BuildingAware;
    sim.thinning = thinning_name == "binary" ? Thinning::BinaryGain : Thinning::EquivalentDensity;
    sim.always_transmit = always_transmit;
    sim.orientation = axis_aligned ? Orientation::AxisAligned : Orientation::Uniform;
    sim.analytic = opts;

    std::string text;
    if (analytic_cmd->parsed()) {
      text = run_analytic(params, opts);
    } else if (optimal_cmd->parsed()) {
      text = run_optimal_beta(params,
                              objective_name == "rate" ? Objective::Rate : Objective::Coverage, opts);
    } else if (simulate_cmd->parsed()) {
      SimulateRequest req;
      req.options = sim;
      req.drops = drops;
      req.seed = seed;
      req.threads = threads;
      std::string trace;
      if (!trace_path.empty()) req.trace = &trace;
      text = run_simulate(params, req);
      if (!trace_path.empty()) write_output(trace, trace_path, out);
      if (!dump_path.empty()) {
        if (sim.mode != SimMode::FullGeometry) throw ConfigError("--dump-drop needs --mode full");
        const auto drop = make_drop(params, sim, seed);
        std::vector<TaggedPoint> points;
        for (const auto& bs : drop.bss) points.push_back({bs.position, bs.role == BsRole::DBs ? "dbs" : "obs"});
        for (std::size_t u = 0; u < drop.ues.size(); ++u) {
          points.push_back({drop.ues[u], u == 0 ? "typical" : to_string(drop.ue_class[u])});
        }
        std::ostringstream dump;
        write_drop_dump(dump, drop.field, points);
        write_association_dump(dump, drop.association);
        write_output(dump.str(), dump_path, out);
      }
    } else if (sweep_cmd->parsed()) {
      spec.engines.clear();
      for (const auto& name : engine_names) spec.engines.push_back(parse_engine(name));
      spec.drops = drops;
      spec.seed = seed;
      spec.sim = sim;
      std::size_t failed = 0;
      text = run_sweep(params, spec, opts, threads, &failed, progress ? &err : nullptr);
      const std::size_t total = static_cast<std::size_t>(spec.steps) * spec.engines.size();
      if (failed == total) {
        write_output(text, out_path, out);
        err << "every sweep point failed\n";
        return kNumericError;
      }
    }
    write_output(text, out_path, out);
    return kOk;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const NotFoundError& e) {
    err << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const DomainError& e) {
    err << "parameters outside the model's domain: " << e.what() << '\n';
    return kConfigError;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::ios_base::failure& e) {
    err << "I/O error: " << e.what() << '\n';
    return kIoError;
  }
}

}  // namespace mmwlab::cli
