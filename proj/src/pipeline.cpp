#include "openrate/pipeline.hpp"

#include "openrate/billiard.hpp"
#include "openrate/dynballs.hpp"
#include "openrate/tower.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

namespace openrate {

using nlohmann::json;
namespace fs = std::filesystem;

std::string to_string(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return "PASS";
    case Verdict::violated:
      return "VIOLATED";
    case Verdict::error:
      return "ERROR";
  }
  return "ERROR";
}

int exit_code(Verdict v) {
  switch (v) {
    case Verdict::pass:
      return 0;
    case Verdict::violated:
      return 2;
    case Verdict::error:
      return 1;
  }
  return 1;
}

StageSelection StageSelection::only(const std::string& stage) {
  StageSelection s{false, false, false, false, false, false, false};
  if (stage == "escape") {
    s.escape = true;
  } else if (stage == "ulam") {
    s.spectral = true;
  } else if (stage == "pressure") {
    s.spectral = s.escape = s.pressure = true;
  } else if (stage == "tower") {
    s.tower = true;
  } else if (stage == "balls") {
    s.balls = true;
  } else if (stage == "billiard") {
    s.billiard = true;
  } else if (stage == "sweep") {
    s.sweep = true;
  } else {
    throw ConfigError("unknown stage '" + stage + "'");
  }
  return s;
}

namespace {

json num(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

double as_double(const json& v) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    const auto s = v.get<std::string>();
    if (s == "inf") return kInf;
    if (s == "-inf") return -kInf;
    return std::nan("");
  }
  return std::nan("");
}

std::string csv_quote(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class Run {
 public:
  Run(const ExperimentConfig& cfg, fs::path dir) : cfg_(cfg), dir_(std::move(dir)) {}

  void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
    std::ofstream os(dir_ / name);
    if (!os) throw Error("cannot write " + (dir_ / name).string());
    body(os);
    if (!os) throw Error("write failed: " + (dir_ / name).string());
    files_.push_back(name);
  }

  /// Runs a stage body, recording its status and any error.
  void stage(const std::string& name, const std::function<void(json&)>& body) {
    json rec = {{"status", "ok"}};
    try {
      body(rec);
    } catch (const std::exception& e) {
      rec["status"] = "error";
      rec["error"] = e.what();
      errors_.push_back(name + ": " + e.what());
    }
    stages_[name] = rec;
  }

  void violation(const std::string& what) { violations_.push_back(what); }
  void metric(const std::string& name, double value, double se = 0.0) {
    metrics_[name] = {{"value", num(value)}, {"std_error", num(se)}};
  }

  PipelineResult finish() {
    PipelineResult r;
    r.verdict = !errors_.empty() ? Verdict::error : (!violations_.empty() ? Verdict::violated : Verdict::pass);
    json& s = r.summary;
    s["schema"] = kSummarySchema;
    s["config"] = to_json(cfg_);
    s["config_hash"] = config_hash(cfg_);
    s["stages"] = stages_;
    s["metrics"] = metrics_;
    s["violations"] = violations_;
    s["errors"] = errors_;
    s["verdict"] = to_string(r.verdict);
    files_.push_back("summary.json");
    s["files"] = files_;
    std::ofstream os(dir_ / "summary.json");
    os << s.dump(2) << '\n';
    if (!os) throw Error("cannot write summary.json");
    r.files = files_;
    return r;
  }

 private:
  const ExperimentConfig& cfg_;
  fs::path dir_;
  json stages_ = json::object();
  json metrics_ = json::object();
  std::vector<std::string> violations_;
  std::vector<std::string> errors_;
  std::vector<std::string> files_;
};

GridMeasure reference_grid_measure(const MapModel& map, const Grid& g) {
  GridMeasure m{g, std::vector<double>(g.size(), 0.0)};
  for (std::size_t c = 0; c < g.size(); ++c) {
    m.mass[c] = (map.reference_density ? map.reference_density(g.center(c)) : 1.0) * g.cell_volume();
  }
  m.normalize();
  return m;
}

EscapeEstimate estimate_escape(const OpenSystem& sys, EscapeMethod method, const ExperimentConfig& cfg,
                               std::uint64_t stream, const UlamOperator* reuse) {
  switch (method) {
    case EscapeMethod::grid: {
      std::optional<UlamOperator> own;
      const UlamOperator* op = reuse;
      if (op == nullptr || op->grid.n != cfg.escape.resolution) {
        own = build_ulam(sys, cfg.escape.resolution, cfg.ulam.subsamples);
        op = &*own;
      }
      return escape_rate_grid(sys, reference_grid_measure(sys.map, op->grid), cfg.escape.n_max, cfg.escape.window,
                              op);
    }
    case EscapeMethod::monte_carlo: {
      McOptions mc;
      mc.samples = cfg.escape.samples;
      mc.seed = mix_seed(cfg.seed ^ stream);
      mc.workers = cfg.workers;
      return escape_rate_mc(sys, uniform_sampler(sys.map.dimension), cfg.escape.n_max, mc, cfg.escape.window);
    }
    case EscapeMethod::word_count:
      return escape_rate_words(sys, cfg.escape.n_max, cfg.escape.window);
  }
  throw ConfigError("unknown escape method");
}

/// a contains b as Type I arcs on the same scatterer or as Type II disks.
bool billiard_hole_contains(const BilliardHole& a, const BilliardHole& b) {
  if (a.kind != b.kind || a.kind == BilliardHole::Kind::none) return false;
  if (a.kind == BilliardHole::Kind::type_I) return a.id == b.id && a.a <= b.a && b.b <= a.b;
  return std::hypot(a.cx - b.cx, a.cy - b.cy) + b.radius <= a.radius + 1e-15;
}

std::vector<Point> ball_centers(const OpenSystem& sys, int count, int horizon, std::uint64_t seed) {
  ShardRng rng(seed, 0x62616c6cULL);
  std::vector<Point> centers;
  const long long max_draws = 1000LL * count;
  for (long long d = 0; d < max_draws && static_cast<int>(centers.size()) < count; ++d) {
    Point p{rng.uniform(), sys.map.dimension == 2 ? rng.uniform() : 0.0};
    bool clear = true;
    Point q = p;
    for (int i = 0; i <= horizon && clear; ++i) {
      clear = !sys.hole.contains(q) && sys.map.singularity_distance(q) > 1e-9;
      q = sys.map.evaluate(q);
    }
    if (clear) centers.push_back(p);
  }
  if (static_cast<int>(centers.size()) < count) {
    throw InsufficientSamplesError("balls: found only " + std::to_string(centers.size()) + " surviving centers");
  }
  return centers;
}

}  // namespace

std::vector<InvariantMeasureRep> build_candidates(const OpenSystem& sys, const ExperimentConfig& cfg,
                                                  const UlamOperator* op, const SpectralData* spectral,
                                                  const SurvivorMeasure* nu) {
  std::vector<InvariantMeasureRep> out;
  if (op != nullptr && spectral != nullptr && nu != nullptr) {
    out.push_back(grid_survivor_measure("nu_hat", sys, *op, *spectral, *nu));
  }
  const auto orbits = surviving_periodic_orbits(sys, cfg.pressure.max_period, cfg.pressure.max_orbits);
  for (std::size_t i = 0; i < orbits.size(); ++i) {
    out.push_back(periodic_orbit_measure("periodic_" + std::to_string(orbits[i].size()) + "_" + std::to_string(i),
                                         sys.map, orbits[i]));
  }
  for (std::size_t i = 0; i < cfg.pressure.bernoulli.size(); ++i) {
    const auto& p = cfg.pressure.bernoulli[i];
    if (sys.map.affine_branches.empty() || static_cast<int>(p.size()) != sys.map.alphabet) {
      throw ConfigError("pressure.bernoulli[" + std::to_string(i) + "]: needs one weight per branch of an m-adic map");
    }
    out.push_back(bernoulli_digit_measure("bernoulli_" + std::to_string(i), p));
  }
  return out;
}

PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir, const StageSelection& sel) {
  fs::create_directories(out_dir);
  Run run(cfg, out_dir);
  const OpenSystem sys{make_model(cfg.system.map, cfg.system.m), cfg.hole};

  std::optional<UlamOperator> op;
  std::optional<SpectralData> spectral;
  std::optional<SurvivorMeasure> nu;
  std::optional<EscapeEstimate> primary;

  if (sel.spectral && cfg.ulam.enabled) {
    run.stage("spectral", [&](json& rec) {
      op = build_ulam(sys, cfg.ulam.resolution, cfg.ulam.subsamples);
      spectral = leading_eigenpair(*op, cfg.ulam.tol);
      rec["resolution"] = cfg.ulam.resolution;
      rec["exact_assembly"] = op->exact();
      rec["r"] = spectral->eigenvalue;
      rec["gap_estimate"] = spectral->gap_estimate;
      rec["simple"] = spectral->simple();
      rec["residual"] = spectral->residual;
      rec["warnings"] = op->warnings;
      const auto ci = conditionally_invariant_check(*op, *spectral, 20);
      rec["push_distance"] = ci.push_distance;
      rec["surviving_distance"] = ci.surviving_distance;
      try {
        nu = survivor_measure(*op, *spectral);
        rec["survivor_discrepancy"] = nu->discrepancy;
      } catch (const ConvergenceError& e) {
        rec["survivor_discrepancy"] = "nan";
        rec["warnings"].push_back(e.what());
      }
      run.metric("r", spectral->eigenvalue);
      if (spectral->eigenvalue > 0.0) run.metric("log_r", std::log(spectral->eigenvalue));
      run.write("spectral.json", [&](std::ostream& os) {
        json j = spectral_to_json(*spectral);
        j["resolution"] = cfg.ulam.resolution;
        os << j.dump(2) << '\n';
      });
      run.write("ulam_triplets.txt", [&](std::ostream& os) { write_triplets(os, op->matrix); });
    });
  }

  if (sel.escape && cfg.escape.enabled) {
    run.stage("escape", [&](json& rec) {
      json methods = json::object();
      for (std::size_t k = 0; k < cfg.escape.methods.size(); ++k) {
        const auto method = cfg.escape.methods[k];
        const std::string name = to_string(method);
        try {
          const auto e = estimate_escape(sys, method, cfg, 0x657363ULL + k, op ? &*op : nullptr);
          methods[name] = to_json(e);
          methods[name]["status"] = "ok";
          run.metric("rho." + name, e.rho, e.std_error);
          run.write("escape_" + name + ".csv", [&](std::ostream& os) { write_escape_csv(os, e); });
          if (!primary) {
            primary = e;
            rec["primary"] = name;
            run.metric("rho", e.rho, e.std_error);
          }
        } catch (const std::exception& ex) {
          methods[name] = {{"status", "error"}, {"error", ex.what()}};
          throw Error("method " + name + ": " + ex.what());
        }
      }
      rec["methods"] = methods;
    });
  }

  if (sel.sweep && !cfg.sweep.empty()) {
    run.stage("sweep", [&](json& rec) {
      const auto method = cfg.escape.methods.front();
      std::vector<EscapeEstimate> est;
      for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        est.push_back(estimate_escape(OpenSystem{sys.map, cfg.sweep[i]}, method, cfg, 0x737765ULL + i, nullptr));
      }
      bool monotone = true;
      for (std::size_t i = 0; i < est.size(); ++i) {
        for (std::size_t j = 0; j < est.size(); ++j) {
          if (i == j || !cfg.sweep[i].contains_hole(cfg.sweep[j])) continue;
          // A larger hole cannot have a larger survival exponent.
          const double tol = 3.0 * std::hypot(est[i].std_error, est[j].std_error) + 1e-9;
          if (est[i].rho > est[j].rho + tol) {
            monotone = false;
            run.violation("sweep: rho[" + std::to_string(i) + "] > rho[" + std::to_string(j) + "] for nested holes");
          }
        }
      }
      rec["method"] = to_string(method);
      rec["monotone"] = monotone;
      json rows = json::array();
      for (std::size_t i = 0; i < est.size(); ++i) {
        rows.push_back({{"hole", cfg.sweep[i].describe()}, {"rho", est[i].rho}, {"std_error", est[i].std_error}});
      }
      rec["rows"] = rows;
      run.write("sweep.csv", [&](std::ostream& os) {
        os << "index,hole,rho,std_error,rho_lower,rho_upper\n";
        for (std::size_t i = 0; i < est.size(); ++i) {
          os << i << ',' << csv_quote(cfg.sweep[i].describe()) << ',' << fmt(est[i].rho) << ','
             << fmt(est[i].std_error) << ',' << fmt(est[i].rho_lower) << ',' << fmt(est[i].rho_upper) << '\n';
        }
      });
    });
  }

  if (sel.pressure && cfg.pressure.enabled) {
    run.stage("pressure", [&](json& rec) {
      if (!primary) throw Error("needs a successful escape stage");
      const auto candidates =
          build_candidates(sys, cfg, op ? &*op : nullptr, spectral ? &*spectral : nullptr, nu ? &*nu : nullptr);
      VariationalOptions vo;
      vo.samples = cfg.pressure.samples;
      vo.seed = mix_seed(cfg.seed ^ 0x707265ULL);
      vo.workers = cfg.workers;
      vo.exact_tolerance = cfg.pressure.exact_tolerance;
      vo.expect_equality = cfg.pressure.expect_equality && nu.has_value();
      const auto v = variational_report(sys, candidates, *primary, vo);
      rec["candidates"] = candidates.size();
      rec["inequality_ok"] = v.inequality_ok;
      rec["equality_ok"] = v.equality_ok;
      rec["ruelle_ok"] = v.ruelle_ok;
      rec["max_pressure"] = num(v.max_pressure);
      rec["diagnostics"] = v.diagnostics;
      json reports = json::array();
      for (const auto& r : v.reports) {
        reports.push_back(to_json(r));
        if (r.label == "nu_hat") {
          run.metric("P_nu_hat", r.pressure, r.pressure_err);
          run.metric("h_nu_hat", r.h, r.h_err);
          run.metric("gap_nu_hat", r.gap);
        }
      }
      rec["reports"] = reports;
      if (!v.inequality_ok) run.violation("pressure: rho_lower < P - tol for a class-passing candidate");
      if (!v.equality_ok) run.violation("pressure: P(nu_hat) differs from rho");
      if (!v.ruelle_ok) run.violation("pressure: Ruelle inequality fails");
      run.write("pressure.csv", [&](std::ostream& os) { write_pressure_csv(os, v.reports); });
      run.write("pressure.json", [&](std::ostream& os) { os << reports.dump(2) << '\n'; });
    });
  }

  if (sel.tower && cfg.tower.enabled) {
    run.stage("tower", [&](json& rec) {
      const TowerSpec t = cfg.tower.spec.is_string() ? golden_mean_tower() : tower_from_json(cfg.tower.spec);
      const double r = tower_eigenvalue(t);
      const auto nu_t = gibbs_measure(t, r, cfg.tower.depth);
      const auto gb = gibbs_bounds(t, r, nu_t, cfg.tower.depth);
      const auto gur = gurevich_pressure(t, r, cfg.tower.n_max);
      const auto ab = abramov_check(t, nu_t, r);
      const auto mx = pressure_maximization(t, r, cfg.tower.draws, mix_seed(cfg.seed ^ 0x746f77ULL));
      const auto hyp = validate_hypotheses(t);
      rec["r"] = r;
      rec["log_r"] = std::log(r);
      rec["stationary"] = std::vector<double>(nu_t.stationary.data(), nu_t.stationary.data() + nu_t.stationary.size());
      rec["gibbs_holds"] = gb.holds;
      rec["gibbs_max_log_ratio"] = gb.max_log_ratio;
      double gmax = 0.0;
      json g = json::array();
      for (const auto& p : gur.all_periodic) {
        g.push_back({p.n, p.value});
        gmax = std::max(gmax, std::abs(p.value));
      }
      rec["gurevich"] = g;
      rec["gurevich_max_abs"] = gmax;
      rec["abramov"] = {{"h_induced", ab.h_induced}, {"return_integral", ab.return_integral},
                        {"h_tower", ab.h_tower},     {"lambda_tower", ab.lambda_tower},
                        {"pressure", ab.pressure},   {"consistent", ab.consistent}};
      rec["maximization"] = {{"gibbs_pressure", mx.gibbs_pressure}, {"best_random", num(mx.best_random)},
                             {"draws", mx.draws}, {"exceed", mx.exceed}};
      json checks = json::array();
      for (const auto& c : hyp.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"witness", c.witness}});
      rec["hypotheses"] = checks;
      run.metric("tower_r", r);
      run.metric("tower_pressure", ab.pressure);
      if (!gb.holds) run.violation("tower: Gibbs bounds fail");
      if (!ab.consistent) run.violation("tower: Abramov pressure differs from log r");
      if (mx.exceed > 0) run.violation("tower: a random measure exceeds the Gibbs pressure");
      if (t.full_shift() && gmax > 1e-8) run.violation("tower: Gurevich pressure of the normalized potential is not 0");
      run.write("tower.json", [&](std::ostream& os) { os << rec.dump(2) << '\n'; });
    });
  }

  if (sel.balls && cfg.balls.enabled) {
    run.stage("balls", [&](json& rec) {
      const auto centers = ball_centers(sys, cfg.balls.centers, cfg.balls.n_max, mix_seed(cfg.seed ^ 0x62616cULL));
      BallSweepOptions bo;
      bo.eps = cfg.balls.eps;
      bo.n_max = cfg.balls.n_max;
      bo.fit_min = cfg.balls.fit_min;
      bo.mass.samples = cfg.balls.samples;
      bo.mass.seed = mix_seed(cfg.seed ^ 0x6d6173ULL);
      bo.workers = cfg.workers;
      const auto sweep = ball_sweep(sys, centers, bo);
      const double lambda = sys.map.constant_log_expansion;
      rec["centers"] = centers.size();
      rec["mean_slope"] = sweep.mean_slope;
      rec["max_slope"] = sweep.max_slope;
      rec["slope_spread"] = sweep.slope_spread;
      rec["shell_hits"] = sweep.shell_hits;
      rec["lambda_plus"] = lambda > 0.0 ? json(lambda) : json(nullptr);
      run.metric("ball_mean_slope", sweep.mean_slope);
      if (lambda > 0.0) {
        rec["bound_ok"] = sweep.max_slope <= lambda + 0.1;
        if (sweep.max_slope > lambda + 0.1) run.violation("balls: slope exceeds lambda_plus + 0.1");
      }
      run.write("balls.csv", [&](std::ostream& os) { write_ball_csv(os, sweep); });
    });
  }

  if (sel.billiard && cfg.billiard.enabled) {
    run.stage("billiard", [&](json& rec) {
      TableOptions to;
      const auto table = table_from_json(cfg.billiard.table, to);
      std::vector<BilliardHole> holes;
      for (std::size_t i = 0; i < cfg.billiard.holes.size(); ++i) {
        try {
          holes.push_back(billiard_hole_from_json(cfg.billiard.holes[i], table));
          validate_hole(table, holes.back());
        } catch (const std::exception& e) {
          throw ConfigError("billiard.holes[" + std::to_string(i) + "]: " + e.what());
        }
      }
      if (holes.empty()) throw ConfigError("billiard.holes: empty");
      BilliardRunOptions bo;
      bo.samples = cfg.billiard.samples;
      bo.n_max = cfg.billiard.n_max;
      bo.window = cfg.billiard.window;
      bo.seed = mix_seed(cfg.seed ^ 0x62696cULL);
      bo.workers = cfg.workers;
      const auto est = billiard_escape(table, holes, bo);
      const auto chi = srb_stationarity(table, 200'000, 1, mix_seed(cfg.seed ^ 0x636869ULL), cfg.workers);
      const auto rev = reversibility(table, 2000, 8, mix_seed(cfg.seed ^ 0x726576ULL));
      rec["table"] = to_json(table);
      rec["stationarity"] = {{"statistic", chi.statistic}, {"dof", chi.dof}, {"p_value", chi.p_value}};
      rec["reversibility"] = {{"max_error", rev.max_error}, {"orbits", rev.orbits}, {"skipped", rev.skipped}};
      bool monotone = true;
      for (std::size_t i = 0; i < holes.size(); ++i) {
        for (std::size_t j = 0; j < holes.size(); ++j) {
          if (i == j || !billiard_hole_contains(holes[i], holes[j])) continue;
          const double tol = 3.0 * std::hypot(est[i].std_error, est[j].std_error);
          if (est[i].rho > est[j].rho + tol) {
            monotone = false;
            run.violation("billiard: rho[" + std::to_string(i) + "] > rho[" + std::to_string(j) +
                          "] for nested holes");
          }
        }
      }
      rec["monotone"] = monotone;
      json rows = json::array();
      for (std::size_t i = 0; i < holes.size(); ++i) {
        const auto d = fit_diagnostics(est[i]);
        rows.push_back({{"hole", to_json(holes[i])},
                        {"rho", est[i].rho},
                        {"std_error", est[i].std_error},
                        {"singular_samples", est[i].singular_samples},
                        {"rms_residual", d.rms_residual},
                        {"max_residual", d.max_residual},
                        {"ratio_spread", d.ratio_spread},
                        {"convexity_defect", d.convexity_defect}});
        run.metric("billiard_rho." + std::to_string(i), est[i].rho, est[i].std_error);
        run.write("billiard_" + std::to_string(i) + ".csv", [&](std::ostream& os) { write_escape_csv(os, est[i]); });
      }
      rec["holes"] = rows;
      run.write("billiard.csv", [&](std::ostream& os) {
        os << "index,hole,rho,std_error,rms_residual,max_residual,ratio_spread,convexity_defect\n";
        for (std::size_t i = 0; i < holes.size(); ++i) {
          const auto& r = rows[i];
          os << i << ',' << csv_quote(holes[i].describe()) << ',' << fmt(est[i].rho) << ','
             << fmt(est[i].std_error) << ',' << fmt(r["rms_residual"].get<double>()) << ','
             << fmt(r["max_residual"].get<double>()) << ',' << fmt(r["ratio_spread"].get<double>()) << ','
             << fmt(r["convexity_defect"].get<double>()) << '\n';
        }
      });
    });
  }

  return run.finish();
}

json summary_metrics(const json& summary) {
  if (!summary.contains("metrics")) return json::object();
  return summary["metrics"];
}

CompareTable compare_runs(const std::vector<std::string>& paths) {
  if (paths.size() < 2) throw ConfigError("compare: need at least two result bundles");
  CompareTable t;
  std::vector<json> metrics;
  std::string schema;
  for (const auto& p : paths) {
    fs::path file = p;
    if (fs::is_directory(file)) file /= "summary.json";
    const json s = load_json_file(file.string());
    const std::string sch = s.value("schema", "");
    if (sch != kSummarySchema) throw ConfigError(file.string() + ": schema mismatch ('" + sch + "')");
    if (schema.empty()) schema = sch;
    if (sch != schema) throw ConfigError(file.string() + ": schema mismatch");
    t.runs.push_back(file.string());
    metrics.push_back(summary_metrics(s));
  }
  for (const auto& item : metrics.front().items()) {
    const std::string& name = item.key();
    bool common = true;
    for (const auto& m : metrics) common = common && m.contains(name);
    if (!common) continue;
    CompareRow row;
    row.metric = name;
    std::size_t lo = 0;
    std::size_t hi = 0;
    for (std::size_t k = 0; k < metrics.size(); ++k) {
      row.values.push_back(as_double(metrics[k][name]["value"]));
      if (row.values[k] < row.values[lo]) lo = k;
      if (row.values[k] > row.values[hi]) hi = k;
    }
    row.max_delta = row.values[hi] - row.values[lo];
    if (std::isnan(row.max_delta)) row.max_delta = 0.0;
    row.sigma = std::hypot(as_double(metrics[lo][name]["std_error"]), as_double(metrics[hi][name]["std_error"]));
    t.max_discrepancy = std::max(t.max_discrepancy, row.max_delta);
    t.rows.push_back(std::move(row));
  }
  return t;
}

void write_compare_csv(std::ostream& os, const CompareTable& t) {
  os << "metric,max_delta,sigma";
  for (std::size_t k = 0; k < t.runs.size(); ++k) os << ",value_" << k;
  os << '\n';
  for (const auto& r : t.rows) {
    os << r.metric << ',' << fmt(r.max_delta) << ',' << fmt(r.sigma);
    for (double v : r.values) os << ',' << fmt(v);
    os << '\n';
  }
}

}  // namespace openrate
