// or-verify: command-line front end of the openrate pipeline.

#include "openrate/pipeline.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct CommonFlags {
  std::string config;
  std::string out;
  std::string out_dir;
  std::optional<int> workers;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> map;
  std::optional<int> m;
  std::optional<int> resolution;
  std::optional<long long> samples;
  std::optional<int> n_max;
  std::vector<std::string> methods;
};

void add_common(CLI::App* sub, CommonFlags& f, bool needs_config = true) {
  auto* c = sub->add_option("--config,-c", f.config, "Experiment config (JSON)")->check(CLI::ExistingFile);
  if (needs_config) c->required();
  sub->add_option("--out-dir", f.out_dir, "Output directory (default: config 'output')");
  sub->add_option("--workers,-j", f.workers, "Worker threads");
  sub->add_option("--seed", f.seed, "Base seed (overrides config and OR_SEED)");
  sub->add_option("--map", f.map, "system.map");
  sub->add_option("--m", f.m, "system.m");
  sub->add_option("--resolution", f.resolution, "ulam.resolution and escape.resolution");
  sub->add_option("--samples", f.samples, "Sample count of the stage");
  sub->add_option("--n-max", f.n_max, "escape.n_max");
  sub->add_option("--method", f.methods, "escape.methods");
}

/// Flags as a JSON merge patch over the config file.
json overrides(const CommonFlags& f, const std::string& stage) {
  json p = json::object();
  if (f.workers) p["workers"] = *f.workers;
  if (f.seed) p["seed"] = *f.seed;
  if (f.map) p["system"]["map"] = *f.map;
  if (f.m) p["system"]["m"] = *f.m;
  if (f.resolution) {
    p["ulam"]["resolution"] = *f.resolution;
    p["escape"]["resolution"] = *f.resolution;
  }
  if (f.n_max) p["escape"]["n_max"] = *f.n_max;
  if (!f.methods.empty()) p["escape"]["methods"] = f.methods;
  if (f.samples) {
    if (stage == "billiard") {
      p["billiard"]["samples"] = *f.samples;
    } else if (stage == "pressure") {
      p["pressure"]["samples"] = *f.samples;
    } else if (stage == "balls") {
      p["balls"]["samples"] = *f.samples;
    } else {
      p["escape"]["samples"] = *f.samples;
    }
  }
  if (stage == "tower" || stage == "pressure" || stage == "balls" || stage == "billiard") p[stage]["enabled"] = true;
  return p;
}

std::string primary_file(const std::string& stage, const json& summary) {
  if (stage == "escape") {
    const auto& rec = summary["stages"]["escape"];
    return "escape_" + rec.value("primary", std::string("grid")) + ".csv";
  }
  if (stage == "ulam") return "spectral.json";
  if (stage == "tower") return "tower.json";
  if (stage == "pressure") return "pressure.csv";
  if (stage == "balls") return "balls.csv";
  if (stage == "billiard") return "billiard.csv";
  return "summary.json";
}

void print_summary(const json& s) {
  for (const auto& [name, m] : s["metrics"].items()) {
    std::cout << name << " = " << m["value"].dump();
    if (m["std_error"].is_number() && m["std_error"].get<double>() > 0.0) std::cout << " +- " << m["std_error"].dump();
    std::cout << '\n';
  }
  for (const auto& v : s["violations"]) std::cout << "violation: " << v.get<std::string>() << '\n';
  for (const auto& e : s["errors"]) std::cerr << "error: " << e.get<std::string>() << '\n';
  std::cout << "verdict: " << s["verdict"].get<std::string>() << '\n';
}

int run_stage(const std::string& stage, const CommonFlags& f) {
  const auto cfg = openrate::load_config(f.config, overrides(f, stage));
  std::string dir = f.out_dir;
  if (dir.empty()) {
    dir = f.out.empty() ? cfg.output : fs::path(f.out).parent_path().string();
    if (dir.empty()) dir = ".";
  }
  const auto sel = stage == "verify" ? openrate::StageSelection{} : openrate::StageSelection::only(stage);
  const auto result = openrate::run_pipeline(cfg, dir, sel);
  if (!f.out.empty()) {
    const fs::path src = fs::path(dir) / primary_file(stage, result.summary);
    if (fs::exists(src) && fs::absolute(src) != fs::absolute(f.out)) {
      fs::copy_file(src, f.out, fs::copy_options::overwrite_existing);
    }
  }
  print_summary(result.summary);
  return openrate::exit_code(result.verdict);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Escape rates, spectral data and pressure checks for open systems"};
  app.require_subcommand(1);

  CommonFlags flags;
  const std::vector<std::pair<std::string, std::string>> stages = {
      {"escape", "Escape rate by the configured methods"},
      {"ulam", "Ulam operator and its leading eigenpair"},
      {"tower", "Young tower eigenvalue, Gibbs measure, Gurevich and Abramov checks"},
      {"pressure", "Pressure of candidate measures against the escape rate"},
      {"balls", "Dynamical ball masses"},
      {"billiard", "Lorentz gas escape and property checks"},
      {"verify", "Full pipeline"},
  };
  for (const auto& [name, help] : stages) {
    auto* sub = app.add_subcommand(name, help);
    add_common(sub, flags);
    if (name != "verify") sub->add_option("--out,-o", flags.out, "Copy the stage's main output here");
  }

  std::vector<std::string> paths;
  std::string compare_out;
  std::optional<double> compare_tol;
  auto* cmp = app.add_subcommand("compare", "Diff rho, r and P across result bundles");
  cmp->add_option("paths", paths, "summary.json files or result directories")->required()->expected(2, -1);
  cmp->add_option("--out,-o", compare_out, "Write the table as CSV");
  cmp->add_option("--tol", compare_tol, "Exit 2 when the max discrepancy exceeds this");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (cmp->parsed()) {
      const auto t = openrate::compare_runs(paths);
      openrate::write_compare_csv(std::cout, t);
      if (!compare_out.empty()) {
        std::ofstream os(compare_out);
        openrate::write_compare_csv(os, t);
      }
      std::cout << "max_discrepancy = " << t.max_discrepancy << '\n';
      return compare_tol && t.max_discrepancy > *compare_tol ? 2 : 0;
    }
    for (const auto& [name, help] : stages) {
      if (app.got_subcommand(name)) return run_stage(name, flags);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
