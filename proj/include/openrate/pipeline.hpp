#pragma once

#include "openrate/config.hpp"
#include "openrate/pressure.hpp"
#include "openrate/ulam.hpp"

#include <json.hpp>

#include <string>
#include <vector>

namespace openrate {

constexpr const char* kSummarySchema = "openrate.summary/1";

enum class Verdict { pass, violated, error };
std::string to_string(Verdict v);

/// Exit status for a verdict: 0 pass, 2 violated, 1 error.
int exit_code(Verdict v);

/// Which stages run_pipeline executes (each also needs its config section
/// enabled).
struct StageSelection {
  bool spectral = true;
  bool escape = true;
  bool sweep = true;
  bool pressure = true;
  bool tower = true;
  bool balls = true;
  bool billiard = true;

  static StageSelection only(const std::string& stage);
};

struct PipelineResult {
  /// The summary.json document.
  nlohmann::json summary;
  Verdict verdict = Verdict::pass;
  /// Files written, relative to the output directory.
  std::vector<std::string> files;
};

/// Candidates for the pressure stage: the survivor-set measure from the
/// Ulam data (when given), surviving periodic orbits and Bernoulli digit
/// measures listed in the config.
std::vector<InvariantMeasureRep> build_candidates(const OpenSystem& sys, const ExperimentConfig& cfg,
                                                  const UlamOperator* op, const SpectralData* spectral,
                                                  const SurvivorMeasure* nu);

/// Runs the selected stages in order (spectral, escape, sweep, pressure,
/// tower, balls, billiard) and writes summary.json plus per-stage CSV/JSON
/// into `out_dir`. A failing stage records its error and later stages that
/// do not depend on it still run.
PipelineResult run_pipeline(const ExperimentConfig& cfg, const std::string& out_dir,
                            const StageSelection& stages = {});

/// Flat metric map of a summary (r, rho, rho.<method>, P_nu_hat, ...).
nlohmann::json summary_metrics(const nlohmann::json& summary);

struct CompareRow {
  std::string metric;
  std::vector<double> values;
  /// Combined standard error of the extreme pair (0 for exact routes).
  double sigma = 0.0;
  double max_delta = 0.0;
};

struct CompareTable {
  std::vector<std::string> runs;
  std::vector<CompareRow> rows;
  double max_discrepancy = 0.0;
};

/// Aligns the metrics common to every bundle. Each path is a summary.json
/// or a directory containing one. Throws ConfigError on a schema mismatch
/// or fewer than two bundles.
CompareTable compare_runs(const std::vector<std::string>& paths);

/// CSV: metric, max_delta, sigma, value_0, value_1, ...
void write_compare_csv(std::ostream& os, const CompareTable& t);

}  // namespace openrate
