#pragma once

#include "openrate/billiard.hpp"
#include "openrate/escape.hpp"
#include "openrate/hole.hpp"
#include "openrate/tower.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace openrate {

struct SystemConfig {
  std::string map = "doubling";
  int m = 2;
};

struct EscapeConfig {
  bool enabled = true;
  /// The first method is the primary estimate used by later stages.
  std::vector<EscapeMethod> methods{EscapeMethod::grid};
  int n_max = 60;
  FitWindow window;
  int resolution = 64;
  long long samples = 1'000'000;
};

struct UlamConfig {
  bool enabled = true;
  int resolution = 64;
  int subsamples = 8;
  double tol = 1e-12;
};

struct PressureConfig {
  bool enabled = false;
  std::size_t samples = 200'000;
  int max_period = 6;
  std::size_t max_orbits = 8;
  bool expect_equality = false;
  double exact_tolerance = 1e-4;
  /// Extra Bernoulli digit measures (m-adic models).
  std::vector<std::vector<double>> bernoulli;
};

struct TowerConfig {
  bool enabled = false;
  /// "golden_mean" or an explicit spec object.
  nlohmann::json spec = "golden_mean";
  int depth = 8;
  int n_max = 20;
  int draws = 1000;
};

struct BallsConfig {
  bool enabled = false;
  int centers = 100;
  double eps = 0.1;
  int n_max = 12;
  int fit_min = 4;
  long long samples = 4000;
};

struct BilliardConfig {
  bool enabled = false;
  nlohmann::json table = nlohmann::json::object();
  std::vector<nlohmann::json> holes;
  long long samples = 1'000'000;
  int n_max = 40;
  FitWindow window{10, 40};
};

/// A fully resolved experiment. Every key has a default; unknown keys are
/// rejected.
struct ExperimentConfig {
  SystemConfig system;
  HoleSpec hole;
  /// Holes for the rho sweep (escape primary method).
  std::vector<HoleSpec> sweep;
  EscapeConfig escape;
  UlamConfig ulam;
  PressureConfig pressure;
  TowerConfig tower;
  BallsConfig balls;
  BilliardConfig billiard;
  std::uint64_t seed = 1;
  /// Execution settings: not part of the resolved config or its hash.
  int workers = 1;
  std::string output = "results";
};

HoleSpec hole_from_json(const nlohmann::json& j, const std::string& where = "hole");
nlohmann::json to_json(const HoleSpec& h);

/// Validates and resolves a parsed config. Errors name the field path.
ExperimentConfig config_from_json(const nlohmann::json& j);

/// Resolved config (all defaults filled, execution settings omitted).
nlohmann::json to_json(const ExperimentConfig& c);

/// Parses JSON text; syntax errors report "<source>:<line>:<column>".
nlohmann::json parse_json_text(const std::string& text, const std::string& source);

/// Reads and parses a config file, then applies OR_SEED if set and finally
/// `overrides` (a JSON merge patch, e.g. from command-line flags).
ExperimentConfig load_config(const std::string& path, const nlohmann::json& overrides = nullptr);
nlohmann::json load_json_file(const std::string& path);

/// 64-bit FNV-1a of a string, as 16 hex digits.
std::string fnv1a_hex(const std::string& s);
std::string config_hash(const ExperimentConfig& c);

}  // namespace openrate
