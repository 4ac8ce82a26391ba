#include "oracles.hpp"
#include "openrate/pipeline.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace openrate;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("openrate_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json golden_config() {
  return json::parse(R"({
    "system": {"map": "doubling"},
    "hole": {"kind": "cylinders", "alphabet": 2, "level": 2, "words": ["11"]},
    "escape": {"methods": ["word_count", "grid"], "n_max": 60},
    "ulam": {"resolution": 64},
    "pressure": {"expect_equality": true, "samples": 50000, "max_period": 4},
    "tower": {"spec": "golden_mean"}
  })");
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(OR_VERIFY_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

}  // namespace

TEST_CASE("config defaults and round trip") {
  const auto c = config_from_json(json::object());
  CHECK(c.system.map == "doubling");
  CHECK(c.hole.empty());
  const auto g = config_from_json(golden_config());
  const auto again = config_from_json(to_json(g));
  CHECK(to_json(again) == to_json(g));
  CHECK(config_hash(again) == config_hash(g));
  CHECK(config_hash(g).size() == 16);
  auto other = golden_config();
  other["ulam"]["resolution"] = 32;
  CHECK(config_hash(config_from_json(other)) != config_hash(g));
  auto exec = golden_config();
  exec["workers"] = 4;
  CHECK(config_hash(config_from_json(exec)) == config_hash(g));
}

TEST_CASE("config errors name the field") {
  auto j = golden_config();
  j["hole"]["colour"] = "red";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("hole: unknown key 'colour'"), ConfigError);
  j = golden_config();
  j["escape"]["methods"] = {"magic"};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("escape.methods"), ConfigError);
  j = golden_config();
  j["sweep"] = {{{"kind", "disk"}, {"center", {0.1}}, {"radius", 0.1}}};
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("sweep[0].center"), ConfigError);
  j = golden_config();
  j["ulam"]["resolution"] = "big";
  CHECK_THROWS_WITH_AS(config_from_json(j), doctest::Contains("ulam.resolution"), ConfigError);
  j = golden_config();
  j["escape"]["window"] = {50, 90};
  CHECK_THROWS_AS(config_from_json(j), ConfigError);
  CHECK_THROWS_WITH_AS(parse_json_text("{\n  \"seed\": 1,\n  \"x\" 2\n}", "cfg.json"),
                       doctest::Contains("cfg.json:3:"), ConfigError);
}

TEST_CASE("hole JSON round trip") {
  for (const auto& h : {HoleSpec::none(), HoleSpec::cylinders(3, 2, {"11", "02"}),
                        HoleSpec::intervals({{0.1, 0.25}}), HoleSpec::disk({0.3, 0.4}, 0.05),
                        HoleSpec::strip(0.2, 0.3)}) {
    const auto back = hole_from_json(to_json(h));
    CHECK(back.describe() == h.describe());
    CHECK(to_json(back) == to_json(h));
  }
}

TEST_CASE("golden-mean pipeline") {
  const auto dir = scratch("golden");
  const auto r = run_pipeline(config_from_json(golden_config()), dir.string());
  CHECK(r.verdict == Verdict::pass);
  const auto m = summary_metrics(r.summary);
  CHECK(std::abs(m["rho"]["value"].get<double>() - oracle::kGoldenRho) < 1e-6);
  CHECK(std::abs(m["r"]["value"].get<double>() - oracle::kGoldenR) < 1e-9);
  CHECK(std::abs(m["P_nu_hat"]["value"].get<double>() - oracle::kGoldenRho) < 1e-6);
  CHECK(std::abs(m["tower_r"]["value"].get<double>() - oracle::kGoldenR) < 1e-12);
  CHECK(r.summary["schema"] == kSummarySchema);
  CHECK(r.summary["config"] == to_json(config_from_json(golden_config())));

  // Every output parses back.
  const json s = json::parse(slurp(dir / "summary.json"));
  CHECK(s == r.summary);
  std::ifstream esc(dir / "escape_word_count.csv");
  const auto masses = read_escape_csv(esc);
  CHECK(masses.size() == 61);
  CHECK(masses[10].second == doctest::Approx(oracle::cylinder_survivor_mass(2, {"11"}, 2, 10)).epsilon(1e-15));
  std::ifstream trip(dir / "ulam_triplets.txt");
  CHECK(read_triplets(trip).rows() == 64);
  const auto sp = spectral_from_json(json::parse(slurp(dir / "spectral.json")));
  CHECK(sp.eigenvalue == m["r"]["value"].get<double>());
  const auto reports = json::parse(slurp(dir / "pressure.json"));
  for (const auto& rep : reports) CHECK(to_json(pressure_report_from_json(rep)) == rep);
}

TEST_CASE("pipeline output is byte-identical across runs and worker counts") {
  auto cfg = config_from_json(golden_config());
  cfg.escape.methods.push_back(EscapeMethod::monte_carlo);
  cfg.escape.samples = 100'000;
  const auto a = scratch("det_a");
  const auto b = scratch("det_b");
  run_pipeline(cfg, a.string());
  cfg.workers = 3;
  run_pipeline(cfg, b.string());
  for (const auto& e : fs::directory_iterator(a)) {
    CHECK(slurp(e.path()) == slurp(b / e.path().filename()));
  }
}

TEST_CASE("nested cylinder sweep gives a monotone rho column") {
  json j = {{"system", {{"map", "doubling"}}}, {"ulam", {{"enabled", false}}}, {"escape", {{"enabled", false}}}};
  std::string w;
  for (int k = 1; k <= 6; ++k) {
    w += "1";
    j["sweep"].push_back({{"kind", "cylinders"}, {"alphabet", 2}, {"level", k}, {"words", {w}}});
  }
  const auto dir = scratch("sweep");
  const auto r = run_pipeline(config_from_json(j), dir.string());
  CHECK(r.verdict == Verdict::pass);
  CHECK(r.summary["stages"]["sweep"]["monotone"] == true);
  const auto rows = r.summary["stages"]["sweep"]["rows"];
  REQUIRE(rows.size() == 6);
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i]["rho"].get<double>() > rows[i - 1]["rho"].get<double>());
  std::ifstream in(dir / "sweep.csv");
  std::string line;
  std::getline(in, line);
  CHECK(line == "index,hole,rho,std_error,rho_lower,rho_upper");
  int count = 0;
  while (std::getline(in, line)) {
    const auto last_quote = line.rfind('"');
    std::stringstream rest(line.substr(last_quote + 2));
    std::string rho;
    std::getline(rest, rho, ',');
    CHECK(std::stod(rho) == rows[static_cast<std::size_t>(count)]["rho"].get<double>());
    ++count;
  }
  CHECK(count == 6);
}

TEST_CASE("failing stages are recorded and other stages still run") {
  auto j = golden_config();
  j["hole"] = {{"kind", "intervals"}, {"intervals", {{0.2, 0.3}}}};
  j["pressure"]["enabled"] = false;
  const auto dir = scratch("partial");
  const auto r = run_pipeline(config_from_json(j), dir.string());
  CHECK(r.verdict == Verdict::error);
  CHECK(r.summary["stages"]["escape"]["status"] == "error");
  CHECK(r.summary["stages"]["spectral"]["status"] == "ok");
  CHECK(r.summary["stages"]["tower"]["status"] == "ok");
  CHECK(fs::exists(dir / "summary.json"));
  CHECK(exit_code(r.verdict) == 1);
}

TEST_CASE("compare runs") {
  auto j = golden_config();
  j["pressure"]["enabled"] = false;
  j["tower"]["enabled"] = false;
  j["escape"]["methods"] = {"grid"};
  j["ulam"]["resolution"] = 16;
  j["escape"]["resolution"] = 16;
  const auto a = scratch("cmp16");
  run_pipeline(config_from_json(j), a.string());
  j["ulam"]["resolution"] = 64;
  j["escape"]["resolution"] = 64;
  const auto b = scratch("cmp64");
  run_pipeline(config_from_json(j), b.string());
  j["escape"]["methods"] = {"word_count"};
  const auto c = scratch("cmpw");
  run_pipeline(config_from_json(j), c.string());
  const auto t = compare_runs({a.string(), b.string()});
  bool saw_r = false;
  for (const auto& row : t.rows) {
    if (row.metric == "r") {
      saw_r = true;
      CHECK(row.max_delta < 1e-12);
    }
  }
  CHECK(saw_r);
  const auto gw = compare_runs({b.string(), c.string()});
  for (const auto& row : gw.rows)
    if (row.metric == "rho") CHECK(row.max_delta < 1e-6);

  j["escape"]["methods"] = {"monte_carlo"};
  j["escape"]["samples"] = 200'000;
  j["ulam"]["enabled"] = false;
  j["seed"] = 1;
  const auto m1 = scratch("mc1");
  run_pipeline(config_from_json(j), m1.string());
  j["seed"] = 2;
  const auto m2 = scratch("mc2");
  run_pipeline(config_from_json(j), m2.string());
  const auto mc = compare_runs({(m1 / "summary.json").string(), m2.string()});
  bool saw_rho = false;
  for (const auto& row : mc.rows) {
    if (row.metric != "rho") continue;
    saw_rho = true;
    CHECK(row.sigma > 0.0);
    CHECK(row.max_delta < 3.0 * row.sigma);
  }
  CHECK(saw_rho);

  const auto bad = scratch("schema");
  std::ofstream(bad / "summary.json") << R"({"schema": "other/2", "metrics": {}})";
  CHECK_THROWS_WITH_AS(compare_runs({a.string(), bad.string()}), doctest::Contains("schema mismatch"), ConfigError);
  CHECK_THROWS_AS(compare_runs({a.string()}), ConfigError);
  std::stringstream csv;
  write_compare_csv(csv, t);
  std::string header;
  std::getline(csv, header);
  CHECK(header == "metric,max_delta,sigma,value_0,value_1");
}

TEST_CASE("command line exit codes") {
  const auto dir = scratch("exe");
  const auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << golden_config().dump(2);
  CHECK(run_cli("verify --config " + cfg.string() + " --out-dir " + (dir / "out").string()) == 0);
  CHECK(fs::exists(dir / "out" / "summary.json"));
  CHECK(run_cli("escape --config " + cfg.string() + " --out " + (dir / "esc.csv").string()) == 0);
  CHECK(fs::exists(dir / "esc.csv"));
  const auto bad = dir / "bad.json";
  std::ofstream(bad) << "{\n  \"system\": {\"map\": \"doubling\"\n";
  CHECK(run_cli("verify --config " + bad.string() + " --out-dir " + (dir / "bad").string()) == 1);
  const auto unknown = dir / "unknown.json";
  std::ofstream(unknown) << R"({"escape": {"n_max": 60, "colour": 1}})";
  CHECK(run_cli("verify --config " + unknown.string()) == 1);
  CHECK(run_cli("compare " + (dir / "out").string() + " " + (dir / "out").string()) == 0);
  CHECK(run_cli("nonsense") == 1);
}

TEST_CASE("OR_SEED overrides the config seed") {
  const auto dir = scratch("seed");
  const auto cfg = dir / "cfg.json";
  std::ofstream(cfg) << R"({"seed": 5})";
  CHECK(load_config(cfg.string()).seed == 5);
  setenv("OR_SEED", "77", 1);
  CHECK(load_config(cfg.string()).seed == 77);
  CHECK(load_config(cfg.string(), json{{"seed", 9}}).seed == 9);
  unsetenv("OR_SEED");
}
