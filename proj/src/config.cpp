#include "openrate/config.hpp"

#include "openrate/json_util.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace openrate {

using nlohmann::json;

namespace {

Point point_field(const json& j, const char* key, const std::string& where) {
  auto v = require_field<std::vector<double>>(j, key, where);
  if (v.size() != 2) throw ConfigError(where + "." + key + ": expected [x, y]");
  return {v[0], v[1]};
}

FitWindow window_field(const json& j, const char* key, FitWindow fallback, const std::string& where) {
  if (!j.contains(key)) return fallback;
  auto v = require_field<std::vector<int>>(j, key, where);
  if (v.size() != 2 || v[0] < 0 || (v[1] != 0 && v[1] <= v[0])) {
    throw ConfigError(where + "." + key + ": expected [n_min, n_max] with n_min < n_max");
  }
  return {v[0], v[1]};
}

json window_json(const FitWindow& w) { return json::array({w.n_min, w.n_max}); }

void require_positive(double v, const std::string& field) {
  if (!(v > 0.0)) throw ConfigError(field + ": must be positive");
}

}  // namespace

HoleSpec hole_from_json(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  const auto kind = require_field<std::string>(j, "kind", where);
  try {
    if (kind == "none") {
      require_known_keys(j, {"kind"}, where);
      return HoleSpec::none();
    }
    if (kind == "cylinders") {
      require_known_keys(j, {"kind", "alphabet", "level", "words"}, where);
      return HoleSpec::cylinders(require_field<int>(j, "alphabet", where), require_field<int>(j, "level", where),
                                 require_field<std::vector<std::string>>(j, "words", where));
    }
    if (kind == "intervals") {
      require_known_keys(j, {"kind", "intervals"}, where);
      auto raw = require_field<std::vector<std::vector<double>>>(j, "intervals", where);
      std::vector<OpenInterval> ivs;
      for (const auto& iv : raw) {
        if (iv.size() != 2) throw ConfigError(where + ".intervals: expected [lo, hi] pairs");
        ivs.push_back({iv[0], iv[1]});
      }
      return HoleSpec::intervals(std::move(ivs));
    }
    if (kind == "disk") {
      require_known_keys(j, {"kind", "center", "radius"}, where);
      return HoleSpec::disk(point_field(j, "center", where), require_field<double>(j, "radius", where));
    }
    if (kind == "strip") {
      require_known_keys(j, {"kind", "lo", "hi"}, where);
      return HoleSpec::strip(require_field<double>(j, "lo", where), require_field<double>(j, "hi", where));
    }
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    if (msg.rfind(where, 0) == 0) throw;
    throw ConfigError(where + ": " + msg);
  }
  throw ConfigError(where + ".kind: unknown hole kind '" + kind + "'");
}

json to_json(const HoleSpec& h) {
  switch (h.kind()) {
    case HoleKind::none:
      return {{"kind", "none"}};
    case HoleKind::cylinder_union:
      return {{"kind", "cylinders"}, {"alphabet", h.alphabet()}, {"level", h.level()}, {"words", h.word_strings()}};
    case HoleKind::interval_union: {
      json ivs = json::array();
      for (const auto& iv : h.interval_list()) ivs.push_back({iv.lo, iv.hi});
      return {{"kind", "intervals"}, {"intervals", ivs}};
    }
    case HoleKind::region_2d:
      if (h.is_strip()) {
        return {{"kind", "strip"}, {"lo", h.interval_list()[0].lo}, {"hi", h.interval_list()[0].hi}};
      }
      return {{"kind", "disk"}, {"center", {h.center().x, h.center().y}}, {"radius", h.radius()}};
  }
  return {{"kind", "none"}};
}

ExperimentConfig config_from_json(const json& j) {
  require_known_keys(j,
                     {"system", "hole", "sweep", "escape", "ulam", "pressure", "tower", "balls", "billiard", "seed",
                      "workers", "output"},
                     "config");
  ExperimentConfig c;

  if (j.contains("system")) {
    const json& s = j["system"];
    require_known_keys(s, {"map", "m"}, "system");
    c.system.map = optional_field<std::string>(s, "map", c.system.map, "system");
    c.system.m = optional_field<int>(s, "m", c.system.m, "system");
    try {
      make_model(c.system.map, c.system.m);
    } catch (const Error& e) {
      throw ConfigError(std::string("system.map: ") + e.what());
    }
    if (c.system.map == "madic" && c.system.m < 2) throw ConfigError("system.m: must be >= 2");
  }

  if (j.contains("hole")) c.hole = hole_from_json(j["hole"], "hole");
  if (j.contains("sweep")) {
    if (!j["sweep"].is_array()) throw ConfigError("sweep: expected an array of holes");
    for (std::size_t i = 0; i < j["sweep"].size(); ++i) {
      c.sweep.push_back(hole_from_json(j["sweep"][i], "sweep[" + std::to_string(i) + "]"));
    }
  }

  if (j.contains("escape")) {
    const json& e = j["escape"];
    require_known_keys(e, {"enabled", "methods", "n_max", "window", "resolution", "samples"}, "escape");
    c.escape.enabled = optional_field<bool>(e, "enabled", true, "escape");
    if (e.contains("methods")) {
      auto names = require_field<std::vector<std::string>>(e, "methods", "escape");
      if (names.empty()) throw ConfigError("escape.methods: empty");
      c.escape.methods.clear();
      for (const auto& n : names) {
        try {
          c.escape.methods.push_back(escape_method_from_string(n));
        } catch (const Error&) {
          throw ConfigError("escape.methods: unknown method '" + n + "'");
        }
      }
    }
    c.escape.n_max = optional_field<int>(e, "n_max", c.escape.n_max, "escape");
    c.escape.window = window_field(e, "window", c.escape.window, "escape");
    c.escape.resolution = optional_field<int>(e, "resolution", c.escape.resolution, "escape");
    c.escape.samples = optional_field<long long>(e, "samples", c.escape.samples, "escape");
    if (c.escape.n_max < 2) throw ConfigError("escape.n_max: must be >= 2");
    if (c.escape.window.n_max > c.escape.n_max) throw ConfigError("escape.window: exceeds escape.n_max");
    require_positive(c.escape.resolution, "escape.resolution");
    require_positive(static_cast<double>(c.escape.samples), "escape.samples");
  }

  if (j.contains("ulam")) {
    const json& u = j["ulam"];
    require_known_keys(u, {"enabled", "resolution", "subsamples", "tol"}, "ulam");
    c.ulam.enabled = optional_field<bool>(u, "enabled", true, "ulam");
    c.ulam.resolution = optional_field<int>(u, "resolution", c.ulam.resolution, "ulam");
    c.ulam.subsamples = optional_field<int>(u, "subsamples", c.ulam.subsamples, "ulam");
    c.ulam.tol = optional_field<double>(u, "tol", c.ulam.tol, "ulam");
    require_positive(c.ulam.resolution, "ulam.resolution");
    require_positive(c.ulam.subsamples, "ulam.subsamples");
    require_positive(c.ulam.tol, "ulam.tol");
  }

  if (j.contains("pressure")) {
    const json& p = j["pressure"];
    require_known_keys(
        p, {"enabled", "samples", "max_period", "max_orbits", "expect_equality", "exact_tolerance", "bernoulli"},
        "pressure");
    c.pressure.enabled = optional_field<bool>(p, "enabled", true, "pressure");
    c.pressure.samples = optional_field<std::size_t>(p, "samples", c.pressure.samples, "pressure");
    c.pressure.max_period = optional_field<int>(p, "max_period", c.pressure.max_period, "pressure");
    c.pressure.max_orbits = optional_field<std::size_t>(p, "max_orbits", c.pressure.max_orbits, "pressure");
    c.pressure.expect_equality = optional_field<bool>(p, "expect_equality", false, "pressure");
    c.pressure.exact_tolerance = optional_field<double>(p, "exact_tolerance", c.pressure.exact_tolerance, "pressure");
    c.pressure.bernoulli = optional_field<std::vector<std::vector<double>>>(p, "bernoulli", {}, "pressure");
    if (c.pressure.samples < 1000) throw ConfigError("pressure.samples: must be >= 1000");
  }

  if (j.contains("tower")) {
    const json& t = j["tower"];
    require_known_keys(t, {"enabled", "spec", "depth", "n_max", "draws"}, "tower");
    c.tower.enabled = optional_field<bool>(t, "enabled", true, "tower");
    if (t.contains("spec")) c.tower.spec = t["spec"];
    c.tower.depth = optional_field<int>(t, "depth", c.tower.depth, "tower");
    c.tower.n_max = optional_field<int>(t, "n_max", c.tower.n_max, "tower");
    c.tower.draws = optional_field<int>(t, "draws", c.tower.draws, "tower");
    if (c.tower.spec.is_string()) {
      if (c.tower.spec.get<std::string>() != "golden_mean") throw ConfigError("tower.spec: unknown named tower");
    } else {
      try {
        tower_from_json(c.tower.spec);
      } catch (const Error& e) {
        throw ConfigError(std::string("tower.spec: ") + e.what());
      } catch (const json::exception& e) {
        throw ConfigError(std::string("tower.spec: ") + e.what());
      }
    }
    require_positive(c.tower.depth, "tower.depth");
    require_positive(c.tower.n_max, "tower.n_max");
  }

  if (j.contains("balls")) {
    const json& b = j["balls"];
    require_known_keys(b, {"enabled", "centers", "eps", "n_max", "fit_min", "samples"}, "balls");
    c.balls.enabled = optional_field<bool>(b, "enabled", true, "balls");
    c.balls.centers = optional_field<int>(b, "centers", c.balls.centers, "balls");
    c.balls.eps = optional_field<double>(b, "eps", c.balls.eps, "balls");
    c.balls.n_max = optional_field<int>(b, "n_max", c.balls.n_max, "balls");
    c.balls.fit_min = optional_field<int>(b, "fit_min", c.balls.fit_min, "balls");
    c.balls.samples = optional_field<long long>(b, "samples", c.balls.samples, "balls");
    require_positive(c.balls.centers, "balls.centers");
    require_positive(c.balls.eps, "balls.eps");
    if (c.balls.fit_min < 1 || c.balls.fit_min >= c.balls.n_max) {
      throw ConfigError("balls.fit_min: must satisfy 1 <= fit_min < n_max");
    }
  }

  if (j.contains("billiard")) {
    const json& b = j["billiard"];
    require_known_keys(b, {"enabled", "table", "holes", "samples", "n_max", "window"}, "billiard");
    c.billiard.enabled = optional_field<bool>(b, "enabled", true, "billiard");
    if (b.contains("table")) c.billiard.table = b["table"];
    if (b.contains("holes")) {
      if (!b["holes"].is_array()) throw ConfigError("billiard.holes: expected an array");
      for (const auto& h : b["holes"]) c.billiard.holes.push_back(h);
    }
    c.billiard.samples = optional_field<long long>(b, "samples", c.billiard.samples, "billiard");
    c.billiard.n_max = optional_field<int>(b, "n_max", c.billiard.n_max, "billiard");
    c.billiard.window = window_field(b, "window", c.billiard.window, "billiard");
    if (c.billiard.window.n_max > c.billiard.n_max) throw ConfigError("billiard.window: exceeds billiard.n_max");
    require_positive(static_cast<double>(c.billiard.samples), "billiard.samples");
  }

  c.seed = optional_field<std::uint64_t>(j, "seed", c.seed, "config");
  c.workers = optional_field<int>(j, "workers", c.workers, "config");
  c.output = optional_field<std::string>(j, "output", c.output, "config");
  if (c.workers < 1) throw ConfigError("workers: must be >= 1");
  return c;
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["system"] = {{"map", c.system.map}, {"m", c.system.m}};
  j["hole"] = to_json(c.hole);
  j["sweep"] = json::array();
  for (const auto& h : c.sweep) j["sweep"].push_back(to_json(h));
  json methods = json::array();
  for (auto m : c.escape.methods) methods.push_back(to_string(m));
  j["escape"] = {{"enabled", c.escape.enabled}, {"methods", methods},       {"n_max", c.escape.n_max},
                 {"window", window_json(c.escape.window)}, {"resolution", c.escape.resolution},
                 {"samples", c.escape.samples}};
  j["ulam"] = {{"enabled", c.ulam.enabled},
               {"resolution", c.ulam.resolution},
               {"subsamples", c.ulam.subsamples},
               {"tol", c.ulam.tol}};
  j["pressure"] = {{"enabled", c.pressure.enabled},
                   {"samples", c.pressure.samples},
                   {"max_period", c.pressure.max_period},
                   {"max_orbits", c.pressure.max_orbits},
                   {"expect_equality", c.pressure.expect_equality},
                   {"exact_tolerance", c.pressure.exact_tolerance},
                   {"bernoulli", c.pressure.bernoulli}};
  j["tower"] = {{"enabled", c.tower.enabled},
                {"spec", c.tower.spec},
                {"depth", c.tower.depth},
                {"n_max", c.tower.n_max},
                {"draws", c.tower.draws}};
  j["balls"] = {{"enabled", c.balls.enabled}, {"centers", c.balls.centers}, {"eps", c.balls.eps},
                {"n_max", c.balls.n_max},     {"fit_min", c.balls.fit_min}, {"samples", c.balls.samples}};
  j["billiard"] = {{"enabled", c.billiard.enabled}, {"table", c.billiard.table},
                   {"holes", c.billiard.holes},     {"samples", c.billiard.samples},
                   {"n_max", c.billiard.n_max},     {"window", window_json(c.billiard.window)}};
  j["seed"] = c.seed;
  return j;
}

json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // Byte offset -> line and column of the offending character.
    const std::size_t pos = e.byte == 0 ? 0 : std::min<std::size_t>(e.byte - 1, text.size());
    std::size_t line = 1;
    std::size_t col = 1;
    for (std::size_t i = 0; i < pos; ++i) {
      if (text[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": " + e.what());
  }
}

json load_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_json_text(ss.str(), path);
}

ExperimentConfig load_config(const std::string& path, const json& overrides) {
  json j = load_json_file(path);
  if (!j.is_object()) throw ConfigError(path + ": expected a JSON object");
  if (const char* env = std::getenv("OR_SEED")) {
    try {
      j["seed"] = std::stoull(env);
    } catch (const std::exception&) {
      throw ConfigError(std::string("OR_SEED: not an unsigned integer: ") + env);
    }
  }
  if (!overrides.is_null()) j.merge_patch(overrides);
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

std::string fnv1a_hex(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

std::string config_hash(const ExperimentConfig& c) { return fnv1a_hex(to_json(c).dump()); }

}  // namespace openrate
