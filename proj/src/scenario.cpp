#include <cmath>
#include <fstream>
#include <initializer_list>
#include <set>

#include "gradloc/errors.hpp"
#include "gradloc/harness.hpp"

namespace gradloc {

using nlohmann::json;

namespace {

constexpr double kDeg = M_PI / 180.0;

// Every section is closed: a misspelt key is an error, not a silent default.
void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
  if (!j.is_object()) throw ConfigError(std::string(section) + ": expected an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, value] : j.items()) {
    if (!ok.count(key)) throw ConfigError(std::string(section) + ": unknown key '" + key + "'");
  }
}

double number(const json& j, const char* section, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string(section) + "." + key + " is missing");
  const json& v = j.at(key);
  if (!v.is_number()) throw ConfigError(std::string(section) + "." + key + " must be a number");
  return v.get<double>();
}

std::optional<double> optional_number(const json& j, const char* section, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return number(j, section, key);
}

bool boolean(const json& j, const char* section, const char* key) {
  if (!j.contains(key) || !j.at(key).is_boolean()) {
    throw ConfigError(std::string(section) + "." + key + " must be a boolean");
  }
  return j.at(key).get<bool>();
}

std::uint64_t unsigned_int(const json& j, const char* section, const char* key) {
  if (!j.contains(key)) throw ConfigError(std::string(section) + "." + key + " is missing");
  const json& v = j.at(key);
  if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0)) {
    throw ConfigError(std::string(section) + "." + key + " must be a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

Vec2 vec2(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number()) {
    throw ConfigError(what + " must be [x, y]");
  }
  return {v[0].get<double>(), v[1].get<double>()};
}

json vec2_json(Vec2 v) { return json::array({v.x, v.y}); }

Rect rect(const json& v, const std::string& what) {
  if (!v.is_array() || v.size() != 4) throw ConfigError(what + " must be [x0, y0, x1, y1]");
  for (const auto& e : v) {
    if (!e.is_number()) throw ConfigError(what + " must be [x0, y0, x1, y1]");
  }
  return {{v[0].get<double>(), v[1].get<double>()}, {v[2].get<double>(), v[3].get<double>()}};
}

json rect_json(const Rect& r) { return json::array({r.min.x, r.min.y, r.max.x, r.max.y}); }

std::string method_name(MatchMethod m) {
  switch (m) {
    case MatchMethod::direct: return "direct";
    case MatchMethod::fft: return "fft";
    default: return "automatic";
  }
}

MatchMethod method_from(const std::string& s) {
  if (s == "automatic") return MatchMethod::automatic;
  if (s == "direct") return MatchMethod::direct;
  if (s == "fft") return MatchMethod::fft;
  throw ConfigError("filter.method must be automatic, direct or fft");
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

std::vector<TerrainRegion> whole(const Rect& extent, Terrain t, double density) {
  return {TerrainRegion{extent, t, density}};
}

Waypoint wp(double x, double y) { return Waypoint{{x, y}, kDefaultWaypointUncertainty, false}; }

// Out along a corridor through two waypoints, then straight back home. The
// long return leg is where heading and scale drift accumulate.
void corridor_course(ScenarioConfig& c, double length) {
  c.world.extent = {{0.0, 0.0}, {length + 120.0, 200.0}};
  c.mission.home = {60.0, 100.0};
  c.mission.waypoints = {wp(60.0 + 0.5 * length, 70.0), wp(60.0 + length, 130.0)};
}

ScenarioConfig urban_1km() {
  ScenarioConfig c;
  c.name = "urban_1km";
  corridor_course(c, 520.0);
  c.world.regions = whole(c.world.extent, Terrain::urban, 10.0);
  c.errors.odometry_scale_error = 0.06;
  c.errors.odometry_noise = 0.3;
  c.errors.compass_bias_amplitude = 6.0 * kDeg;
  c.errors.compass_bias_rate = 0.05 * kDeg;
  c.errors.compass_noise = 0.5 * kDeg;
  c.sensor.extent = 60.0;
  c.sensor.noise_stddev = 0.2;
  c.sensor.dropout = 0.05;
  c.filter.params.odometry_cov = Covariance2::isotropic(1.5);
  c.flag_offset = 5.0;
  return c;
}

}  // namespace

std::string to_string(LocalizerMode m) {
  switch (m) {
    case LocalizerMode::particle_filter: return "particle_filter";
    case LocalizerMode::oracle: return "oracle";
    case LocalizerMode::odometry: return "odometry";
  }
  throw InvalidInput("unknown localizer mode");
}

LocalizerMode localizer_from_string(const std::string& s) {
  if (s == "particle_filter") return LocalizerMode::particle_filter;
  if (s == "oracle") return LocalizerMode::oracle;
  if (s == "odometry") return LocalizerMode::odometry;
  throw ConfigError("localizer must be particle_filter, oracle or odometry");
}

std::vector<std::string> preset_names() {
  return {"urban_1km", "forest_1_4km", "openfield", "recovery_32m"};
}

ScenarioConfig preset(const std::string& name) {
  if (name == "urban_1km") return urban_1km();
  if (name == "forest_1_4km") {
    ScenarioConfig c = urban_1km();
    c.name = name;
    corridor_course(c, 720.0);
    c.world.regions = whole(c.world.extent, Terrain::forest, 25.0);
    return c;
  }
  if (name == "openfield") {
    ScenarioConfig c = urban_1km();
    c.name = name;
    c.world.regions = whole(c.world.extent, Terrain::open_field, 0.0);
    return c;
  }
  if (name == "recovery_32m") {
    // Filter and odometry origin both placed 32 m from the true take-off.
    ScenarioConfig c = urban_1km();
    c.name = name;
    c.filter.init_offset = {32.0 / std::sqrt(2.0), 32.0 / std::sqrt(2.0)};
    c.filter.init_stddev = 20.0;
    return c;
  }
  throw ConfigError("unknown preset: " + name);
}

void ScenarioConfig::validate() const {
  try {
    if (!(world.extent.width() > 0.0 && world.extent.height() > 0.0)) {
      throw ConfigError("world.extent must have positive area");
    }
    if (!(world.truth_resolution > 0.0)) throw ConfigError("world.truth_resolution must be > 0");
    for (const auto& r : world.regions) {
      if (!(r.density >= 0.0) || !std::isfinite(r.density)) {
        throw ConfigError("world.regions density must be >= 0");
      }
    }
    errors.validate();
    sensor.validate();
    mission_params.validate();
    if (filter.params.particle_count == 0) throw ConfigError("filter.particles must be > 0");
    if (filter.params.clusters < 1 ||
        static_cast<std::size_t>(filter.params.clusters) > filter.params.particle_count) {
      throw ConfigError("filter.clusters must be in [1, particles]");
    }
    if (!(filter.params.resample_distance > 0.0)) throw ConfigError("filter.resample_distance must be > 0");
    if (!filter.params.odometry_cov.is_psd()) throw ConfigError("filter.odometry_cov must be PSD");
    if (!(filter.init_stddev >= 0.0)) throw ConfigError("filter.init_stddev must be >= 0");
    if (!(filter.edge_threshold > 0.0)) throw ConfigError("filter.edge_threshold must be > 0");
    if (!(filter.blur_sigma >= 0.0)) throw ConfigError("filter.blur_sigma must be >= 0");
    if (!(rates.dt > 0.0) || !std::isfinite(rates.dt)) throw ConfigError("rates.dt must be > 0");
    if (!(rates.localization_distance > 0.0)) throw ConfigError("rates.localization_distance must be > 0");
    if (!(failures.battery_budget > 0.0)) throw ConfigError("failures.battery_budget must be > 0");
    if (!(max_speed > 0.0)) throw ConfigError("max_speed must be > 0");
    if (!(flag_offset >= 0.0)) throw ConfigError("flag_offset must be >= 0");
    if (!mission.flags.empty() && mission.flags.size() != mission.waypoints.size()) {
      throw ConfigError("mission flags must be given for every waypoint or none");
    }
    for (const auto& w : mission.waypoints) {
      if (!(w.uncertainty > 0.0)) throw ConfigError("waypoint uncertainty must be > 0");
    }
  } catch (const InvalidInput& e) {
    throw ConfigError(e.what());
  }
}

json to_json(const ScenarioConfig& c) {
  json regions = json::array();
  for (const auto& r : c.world.regions) {
    regions.push_back({{"area", rect_json(r.area)},
                       {"terrain", to_string(r.terrain)},
                       {"density", r.density}});
  }
  json waypoints = json::array();
  for (std::size_t i = 0; i < c.mission.waypoints.size(); ++i) {
    const auto& w = c.mission.waypoints[i];
    json e = {{"x", w.expected.x}, {"y", w.expected.y}, {"uncertainty", w.uncertainty}};
    if (!c.mission.flags.empty()) e["flag"] = vec2_json(c.mission.flags[i]);
    waypoints.push_back(e);
  }
  const auto& m = c.mission_params;
  const auto& cov = c.filter.params.odometry_cov;
  return {
      {"name", c.name},
      {"seed", c.seed},
      {"world_seed", c.world_seed ? json(*c.world_seed) : json(nullptr)},
      {"world",
       {{"extent", rect_json(c.world.extent)},
        {"truth_resolution", c.world.truth_resolution},
        {"regions", regions}}},
      {"errors",
       {{"odometry_scale_error", c.errors.odometry_scale_error},
        {"odometry_noise", c.errors.odometry_noise},
        {"compass_bias_amplitude_deg", c.errors.compass_bias_amplitude / kDeg},
        {"compass_bias_rate_deg_s", c.errors.compass_bias_rate / kDeg},
        {"compass_noise_deg", c.errors.compass_noise / kDeg},
        {"compass_bias_phase_deg",
         c.errors.compass_bias_phase < 0.0 ? json(nullptr) : json(c.errors.compass_bias_phase / kDeg)}}},
      {"sensor",
       {{"extent", c.sensor.extent},
        {"resolution", c.sensor.resolution},
        {"noise_stddev", c.sensor.noise_stddev},
        {"dropout", c.sensor.dropout},
        {"range", c.sensor.range},
        {"altitude", c.sensor.altitude},
        {"occlusion", c.sensor.occlusion},
        {"allow_any_extent", c.sensor.allow_any_extent}}},
      {"filter",
       {{"particles", c.filter.params.particle_count},
        {"resample_distance", c.filter.params.resample_distance},
        {"clusters", c.filter.params.clusters},
        {"odometry_cov", json::array({cov.xx, cov.xy, cov.yy})},
        {"init_stddev", c.filter.init_stddev},
        {"init_offset", vec2_json(c.filter.init_offset)},
        {"edge_threshold", c.filter.edge_threshold},
        {"blur_sigma", c.filter.blur_sigma},
        {"method", method_name(c.filter.method)}}},
      {"mission",
       {{"home", vec2_json(c.mission.home)},
        {"waypoints", waypoints},
        {"trigger_radius", m.trigger_radius},
        {"detector_range", m.detector_range},
        {"detection_dwell", m.detection_dwell},
        {"false_negative", m.false_negative},
        {"search_size", m.search_size},
        {"search_spacing", m.search_spacing},
        {"search_timeout", m.search_timeout},
        {"goal_tolerance", m.goal_tolerance},
        {"virtual_step", m.virtual_step},
        {"takeoff_time", m.takeoff_time},
        {"start_delay", m.start_delay}}},
      {"rates", {{"dt", c.rates.dt}, {"localization_distance", c.rates.localization_distance}}},
      {"failures",
       {{"battery_budget", c.failures.battery_budget},
        {"compute_restart", optional_json(c.failures.compute_restart)},
        {"software_issue", optional_json(c.failures.software_issue)},
        {"return_home", optional_json(c.failures.return_home)}}},
      {"localizer", to_string(c.localizer)},
      {"max_speed", c.max_speed},
      {"flag_offset", c.flag_offset},
  };
}

namespace {

ScenarioConfig parse_resolved(const json& j) {
  check_keys(j, "config",
             {"name", "seed", "world_seed", "world", "errors", "sensor", "filter", "mission",
              "rates", "failures", "localizer", "max_speed", "flag_offset"});
  ScenarioConfig c;
  if (!j.at("name").is_string()) throw ConfigError("name must be a string");
  c.name = j.at("name").get<std::string>();
  c.seed = unsigned_int(j, "config", "seed");
  if (j.contains("world_seed") && !j.at("world_seed").is_null()) c.world_seed = unsigned_int(j, "config", "world_seed");

  const json& w = j.at("world");
  check_keys(w, "world", {"extent", "truth_resolution", "regions"});
  c.world.extent = rect(w.at("extent"), "world.extent");
  c.world.truth_resolution = number(w, "world", "truth_resolution");
  if (!w.at("regions").is_array()) throw ConfigError("world.regions must be an array");
  for (const auto& r : w.at("regions")) {
    check_keys(r, "world.regions[]", {"area", "terrain", "density"});
    TerrainRegion reg;
    reg.area = rect(r.at("area"), "world.regions[].area");
    try {
      reg.terrain = terrain_from_string(r.at("terrain").get<std::string>());
    } catch (const std::exception& e) {
      throw ConfigError(std::string("world.regions[].terrain: ") + e.what());
    }
    reg.density = number(r, "world.regions[]", "density");
    c.world.regions.push_back(reg);
  }

  const json& e = j.at("errors");
  check_keys(e, "errors",
             {"odometry_scale_error", "odometry_noise", "compass_bias_amplitude_deg",
              "compass_bias_rate_deg_s", "compass_noise_deg", "compass_bias_phase_deg"});
  c.errors.odometry_scale_error = number(e, "errors", "odometry_scale_error");
  c.errors.odometry_noise = number(e, "errors", "odometry_noise");
  c.errors.compass_bias_amplitude = number(e, "errors", "compass_bias_amplitude_deg") * kDeg;
  c.errors.compass_bias_rate = number(e, "errors", "compass_bias_rate_deg_s") * kDeg;
  c.errors.compass_noise = number(e, "errors", "compass_noise_deg") * kDeg;
  if (auto p = optional_number(e, "errors", "compass_bias_phase_deg")) {
    c.errors.compass_bias_phase = *p * kDeg;
  }

  const json& s = j.at("sensor");
  check_keys(s, "sensor",
             {"extent", "resolution", "noise_stddev", "dropout", "range", "altitude", "occlusion",
              "allow_any_extent"});
  c.sensor.extent = number(s, "sensor", "extent");
  c.sensor.resolution = number(s, "sensor", "resolution");
  c.sensor.noise_stddev = number(s, "sensor", "noise_stddev");
  c.sensor.dropout = number(s, "sensor", "dropout");
  c.sensor.range = number(s, "sensor", "range");
  c.sensor.altitude = number(s, "sensor", "altitude");
  c.sensor.occlusion = boolean(s, "sensor", "occlusion");
  c.sensor.allow_any_extent = boolean(s, "sensor", "allow_any_extent");

  const json& f = j.at("filter");
  check_keys(f, "filter",
             {"particles", "resample_distance", "clusters", "odometry_cov", "odometry_stddev",
              "init_stddev", "init_offset", "edge_threshold", "blur_sigma", "method"});
  c.filter.params.particle_count = unsigned_int(f, "filter", "particles");
  c.filter.params.resample_distance = number(f, "filter", "resample_distance");
  c.filter.params.clusters = static_cast<int>(unsigned_int(f, "filter", "clusters"));
  {
    const json& cv = f.at("odometry_cov");
    if (!cv.is_array() || cv.size() != 3 || !cv[0].is_number() || !cv[1].is_number() ||
        !cv[2].is_number()) {
      throw ConfigError("filter.odometry_cov must be [xx, xy, yy]");
    }
    c.filter.params.odometry_cov = {cv[0].get<double>(), cv[1].get<double>(), cv[2].get<double>()};
  }
  if (auto sd = optional_number(f, "filter", "odometry_stddev")) {
    if (!(*sd >= 0.0)) throw ConfigError("filter.odometry_stddev must be >= 0");
    c.filter.params.odometry_cov = Covariance2::isotropic(*sd);
  }
  c.filter.init_stddev = number(f, "filter", "init_stddev");
  c.filter.init_offset = vec2(f.at("init_offset"), "filter.init_offset");
  c.filter.edge_threshold = number(f, "filter", "edge_threshold");
  c.filter.blur_sigma = number(f, "filter", "blur_sigma");
  if (!f.at("method").is_string()) throw ConfigError("filter.method must be a string");
  c.filter.method = method_from(f.at("method").get<std::string>());

  const json& m = j.at("mission");
  check_keys(m, "mission",
             {"home", "waypoints", "trigger_radius", "detector_range", "detection_dwell",
              "false_negative", "search_size", "search_spacing", "search_timeout", "goal_tolerance",
              "virtual_step", "takeoff_time", "start_delay"});
  c.mission.home = vec2(m.at("home"), "mission.home");
  if (!m.at("waypoints").is_array()) throw ConfigError("mission.waypoints must be an array");
  std::size_t with_flag = 0;
  for (const auto& wj : m.at("waypoints")) {
    check_keys(wj, "mission.waypoints[]", {"x", "y", "uncertainty", "flag"});
    Waypoint wpt;
    wpt.expected = {number(wj, "mission.waypoints[]", "x"), number(wj, "mission.waypoints[]", "y")};
    if (auto u = optional_number(wj, "mission.waypoints[]", "uncertainty")) wpt.uncertainty = *u;
    c.mission.waypoints.push_back(wpt);
    if (wj.contains("flag")) {
      c.mission.flags.push_back(vec2(wj.at("flag"), "mission.waypoints[].flag"));
      ++with_flag;
    }
  }
  if (with_flag != 0 && with_flag != c.mission.waypoints.size()) {
    throw ConfigError("mission.waypoints: give a flag for every waypoint or none");
  }
  auto& mp = c.mission_params;
  mp.trigger_radius = number(m, "mission", "trigger_radius");
  mp.detector_range = number(m, "mission", "detector_range");
  mp.detection_dwell = number(m, "mission", "detection_dwell");
  mp.false_negative = number(m, "mission", "false_negative");
  mp.search_size = number(m, "mission", "search_size");
  mp.search_spacing = number(m, "mission", "search_spacing");
  mp.search_timeout = number(m, "mission", "search_timeout");
  mp.goal_tolerance = number(m, "mission", "goal_tolerance");
  mp.virtual_step = number(m, "mission", "virtual_step");
  mp.takeoff_time = number(m, "mission", "takeoff_time");
  mp.start_delay = number(m, "mission", "start_delay");

  const json& r = j.at("rates");
  check_keys(r, "rates", {"dt", "localization_distance"});
  c.rates.dt = number(r, "rates", "dt");
  c.rates.localization_distance = number(r, "rates", "localization_distance");

  const json& fl = j.at("failures");
  check_keys(fl, "failures", {"battery_budget", "compute_restart", "software_issue", "return_home"});
  c.failures.battery_budget = number(fl, "failures", "battery_budget");
  c.failures.compute_restart = optional_number(fl, "failures", "compute_restart");
  c.failures.software_issue = optional_number(fl, "failures", "software_issue");
  c.failures.return_home = optional_number(fl, "failures", "return_home");

  if (!j.at("localizer").is_string()) throw ConfigError("localizer must be a string");
  c.localizer = localizer_from_string(j.at("localizer").get<std::string>());
  c.max_speed = number(j, "config", "max_speed");
  c.flag_offset = number(j, "config", "flag_offset");
  return c;
}

}  // namespace

ScenarioConfig scenario_from_json(const json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  json merged;
  try {
    if (doc.contains("preset")) {
      if (!doc.at("preset").is_string()) throw ConfigError("preset must be a string");
      merged = to_json(preset(doc.at("preset").get<std::string>()));
    } else {
      merged = to_json(ScenarioConfig{});
    }
    // Waypoint lists are replaced wholesale by merge_patch (arrays are atoms).
    if (doc.contains("defaults")) merged.merge_patch(doc.at("defaults"));
    json top = doc;
    top.erase("preset");
    top.erase("defaults");
    merged.merge_patch(top);
    ScenarioConfig c = parse_resolved(merged);
    c.validate();
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return scenario_from_json(doc);
}

}  // namespace gradloc
