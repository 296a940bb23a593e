#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "gradloc/filter.hpp"
#include "gradloc/geometry.hpp"
#include "gradloc/matcher.hpp"
#include "gradloc/mission.hpp"
#include "gradloc/simworld.hpp"

namespace gradloc {

enum class LocalizerMode { particle_filter, oracle, odometry };

std::string to_string(LocalizerMode m);
LocalizerMode localizer_from_string(const std::string& s);

struct RunRates {
  double dt = 0.2;                    // s, simulation step
  double localization_distance = kDefaultResampleDistance;  // m of odometry
};

struct FailureInjection {
  double battery_budget = 1800.0;          // s of flight
  std::optional<double> compute_restart;   // s, hardware failsafe
  std::optional<double> software_issue;    // s
  std::optional<double> return_home;       // s, returnHomeSrv
};

struct FilterConfig {
  FilterParams params;
  double init_stddev = 2.0;   // m
  Vec2 init_offset;           // filter and odometry origin minus true start
  double edge_threshold = kDefaultEdgeThreshold;
  double blur_sigma = kDefaultBlurSigma;
  MatchMethod method = MatchMethod::automatic;
};

struct ScenarioConfig {
  std::string name = "custom";
  std::uint64_t seed = 1;
  std::optional<std::uint64_t> world_seed;  // defaults to a stream of seed
  WorldSpec world;
  ErrorModel errors;
  SensorConfig sensor;
  FilterConfig filter;
  MissionPlan mission;
  MissionConfig mission_params;
  RunRates rates;
  FailureInjection failures;
  LocalizerMode localizer = LocalizerMode::particle_filter;
  double max_speed = kDefaultMaxSpeed;
  double flag_offset = 0.0;  // m, random true-flag displacement when flags unset

  // Throws ConfigError naming the offending field.
  void validate() const;
};

// Named presets; throws ConfigError for unknown names.
ScenarioConfig preset(const std::string& name);
std::vector<std::string> preset_names();

nlohmann::json to_json(const ScenarioConfig& cfg);
// Layering: built-in defaults, then the named "preset", then the "defaults"
// section, then the remaining top-level sections.
ScenarioConfig scenario_from_json(const nlohmann::json& doc);
ScenarioConfig load_scenario(const std::string& path);

struct LogRow {
  double t = 0.0;
  Vec2 truth;
  Vec2 odom;
  Vec2 est;
  MissionState state = MissionState::PrepareTakeoff;
  std::string event;  // ';'-separated, empty when nothing happened

  bool operator==(const LogRow&) const = default;
};

struct RunSummary {
  double rmse_odom = 0.0;
  double rmse_method = 0.0;
  int waypoints_detected = 0;
  int waypoints_total = 0;
  std::string termination;
  double duration = 0.0;
  double final_error = 0.0;  // |est - truth| at the last row
  double odom_final_error = 0.0;
};

struct RunLog {
  std::string scenario;
  std::vector<LogRow> rows;
  std::vector<Waypoint> waypoints;
  RunSummary summary;
  // Not recoverable from the series alone.
  std::vector<WaypointOutcome> outcomes;
  int localization_updates = 0;
};

double compute_rmse(std::span<const Vec2> estimates, std::span<const Vec2> truths);

// Recomputes the summary from rows (plus the waypoint count).
RunSummary summarize(const std::vector<LogRow>& rows, int waypoints_total);

RunLog run_scenario(const ScenarioConfig& cfg);

void write_csv(const RunLog& log, std::ostream& out);
std::vector<LogRow> read_csv(std::istream& in);
void write_geojson(const RunLog& log, std::ostream& out);
nlohmann::json to_json(const RunLog& log);
RunLog run_log_from_json(const nlohmann::json& doc);

// Reads a log from .csv or .json by extension.
RunLog load_run_log(const std::string& path);

}  // namespace gradloc
