#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "gradloc/errors.hpp"
#include "gradloc/harness.hpp"

namespace gradloc {

using nlohmann::json;

namespace {

constexpr const char* kCsvHeader = "t,true_x,true_y,odom_x,odom_y,est_x,est_y,state,event";

void put(std::ostream& out, double v) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  out.write(buf, r.ptr - buf);
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw ParseError(line, "bad number '" + s + "'");
  }
  return v;
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

json line_string(const std::string& name, const std::vector<LogRow>& rows, Vec2 LogRow::*field) {
  json coords = json::array();
  for (const auto& r : rows) coords.push_back({(r.*field).x, (r.*field).y});
  // A LineString needs two positions; a one-row log repeats its point.
  if (coords.size() == 1) coords.push_back(coords[0]);
  return {{"type", "Feature"},
          {"properties", {{"name", name}}},
          {"geometry", {{"type", "LineString"}, {"coordinates", coords}}}};
}

}  // namespace

void write_csv(const RunLog& log, std::ostream& out) {
  out << kCsvHeader << '\n';
  for (const auto& r : log.rows) {
    for (double v : {r.t, r.truth.x, r.truth.y, r.odom.x, r.odom.y, r.est.x, r.est.y}) {
      put(out, v);
      out << ',';
    }
    out << to_string(r.state) << ',' << r.event << '\n';
  }
}

std::vector<LogRow> read_csv(std::istream& in) {
  std::string line;
  std::size_t n = 1;
  if (!std::getline(in, line)) throw ParseError(1, "missing header");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kCsvHeader) throw ParseError(1, "unexpected header");
  std::vector<LogRow> rows;
  while (std::getline(in, line)) {
    ++n;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 9) throw ParseError(n, "expected 9 fields");
    LogRow r;
    r.t = parse_double(f[0], n);
    r.truth = {parse_double(f[1], n), parse_double(f[2], n)};
    r.odom = {parse_double(f[3], n), parse_double(f[4], n)};
    r.est = {parse_double(f[5], n), parse_double(f[6], n)};
    try {
      r.state = state_from_string(f[7]);
    } catch (const InvalidInput&) {
      throw ParseError(n, "unknown state '" + f[7] + "'");
    }
    r.event = f[8];
    if (!rows.empty() && !(r.t > rows.back().t)) throw ParseError(n, "timestamps must increase");
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_geojson(const RunLog& log, std::ostream& out) {
  json features = json::array();
  if (!log.rows.empty()) {
    features.push_back(line_string("truth", log.rows, &LogRow::truth));
    features.push_back(line_string("odometry", log.rows, &LogRow::odom));
    features.push_back(line_string("estimate", log.rows, &LogRow::est));
  }
  for (std::size_t i = 0; i < log.waypoints.size(); ++i) {
    const auto& w = log.waypoints[i];
    features.push_back({{"type", "Feature"},
                        {"properties",
                         {{"name", "waypoint_" + std::to_string(i)},
                          {"uncertainty", w.uncertainty},
                          {"detected", w.detected}}},
                        {"geometry",
                         {{"type", "Point"}, {"coordinates", {w.expected.x, w.expected.y}}}}});
  }
  const json doc = {{"type", "FeatureCollection"}, {"features", features}};
  out << doc.dump(1) << '\n';
}

json to_json(const RunLog& log) {
  json rows = json::array();
  for (const auto& r : log.rows) {
    rows.push_back({r.t, r.truth.x, r.truth.y, r.odom.x, r.odom.y, r.est.x, r.est.y,
                    to_string(r.state), r.event});
  }
  json waypoints = json::array();
  for (std::size_t i = 0; i < log.waypoints.size(); ++i) {
    const auto& w = log.waypoints[i];
    json e = {{"x", w.expected.x}, {"y", w.expected.y}, {"uncertainty", w.uncertainty},
              {"detected", w.detected}};
    if (i < log.outcomes.size()) {
      const auto& o = log.outcomes[i];
      e["searched"] = o.searched;
      e["terminal_distance"] = o.terminal_distance ? json(*o.terminal_distance) : json(nullptr);
    }
    waypoints.push_back(e);
  }
  const auto& s = log.summary;
  return {{"scenario", log.scenario},
          {"summary",
           {{"rmse_odom", s.rmse_odom},
            {"rmse_method", s.rmse_method},
            {"waypoints_detected", s.waypoints_detected},
            {"waypoints_total", s.waypoints_total},
            {"termination", s.termination},
            {"duration", s.duration},
            {"final_error", s.final_error},
            {"odom_final_error", s.odom_final_error}}},
          {"localization_updates", log.localization_updates},
          {"waypoints", waypoints},
          {"rows", rows}};
}

RunLog run_log_from_json(const json& doc) {
  try {
    RunLog log;
    log.scenario = doc.at("scenario").get<std::string>();
    log.localization_updates = doc.value("localization_updates", 0);
    for (const auto& w : doc.at("waypoints")) {
      Waypoint wp;
      wp.expected = {w.at("x").get<double>(), w.at("y").get<double>()};
      wp.uncertainty = w.at("uncertainty").get<double>();
      wp.detected = w.at("detected").get<bool>();
      log.waypoints.push_back(wp);
      WaypointOutcome o;
      o.detected = wp.detected;
      o.searched = w.value("searched", false);
      if (w.contains("terminal_distance") && !w.at("terminal_distance").is_null()) {
        o.terminal_distance = w.at("terminal_distance").get<double>();
      }
      log.outcomes.push_back(o);
    }
    for (const auto& r : doc.at("rows")) {
      if (!r.is_array() || r.size() != 9) throw ConfigError("run log row must have 9 fields");
      LogRow row;
      row.t = r[0].get<double>();
      row.truth = {r[1].get<double>(), r[2].get<double>()};
      row.odom = {r[3].get<double>(), r[4].get<double>()};
      row.est = {r[5].get<double>(), r[6].get<double>()};
      row.state = state_from_string(r[7].get<std::string>());
      row.event = r[8].get<std::string>();
      log.rows.push_back(std::move(row));
    }
    log.summary = summarize(log.rows, static_cast<int>(log.waypoints.size()));
    return log;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run log: ") + e.what());
  }
}

RunLog load_run_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open run log: " + path);
  const auto ends_with = [&](const std::string& suf) {
    return path.size() >= suf.size() && path.compare(path.size() - suf.size(), suf.size(), suf) == 0;
  };
  if (ends_with(".json")) {
    json doc;
    try {
      doc = json::parse(in);
    } catch (const json::parse_error& e) {
      throw ConfigError(path + ": " + e.what());
    }
    return run_log_from_json(doc);
  }
  RunLog log;
  log.rows = read_csv(in);
  log.summary = summarize(log.rows, 0);
  return log;
}

}  // namespace gradloc
