// gradloc: run, score and export closed-loop localization scenarios.

#include <cstdio>
#include <exception>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <thread>

#include "CLI11.hpp"
#include "gradloc/errors.hpp"
#include "gradloc/harness.hpp"

namespace fs = std::filesystem;
using namespace gradloc;

namespace {

enum Exit { kOk = 0, kRuntime = 1, kConfig = 2, kIncomplete = 3 };

std::string default_out_dir() {
  if (const char* env = std::getenv("GRADLOC_OUT_DIR"); env && *env) return env;
  return "gradloc_out";
}

ScenarioConfig resolve(const std::string& path, const std::string& preset_name) {
  if (path.empty()) {
    if (preset_name.empty()) throw ConfigError("give a config file or --preset");
    return scenario_from_json({{"preset", preset_name}});
  }
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  if (!preset_name.empty()) doc["preset"] = preset_name;
  return scenario_from_json(doc);
}

void print_summary(const RunLog& log, std::uint64_t seed) {
  const auto& s = log.summary;
  std::printf("%s seed=%llu rmse_odom=%.3f rmse_method=%.3f waypoints=%d/%d termination=%s "
              "duration=%.1f final_error=%.3f\n",
              log.scenario.c_str(), static_cast<unsigned long long>(seed), s.rmse_odom,
              s.rmse_method, s.waypoints_detected, s.waypoints_total, s.termination.c_str(),
              s.duration, s.final_error);
}

void save(const RunLog& log, const fs::path& dir, const std::string& stem) {
  fs::create_directories(dir);
  {
    std::ofstream f(dir / (stem + ".csv"));
    write_csv(log, f);
  }
  {
    std::ofstream f(dir / (stem + ".json"));
    f << to_json(log).dump(1) << '\n';
  }
  {
    std::ofstream f(dir / (stem + ".geojson"));
    write_geojson(log, f);
  }
  if (!fs::exists(dir / (stem + ".csv"))) throw std::runtime_error("could not write to " + dir.string());
}

std::pair<std::uint64_t, std::uint64_t> parse_range(const std::string& s) {
  const auto dots = s.find("..");
  try {
    if (dots == std::string::npos) {
      const auto v = std::stoull(s);
      return {v, v};
    }
    const auto a = std::stoull(s.substr(0, dots));
    const auto b = std::stoull(s.substr(dots + 2));
    if (b < a) throw ConfigError("seed range must be ascending");
    return {a, b};
  } catch (const std::logic_error&) {
    throw ConfigError("bad seed range '" + s + "', expected A..B");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"gradloc - heightmap gradient localization simulator"};
  app.require_subcommand(1);

  std::string config_path, preset_name, out_dir = default_out_dir();
  std::optional<std::uint64_t> seed;
  std::optional<double> return_home_at;
  auto* run = app.add_subcommand("run", "run one scenario");
  run->add_option("config", config_path, "scenario JSON");
  run->add_option("--seed", seed, "master seed");
  run->add_option("--out", out_dir, "output directory (default $GRADLOC_OUT_DIR or ./gradloc_out)");
  run->add_option("--preset", preset_name, "base preset: urban_1km, forest_1_4km, openfield, recovery_32m");
  run->add_option("--return-home-at", return_home_at, "inject returnHomeSrv at this sim time (s)");

  std::string rmse_path;
  auto* rmse = app.add_subcommand("rmse", "RMSE of a run log");
  rmse->add_option("log", rmse_path, "run log (.csv or .json)")->required();

  std::string export_path, format = "csv", export_out;
  auto* exp = app.add_subcommand("export", "convert a run log");
  exp->add_option("log", export_path, "run log (.csv or .json)")->required();
  exp->add_option("--format", format, "csv or geojson")->check(CLI::IsMember({"csv", "geojson"}));
  exp->add_option("--out", export_out, "output file (default stdout)");

  std::string sweep_config, seeds = "1..10", sweep_preset;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* sweep = app.add_subcommand("sweep", "run a scenario over a seed range");
  sweep->add_option("config", sweep_config, "scenario JSON");
  sweep->add_option("--seeds", seeds, "inclusive range A..B");
  sweep->add_option("--preset", sweep_preset, "base preset");
  sweep->add_option("--jobs", jobs, "worker threads")->check(CLI::PositiveNumber);
  sweep->add_option("--out", out_dir, "output directory");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      ScenarioConfig cfg = resolve(config_path, preset_name);
      if (seed) cfg.seed = *seed;
      if (return_home_at) cfg.failures.return_home = *return_home_at;
      cfg.validate();
      const RunLog log = run_scenario(cfg);
      save(log, out_dir, cfg.name + "_seed" + std::to_string(cfg.seed));
      print_summary(log, cfg.seed);
      return log.summary.termination == "landed" ? kOk : kIncomplete;
    }
    if (*rmse) {
      const RunLog log = load_run_log(rmse_path);
      std::printf("rmse_odom=%.6f rmse_method=%.6f rows=%zu\n", log.summary.rmse_odom,
                  log.summary.rmse_method, log.rows.size());
      return kOk;
    }
    if (*exp) {
      const RunLog log = load_run_log(export_path);
      std::ofstream file;
      if (!export_out.empty()) {
        file.open(export_out);
        if (!file) throw std::runtime_error("cannot write " + export_out);
      }
      std::ostream& out = export_out.empty() ? std::cout : file;
      if (format == "csv") {
        write_csv(log, out);
      } else {
        write_geojson(log, out);
      }
      return kOk;
    }
    if (*sweep) {
      const ScenarioConfig base = resolve(sweep_config, sweep_preset);
      const auto [first, last] = parse_range(seeds);
      std::vector<std::uint64_t> all;
      for (auto s = first; s <= last; ++s) all.push_back(s);
      std::vector<RunSummary> results(all.size());
      std::size_t next = 0;
      std::mutex mu;
      std::exception_ptr failure;
      auto worker = [&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard lock(mu);
            if (next >= all.size()) return;
            i = next++;
          }
          ScenarioConfig cfg = base;
          cfg.seed = all[i];
          RunLog log;
          try {
            log = run_scenario(cfg);
          } catch (...) {
            std::lock_guard lock(mu);
            if (!failure) failure = std::current_exception();
            return;
          }
          std::lock_guard lock(mu);
          save(log, out_dir, cfg.name + "_seed" + std::to_string(cfg.seed));
          results[i] = log.summary;
          print_summary(log, cfg.seed);
          std::fflush(stdout);
        }
      };
      std::vector<std::thread> pool;
      for (unsigned j = 0; j < std::min<std::size_t>(jobs, all.size()); ++j) pool.emplace_back(worker);
      for (auto& th : pool) th.join();
      if (failure) std::rethrow_exception(failure);
      double odom = 0.0, method = 0.0;
      int landed = 0;
      for (const auto& r : results) {
        odom += r.rmse_odom;
        method += r.rmse_method;
        landed += r.termination == "landed";
      }
      const double n = static_cast<double>(results.size());
      std::printf("sweep %s seeds=%llu..%llu mean_rmse_odom=%.3f mean_rmse_method=%.3f landed=%d/%zu\n",
                  base.name.c_str(), static_cast<unsigned long long>(first),
                  static_cast<unsigned long long>(last), odom / n, method / n, landed,
                  results.size());
      return landed == static_cast<int>(results.size()) ? kOk : kIncomplete;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kConfig;
  } catch (const ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kRuntime;
  }
  return kOk;
}
