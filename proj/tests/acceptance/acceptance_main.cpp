// Acceptance gate: one PASS/FAIL line per criterion. Exit status is non-zero
// when any criterion fails. All thresholds live in the constants below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "gradloc/filter.hpp"
#include "gradloc/harness.hpp"
#include "gradloc/matcher.hpp"
#include "gradloc/mission.hpp"
#include "gradloc/seed.hpp"
#include "gradloc/simworld.hpp"

using namespace gradloc;

namespace {

// 1
constexpr int kOraclePairs = 500;
constexpr int kOracleMaxTemplate = 8;
constexpr int kOracleMaxPrior = 20;
constexpr double kOracleTol = 1e-9;
constexpr double kOracleSeconds = 10.0;
// 2
constexpr int kSharpWorlds = 50;
constexpr double kSharpWorldSide = 300.0;
constexpr int kSharpCellTol = 1;
constexpr double kSharpFraction = 0.95;
constexpr double kSharpSeconds = 60.0;
// 3
constexpr int kSeeds = 10;
constexpr double kOdomMedianLo = 25.0, kOdomMedianHi = 55.0;
constexpr double kMethodMax = 12.0;
constexpr double kMethodRatio = 0.5;
constexpr int kDriftMinSeeds = 8;
constexpr double kDriftSeconds = 300.0;
// 4
constexpr double kRecoveryFinal = 5.0;
constexpr int kRecoveryMinSeeds = 8;
constexpr double kRecoverySeconds = 120.0;
// 5
constexpr double kBiasDeg = 30.0;
constexpr double kBiasRatio = 2.0;
constexpr int kBiasMinSeeds = 7;
// 6
constexpr double kOpenTolerance = 0.2;
// 8
constexpr double kCourseLength = 1000.0;
constexpr double kCourseScale = 0.03;
constexpr double kCourseTrigger = 15.0;
constexpr double kBaselineMiss = 20.0;
constexpr double kCourseSeconds = 60.0;
// 9
constexpr double kPerfPriorSide = 1000.0;
constexpr double kPerfLocalSide = 60.0;
constexpr double kPerfMillis = 200.0;
constexpr int kPerfRepeats = 5;
// 10
constexpr int kResampleVectors = 1000;
constexpr double kResampleSeconds = 5.0;

int failures = 0;

void report(int n, bool pass, const std::string& name, const std::string& detail) {
  std::printf("criterion %2d %s  %-26s %s\n", n, pass ? "PASS" : "FAIL", name.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

template <class... A>
std::string fmt(const char* f, A... a) {
  char buf[1024];
  std::snprintf(buf, sizeof buf, f, a...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::vector<RunSummary> sweep(ScenarioConfig cfg) {
  std::vector<RunSummary> out;
  for (int s = 1; s <= kSeeds; ++s) {
    cfg.seed = static_cast<std::uint64_t>(s);
    out.push_back(run_scenario(cfg).summary);
  }
  return out;
}

std::string list(const std::vector<RunSummary>& runs, double RunSummary::*field) {
  std::string s;
  for (const auto& r : runs) s += fmt("%.1f ", r.*field);
  if (!s.empty()) s.pop_back();
  return s;
}

// ---- 1 ---------------------------------------------------------------------

// Zero-mean correlation straight from the sum, observed template cells only.
double brute_force(const EdgeMap& t, const EdgeMap& img, int px, int py) {
  double ts = 0.0, is = 0.0;
  int n = 0;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      if (t.observed(x, y)) {
        ts += t.at(x, y);
        is += img.at(px + x, py + y);
        ++n;
      }
  if (n == 0) return 0.0;
  double r = 0.0;
  for (int y = 0; y < t.height(); ++y)
    for (int x = 0; x < t.width(); ++x)
      if (t.observed(x, y)) r += (t.at(x, y) - ts / n) * (img.at(px + x, py + y) - is / n);
  return r;
}

EdgeMap random_edges(int w, int h, std::mt19937_64& rng, double p, double missing) {
  EdgeMap e(GridGeometry{{0.0, 0.0}, 1.0, w, h});
  std::bernoulli_distribution edge(p), miss(missing);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      if (!miss(rng)) e.set(x, y, edge(rng));
  return e;
}

void correlation_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(20240501);
  std::uniform_int_distribution<int> tdim(1, kOracleMaxTemplate);
  double worst = 0.0, worst_fft = 0.0;
  long placements = 0;
  for (int i = 0; i < kOraclePairs; ++i) {
    const int tw = tdim(rng), th = tdim(rng);
    const int iw = std::uniform_int_distribution<int>(tw, kOracleMaxPrior)(rng);
    const int ih = std::uniform_int_distribution<int>(th, kOracleMaxPrior)(rng);
    const EdgeMap t = random_edges(tw, th, rng, 0.3, i % 4 == 0 ? 0.25 : 0.0);
    const EdgeMap img = random_edges(iw, ih, rng, 0.25, 0.0);
    const SimilarityMap sim = match_template(t, img);
    const SimilarityMap fft = match_template(t, img, MatchMethod::fft);
    const CellIndex a = template_anchor(t.geometry());
    for (int py = 0; py + th <= ih; ++py)
      for (int px = 0; px + tw <= iw; ++px) {
        const double want = brute_force(t, img, px, py);
        worst = std::max(worst, std::fabs(sim.at(px + a.x, py + a.y) - want));
        worst_fft = std::max(worst_fft, std::fabs(fft.at(px + a.x, py + a.y) - want));
        ++placements;
      }
  }
  const double dt = seconds_since(t0);
  report(1, worst <= kOracleTol && dt < kOracleSeconds, "correlation oracle",
         fmt("pairs=%d placements=%ld max|d|=%.2e (fft path %.2e) limit %.0e; %.2fs < %.0fs",
             kOraclePairs, placements, worst, worst_fft, kOracleTol, dt, kOracleSeconds));
}

// ---- 2 ---------------------------------------------------------------------

void self_match() {
  const auto t0 = std::chrono::steady_clock::now();
  SensorConfig sensor;
  sensor.extent = 60.0;
  sensor.altitude = 40.0;
  sensor.range = 60.0;
  int hits = 0;
  std::string misses;
  for (int i = 0; i < kSharpWorlds; ++i) {
    const std::uint64_t seed = 1000 + static_cast<std::uint64_t>(i);
    WorldSpec spec;
    spec.extent = {{0.0, 0.0}, {kSharpWorldSide, kSharpWorldSide}};
    spec.seed = seed;
    const bool urban = i % 2 == 0;
    spec.regions = {{spec.extent, urban ? Terrain::urban : Terrain::forest, urban ? 10.0 : 25.0}};
    const WorldModel world = build_world(spec);
    const HeightGrid dem = sample_prior_dem(world);
    const EdgeMap prior = edges_from_heights(dem);

    std::mt19937_64 rng(derive_seed(seed, std::uint64_t{7}));
    std::uniform_real_distribution<double> pos(40.0, kSharpWorldSide - 40.0), yaw(-M_PI, M_PI);
    const TruePose pose{{pos(rng), pos(rng)}, yaw(rng)};
    sensor.seed = seed;
    const HeightGrid local = sense_local(world, pose, sensor);
    const auto am = localize_once(local, prior, pose.heading).argmax();
    const auto truth = dem.geometry().cell_of(pose.position);
    const bool hit = am && truth && std::abs(am->x - truth->x) <= kSharpCellTol &&
                     std::abs(am->y - truth->y) <= kSharpCellTol;
    hits += hit;
    if (!hit) misses += fmt(" %llu", static_cast<unsigned long long>(seed));
  }
  const double dt = seconds_since(t0);
  const double frac = static_cast<double>(hits) / kSharpWorlds;
  report(2, frac >= kSharpFraction && dt < kSharpSeconds, "self-match sharpness",
         fmt("argmax within %d cell in %d/%d worlds (%.0f%%, need %.0f%%)%s%s; %.1fs < %.0fs",
             kSharpCellTol, hits, kSharpWorlds, 100.0 * frac, 100.0 * kSharpFraction,
             misses.empty() ? "" : "; misses at world seeds", misses.c_str(), dt, kSharpSeconds));
}

// ---- 3, 5 ------------------------------------------------------------------

std::vector<RunSummary> drift_reduction() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = sweep(preset("urban_1km"));
  const double dt = seconds_since(t0);
  std::vector<double> odom;
  int ok = 0;
  for (const auto& r : runs) {
    odom.push_back(r.rmse_odom);
    ok += r.rmse_method <= kMethodMax && r.rmse_method <= kMethodRatio * r.rmse_odom;
  }
  const double med = median(odom);
  const bool calibrated = med >= kOdomMedianLo && med <= kOdomMedianHi;
  report(3, calibrated && ok >= kDriftMinSeeds && dt < kDriftSeconds, "drift reduction",
         fmt("median odom RMSE %.1f in [%.0f, %.0f]; method <= %.0f m and <= %.1f x odom in %d/%d "
             "(need %d); %.1fs < %.0fs\n    odom   %s\n    method %s",
             med, kOdomMedianLo, kOdomMedianHi, kMethodMax, kMethodRatio, ok, kSeeds,
             kDriftMinSeeds, dt, kDriftSeconds, list(runs, &RunSummary::rmse_odom).c_str(),
             list(runs, &RunSummary::rmse_method).c_str()));
  return runs;
}

void compass_bias() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig zero = preset("urban_1km");
  zero.errors.compass_bias_amplitude = 0.0;
  ScenarioConfig biased = preset("urban_1km");
  biased.errors.compass_bias_amplitude = kBiasDeg * M_PI / 180.0;
  const auto base = sweep(zero);
  const auto runs = sweep(biased);
  int ok = 0;
  for (int i = 0; i < kSeeds; ++i) ok += runs[i].rmse_method <= kBiasRatio * base[i].rmse_method;
  report(5, ok >= kBiasMinSeeds, "compass bias tolerance",
         fmt("%.0f deg bias: method <= %.0f x zero-bias method in %d/%d (need %d); %.1fs\n"
             "    zero   %s\n    biased %s",
             kBiasDeg, kBiasRatio, ok, kSeeds, kBiasMinSeeds, seconds_since(t0),
             list(base, &RunSummary::rmse_method).c_str(),
             list(runs, &RunSummary::rmse_method).c_str()));
}

// ---- 4 ---------------------------------------------------------------------

void recovery() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = sweep(preset("recovery_32m"));
  const double dt = seconds_since(t0);
  int ok = 0;
  for (const auto& r : runs) ok += r.final_error <= kRecoveryFinal;
  report(4, ok >= kRecoveryMinSeeds && dt < kRecoverySeconds, "recovery from 32 m",
         fmt("final error <= %.0f m in %d/%d (need %d); %.1fs < %.0fs\n    final  %s",
             kRecoveryFinal, ok, kSeeds, kRecoveryMinSeeds, dt, kRecoverySeconds,
             list(runs, &RunSummary::final_error).c_str()));
}

// ---- 6 ---------------------------------------------------------------------

void open_field() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto runs = sweep(preset("openfield"));
  double odom = 0.0, method = 0.0;
  for (const auto& r : runs) {
    odom += r.rmse_odom / kSeeds;
    method += r.rmse_method / kSeeds;
  }
  const double rel = std::fabs(method - odom) / odom;
  report(6, rel <= kOpenTolerance, "open-field degradation",
         fmt("mean method %.1f vs mean odom %.1f: %.0f%% apart (limit %.0f%%); %.1fs\n"
             "    odom   %s\n    method %s",
             method, odom, 100.0 * rel, 100.0 * kOpenTolerance, seconds_since(t0),
             list(runs, &RunSummary::rmse_odom).c_str(),
             list(runs, &RunSummary::rmse_method).c_str()));
}

// ---- 7 ---------------------------------------------------------------------

void fsm_conformance() {
  using S = MissionState;
  using E = MissionEvent;
  const std::map<std::pair<S, E>, S> graph = {
      {{S::PrepareTakeoff, E::takeoff_success}, S::WaitForStart},
      {{S::WaitForStart, E::start_mission}, S::WaypointNavigation},
      {{S::WaypointNavigation, E::waypoint_reached}, S::WaypointDetection},
      {{S::WaypointDetection, E::detection}, S::WaypointNavigation},
      {{S::WaypointDetection, E::detection_too_far_or_none}, S::SearchPattern},
      {{S::SearchPattern, E::search_complete_or_timeout}, S::WaypointNavigation},
      {{S::WaypointNavigation, E::all_waypoints_cleared}, S::ReturnHome},
      {{S::ReturnHome, E::home_reached}, S::Land},
      {{S::WaypointNavigation, E::return_home_service}, S::ReturnHome},
      {{S::SearchPattern, E::return_home_service}, S::ReturnHome},
  };
  int pairs = 0, agree = 0;
  for (S s : kAllStates)
    for (E e : kAllEvents) {
      ++pairs;
      const Transition t = fsm_step(s, e);
      const auto it = graph.find({s, e});
      agree += it == graph.end() ? (!t.accepted && t.next == s) : (t.accepted && t.next == it->second);
    }

  const std::vector<E> nominal = {E::takeoff_success, E::start_mission, E::waypoint_reached,
                                  E::detection, E::waypoint_reached, E::detection_too_far_or_none,
                                  E::search_complete_or_timeout, E::all_waypoints_cleared,
                                  E::home_reached};
  S s = S::PrepareTakeoff;
  bool trace_ok = true;
  for (E e : nominal) {
    const Transition t = fsm_step(s, e);
    trace_ok = trace_ok && t.accepted;
    s = t.next;
  }
  trace_ok = trace_ok && s == S::Land;

  const bool home_ok = fsm_step(S::WaypointNavigation, E::return_home_service).next == S::ReturnHome &&
                       fsm_step(S::SearchPattern, E::return_home_service).next == S::ReturnHome;
  report(7, agree == pairs && trace_ok && home_ok, "fsm conformance",
         fmt("%d/%d (state, event) pairs match; nominal trace ends in %s; returnHomeSrv %s",
             agree, pairs, to_string(s).c_str(), home_ok ? "ok" : "wrong"));
}

// ---- 8 ---------------------------------------------------------------------

void virtual_goal_compensation() {
  const auto t0 = std::chrono::steady_clock::now();
  ScenarioConfig c;
  c.name = "straight_1km";
  c.seed = 1;
  c.world.extent = {{0.0, 0.0}, {kCourseLength + 100.0, 100.0}};
  c.world.regions = {{c.world.extent, Terrain::open_field, 0.0}};
  c.errors.odometry_scale_error = kCourseScale;
  c.mission.home = {50.0, 50.0};
  for (double d = 250.0; d <= kCourseLength + 1e-9; d += 250.0) {
    c.mission.waypoints.push_back(Waypoint{{50.0 + d, 50.0}});
    c.mission.flags.push_back({50.0 + d, 50.0});
  }
  c.mission_params.detector_range = 10.0;
  c.mission_params.trigger_radius = kCourseTrigger;

  c.localizer = LocalizerMode::oracle;
  const RunLog oracle = run_scenario(c);
  c.localizer = LocalizerMode::odometry;
  const RunLog naive = run_scenario(c);
  const double dt = seconds_since(t0);

  double worst = 0.0;
  bool all_reached = true;
  std::string terms;
  for (const auto& o : oracle.outcomes) {
    all_reached = all_reached && o.terminal_distance.has_value();
    if (o.terminal_distance) worst = std::max(worst, *o.terminal_distance);
    terms += o.terminal_distance ? fmt(" %.1f", *o.terminal_distance) : std::string(" -");
  }
  const auto& last = naive.outcomes.back();
  const double miss = last.terminal_distance ? *last.terminal_distance : INFINITY;
  report(8, all_reached && worst <= kCourseTrigger && miss >= kBaselineMiss && dt < kCourseSeconds,
         "virtual-goal compensation",
         fmt("3%% scale, oracle: terminal distances%s (<= %.0f m), detected %d/%zu; odometry "
             "baseline misses final waypoint by %.1f m (>= %.0f m); %.1fs < %.0fs",
             terms.c_str(), kCourseTrigger, oracle.summary.waypoints_detected,
             oracle.outcomes.size(), miss, kBaselineMiss, dt, kCourseSeconds));
}

// ---- 9 ---------------------------------------------------------------------

void performance() {
  WorldSpec spec;
  spec.extent = {{0.0, 0.0}, {kPerfPriorSide, kPerfPriorSide}};
  spec.regions = {{spec.extent, Terrain::urban, 10.0}};
  spec.seed = 9;
  const WorldModel world = build_world(spec);
  const PriorMatcher prior(edges_from_heights(sample_prior_dem(world)));
  SensorConfig sensor;
  sensor.extent = kPerfLocalSide;
  const TruePose pose{{300.5, 300.5}, 0.7};
  const HeightGrid local = sense_local(world, pose, sensor);

  auto time_once = [&] {
    const auto t0 = std::chrono::steady_clock::now();
    const SimilarityMap sim = localize_once(local, prior, pose.heading);
    const double ms = 1000.0 * seconds_since(t0);
    return std::pair{ms, sim.argmax()};
  };
  const auto [cold, am] = time_once();
  std::vector<double> warm;
  for (int i = 0; i < kPerfRepeats; ++i) warm.push_back(time_once().first);
  const double med = median(warm);
  const auto truth = world.truth.geometry().cell_of(pose.position);
  if (!am || !truth) {
    report(9, false, "localize_once speed", "no similarity peak");
    return;
  }
  report(9, med <= kPerfMillis, "localize_once speed",
         fmt("%.0fx%.0f m local vs %.0fx%.0f m prior: median %.1f ms over %d calls (<= %.0f ms), "
             "first call with prior spectrum setup %.1f ms; peak %d,%d cells from truth",
             kPerfLocalSide, kPerfLocalSide, kPerfPriorSide, kPerfPriorSide, med, kPerfRepeats,
             kPerfMillis, cold, am->x - truth->x, am->y - truth->y));
}

// ---- 10 --------------------------------------------------------------------

void resampling_counts() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(77);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::uniform_int_distribution<int> len(1, 300);
  int bad_vectors = 0;
  for (int v = 0; v < kResampleVectors; ++v) {
    std::vector<double> w(static_cast<std::size_t>(len(rng)));
    double total = 0.0;
    for (auto& x : w) {
      // a mix of exact zeros, tiny and ordinary weights
      const double r = u(rng);
      x = r < 0.2 ? 0.0 : (r < 0.3 ? 1e-12 * u(rng) : u(rng));
      total += x;
    }
    if (total == 0.0) w[0] = total = 1.0;
    const std::size_t n = 1 + static_cast<std::size_t>(u(rng) * 2000);
    std::vector<std::size_t> count(w.size(), 0);
    for (auto i : systematic_resample_indices(w, n, u(rng))) ++count[i];
    bool ok = true;
    for (std::size_t i = 0; i < w.size(); ++i) {
      const double e = static_cast<double>(n) * w[i] / total;
      // 1e-9 absorbs rounding of N w_i when it is an exact integer
      ok = ok && count[i] >= std::floor(e - 1e-9) && count[i] <= std::ceil(e + 1e-9);
    }
    bad_vectors += !ok;
  }
  const double dt = seconds_since(t0);
  report(10, bad_vectors == 0 && dt < kResampleSeconds, "systematic resampling",
         fmt("floor(N w) <= count <= ceil(N w) violated in %d/%d vectors; %.2fs < %.0fs",
             bad_vectors, kResampleVectors, dt, kResampleSeconds));
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  correlation_oracle();
  self_match();
  drift_reduction();
  recovery();
  compass_bias();
  open_field();
  fsm_conformance();
  virtual_goal_compensation();
  performance();
  resampling_counts();
  std::printf("acceptance: %d of 10 criteria failed (%.0fs total)\n", failures, seconds_since(t0));
  return failures == 0 ? 0 : 1;
}
