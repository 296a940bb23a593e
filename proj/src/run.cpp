#include <cmath>
#include <memory>
#include <random>

#include "gradloc/errors.hpp"
#include "gradloc/harness.hpp"
#include "gradloc/seed.hpp"

namespace gradloc {

double compute_rmse(std::span<const Vec2> estimates, std::span<const Vec2> truths) {
  if (estimates.empty()) throw InvalidInput("rmse of an empty series");
  if (estimates.size() != truths.size()) throw InvalidInput("rmse series lengths differ");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < estimates.size(); ++i) {
    const Vec2 d = estimates[i] - truths[i];
    acc += static_cast<long double>(d.x) * d.x + static_cast<long double>(d.y) * d.y;
  }
  return static_cast<double>(std::sqrt(acc / static_cast<long double>(estimates.size())));
}

RunSummary summarize(const std::vector<LogRow>& rows, int waypoints_total) {
  if (rows.empty()) throw InvalidInput("empty run log");
  std::vector<Vec2> truth, odom, est;
  truth.reserve(rows.size());
  odom.reserve(rows.size());
  est.reserve(rows.size());
  RunSummary s;
  s.waypoints_total = waypoints_total;
  for (const auto& r : rows) {
    truth.push_back(r.truth);
    odom.push_back(r.odom);
    est.push_back(r.est);
    std::size_t pos = 0;
    while ((pos = r.event.find("waypoint_cleared:detected", pos)) != std::string::npos) {
      ++s.waypoints_detected;
      ++pos;
    }
    const auto term = r.event.find("terminated:");
    if (term != std::string::npos) {
      const auto end = r.event.find(';', term);
      s.termination = r.event.substr(term + 11, end == std::string::npos ? std::string::npos
                                                                        : end - term - 11);
    }
  }
  s.rmse_odom = compute_rmse(odom, truth);
  s.rmse_method = compute_rmse(est, truth);
  s.duration = rows.back().t;
  s.final_error = distance(rows.back().est, rows.back().truth);
  s.odom_final_error = distance(rows.back().odom, rows.back().truth);
  return s;
}

namespace {

std::string join(const std::vector<std::string>& events) {
  std::string out;
  for (const auto& e : events) {
    if (!out.empty()) out += ';';
    out += e;
  }
  return out;
}

}  // namespace

RunLog run_scenario(const ScenarioConfig& input) {
  input.validate();
  ScenarioConfig cfg = input;
  cfg.world.seed = cfg.world_seed.value_or(derive_seed(cfg.seed, std::uint64_t{1}));
  cfg.errors.seed = derive_seed(cfg.seed, std::uint64_t{2});
  cfg.sensor.seed = derive_seed(cfg.seed, std::uint64_t{3});
  const std::uint64_t filter_seed = derive_seed(cfg.seed, std::uint64_t{4});
  const std::uint64_t mission_seed = derive_seed(cfg.seed, std::uint64_t{5});

  if (cfg.mission.flags.empty()) {
    std::mt19937_64 flag_rng(derive_seed(cfg.seed, std::uint64_t{6}));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (const auto& w : cfg.mission.waypoints) {
      const double r = cfg.flag_offset * std::sqrt(u(flag_rng));
      const double a = 2.0 * M_PI * u(flag_rng);
      cfg.mission.flags.push_back(w.expected + Vec2{r * std::cos(a), r * std::sin(a)});
    }
  }

  const WorldModel world = build_world(cfg.world);
  std::unique_ptr<PriorMatcher> matcher;
  if (cfg.localizer == LocalizerMode::particle_filter) {
    const HeightGrid prior = sample_prior_dem(world, cfg.sensor.resolution);
    matcher = std::make_unique<PriorMatcher>(edges_from_heights(prior, cfg.filter.edge_threshold));
  }
  const MatchParams match_params{cfg.filter.edge_threshold, cfg.filter.blur_sigma,
                                 cfg.filter.method};

  MissionExecutive mission(cfg.mission, cfg.mission_params, mission_seed);
  const CompassModel compass_model(cfg.errors);
  std::mt19937_64 odom_rng(derive_seed(cfg.errors.seed, std::uint64_t{1}));
  std::mt19937_64 compass_rng(derive_seed(cfg.errors.seed, std::uint64_t{2}));

  TruePose pose{cfg.mission.home, 0.0};
  // The odometry frame is anchored where the vehicle believes it took off.
  const Vec2 believed_start = cfg.mission.home + cfg.filter.init_offset;
  const Rigid2 world_from_odom{0.0, believed_start};
  Vec2 odom_pos{0.0, 0.0};
  ParticleSet particles = init_particles(believed_start, cfg.filter.init_stddev,
                                         cfg.filter.params.particle_count, filter_seed);
  PoseEstimate est{believed_start, 0.0, 1.0};
  if (cfg.localizer == LocalizerMode::oracle) est.position = pose.position;
  double compass = compass_model.emit(pose.heading, 0.0, compass_rng);
  double since_update = 0.0;

  RunLog log;
  log.scenario = cfg.name;
  log.waypoints = cfg.mission.waypoints;
  log.rows.push_back({0.0, pose.position, world_from_odom.apply(odom_pos), est.position,
                      mission.state(), ""});

  const double dt = cfg.rates.dt;
  std::string termination;
  for (std::size_t k = 0; termination.empty(); ++k) {
    const double t = static_cast<double>(k) * dt;
    const double t_next = static_cast<double>(k + 1) * dt;
    std::vector<std::string> events;

    if (cfg.failures.return_home && t < *cfg.failures.return_home &&
        t_next >= *cfg.failures.return_home) {
      if (mission.inject(MissionEvent::return_home_service, t)) {
        events.push_back(to_string(MissionEvent::return_home_service));
      }
    }

    TickOutput tick = mission.tick({t, est.position, pose.position});
    events.insert(events.end(), tick.events.begin(), tick.events.end());

    Vec2 velocity{0.0, 0.0};
    if (tick.target && !tick.landed) {
      PoseEstimate cur = est;
      cur.heading = compass;
      const FrameSet frames{world_from_odom, Rigid2{compass, odom_pos},
                            Rigid2{compass, est.position}};
      const Vec2 goal = virtual_goal(cur, frames, *tick.target, cfg.mission_params.virtual_step);
      const Vec2 v_odom = goal - odom_pos;
      const double len = v_odom.norm();
      if (len > 1e-9) {
        const double speed = std::min(cfg.max_speed, len / dt);
        // The planner closes the loop in the odometry frame, which the compass
        // bias rotates against the world.
        const double heading = std::atan2(v_odom.y, v_odom.x) - compass_model.bias(t);
        velocity = {speed * std::cos(heading), speed * std::sin(heading)};
      }
    }

    const TruePose next = step_motion(pose, velocity, dt, cfg.max_speed);
    const Vec2 displacement = next.position - pose.position;
    pose = next;
    OdometryDelta delta{0.0, 0.0};
    if (displacement.norm() > 0.0) delta = emit_odometry(displacement, pose.heading, cfg.errors, odom_rng);
    compass = compass_model.emit(pose.heading, t_next, compass_rng);
    odom_pos += odometry_to_world(delta, compass);

    switch (cfg.localizer) {
      case LocalizerMode::oracle:
        est.position = pose.position;
        break;
      case LocalizerMode::odometry:
        est.position = world_from_odom.apply(odom_pos);
        break;
      case LocalizerMode::particle_filter: {
        since_update += delta.norm();
        if (since_update >= cfg.rates.localization_distance) {
          const HeightGrid local = sense_local(world, pose, cfg.sensor);
          const SimilarityMap sim = localize_once(local, *matcher, compass, match_params);
          est = step(particles, delta, compass, &sim, cfg.filter.params);
          since_update = 0.0;
          ++log.localization_updates;
        } else if (delta.norm() > 0.0) {
          propagate(particles, delta, compass);
          if (should_resample(particles, cfg.filter.params.resample_distance)) {
            resample(particles, cfg.filter.params.odometry_cov);
            est = estimate(particles, cfg.filter.params.clusters, compass);
          } else {
            // K-means only runs when the cloud changes shape.
            est.position += odometry_to_world(delta, compass);
          }
        }
        est.heading = compass;
        break;
      }
    }

    if (tick.landed) {
      termination = "landed";
    } else if (cfg.failures.compute_restart && t_next >= *cfg.failures.compute_restart) {
      termination = "hw_failsafe";
    } else if (cfg.failures.software_issue && t_next >= *cfg.failures.software_issue) {
      termination = "sw_issue";
    } else if (t_next >= cfg.failures.battery_budget) {
      termination = "low_battery";
    }
    if (!termination.empty()) events.push_back("terminated:" + termination);

    log.rows.push_back({t_next, pose.position, world_from_odom.apply(odom_pos), est.position,
                        mission.state(), join(events)});
  }

  log.outcomes = mission.outcomes();
  log.waypoints = mission.plan().waypoints;
  log.summary = summarize(log.rows, static_cast<int>(log.waypoints.size()));
  return log;
}

}  // namespace gradloc
