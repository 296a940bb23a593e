#include "gradloc/mission.hpp"

#include <cmath>
#include <utility>

#include "gradloc/errors.hpp"

namespace gradloc {
namespace {

struct StateName {
  MissionState state;
  const char* name;
};

constexpr StateName kStateNames[] = {
    {MissionState::PrepareTakeoff, "PrepareTakeoff"},
    {MissionState::WaitForStart, "WaitForStart"},
    {MissionState::WaypointNavigation, "WaypointNavigation"},
    {MissionState::WaypointDetection, "WaypointDetection"},
    {MissionState::SearchPattern, "SearchPattern"},
    {MissionState::ReturnHome, "ReturnHome"},
    {MissionState::Land, "Land"},
};

struct EventName {
  MissionEvent event;
  const char* name;
};

constexpr EventName kEventNames[] = {
    {MissionEvent::takeoff_success, "takeoff_success"},
    {MissionEvent::start_mission, "start_mission"},
    {MissionEvent::waypoint_reached, "waypoint_reached"},
    {MissionEvent::detection, "detection"},
    {MissionEvent::detection_too_far_or_none, "detection_too_far_or_none"},
    {MissionEvent::search_complete_or_timeout, "search_complete_or_timeout"},
    {MissionEvent::all_waypoints_cleared, "all_waypoints_cleared"},
    {MissionEvent::home_reached, "home_reached"},
    {MissionEvent::return_home_service, "return_home_service"},
};

bool known(MissionEvent e) {
  for (const auto& n : kEventNames) {
    if (n.event == e) return true;
  }
  return false;
}

bool known(MissionState s) {
  for (const auto& n : kStateNames) {
    if (n.state == s) return true;
  }
  return false;
}

bool finite(const Rigid2& r) {
  return std::isfinite(r.yaw) && std::isfinite(r.translation.x) &&
         std::isfinite(r.translation.y);
}

}  // namespace

std::string to_string(MissionState s) {
  for (const auto& n : kStateNames) {
    if (n.state == s) return n.name;
  }
  throw InvalidInput("unknown mission state");
}

std::string to_string(MissionEvent e) {
  for (const auto& n : kEventNames) {
    if (n.event == e) return n.name;
  }
  throw InvalidInput("unknown mission event");
}

MissionState state_from_string(const std::string& s) {
  for (const auto& n : kStateNames) {
    if (s == n.name) return n.state;
  }
  throw InvalidInput("unknown mission state: " + s);
}

MissionEvent event_from_string(const std::string& s) {
  for (const auto& n : kEventNames) {
    if (s == n.name) return n.event;
  }
  throw InvalidInput("unknown mission event: " + s);
}

Transition fsm_step(MissionState state, MissionEvent event) {
  if (!known(event)) throw InvalidInput("unknown mission event");
  if (!known(state)) throw InvalidInput("unknown mission state");
  using S = MissionState;
  using E = MissionEvent;
  switch (state) {
    case S::PrepareTakeoff:
      if (event == E::takeoff_success) return {S::WaitForStart, true};
      break;
    case S::WaitForStart:
      if (event == E::start_mission) return {S::WaypointNavigation, true};
      break;
    case S::WaypointNavigation:
      if (event == E::waypoint_reached) return {S::WaypointDetection, true};
      if (event == E::all_waypoints_cleared) return {S::ReturnHome, true};
      if (event == E::return_home_service) return {S::ReturnHome, true};
      break;
    case S::WaypointDetection:
      if (event == E::detection) return {S::WaypointNavigation, true};
      if (event == E::detection_too_far_or_none) return {S::SearchPattern, true};
      break;
    case S::SearchPattern:
      if (event == E::search_complete_or_timeout) return {S::WaypointNavigation, true};
      if (event == E::return_home_service) return {S::ReturnHome, true};
      break;
    case S::ReturnHome:
      if (event == E::home_reached) return {S::Land, true};
      break;
    case S::Land:
      break;
  }
  return {state, false};
}

void FrameSet::validate() const {
  if (!finite(world_from_odom) || !finite(odom_from_body) || !finite(world_from_corrected)) {
    throw InvalidInput("frame transforms must be finite");
  }
}

Vec2 virtual_goal(const PoseEstimate& est, const FrameSet& frames, Vec2 target_world,
                  double step) {
  if (!(step > 0.0) || !std::isfinite(step)) throw InvalidInput("step must be positive");
  frames.validate();
  const Vec2 body_odom = frames.odom_from_body.translation;
  const Vec2 dir = target_world - est.position;
  const double d = dir.norm();
  if (!(d > 0.0)) return body_odom;
  const Vec2 offset_world = dir * (std::min(step, d) / d);
  // Offset is expressed in W; only the rotation of O relative to W applies.
  return body_odom + frames.world_from_odom.inverse().apply_vector(offset_world);
}

void MissionConfig::validate() const {
  auto positive = [](double v, const char* what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(std::string(what) + " must be positive");
  };
  positive(trigger_radius, "trigger_radius");
  positive(detector_range, "detector_range");
  positive(detection_dwell, "detection_dwell");
  positive(search_spacing, "search_spacing");
  positive(search_timeout, "search_timeout");
  positive(goal_tolerance, "goal_tolerance");
  positive(virtual_step, "virtual_step");
  if (!(search_size >= search_spacing)) throw InvalidInput("search_size must be >= search_spacing");
  if (!(false_negative >= 0.0 && false_negative <= 1.0)) {
    throw InvalidInput("false_negative must be in [0, 1]");
  }
  if (!(takeoff_time >= 0.0) || !(start_delay >= 0.0)) {
    throw InvalidInput("takeoff_time and start_delay must be >= 0");
  }
}

std::optional<MissionEvent> detection_check(const DetectionInput& in, const Waypoint& waypoint,
                                            const MissionConfig& cfg, std::mt19937_64* rng) {
  if (!(waypoint.uncertainty > 0.0)) throw InvalidInput("waypoint radius must be positive");
  switch (in.state) {
    case MissionState::WaypointNavigation:
      if (distance(in.estimated, waypoint.expected) <= cfg.trigger_radius) {
        return MissionEvent::waypoint_reached;
      }
      return std::nullopt;
    case MissionState::WaypointDetection:
    case MissionState::SearchPattern: {
      if (distance(in.truth, in.flag) <= cfg.detector_range) {
        bool missed = false;
        if (cfg.false_negative > 0.0 && rng != nullptr) {
          missed = std::uniform_real_distribution<double>(0.0, 1.0)(*rng) < cfg.false_negative;
        }
        if (!missed) return MissionEvent::detection;
      }
      if (in.state == MissionState::WaypointDetection && in.dwell >= cfg.detection_dwell) {
        return MissionEvent::detection_too_far_or_none;
      }
      return std::nullopt;
    }
    default:
      return std::nullopt;
  }
}

std::vector<Vec2> search_pattern(Vec2 center, double size, double spacing) {
  if (!(spacing > 0.0) || !std::isfinite(spacing) || !std::isfinite(size)) {
    throw InvalidInput("search spacing must be positive");
  }
  if (!(size >= spacing)) throw InvalidInput("search size must be >= spacing");
  const double outer = size / 2.0;
  const double inner = spacing / 2.0;
  const int loops = static_cast<int>(std::ceil((outer - inner) / spacing - 1e-9)) + 1;
  std::vector<Vec2> goals;
  for (int l = 0; l < loops; ++l) {
    const double h = loops == 1 ? outer : inner + (outer - inner) * l / (loops - 1);
    const Vec2 corners[4] = {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
    for (const Vec2& c : corners) goals.push_back(center + c);
    if (loops > 1) goals.push_back(center + corners[0]);
  }
  return goals;
}

MissionExecutive::MissionExecutive(MissionPlan plan, MissionConfig cfg, std::uint64_t seed)
    : plan_(std::move(plan)), cfg_(cfg), rng_(seed) {
  cfg_.validate();
  if (plan_.flags.empty()) {
    for (const auto& w : plan_.waypoints) plan_.flags.push_back(w.expected);
  }
  if (plan_.flags.size() != plan_.waypoints.size()) {
    throw InvalidInput("one flag position per waypoint is required");
  }
  for (const auto& w : plan_.waypoints) {
    if (!(w.uncertainty > 0.0)) throw InvalidInput("waypoint radius must be positive");
  }
  outcomes_.resize(plan_.waypoints.size());
}

bool MissionExecutive::apply(MissionEvent e, double t, TickOutput& out) {
  const Transition tr = fsm_step(state_, e);
  std::string line = std::to_string(t) + " " + to_string(state_) + " " + to_string(e);
  if (!tr.accepted) {
    log_.push_back(line + " ignored");
    return false;
  }
  log_.push_back(line + " -> " + to_string(tr.next));
  out.events.push_back(to_string(e));
  state_ = tr.next;
  entered_ = t;
  return true;
}

void MissionExecutive::clear_waypoint(bool detected, TickOutput& out) {
  if (index_ >= plan_.waypoints.size()) return;
  plan_.waypoints[index_].detected = detected;
  outcomes_[index_].detected = detected;
  out.events.push_back(detected ? "waypoint_cleared:detected" : "waypoint_cleared:missed");
  ++index_;
  overflight_.reset();
  search_goals_.clear();
  search_next_ = 0;
}

void MissionExecutive::note_terminal(const TickInput& in) {
  if (index_ >= plan_.waypoints.size()) return;
  auto& o = outcomes_[index_];
  if (o.terminal_distance) return;
  o.terminal_distance = distance(in.truth, plan_.waypoints[index_].expected);
}

bool MissionExecutive::inject(MissionEvent e, double t) {
  TickOutput ignored;
  return apply(e, t, ignored);
}

TickOutput MissionExecutive::tick(const TickInput& in) {
  TickOutput out;
  const double elapsed = in.t - entered_;
  switch (state_) {
    case MissionState::PrepareTakeoff:
      if (elapsed >= cfg_.takeoff_time) apply(MissionEvent::takeoff_success, in.t, out);
      break;
    case MissionState::WaitForStart:
      if (elapsed >= cfg_.start_delay) apply(MissionEvent::start_mission, in.t, out);
      break;
    case MissionState::WaypointNavigation: {
      if (overflight_) {
        if (distance(in.estimated, *overflight_) <= cfg_.goal_tolerance) {
          clear_waypoint(true, out);
        } else {
          out.target = *overflight_;
          break;
        }
      }
      if (index_ >= plan_.waypoints.size()) {
        apply(MissionEvent::all_waypoints_cleared, in.t, out);
        out.target = plan_.home;
        break;
      }
      const Waypoint& wp = plan_.waypoints[index_];
      out.target = wp.expected;
      DetectionInput d{state_, in.estimated, in.truth, plan_.flags[index_], 0.0};
      if (auto ev = detection_check(d, wp, cfg_, &rng_)) apply(*ev, in.t, out);
      break;
    }
    case MissionState::WaypointDetection: {
      const Waypoint& wp = plan_.waypoints[index_];
      out.target = wp.expected;
      if (distance(in.estimated, wp.expected) <= cfg_.goal_tolerance) note_terminal(in);
      DetectionInput d{state_, in.estimated, in.truth, plan_.flags[index_], elapsed};
      const auto ev = detection_check(d, wp, cfg_, &rng_);
      if (ev == MissionEvent::detection) {
        note_terminal(in);
        // The camera reports the flag relative to the vehicle.
        overflight_ = in.estimated + (plan_.flags[index_] - in.truth);
        apply(*ev, in.t, out);
        out.target = *overflight_;
      } else if (ev == MissionEvent::detection_too_far_or_none) {
        note_terminal(in);
        apply(*ev, in.t, out);
        search_goals_ = search_pattern(wp.expected, cfg_.search_size, cfg_.search_spacing);
        search_next_ = 0;
        outcomes_[index_].searched = true;
        out.target = search_goals_.front();
      }
      break;
    }
    case MissionState::SearchPattern: {
      DetectionInput d{state_, in.estimated, in.truth, plan_.flags[index_], elapsed};
      const auto ev = detection_check(d, plan_.waypoints[index_], cfg_, &rng_);
      if (ev == MissionEvent::detection) {
        // Detection interrupts the search; the remaining goals are dropped.
        const Vec2 over = in.estimated + (plan_.flags[index_] - in.truth);
        out.events.push_back("detection");
        apply(MissionEvent::search_complete_or_timeout, in.t, out);
        search_goals_.clear();
        overflight_ = over;
        out.target = over;
        break;
      }
      while (search_next_ < search_goals_.size() &&
             distance(in.estimated, search_goals_[search_next_]) <= cfg_.goal_tolerance) {
        ++search_next_;
      }
      if (search_next_ >= search_goals_.size() || elapsed >= cfg_.search_timeout) {
        apply(MissionEvent::search_complete_or_timeout, in.t, out);
        clear_waypoint(false, out);
        break;
      }
      out.target = search_goals_[search_next_];
      break;
    }
    case MissionState::ReturnHome:
      out.target = plan_.home;
      if (distance(in.estimated, plan_.home) <= cfg_.goal_tolerance) {
        apply(MissionEvent::home_reached, in.t, out);
        out.target.reset();
      }
      break;
    case MissionState::Land:
      out.landed = true;
      break;
  }
  return out;
}

}  // namespace gradloc
