#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "gradloc/filter.hpp"
#include "gradloc/geometry.hpp"

namespace gradloc {

enum class MissionState {
  PrepareTakeoff,
  WaitForStart,
  WaypointNavigation,
  WaypointDetection,
  SearchPattern,
  ReturnHome,
  Land,
};

enum class MissionEvent {
  takeoff_success,
  start_mission,
  waypoint_reached,
  detection,
  detection_too_far_or_none,
  search_complete_or_timeout,
  all_waypoints_cleared,
  home_reached,
  return_home_service,
};

inline constexpr std::array kAllStates = {
    MissionState::PrepareTakeoff,     MissionState::WaitForStart,
    MissionState::WaypointNavigation, MissionState::WaypointDetection,
    MissionState::SearchPattern,      MissionState::ReturnHome,
    MissionState::Land,
};

inline constexpr std::array kAllEvents = {
    MissionEvent::takeoff_success,
    MissionEvent::start_mission,
    MissionEvent::waypoint_reached,
    MissionEvent::detection,
    MissionEvent::detection_too_far_or_none,
    MissionEvent::search_complete_or_timeout,
    MissionEvent::all_waypoints_cleared,
    MissionEvent::home_reached,
    MissionEvent::return_home_service,
};

std::string to_string(MissionState s);
std::string to_string(MissionEvent e);
MissionState state_from_string(const std::string& s);
// Throws InvalidInput for names outside the event alphabet.
MissionEvent event_from_string(const std::string& s);

struct Transition {
  MissionState next;
  bool accepted;  // false: no such edge, state unchanged
};

// The mission control graph. Pairs without an edge are no-ops.
Transition fsm_step(MissionState state, MissionEvent event);

inline constexpr double kWaypointTriggerRadius = 15.0;
inline constexpr double kDefaultWaypointUncertainty = 20.0;
inline constexpr double kDefaultVirtualGoalStep = 15.0;

struct Waypoint {
  Vec2 expected;
  double uncertainty = kDefaultWaypointUncertainty;
  bool detected = false;
};

// Frame bookkeeping: W georeferenced world, O odometry (fixed to W at
// takeoff), B body as tracked by odometry, B_correct the localizer's body.
struct FrameSet {
  Rigid2 world_from_odom;
  Rigid2 odom_from_body;
  Rigid2 world_from_corrected;

  void validate() const;
};

// Goal in the odometry frame: a step of `step` metres from the odometry-frame
// body position, along the world direction from the estimate to the target.
// Within `step` of the target the goal lands on the target itself.
Vec2 virtual_goal(const PoseEstimate& est, const FrameSet& frames,
                  Vec2 target_world, double step = kDefaultVirtualGoalStep);

struct MissionConfig {
  double trigger_radius = kWaypointTriggerRadius;
  double detector_range = 10.0;
  double detection_dwell = 20.0;   // s in detection before giving up
  double false_negative = 0.0;     // per check
  double search_size = 40.0;
  double search_spacing = 10.0;
  double search_timeout = 120.0;   // s
  double goal_tolerance = 2.0;     // m, arrival at intermediate goals
  double virtual_step = kDefaultVirtualGoalStep;
  double takeoff_time = 5.0;
  double start_delay = 1.0;

  void validate() const;
};

struct DetectionInput {
  MissionState state = MissionState::WaypointNavigation;
  Vec2 estimated;      // localizer position
  Vec2 truth;          // true vehicle position
  Vec2 flag;           // true flag position
  double dwell = 0.0;  // s spent in detection so far
};

// Navigation: waypoint_reached once the estimate is within the trigger
// radius of the expected position. Detection: detection once the true flag
// is within detector range, detection_too_far_or_none after the dwell.
std::optional<MissionEvent> detection_check(const DetectionInput& in,
                                            const Waypoint& waypoint,
                                            const MissionConfig& cfg,
                                            std::mt19937_64* rng = nullptr);

// Outward square spiral of closed loops around center. Every point of the
// size x size square lies within spacing/2 of the flown path.
std::vector<Vec2> search_pattern(Vec2 center, double size, double spacing);

struct MissionPlan {
  Vec2 home;
  std::vector<Waypoint> waypoints;
  std::vector<Vec2> flags;  // true flag positions, one per waypoint
};

struct WaypointOutcome {
  bool detected = false;
  bool searched = false;
  // True distance to the expected position when the vehicle first believed
  // it had arrived there, or at detection if that came first.
  std::optional<double> terminal_distance;
};

struct TickInput {
  double t = 0.0;
  Vec2 estimated;
  Vec2 truth;
};

struct TickOutput {
  std::optional<Vec2> target;  // world frame; nullopt = hold position
  std::vector<std::string> events;
  bool landed = false;
};

// Runs the state machine against localizer and ground-truth positions and
// picks the world-frame target for each tick. Overflight after a detection
// is a sub-behaviour of navigation.
class MissionExecutive {
 public:
  MissionExecutive(MissionPlan plan, MissionConfig cfg, std::uint64_t seed);

  TickOutput tick(const TickInput& in);
  // Externally injected event (returnHomeSrv). Returns whether it applied.
  bool inject(MissionEvent e, double t);

  MissionState state() const { return state_; }
  std::size_t waypoint_index() const { return index_; }
  const std::vector<WaypointOutcome>& outcomes() const { return outcomes_; }
  const std::vector<std::string>& log() const { return log_; }
  const MissionPlan& plan() const { return plan_; }

 private:
  bool apply(MissionEvent e, double t, TickOutput& out);
  void clear_waypoint(bool detected, TickOutput& out);
  void note_terminal(const TickInput& in);

  MissionPlan plan_;
  MissionConfig cfg_;
  std::mt19937_64 rng_;
  MissionState state_ = MissionState::PrepareTakeoff;
  double entered_ = 0.0;
  std::size_t index_ = 0;
  std::optional<Vec2> overflight_;
  std::vector<Vec2> search_goals_;
  std::size_t search_next_ = 0;
  std::vector<WaypointOutcome> outcomes_;
  std::vector<std::string> log_;
};

}  // namespace gradloc
