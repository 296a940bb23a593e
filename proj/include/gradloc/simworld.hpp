#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "gradloc/filter.hpp"
#include "gradloc/geodata.hpp"
#include "gradloc/geometry.hpp"

namespace gradloc {

enum class Terrain { urban, forest, open_field };

std::string to_string(Terrain t);
Terrain terrain_from_string(const std::string& s);

// Prism standing on flat ground. Boxes have corners on the 1 m lattice and
// discs are centred on lattice cell centres with half-integer radii, so the
// footprints line up with 1 m rasters.
struct Obstacle {
  enum class Shape { box, disc };
  Shape shape = Shape::box;
  Rect box;          // footprint for boxes
  Vec2 center;       // discs
  double radius = 0.0;
  double height = 0.0;

  Rect bounds() const;
  bool covers(Vec2 p) const;           // closed footprint
  bool overlaps(const Rect& r) const;  // positive-area intersection
};

struct TerrainRegion {
  Rect area;
  Terrain terrain = Terrain::open_field;
  double density = 0.0;  // obstacles per hectare
};

struct WorldSpec {
  Rect extent{{0.0, 0.0}, {500.0, 500.0}};
  std::vector<TerrainRegion> regions;
  std::uint64_t seed = 1;
  double truth_resolution = 1.0;
};

struct WorldModel {
  Rect extent;
  std::vector<TerrainRegion> regions;
  std::vector<Obstacle> obstacles;
  std::uint64_t seed = 0;
  HeightGrid truth;  // exact per-cell max height at truth_resolution

  Terrain terrain_at(Vec2 p) const;
};

inline constexpr double kEvidenceHeight = 5.0;

// Urban regions get boxes 5-20 m tall, forest regions discs 8-25 m tall, open
// field nothing. Urban/forest regions of at least 50 x 50 m always hold one
// obstacle taller than kEvidenceHeight.
WorldModel build_world(const WorldSpec& spec);

// Exact per-cell max obstacle height over the world extent; fully observed.
HeightGrid sample_prior_dem(const WorldModel& world,
                            double resolution = kDefaultResolution);

struct TruePose {
  Vec2 position;
  double heading = 0.0;
};

inline constexpr double kMinLocalExtent = 30.0;
inline constexpr double kMaxLocalExtent = 60.0;

struct SensorConfig {
  double extent = 40.0;  // local map side (m)
  double resolution = kDefaultResolution;
  double noise_stddev = 0.0;
  double dropout = 0.0;   // per-cell probability of losing an observation
  double range = 60.0;    // m, horizontal
  double altitude = 40.0; // m AGL used for line-of-sight
  bool occlusion = true;
  bool allow_any_extent = false;
  std::uint64_t seed = 0;

  void validate() const;
  int cells() const;
};

// Body-aligned local heightmap around the vehicle. Cell (n/2, n/2) is the
// truth cell containing the vehicle; local cell offset b maps to world point
// centre + R(heading) * b. Unobserved cells are out of range, occluded,
// dropped, or off the world.
HeightGrid sense_local(const WorldModel& world, const TruePose& pose,
                       const SensorConfig& cfg);

// Straight-line line-of-sight test from the sensor to the top of the target
// point through the truth heightmap.
bool line_of_sight(const WorldModel& world, Vec2 from, double from_height,
                   Vec2 to, double to_height);

inline constexpr double kDefaultMaxSpeed = 2.0;  // m/s

TruePose step_motion(const TruePose& pose, Vec2 velocity, double dt,
                     double max_speed = kDefaultMaxSpeed);

struct ErrorModel {
  double odometry_scale_error = 0.0;  // fraction
  double odometry_noise = 0.0;        // m per sqrt(m) travelled
  double compass_bias_amplitude = 0.0;  // rad
  double compass_bias_rate = 0.0;       // rad/s, max |d bias / dt|
  double compass_noise = 0.0;           // rad, white
  double compass_bias_phase = -1.0;     // rad; negative draws from the seed
  std::uint64_t seed = 0;

  void validate() const;
};

inline constexpr double kMaxCompassBias = 30.0 * M_PI / 180.0;

// Odometry reported for a true world displacement flown at the true heading:
// (1 + scale) * R(-heading) * displacement plus Gaussian noise with variance
// odometry_noise^2 * |displacement| per axis.
OdometryDelta emit_odometry(Vec2 true_displacement, double true_heading,
                            const ErrorModel& model, std::mt19937_64& rng);

// Slowly varying bias A * sin(w t + phase) with w = rate / A, so |bias| <= A
// and |d bias / dt| <= rate.
class CompassModel {
 public:
  explicit CompassModel(const ErrorModel& model);
  double bias(double t) const;
  double emit(double true_heading, double t, std::mt19937_64& rng) const;

 private:
  ErrorModel model_;
  double phase_ = 0.0;
};

double emit_compass(double true_heading, double t, const ErrorModel& model,
                    std::mt19937_64& rng);

}  // namespace gradloc
