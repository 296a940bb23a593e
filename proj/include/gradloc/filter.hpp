#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <span>
#include <vector>

#include "gradloc/geometry.hpp"
#include "gradloc/matcher.hpp"

namespace gradloc {

inline constexpr std::size_t kDefaultParticleCount = 2000;
inline constexpr double kDefaultResampleDistance = 10.0;  // m of odometry
inline constexpr int kDefaultClusterCount = 3;
inline constexpr double kDefaultOdometryStddev = 0.3;     // m per resample interval

struct Particle {
  Vec2 position;
  double weight = 0.0;
};

// Body-frame translation reported by odometry since the previous sample:
// dx forward, dy left. Rotated into the world by the compass heading.
struct OdometryDelta {
  double dx = 0.0;
  double dy = 0.0;

  double norm() const { return std::hypot(dx, dy); }
};

struct PoseEstimate {
  Vec2 position;
  double heading = 0.0;        // compass pass-through
  double cluster_share = 1.0;  // weight share of the winning cluster
};

// Symmetric 2x2 covariance (m^2).
struct Covariance2 {
  double xx = 0.0;
  double xy = 0.0;
  double yy = 0.0;

  static Covariance2 isotropic(double stddev) {
    return {stddev * stddev, 0.0, stddev * stddev};
  }
  bool is_psd() const;
};

struct ParticleSet {
  std::vector<Particle> particles;
  double distance_since_resample = 0.0;
  std::mt19937_64 rng;

  std::size_t size() const { return particles.size(); }
};

struct FilterParams {
  std::size_t particle_count = kDefaultParticleCount;
  double resample_distance = kDefaultResampleDistance;
  int clusters = kDefaultClusterCount;
  Covariance2 odometry_cov = Covariance2::isotropic(kDefaultOdometryStddev);
};

// n particles from an isotropic Gaussian around center, weights 1/n.
ParticleSet init_particles(Vec2 center, double stddev, std::size_t n,
                           std::uint64_t seed);

// World-frame displacement of a body-frame odometry increment.
inline Vec2 odometry_to_world(OdometryDelta delta, double compass_heading) {
  return rotate({delta.dx, delta.dy}, compass_heading);
}

void propagate(ParticleSet& set, OdometryDelta delta, double compass_heading);

// Weight of each particle := similarity of the cell under it (floor outside).
void weight_update(ParticleSet& set, const SimilarityMap& sim);

bool should_resample(const ParticleSet& set,
                     double threshold = kDefaultResampleDistance);

// Low-variance resampling: offspring indices for `count` draws over the
// (unnormalised) weights with a single offset u in [0, 1).
std::vector<std::size_t> systematic_resample_indices(
    std::span<const double> weights, std::size_t count, double u);

// Systematic resampling, Gaussian perturbation with covariance `cov`,
// weights reset to 1/N, travelled distance reset. Uses the set's generator;
// the seeded overload reseeds it first.
void resample(ParticleSet& set, const Covariance2& cov);
void resample(ParticleSet& set, const Covariance2& cov, std::uint64_t seed);

struct KMeansResult {
  std::vector<Vec2> centroids;
  std::vector<int> assignment;
  int iterations = 0;
};

// Lloyd's algorithm with k-means++ seeding from a fixed-seed generator.
KMeansResult kmeans(std::span<const Vec2> points, int k, std::uint64_t seed,
                    int max_iterations = 50, double tolerance = 1e-6);

// Weighted centroid of the heaviest of k clusters (lower index on ties).
PoseEstimate estimate(const ParticleSet& set, int k = kDefaultClusterCount,
                      double heading = 0.0);

// propagate; weight_update when sim is given; resample when due; estimate.
PoseEstimate step(ParticleSet& set, OdometryDelta delta, double compass_heading,
                  const SimilarityMap* sim, const FilterParams& params = {});

// x,y,weight per particle.
void write_particles_csv(const ParticleSet& set, std::ostream& out);

}  // namespace gradloc
