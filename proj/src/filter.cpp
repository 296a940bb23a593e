#include "gradloc/filter.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "gradloc/errors.hpp"

namespace gradloc {

bool Covariance2::is_psd() const {
  if (!std::isfinite(xx) || !std::isfinite(xy) || !std::isfinite(yy)) return false;
  const double tol = 1e-12 * std::max({1.0, std::abs(xx), std::abs(yy)});
  return xx >= 0.0 && yy >= 0.0 && xx * yy - xy * xy >= -tol;
}

ParticleSet init_particles(Vec2 center, double stddev, std::size_t n,
                           std::uint64_t seed) {
  if (n == 0) throw InvalidInput("particle count must be at least 1");
  if (!(stddev >= 0.0) || !std::isfinite(stddev)) {
    throw InvalidInput("initial stddev must be >= 0");
  }
  ParticleSet set;
  set.rng.seed(seed);
  set.particles.resize(n);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double w = 1.0 / static_cast<double>(n);
  for (auto& p : set.particles) {
    const double ex = normal(set.rng);
    const double ey = normal(set.rng);
    p.position = {center.x + stddev * ex, center.y + stddev * ey};
    p.weight = w;
  }
  return set;
}

void propagate(ParticleSet& set, OdometryDelta delta, double compass_heading) {
  if (!std::isfinite(compass_heading)) throw InvalidInput("compass must be finite");
  if (!std::isfinite(delta.dx) || !std::isfinite(delta.dy)) {
    throw InvalidInput("odometry delta must be finite");
  }
  if (delta.dx == 0.0 && delta.dy == 0.0) return;
  const Vec2 shift = odometry_to_world(delta, compass_heading);
  for (auto& p : set.particles) p.position += shift;
  set.distance_since_resample += delta.norm();
}

void weight_update(ParticleSet& set, const SimilarityMap& sim) {
  for (auto& p : set.particles) p.weight = sim.value_at(p.position);
}

bool should_resample(const ParticleSet& set, double threshold) {
  return set.distance_since_resample >= threshold;
}

std::vector<std::size_t> systematic_resample_indices(
    std::span<const double> weights, std::size_t count, double u) {
  if (weights.empty()) throw InvalidInput("no weights to resample");
  long double total = 0.0L;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw InvalidInput("invalid particle weight");
    total += w;
  }
  if (!(total > 0.0L)) throw InvalidInput("all particle weights are zero");

  // Pointer k selects the particle whose scaled cumulative interval contains
  // u + k, with intervals measured in units of 1/count.
  std::vector<std::size_t> out;
  out.reserve(count);
  const long double scale = static_cast<long double>(count) / total;
  long double upper = 0.0L;
  std::size_t i = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const long double target = static_cast<long double>(u) + static_cast<long double>(k);
    while (i < weights.size() && upper + weights[i] * scale <= target) {
      upper += weights[i] * scale;
      ++i;
    }
    out.push_back(std::min(i, weights.size() - 1));
  }
  return out;
}

void resample(ParticleSet& set, const Covariance2& cov) {
  if (!cov.is_psd()) throw InvalidInput("odometry covariance is not PSD");
  const std::size_t n = set.particles.size();
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = set.particles[i].weight;

  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  const auto idx = systematic_resample_indices(weights, n, uniform(set.rng));

  // Cholesky factor of the 2x2 covariance.
  const double a = std::sqrt(std::max(cov.xx, 0.0));
  const double b = a > 0.0 ? cov.xy / a : 0.0;
  const double c = std::sqrt(std::max(cov.yy - b * b, 0.0));

  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<Particle> next(n);
  const double w = 1.0 / static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double z1 = normal(set.rng);
    const double z2 = normal(set.rng);
    const Vec2 base = set.particles[idx[k]].position;
    next[k].position = {base.x + a * z1, base.y + b * z1 + c * z2};
    next[k].weight = w;
  }
  set.particles = std::move(next);
  set.distance_since_resample = 0.0;
}

void resample(ParticleSet& set, const Covariance2& cov, std::uint64_t seed) {
  set.rng.seed(seed);
  resample(set, cov);
}

PoseEstimate estimate(const ParticleSet& set, int k, double heading) {
  const std::size_t n = set.particles.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InvalidInput("cluster count must be in [1, particle count]");
  }
  std::vector<Vec2> points(n);
  for (std::size_t i = 0; i < n; ++i) points[i] = set.particles[i].position;

  // Clustering is seeded independently of the particle generator so that the
  // estimate is a pure function of the particle set.
  constexpr std::uint64_t kClusterSeed = 0x9e3779b97f4a7c15ULL;
  const auto km = kmeans(points, k, kClusterSeed);

  std::vector<double> mass(k, 0.0);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mass[km.assignment[i]] += set.particles[i].weight;
    total += set.particles[i].weight;
  }
  int best = 0;
  for (int c = 1; c < k; ++c) {
    if (mass[c] > mass[best]) best = c;
  }

  PoseEstimate est;
  est.heading = heading;
  if (!(total > 0.0) || !(mass[best] > 0.0)) {
    // Degenerate weights: fall back to the unweighted centroid of the cluster.
    double cx = 0.0, cy = 0.0;
    std::size_t m = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (km.assignment[i] != best) continue;
      cx += points[i].x;
      cy += points[i].y;
      ++m;
    }
    est.position = {cx / static_cast<double>(m), cy / static_cast<double>(m)};
    est.cluster_share = static_cast<double>(m) / static_cast<double>(n);
    return est;
  }
  double sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (km.assignment[i] != best) continue;
    sx += set.particles[i].weight * points[i].x;
    sy += set.particles[i].weight * points[i].y;
  }
  est.position = {sx / mass[best], sy / mass[best]};
  est.cluster_share = mass[best] / total;
  return est;
}

PoseEstimate step(ParticleSet& set, OdometryDelta delta, double compass_heading,
                  const SimilarityMap* sim, const FilterParams& params) {
  propagate(set, delta, compass_heading);
  if (sim) weight_update(set, *sim);
  if (should_resample(set, params.resample_distance)) {
    resample(set, params.odometry_cov);
  }
  return estimate(set, params.clusters, compass_heading);
}

void write_particles_csv(const ParticleSet& set, std::ostream& out) {
  out << "x,y,weight\n";
  out.precision(17);
  for (const auto& p : set.particles) {
    out << p.position.x << ',' << p.position.y << ',' << p.weight << '\n';
  }
}

}  // namespace gradloc
