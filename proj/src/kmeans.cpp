#include <algorithm>
#include <limits>
#include <random>

#include "gradloc/errors.hpp"
#include "gradloc/filter.hpp"

namespace gradloc {
namespace {

double sq_dist(Vec2 a, Vec2 b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

int nearest(Vec2 p, const std::vector<Vec2>& centroids) {
  int best = 0;
  double best_d = sq_dist(p, centroids[0]);
  for (int c = 1; c < static_cast<int>(centroids.size()); ++c) {
    const double d = sq_dist(p, centroids[c]);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best;
}

}  // namespace

KMeansResult kmeans(std::span<const Vec2> points, int k, std::uint64_t seed,
                    int max_iterations, double tolerance) {
  const std::size_t n = points.size();
  if (k < 1 || static_cast<std::size_t>(k) > n) {
    throw InvalidInput("k must be in [1, number of points]");
  }
  std::mt19937_64 rng(seed);
  KMeansResult r;
  r.centroids.reserve(k);

  // k-means++ seeding. When every remaining point coincides with a chosen
  // centre the extra centres duplicate the first one and stay empty.
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  r.centroids.push_back(points[pick(rng)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = sq_dist(points[i], r.centroids[0]);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  while (static_cast<int>(r.centroids.size()) < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    if (!(total > 0.0)) {
      r.centroids.push_back(r.centroids.front());
      continue;
    }
    const double target = uniform(rng) * total;
    double acc = 0.0;
    std::size_t chosen = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      acc += d2[i];
      if (acc > target) {
        chosen = i;
        break;
      }
    }
    r.centroids.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], sq_dist(points[i], points[chosen]));
    }
  }

  r.assignment.assign(n, 0);
  std::vector<double> sx(k), sy(k);
  std::vector<std::size_t> count(k);
  for (int it = 0; it < max_iterations; ++it) {
    for (std::size_t i = 0; i < n; ++i) r.assignment[i] = nearest(points[i], r.centroids);
    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const int c = r.assignment[i];
      sx[c] += points[i].x;
      sy[c] += points[i].y;
      ++count[c];
    }
    double moved = 0.0;
    for (int c = 0; c < k; ++c) {
      if (count[c] == 0) continue;  // empty cluster keeps its centre
      const Vec2 next{sx[c] / count[c], sy[c] / count[c]};
      moved = std::max(moved, distance(next, r.centroids[c]));
      r.centroids[c] = next;
    }
    r.iterations = it + 1;
    if (moved < tolerance) break;
  }
  for (std::size_t i = 0; i < n; ++i) r.assignment[i] = nearest(points[i], r.centroids);
  return r;
}

}  // namespace gradloc
