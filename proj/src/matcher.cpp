#include "gradloc/matcher.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "gradloc/errors.hpp"

namespace gradloc {

SimilarityMap::SimilarityMap(GridGeometry geo, CellRect valid)
    : geo_(geo), valid_(valid), scores_(geo.size(), 0.0) {
  geo_.validate();
  valid_.x0 = std::clamp(valid_.x0, 0, geo_.width);
  valid_.x1 = std::clamp(valid_.x1, valid_.x0, geo_.width);
  valid_.y0 = std::clamp(valid_.y0, 0, geo_.height);
  valid_.y1 = std::clamp(valid_.y1, valid_.y0, geo_.height);
}

double SimilarityMap::value_at(Vec2 p, double outside) const {
  const auto cell = geo_.cell_of(p);
  if (!cell || !is_valid(cell->x, cell->y)) return outside;
  return at(cell->x, cell->y);
}

std::optional<CellIndex> SimilarityMap::argmax() const {
  std::optional<CellIndex> best;
  double best_v = -std::numeric_limits<double>::infinity();
  for (int iy = valid_.y0; iy < valid_.y1; ++iy) {
    for (int ix = valid_.x0; ix < valid_.x1; ++ix) {
      if (at(ix, iy) > best_v) {
        best_v = at(ix, iy);
        best = CellIndex{ix, iy};
      }
    }
  }
  return best;
}

double SimilarityMap::valid_sum() const {
  double s = 0.0;
  for (int iy = valid_.y0; iy < valid_.y1; ++iy) {
    for (int ix = valid_.x0; ix < valid_.x1; ++ix) s += at(ix, iy);
  }
  return s;
}

namespace {

// Mirror an index into [0, n) with half-sample symmetry: -1 -> 0, n -> n-1.
int reflect(int i, int n) {
  const int period = 2 * n;
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - 1 - i;
}

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    k[i + radius] = std::exp(-0.5 * (i * i) / (sigma * sigma));
    sum += k[i + radius];
  }
  for (auto& v : k) v /= sum;
  return k;
}

// One separable pass over `n` samples spaced `stride` apart.
void blur_line(const double* src, double* dst, int n, std::ptrdiff_t stride,
               const std::vector<double>& k) {
  const int radius = static_cast<int>(k.size() / 2);
  for (int i = 0; i < n; ++i) {
    double acc = 0.0;
    for (int j = -radius; j <= radius; ++j) {
      acc += k[j + radius] * src[reflect(i + j, n) * stride];
    }
    dst[i * stride] = acc;
  }
}

}  // namespace

SimilarityMap blur(const SimilarityMap& sim, double sigma) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidInput("blur sigma must be >= 0");
  }
  const CellRect& v = sim.valid_region();
  if (sigma == 0.0 || v.empty()) return sim;

  const auto k = gaussian_kernel(sigma);
  const int w = v.width();
  const int h = v.height();
  std::vector<double> a(static_cast<std::size_t>(w) * h);
  std::vector<double> b(a.size());
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) a[static_cast<std::size_t>(y) * w + x] = sim.at(v.x0 + x, v.y0 + y);
  }
  for (int y = 0; y < h; ++y) {
    blur_line(&a[static_cast<std::size_t>(y) * w], &b[static_cast<std::size_t>(y) * w], w, 1, k);
  }
  for (int x = 0; x < w; ++x) blur_line(&b[x], &a[x], h, w, k);

  SimilarityMap out = sim;
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(v.x0 + x, v.y0 + y) = a[static_cast<std::size_t>(y) * w + x];
  }
  return out;
}

SimilarityMap normalize(const SimilarityMap& sim) {
  const CellRect& v = sim.valid_region();
  if (v.empty()) throw InvalidInput("similarity map has no valid cells");
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int iy = v.y0; iy < v.y1; ++iy) {
    for (int ix = v.x0; ix < v.x1; ++ix) {
      lo = std::min(lo, sim.at(ix, iy));
      hi = std::max(hi, sim.at(ix, iy));
    }
  }
  SimilarityMap out(sim.geometry(), v);
  const auto& geo = sim.geometry();
  const double range = hi - lo;
  for (int iy = 0; iy < geo.height; ++iy) {
    for (int ix = 0; ix < geo.width; ++ix) {
      double value = kSimilarityFloor;
      if (v.contains(ix, iy)) {
        value = range > 0.0 ? (sim.at(ix, iy) - lo) / range : 1.0;
        value = std::max(value, kSimilarityFloor);
      }
      out.at(ix, iy) = value;
    }
  }
  return out;
}

SimilarityMap localize_once(const HeightGrid& local, const PriorMatcher& prior,
                            double compass_heading, const MatchParams& params) {
  const HeightGrid north = rotate_to_north(local, compass_heading);
  const EdgeMap edges = edges_from_heights(north, params.edge_threshold);
  return normalize(blur(prior.match(edges, params.method), params.blur_sigma));
}

SimilarityMap localize_once(const HeightGrid& local, const EdgeMap& prior_edges,
                            double compass_heading, const MatchParams& params) {
  return localize_once(local, PriorMatcher(prior_edges), compass_heading, params);
}

HeightGrid similarity_to_grid(const SimilarityMap& sim) {
  HeightGrid grid(sim.geometry());
  const CellRect& v = sim.valid_region();
  for (int iy = v.y0; iy < v.y1; ++iy) {
    for (int ix = v.x0; ix < v.x1; ++ix) grid.set(ix, iy, sim.at(ix, iy));
  }
  return grid;
}

}  // namespace gradloc
