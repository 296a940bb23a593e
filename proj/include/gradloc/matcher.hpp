#pragma once

#include <memory>
#include <mutex>
#include <optional>
#include <vector>

#include "gradloc/geodata.hpp"

namespace gradloc {

inline constexpr double kSimilarityFloor = 1e-3;
inline constexpr double kDefaultBlurSigma = 2.0;  // cells

// Half-open cell rectangle [x0, x1) x [y0, y1).
struct CellRect {
  int x0 = 0;
  int y0 = 0;
  int x1 = 0;
  int y1 = 0;

  bool empty() const { return x1 <= x0 || y1 <= y0; }
  bool contains(int ix, int iy) const {
    return ix >= x0 && ix < x1 && iy >= y0 && iy < y1;
  }
  int width() const { return x1 - x0; }
  int height() const { return y1 - y0; }
  bool operator==(const CellRect&) const = default;
};

// Match scores laid over the prior map's cells. The score stored at a cell is
// the score of the template placement that puts the template's anchor cell
// (width/2, height/2) on it, so a peak marks the vehicle position directly.
class SimilarityMap {
 public:
  SimilarityMap() = default;
  SimilarityMap(GridGeometry geo, CellRect valid);

  const GridGeometry& geometry() const { return geo_; }
  const CellRect& valid_region() const { return valid_; }
  bool is_valid(int ix, int iy) const { return valid_.contains(ix, iy); }

  double at(int ix, int iy) const { return scores_[geo_.index(ix, iy)]; }
  double& at(int ix, int iy) { return scores_[geo_.index(ix, iy)]; }
  const std::vector<double>& scores() const { return scores_; }

  // Score of the cell containing p; `outside` when p is off the map or on an
  // invalid cell.
  double value_at(Vec2 p, double outside = kSimilarityFloor) const;

  // Best valid cell, lowest (y, x) on ties. nullopt if nothing is valid.
  std::optional<CellIndex> argmax() const;
  double valid_sum() const;

  bool operator==(const SimilarityMap&) const = default;

 private:
  GridGeometry geo_;
  CellRect valid_;
  std::vector<double> scores_;
};

enum class MatchMethod { automatic, direct, fft };

// Anchor cell of a template: the vehicle cell of a local map.
inline CellIndex template_anchor(const GridGeometry& t) {
  return {t.width / 2, t.height / 2};
}

// Prior edge map prepared for repeated matching. The frequency-domain form
// of the prior is computed once, on first use of the FFT path.
class PriorMatcher {
 public:
  explicit PriorMatcher(EdgeMap prior);
  ~PriorMatcher();
  PriorMatcher(PriorMatcher&&) noexcept;
  PriorMatcher& operator=(PriorMatcher&&) noexcept;

  const EdgeMap& prior() const { return prior_; }

  // Zero-mean correlation of the template against every placement that fits
  // inside the prior. Unobserved template cells are left out of the sum and
  // out of both means.
  SimilarityMap match(const EdgeMap& local,
                      MatchMethod method = MatchMethod::automatic) const;

 private:
  struct Spectrum;
  const Spectrum& spectrum() const;

  EdgeMap prior_;
  mutable std::unique_ptr<Spectrum> spectrum_;
  mutable std::unique_ptr<std::once_flag> spectrum_once_;
};

SimilarityMap match_template(const EdgeMap& local, const EdgeMap& prior,
                             MatchMethod method = MatchMethod::automatic);

// Gaussian smoothing over the valid region. The kernel is truncated at
// ceil(3 sigma) and normalised; at the valid-region border it is folded back
// (half-sample mirror), which keeps both constants and total mass.
SimilarityMap blur(const SimilarityMap& sim, double sigma = kDefaultBlurSigma);

// Min-max rescale of valid cells to [0, 1], floored at kSimilarityFloor.
// Invalid cells get the floor. A constant map becomes uniform 1.
SimilarityMap normalize(const SimilarityMap& sim);

struct MatchParams {
  double edge_threshold = kDefaultEdgeThreshold;
  double blur_sigma = kDefaultBlurSigma;
  MatchMethod method = MatchMethod::automatic;
};

// rotate_to_north -> gradient -> edges -> match -> blur -> normalize.
SimilarityMap localize_once(const HeightGrid& local, const PriorMatcher& prior,
                            double compass_heading,
                            const MatchParams& params = {});
SimilarityMap localize_once(const HeightGrid& local, const EdgeMap& prior_edges,
                            double compass_heading,
                            const MatchParams& params = {});

// Similarity maps travel through the ASCII grid format for inspection.
// Invalid cells become nodata; expects a normalized map (scores >= 0).
HeightGrid similarity_to_grid(const SimilarityMap& sim);

}  // namespace gradloc
