#include "gradloc/geodata.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gradloc/errors.hpp"

namespace gradloc {

std::optional<CellIndex> GridGeometry::cell_of(Vec2 p) const {
  const double fx = std::floor((p.x - origin.x) / resolution);
  const double fy = std::floor((p.y - origin.y) / resolution);
  if (!(fx >= 0.0 && fy >= 0.0 && fx < width && fy < height)) {
    return std::nullopt;
  }
  return CellIndex{static_cast<int>(fx), static_cast<int>(fy)};
}

void GridGeometry::validate() const {
  if (!(resolution > 0.0) || !std::isfinite(resolution)) {
    throw InvalidInput("grid resolution must be positive");
  }
  if (width < 1 || height < 1) {
    throw InvalidInput("grid must have at least one cell");
  }
  if (!std::isfinite(origin.x) || !std::isfinite(origin.y)) {
    throw InvalidInput("grid origin must be finite");
  }
}

void HeightGrid::set(int ix, int iy, double h) {
  if (!std::isfinite(h) || h < 0.0) {
    throw InvalidInput("height must be finite and non-negative, got " +
                       std::to_string(h));
  }
  store(ix, iy, h);
}

void GradientGrid::set(int ix, int iy, double g) {
  if (!std::isfinite(g) || g < 0.0) {
    throw InvalidInput("gradient must be finite and non-negative");
  }
  store(ix, iy, g);
}

std::size_t EdgeMap::edge_count() const {
  std::size_t n = 0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    n += (values_[i] != 0 && !nodata_[i]) ? 1 : 0;
  }
  return n;
}

HeightGrid rasterize_points(std::span<const PointSample> points,
                            const Rect& bounds, double resolution) {
  if (bounds.degenerate()) throw InvalidInput("degenerate raster bounds");
  if (!(resolution > 0.0)) throw InvalidInput("resolution must be positive");

  GridGeometry geo;
  geo.origin = bounds.min;
  geo.resolution = resolution;
  geo.width = std::max(1, static_cast<int>(std::ceil(bounds.width() / resolution - 1e-9)));
  geo.height = std::max(1, static_cast<int>(std::ceil(bounds.height() / resolution - 1e-9)));
  HeightGrid grid(geo);

  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y) || !std::isfinite(p.h)) {
      throw InvalidInput("non-finite point sample");
    }
    if (!bounds.contains({p.x, p.y})) continue;
    const auto cell = geo.cell_of({p.x, p.y});
    if (!cell) continue;
    const double h = std::max(0.0, p.h);
    if (!grid.observed(cell->x, cell->y) || h > grid.at(cell->x, cell->y)) {
      grid.set(cell->x, cell->y, h);
    }
  }
  return grid;
}

GradientGrid gradient_magnitude(const HeightGrid& grid) {
  GradientGrid out(grid.geometry());
  const int w = grid.width();
  const int h = grid.height();
  constexpr int kDx[4] = {1, -1, 0, 0};
  constexpr int kDy[4] = {0, 0, 1, -1};
  for (int iy = 0; iy < h; ++iy) {
    for (int ix = 0; ix < w; ++ix) {
      if (!grid.observed(ix, iy)) continue;
      const double v = grid.at(ix, iy);
      bool any = false;
      double g = 0.0;
      for (int k = 0; k < 4; ++k) {
        const int nx = ix + kDx[k];
        const int ny = iy + kDy[k];
        if (!grid.geometry().in_bounds(nx, ny) || !grid.observed(nx, ny)) continue;
        any = true;
        g = std::max(g, std::abs(v - grid.at(nx, ny)));
      }
      if (any) out.set(ix, iy, g);
    }
  }
  return out;
}

EdgeMap binarize_edges(const GradientGrid& gradients, double threshold) {
  if (!(threshold > 0.0)) throw InvalidInput("edge threshold must be positive");
  EdgeMap out(gradients.geometry());
  for (int iy = 0; iy < gradients.height(); ++iy) {
    for (int ix = 0; ix < gradients.width(); ++ix) {
      if (!gradients.observed(ix, iy)) continue;
      out.set(ix, iy, gradients.at(ix, iy) > threshold);
    }
  }
  return out;
}

HeightGrid rotate_to_north(const HeightGrid& grid, double compass_heading) {
  if (!std::isfinite(compass_heading)) {
    throw InvalidInput("compass heading must be finite");
  }
  if (grid.width() != grid.height()) {
    throw InvalidInput("rotate_to_north expects a square grid");
  }
  if (compass_heading == 0.0) return grid;

  HeightGrid out(grid.geometry());
  const int cx = grid.width() / 2;
  const int cy = grid.height() / 2;
  const double c = std::cos(-compass_heading);
  const double s = std::sin(-compass_heading);
  for (int iy = 0; iy < grid.height(); ++iy) {
    for (int ix = 0; ix < grid.width(); ++ix) {
      const double ox = ix - cx;
      const double oy = iy - cy;
      const int sx = cx + static_cast<int>(std::lround(c * ox - s * oy));
      const int sy = cy + static_cast<int>(std::lround(s * ox + c * oy));
      if (!grid.geometry().in_bounds(sx, sy) || !grid.observed(sx, sy)) continue;
      out.set(ix, iy, grid.at(sx, sy));
    }
  }
  return out;
}

}  // namespace gradloc
