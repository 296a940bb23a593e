#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "gradloc/geometry.hpp"

namespace gradloc {

inline constexpr double kDefaultResolution = 1.0;      // m per cell
inline constexpr double kDefaultEdgeThreshold = 5.0;   // m

struct CellIndex {
  int x = 0;
  int y = 0;
  constexpr bool operator==(const CellIndex&) const = default;
};

// Georeference of a raster. Cell (0,0) has its lower-left corner at origin;
// x grows east with column, y grows north with row.
struct GridGeometry {
  Vec2 origin;
  double resolution = kDefaultResolution;
  int width = 0;
  int height = 0;

  std::size_t size() const {
    return static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  }
  std::size_t index(int ix, int iy) const {
    return static_cast<std::size_t>(iy) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(ix);
  }
  bool in_bounds(int ix, int iy) const {
    return ix >= 0 && iy >= 0 && ix < width && iy < height;
  }
  // Cell containing a world point, or nullopt when outside the grid.
  std::optional<CellIndex> cell_of(Vec2 p) const;
  Vec2 cell_center(int ix, int iy) const {
    return {origin.x + (ix + 0.5) * resolution,
            origin.y + (iy + 0.5) * resolution};
  }
  Rect extent() const {
    return {origin, {origin.x + width * resolution,
                     origin.y + height * resolution}};
  }
  void validate() const;

  bool operator==(const GridGeometry&) const = default;
};

// Raster with a per-cell "never observed" mask. Masked cells carry no value;
// their storage is kept at T{} so that it cannot leak into statistics.
template <class T>
class MaskedGrid {
 public:
  MaskedGrid() = default;
  explicit MaskedGrid(GridGeometry geo)
      : geo_(geo), values_(geo.size(), T{}), nodata_(geo.size(), 1) {
    geo_.validate();
  }

  const GridGeometry& geometry() const { return geo_; }
  int width() const { return geo_.width; }
  int height() const { return geo_.height; }
  double resolution() const { return geo_.resolution; }
  Vec2 origin() const { return geo_.origin; }

  bool observed(int ix, int iy) const { return !nodata_[geo_.index(ix, iy)]; }
  T at(int ix, int iy) const { return values_[geo_.index(ix, iy)]; }

  void clear(int ix, int iy) {
    const auto i = geo_.index(ix, iy);
    values_[i] = T{};
    nodata_[i] = 1;
  }

  std::span<const T> values() const { return values_; }
  std::span<const std::uint8_t> nodata_mask() const { return nodata_; }
  std::size_t observed_count() const {
    std::size_t n = 0;
    for (auto m : nodata_) n += m ? 0 : 1;
    return n;
  }

  bool operator==(const MaskedGrid&) const = default;

 protected:
  void store(int ix, int iy, T v) {
    const auto i = geo_.index(ix, iy);
    values_[i] = v;
    nodata_[i] = 0;
  }

  GridGeometry geo_;
  std::vector<T> values_;
  std::vector<std::uint8_t> nodata_;
};

// Max height above terrain per cell (m).
class HeightGrid : public MaskedGrid<double> {
 public:
  using MaskedGrid::MaskedGrid;
  // Throws InvalidInput unless h is finite and >= 0.
  void set(int ix, int iy, double h);
};

// Gradient magnitude per cell (m per one-cell step).
class GradientGrid : public MaskedGrid<double> {
 public:
  using MaskedGrid::MaskedGrid;
  void set(int ix, int iy, double g);
};

// Binary strong-gradient map, 1 where an edge was seen.
class EdgeMap : public MaskedGrid<std::uint8_t> {
 public:
  using MaskedGrid::MaskedGrid;
  void set(int ix, int iy, bool edge) { store(ix, iy, edge ? 1 : 0); }
  std::size_t edge_count() const;
};

// Post-ground-removal point: world position and height above terrain.
struct PointSample {
  double x = 0.0;
  double y = 0.0;
  double h = 0.0;
};

// Per-cell max of the samples. Any point source (LiDAR map cells, DEM point
// clouds, heights estimated from imagery) enters the pipeline through here.
// Samples outside bounds are ignored; negative heights clamp to ground.
HeightGrid rasterize_points(std::span<const PointSample> points,
                            const Rect& bounds,
                            double resolution = kDefaultResolution);

// Max absolute difference to the observed 4-neighbours.
GradientGrid gradient_magnitude(const HeightGrid& grid);

EdgeMap binarize_edges(const GradientGrid& gradients,
                       double threshold = kDefaultEdgeThreshold);

inline EdgeMap edges_from_heights(const HeightGrid& grid,
                                  double threshold = kDefaultEdgeThreshold) {
  return binarize_edges(gradient_magnitude(grid), threshold);
}

// Nearest-neighbour rotation of a square, body-aligned grid into the
// north-aligned frame. The pivot is the centre of cell (width/2, height/2),
// which is where sense_local places the vehicle. Output cell o samples the
// input at R(-heading) * o.
HeightGrid rotate_to_north(const HeightGrid& grid, double compass_heading);

// ESRI ASCII grid I/O. Rows are written north-first.
inline constexpr double kAsciiNodata = -9999.0;
HeightGrid load_dem(const std::filesystem::path& path);
void save_dem(const HeightGrid& grid, const std::filesystem::path& path);

// Stream variants used by load_dem/save_dem.
HeightGrid read_ascii_grid(std::istream& in);
void write_ascii_grid(const HeightGrid& grid, std::ostream& out,
                      double nodata_value = kAsciiNodata);

}  // namespace gradloc
