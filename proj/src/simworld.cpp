#include "gradloc/simworld.hpp"

#include <algorithm>
#include <cmath>

#include "gradloc/errors.hpp"
#include "gradloc/seed.hpp"

namespace gradloc {

std::string to_string(Terrain t) {
  switch (t) {
    case Terrain::urban: return "urban";
    case Terrain::forest: return "forest";
    case Terrain::open_field: return "open_field";
  }
  return "open_field";
}

Terrain terrain_from_string(const std::string& s) {
  if (s == "urban") return Terrain::urban;
  if (s == "forest") return Terrain::forest;
  if (s == "open_field" || s == "open") return Terrain::open_field;
  throw InvalidInput("unknown terrain class '" + s + "'");
}

Rect Obstacle::bounds() const {
  if (shape == Shape::box) return box;
  return {{center.x - radius, center.y - radius},
          {center.x + radius, center.y + radius}};
}

bool Obstacle::covers(Vec2 p) const {
  if (shape == Shape::box) {
    return p.x >= box.min.x && p.x <= box.max.x && p.y >= box.min.y &&
           p.y <= box.max.y;
  }
  const double dx = p.x - center.x;
  const double dy = p.y - center.y;
  return dx * dx + dy * dy <= radius * radius;
}

bool Obstacle::overlaps(const Rect& r) const {
  if (shape == Shape::box) {
    return box.min.x < r.max.x && box.max.x > r.min.x && box.min.y < r.max.y &&
           box.max.y > r.min.y;
  }
  const double nx = std::clamp(center.x, r.min.x, r.max.x);
  const double ny = std::clamp(center.y, r.min.y, r.max.y);
  const double dx = nx - center.x;
  const double dy = ny - center.y;
  return dx * dx + dy * dy < radius * radius;
}

Terrain WorldModel::terrain_at(Vec2 p) const {
  Terrain t = Terrain::open_field;
  for (const auto& r : regions) {
    if (r.area.contains(p)) t = r.terrain;
  }
  return t;
}

namespace {

Rect clip(const Rect& a, const Rect& b) {
  return {{std::max(a.min.x, b.min.x), std::max(a.min.y, b.min.y)},
          {std::min(a.max.x, b.max.x), std::min(a.max.y, b.max.y)}};
}

// Building on the 1 m lattice, fully inside the region.
std::optional<Obstacle> make_box(const Rect& area, std::mt19937_64& rng) {
  std::uniform_int_distribution<int> side(8, 24);
  const int w = side(rng);
  const int d = side(rng);
  const int x0 = static_cast<int>(std::ceil(area.min.x));
  const int y0 = static_cast<int>(std::ceil(area.min.y));
  const int x1 = static_cast<int>(std::floor(area.max.x)) - w;
  const int y1 = static_cast<int>(std::floor(area.max.y)) - d;
  if (x1 < x0 || y1 < y0) return std::nullopt;
  const int x = std::uniform_int_distribution<int>(x0, x1)(rng);
  const int y = std::uniform_int_distribution<int>(y0, y1)(rng);
  Obstacle o;
  o.shape = Obstacle::Shape::box;
  o.box = {{double(x), double(y)}, {double(x + w), double(y + d)}};
  o.height = std::uniform_real_distribution<double>(5.0, 20.0)(rng);
  return o;
}

// Tree crown centred on a lattice cell centre.
std::optional<Obstacle> make_disc(const Rect& area, std::mt19937_64& rng) {
  const double r = 1.5 + std::uniform_int_distribution<int>(0, 3)(rng);
  const int x0 = static_cast<int>(std::ceil(area.min.x + r - 0.5));
  const int y0 = static_cast<int>(std::ceil(area.min.y + r - 0.5));
  const int x1 = static_cast<int>(std::floor(area.max.x - r - 0.5));
  const int y1 = static_cast<int>(std::floor(area.max.y - r - 0.5));
  if (x1 < x0 || y1 < y0) return std::nullopt;
  Obstacle o;
  o.shape = Obstacle::Shape::disc;
  o.center = {std::uniform_int_distribution<int>(x0, x1)(rng) + 0.5,
              std::uniform_int_distribution<int>(y0, y1)(rng) + 0.5};
  o.radius = r;
  o.height = std::uniform_real_distribution<double>(8.0, 25.0)(rng);
  return o;
}

}  // namespace

WorldModel build_world(const WorldSpec& spec) {
  if (spec.extent.degenerate()) throw InvalidInput("world extent has zero area");
  if (!(spec.truth_resolution > 0.0)) throw InvalidInput("truth resolution must be positive");

  WorldModel world;
  world.extent = spec.extent;
  world.seed = spec.seed;
  std::uint64_t region_tag = 0;
  for (const auto& region : spec.regions) {
    if (!(region.density >= 0.0) || !std::isfinite(region.density)) {
      throw InvalidInput("obstacle density must be >= 0");
    }
    TerrainRegion r = region;
    r.area = clip(region.area, spec.extent);
    if (r.area.degenerate()) continue;
    world.regions.push_back(r);

    std::mt19937_64 rng(derive_seed(spec.seed, ++region_tag));
    if (r.terrain == Terrain::open_field) continue;

    const auto count = static_cast<std::size_t>(
        std::llround(r.density * r.area.area() / 10000.0));
    bool evidence = false;
    for (std::size_t i = 0; i < count; ++i) {
      auto o = r.terrain == Terrain::urban ? make_box(r.area, rng)
                                           : make_disc(r.area, rng);
      if (!o) break;
      evidence = evidence || o->height > kEvidenceHeight;
      world.obstacles.push_back(*o);
    }
    if (!evidence && r.area.width() >= 50.0 && r.area.height() >= 50.0) {
      Obstacle o;
      const double cx = std::floor((r.area.min.x + r.area.max.x) / 2.0);
      const double cy = std::floor((r.area.min.y + r.area.max.y) / 2.0);
      if (r.terrain == Terrain::urban) {
        o.shape = Obstacle::Shape::box;
        o.box = {{cx - 5.0, cy - 5.0}, {cx + 5.0, cy + 5.0}};
      } else {
        o.shape = Obstacle::Shape::disc;
        o.center = {cx + 0.5, cy + 0.5};
        o.radius = 2.5;
      }
      o.height = 12.0;
      world.obstacles.push_back(o);
    }
  }
  world.truth = sample_prior_dem(world, spec.truth_resolution);
  return world;
}

HeightGrid sample_prior_dem(const WorldModel& world, double resolution) {
  if (!(resolution > 0.0)) throw InvalidInput("resolution must be positive");
  GridGeometry geo;
  geo.origin = world.extent.min;
  geo.resolution = resolution;
  geo.width = std::max(1, static_cast<int>(std::ceil(world.extent.width() / resolution - 1e-9)));
  geo.height = std::max(1, static_cast<int>(std::ceil(world.extent.height() / resolution - 1e-9)));
  std::vector<double> heights(geo.size(), 0.0);

  for (const auto& o : world.obstacles) {
    const Rect b = o.bounds();
    const int ix0 = std::max(0, static_cast<int>(std::floor((b.min.x - geo.origin.x) / resolution)) - 1);
    const int iy0 = std::max(0, static_cast<int>(std::floor((b.min.y - geo.origin.y) / resolution)) - 1);
    const int ix1 = std::min(geo.width - 1, static_cast<int>(std::floor((b.max.x - geo.origin.x) / resolution)) + 1);
    const int iy1 = std::min(geo.height - 1, static_cast<int>(std::floor((b.max.y - geo.origin.y) / resolution)) + 1);
    for (int iy = iy0; iy <= iy1; ++iy) {
      for (int ix = ix0; ix <= ix1; ++ix) {
        const Rect cell{{geo.origin.x + ix * resolution, geo.origin.y + iy * resolution},
                        {geo.origin.x + (ix + 1) * resolution, geo.origin.y + (iy + 1) * resolution}};
        if (!o.overlaps(cell)) continue;
        double& h = heights[geo.index(ix, iy)];
        h = std::max(h, o.height);
      }
    }
  }

  HeightGrid grid(geo);
  for (int iy = 0; iy < geo.height; ++iy) {
    for (int ix = 0; ix < geo.width; ++ix) grid.set(ix, iy, heights[geo.index(ix, iy)]);
  }
  return grid;
}

void SensorConfig::validate() const {
  if (!(resolution > 0.0)) throw InvalidInput("sensor resolution must be positive");
  if (!(extent > 0.0)) throw InvalidInput("sensor extent must be positive");
  if (!allow_any_extent && (extent < kMinLocalExtent || extent > kMaxLocalExtent)) {
    throw InvalidInput("local map extent must lie in [30, 60] m");
  }
  if (!(dropout >= 0.0 && dropout <= 1.0)) throw InvalidInput("dropout must be in [0, 1]");
  if (!(noise_stddev >= 0.0)) throw InvalidInput("sensor noise must be >= 0");
  if (!(range >= 0.0)) throw InvalidInput("sensor range must be >= 0");
  if (!(altitude >= 0.0)) throw InvalidInput("sensor altitude must be >= 0");
}

int SensorConfig::cells() const {
  return std::max(1, static_cast<int>(std::lround(extent / resolution)));
}

bool line_of_sight(const WorldModel& world, Vec2 from, double from_height,
                   Vec2 to, double to_height) {
  const auto& geo = world.truth.geometry();
  const auto start_cell = geo.cell_of(from);
  const auto end_cell = geo.cell_of(to);
  const double len = distance(from, to);
  const int steps = static_cast<int>(std::ceil(len / (0.25 * geo.resolution)));
  for (int k = 1; k < steps; ++k) {
    const double s = static_cast<double>(k) / steps;
    const Vec2 p = from + (to - from) * s;
    const auto cell = geo.cell_of(p);
    if (!cell) continue;
    if (start_cell && *cell == *start_cell) continue;
    if (end_cell && *cell == *end_cell) continue;
    const double ray = from_height + (to_height - from_height) * s;
    if (world.truth.at(cell->x, cell->y) > ray) return false;
  }
  return true;
}

HeightGrid sense_local(const WorldModel& world, const TruePose& pose,
                       const SensorConfig& cfg) {
  cfg.validate();
  const int n = cfg.cells();
  const int c = n / 2;
  const auto& truth_geo = world.truth.geometry();

  Vec2 center = pose.position;
  if (const auto cell = truth_geo.cell_of(pose.position)) {
    center = truth_geo.cell_center(cell->x, cell->y);
  }

  GridGeometry geo;
  geo.origin = {center.x - (c + 0.5) * cfg.resolution,
                center.y - (c + 0.5) * cfg.resolution};
  geo.resolution = cfg.resolution;
  geo.width = n;
  geo.height = n;
  HeightGrid local(geo);

  std::uint64_t seed = derive_seed(cfg.seed, pose.position.x);
  seed = derive_seed(seed, pose.position.y);
  seed = derive_seed(seed, pose.heading);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::normal_distribution<double> normal(0.0, 1.0);

  const double cs = std::cos(pose.heading);
  const double sn = std::sin(pose.heading);
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      // Draw both variates for every cell so the stream layout is fixed.
      const double drop = uniform(rng);
      const double z = normal(rng);
      const double bx = (i - c) * cfg.resolution;
      const double by = (j - c) * cfg.resolution;
      const Vec2 w{center.x + cs * bx - sn * by, center.y + sn * bx + cs * by};
      const auto cell = truth_geo.cell_of(w);
      if (!cell) continue;
      if (distance(w, pose.position) > cfg.range) continue;
      const double h = world.truth.at(cell->x, cell->y);
      if (cfg.occlusion &&
          !line_of_sight(world, pose.position, cfg.altitude, w, h)) {
        continue;
      }
      if (drop < cfg.dropout) continue;
      local.set(i, j, std::max(0.0, h + cfg.noise_stddev * z));
    }
  }
  return local;
}

TruePose step_motion(const TruePose& pose, Vec2 velocity, double dt,
                     double max_speed) {
  if (!(dt >= 0.0)) throw InvalidInput("dt must be >= 0");
  const double speed = velocity.norm();
  TruePose next = pose;
  if (speed == 0.0 || dt == 0.0) return next;
  const double v = std::min(speed, max_speed);
  const Vec2 dir = velocity * (1.0 / speed);
  next.position += dir * (v * dt);
  next.heading = std::atan2(dir.y, dir.x);
  return next;
}

void ErrorModel::validate() const {
  if (!(odometry_noise >= 0.0) || !(compass_bias_amplitude >= 0.0) ||
      !(compass_bias_rate >= 0.0) || !(compass_noise >= 0.0)) {
    throw InvalidInput("error model magnitudes must be >= 0");
  }
  if (!std::isfinite(odometry_scale_error) || odometry_scale_error <= -1.0) {
    throw InvalidInput("odometry scale error must be > -1");
  }
}

OdometryDelta emit_odometry(Vec2 true_displacement, double true_heading,
                            const ErrorModel& model, std::mt19937_64& rng) {
  const Vec2 body = rotate(true_displacement, -true_heading) *
                    (1.0 + model.odometry_scale_error);
  OdometryDelta d{body.x, body.y};
  if (model.odometry_noise > 0.0) {
    const double sd = model.odometry_noise * std::sqrt(true_displacement.norm());
    std::normal_distribution<double> normal(0.0, 1.0);
    d.dx += sd * normal(rng);
    d.dy += sd * normal(rng);
  }
  return d;
}

CompassModel::CompassModel(const ErrorModel& model) : model_(model) {
  model_.validate();
  if (model_.compass_bias_phase >= 0.0) {
    phase_ = model_.compass_bias_phase;
  } else {
    std::mt19937_64 rng(derive_seed(model_.seed, std::uint64_t{0xc0ffee}));
    phase_ = std::uniform_real_distribution<double>(0.0, 2.0 * M_PI)(rng);
  }
}

double CompassModel::bias(double t) const {
  const double a = model_.compass_bias_amplitude;
  if (a == 0.0) return 0.0;
  const double omega = model_.compass_bias_rate / a;
  return a * std::sin(omega * t + phase_);
}

double CompassModel::emit(double true_heading, double t,
                          std::mt19937_64& rng) const {
  double reading = true_heading + bias(t);
  if (model_.compass_noise > 0.0) {
    reading += model_.compass_noise * std::normal_distribution<double>(0.0, 1.0)(rng);
  }
  return reading;
}

double emit_compass(double true_heading, double t, const ErrorModel& model,
                    std::mt19937_64& rng) {
  return CompassModel(model).emit(true_heading, t, rng);
}

}  // namespace gradloc
