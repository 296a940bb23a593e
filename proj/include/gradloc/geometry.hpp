#pragma once

#include <cmath>

namespace gradloc {

// World frame: x east, y north. Headings are yaw angles in radians,
// counter-clockwise from +x.
struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr Vec2& operator+=(Vec2 o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  constexpr Vec2& operator-=(Vec2 o) {
    x -= o.x;
    y -= o.y;
    return *this;
  }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
  constexpr double dot(Vec2 o) const { return x * o.x + y * o.y; }
};

inline Vec2 rotate(Vec2 v, double angle) {
  const double c = std::cos(angle);
  const double s = std::sin(angle);
  return {c * v.x - s * v.y, s * v.x + c * v.y};
}

inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }

inline double wrap_angle(double a) {
  return std::remainder(a, 2.0 * M_PI);
}

// Axis-aligned rectangle [min, max).
struct Rect {
  Vec2 min;
  Vec2 max;

  double width() const { return max.x - min.x; }
  double height() const { return max.y - min.y; }
  double area() const { return width() * height(); }
  bool contains(Vec2 p) const {
    return p.x >= min.x && p.x < max.x && p.y >= min.y && p.y < max.y;
  }
  bool degenerate() const {
    return !(width() > 0.0) || !(height() > 0.0);
  }
};

// Proper rigid 2D transform: p_parent = R(yaw) * p_child + translation.
struct Rigid2 {
  double yaw = 0.0;
  Vec2 translation;

  Vec2 apply(Vec2 p) const { return rotate(p, yaw) + translation; }
  Vec2 apply_vector(Vec2 v) const { return rotate(v, yaw); }
  Rigid2 inverse() const {
    return {-yaw, rotate(translation, -yaw) * -1.0};
  }
  Rigid2 compose(const Rigid2& child) const {
    return {yaw + child.yaw, apply(child.translation)};
  }
};

}  // namespace gradloc
