#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

namespace mrtmp {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
  double x{0.0};
  double y{0.0};

  constexpr Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(const Vec2&) const = default;

  double norm() const { return std::hypot(x, y); }
};

constexpr double dot(Vec2 a, Vec2 b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 a, Vec2 b) { return a.x * b.y - a.y * b.x; }
inline double distance(Vec2 a, Vec2 b) { return (a - b).norm(); }
inline Vec2 unit_from_angle(double a) { return {std::cos(a), std::sin(a)}; }
inline double angle_of(Vec2 v) { return std::atan2(v.y, v.x); }

// Wraps into (-pi, pi].
inline double normalize_angle(double a) {
  a = std::remainder(a, 2.0 * kPi);
  if (a <= -kPi) a += 2.0 * kPi;
  return a;
}

// Axis-aligned rectangle anchored at its lower-left corner.
struct Rect {
  double x{0.0};
  double y{0.0};
  double w{0.0};
  double h{0.0};

  bool operator==(const Rect&) const = default;

  double xmax() const { return x + w; }
  double ymax() const { return y + h; }
  Vec2 center() const { return {x + 0.5 * w, y + 0.5 * h}; }

  bool contains(Vec2 p) const { return p.x >= x && p.x <= xmax() && p.y >= y && p.y <= ymax(); }

  bool contains_disc(Vec2 c, double r) const {
    return c.x - r >= x && c.x + r <= xmax() && c.y - r >= y && c.y + r <= ymax();
  }

  // Open-interior overlap; shared edges do not count.
  bool overlaps(const Rect& o) const {
    return x < o.xmax() && o.x < xmax() && y < o.ymax() && o.y < ymax();
  }

  Rect expanded(double m) const { return {x - m, y - m, w + 2.0 * m, h + 2.0 * m}; }

  Rect united(const Rect& o) const {
    const double lx = std::min(x, o.x), ly = std::min(y, o.y);
    const double hx = std::max(xmax(), o.xmax()), hy = std::max(ymax(), o.ymax());
    return {lx, ly, hx - lx, hy - ly};
  }

  Rect united(Vec2 p) const { return united(Rect{p.x, p.y, 0.0, 0.0}); }
};

inline double distance_point_rect(Vec2 p, const Rect& r) {
  const double dx = std::max({r.x - p.x, 0.0, p.x - r.xmax()});
  const double dy = std::max({r.y - p.y, 0.0, p.y - r.ymax()});
  return std::hypot(dx, dy);
}

inline double distance_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = dot(ab, ab);
  if (len2 == 0.0) return distance(p, a);
  const double t = std::clamp(dot(p - a, ab) / len2, 0.0, 1.0);
  return distance(p, a + ab * t);
}

// Zero inside (or on) the triangle; works for degenerate triangles too.
inline double distance_point_triangle(Vec2 p, const std::array<Vec2, 3>& t) {
  const double d0 = cross(t[1] - t[0], p - t[0]);
  const double d1 = cross(t[2] - t[1], p - t[1]);
  const double d2 = cross(t[0] - t[2], p - t[2]);
  const double area = cross(t[1] - t[0], t[2] - t[0]);
  if (area != 0.0) {
    const bool inside = area > 0.0 ? (d0 >= 0.0 && d1 >= 0.0 && d2 >= 0.0)
                                   : (d0 <= 0.0 && d1 <= 0.0 && d2 <= 0.0);
    if (inside) return 0.0;
  }
  return std::min({distance_point_segment(p, t[0], t[1]), distance_point_segment(p, t[1], t[2]),
                   distance_point_segment(p, t[2], t[0])});
}

inline bool discs_overlap(Vec2 a, double ra, Vec2 b, double rb) {
  // Touching is not overlap.
  return distance(a, b) < ra + rb;
}

}  // namespace mrtmp
