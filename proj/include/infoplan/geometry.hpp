#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>

namespace infoplan {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(const Vec2& o) {
    x += o.x;
    y += o.y;
    return *this;
  }
  bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm() const { return std::hypot(x, y); }
  double norm_sq() const { return x * x + y * y; }
  double norm_inf() const { return std::max(std::abs(x), std::abs(y)); }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }

// Grid cell address, row-major. Row 0 is the y = 0 edge of the map.
struct CellIndex {
  int row = 0;
  int col = 0;

  bool operator==(const CellIndex& o) const {
    return row == o.row && col == o.col;
  }
  bool operator<(const CellIndex& o) const {
    return row != o.row ? row < o.row : col < o.col;
  }
};

// Axis-aligned rectangular obstacle.
struct RectObstacle {
  Vec2 center;
  Vec2 half_extents;

  Vec2 lo() const { return center - half_extents; }
  Vec2 hi() const { return center + half_extents; }

  // Strict interior test, shrunk by eps so boundary contact does not count.
  bool contains_interior(const Vec2& p, double eps = 1e-12) const {
    const Vec2 a = lo(), b = hi();
    return p.x > a.x + eps && p.x < b.x - eps && p.y > a.y + eps &&
           p.y < b.y - eps;
  }

  // Closed containment, optionally inflated by margin.
  bool contains(const Vec2& p, double margin = 0.0) const {
    const Vec2 a = lo(), b = hi();
    return p.x >= a.x - margin && p.x <= b.x + margin && p.y >= a.y - margin &&
           p.y <= b.y + margin;
  }

  // Closest point on the (solid) rectangle to p.
  Vec2 closest_point(const Vec2& p) const {
    const Vec2 a = lo(), b = hi();
    return {std::clamp(p.x, a.x, b.x), std::clamp(p.y, a.y, b.y)};
  }

  // Euclidean distance from p to the rectangle; 0 inside.
  double distance(const Vec2& p) const { return (p - closest_point(p)).norm(); }
};

// True iff the open segment pq passes through the rectangle interior.
// Boundary grazing (touching an edge or corner) does not block.
inline bool segment_intersects_interior(const Vec2& p, const Vec2& q,
                                        const RectObstacle& rect,
                                        double eps = 1e-9) {
  const Vec2 lo = rect.lo(), hi = rect.hi();
  const Vec2 d = q - p;
  double t0 = 0.0, t1 = 1.0;
  const double plo[2] = {lo.x, lo.y};
  const double phi[2] = {hi.x, hi.y};
  const double pp[2] = {p.x, p.y};
  const double dd[2] = {d.x, d.y};
  for (int a = 0; a < 2; ++a) {
    if (std::abs(dd[a]) < 1e-15) {
      if (pp[a] <= plo[a] + eps || pp[a] >= phi[a] - eps) return false;
    } else {
      double ta = (plo[a] - pp[a]) / dd[a];
      double tb = (phi[a] - pp[a]) / dd[a];
      if (ta > tb) std::swap(ta, tb);
      t0 = std::max(t0, ta);
      t1 = std::min(t1, tb);
      if (t0 >= t1) return false;
    }
  }
  // Require a chord of nonzero length inside the interior.
  return t1 - t0 > eps;
}

// Wrap to (-pi, pi].
inline double wrap_angle(double a) {
  double r = std::remainder(a, 2.0 * M_PI);
  if (r <= -M_PI) r += 2.0 * M_PI;
  return r;
}

}  // namespace infoplan
