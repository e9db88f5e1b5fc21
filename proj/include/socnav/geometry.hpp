#pragma once

#include <algorithm>
#include <limits>
#include <vector>

#include "socnav/common.hpp"

namespace socnav {

using Polygon = std::vector<Vec2>;

inline double polygon_signed_area(const Polygon& poly) {
  double a = 0.0;
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    const Vec2& p = poly[i];
    const Vec2& q = poly[(i + 1) % n];
    a += p.x * q.y - q.x * p.y;
  }
  return 0.5 * a;
}

inline bool polygon_is_ccw(const Polygon& poly) {
  return polygon_signed_area(poly) > 0.0;
}

// Even-odd ray cast. Points exactly on the boundary are not guaranteed a
// stable answer; callers that care use distance margins.
inline bool point_in_polygon(Vec2 p, const Polygon& poly) {
  bool inside = false;
  const size_t n = poly.size();
  for (size_t i = 0, j = n - 1; i < n; j = i++) {
    const Vec2& a = poly[i];
    const Vec2& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xi = (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x;
      if (p.x < xi) inside = !inside;
    }
  }
  return inside;
}

inline double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
  const Vec2 ab = b - a;
  const double len2 = ab.squared_norm();
  if (len2 == 0.0) return (p - a).norm();
  double t = (p - a).dot(ab) / len2;
  t = std::clamp(t, 0.0, 1.0);
  return (p - (a + ab * t)).norm();
}

// Minimum distance from p to the polygon outline.
inline double polygon_boundary_distance(Vec2 p, const Polygon& poly) {
  double best = std::numeric_limits<double>::infinity();
  const size_t n = poly.size();
  for (size_t i = 0; i < n; ++i) {
    best = std::min(best, dist_point_segment(p, poly[i], poly[(i + 1) % n]));
  }
  return best;
}

namespace detail {

inline double cross(Vec2 o, Vec2 a, Vec2 b) {
  return (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
}

inline bool segments_intersect(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
  const double d1 = cross(c, d, a);
  const double d2 = cross(c, d, b);
  const double d3 = cross(a, b, c);
  const double d4 = cross(a, b, d);
  if (((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
      ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0))) {
    return true;
  }
  return false;
}

}  // namespace detail

// Simple = no two non-adjacent edges intersect and no zero-length edge.
inline bool polygon_is_simple(const Polygon& poly) {
  const size_t n = poly.size();
  if (n < 3) return false;
  for (size_t i = 0; i < n; ++i) {
    if ((poly[(i + 1) % n] - poly[i]).norm() < 1e-12) return false;
  }
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i + 1; j < n; ++j) {
      if (j == i || (j + 1) % n == i || (i + 1) % n == j) continue;
      if (detail::segments_intersect(poly[i], poly[(i + 1) % n], poly[j],
                                     poly[(j + 1) % n])) {
        return false;
      }
    }
  }
  return true;
}

// Sampled containment check for a segment; adequate for the rectangular and
// L-shaped rooms used here.
inline bool segment_in_polygon(Vec2 a, Vec2 b, const Polygon& poly,
                               int samples = 24) {
  for (int k = 0; k <= samples; ++k) {
    const double t = static_cast<double>(k) / samples;
    if (!point_in_polygon(a + (b - a) * t, poly)) return false;
  }
  return true;
}

// Axis test in the box's local frame; the box is centred on `pose` with full
// extents `width` (local x) and `depth` (local y), optionally inflated.
inline bool point_in_oriented_box(Vec2 p, const Pose2D& pose, double width,
                                  double depth, double inflate = 0.0) {
  const Vec2 local = pose.inverse_transform(p);
  return std::abs(local.x) <= 0.5 * width + inflate &&
         std::abs(local.y) <= 0.5 * depth + inflate;
}

}  // namespace socnav
