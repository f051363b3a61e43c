#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "crowdaug/errors.hpp"
#include "crowdaug/geometry.hpp"

namespace crowdaug {

// Ground-plane vector in meters.
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
  friend bool operator==(const Vec2&, const Vec2&) = default;
};

inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::hypot(a.x, a.y); }

// Rescales v so its length does not exceed max_len.
inline Vec2 clamp_length(const Vec2& v, double max_len) {
  const double len = norm(v);
  if (len <= max_len || len == 0.0) return v;
  return v * (max_len / len);
}

inline Vec2 ground(const WorldPoint& p) { return {p.x, p.y}; }
inline WorldPoint lift(const Vec2& p) { return {p.x, p.y, 0.0}; }

struct Rect {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const { return xmax - xmin; }
  double height() const { return ymax - ymin; }
  double area() const { return width() * height(); }
  bool contains(const Vec2& p) const { return p.x >= xmin && p.x <= xmax && p.y >= ymin && p.y <= ymax; }
};

// Simple polygon, vertices in order (either orientation).
struct Polygon {
  std::vector<Vec2> vertices;

  double signed_area() const {
    double a = 0.0;
    for (std::size_t i = 0, n = vertices.size(); i < n; ++i) {
      a += cross(vertices[i], vertices[(i + 1) % n]);
    }
    return 0.5 * a;
  }

  // Even-odd rule; works for any simple polygon.
  bool contains(const Vec2& p) const {
    bool inside = false;
    for (std::size_t i = 0, n = vertices.size(), j = n - 1; i < n; j = i++) {
      const Vec2& a = vertices[i];
      const Vec2& b = vertices[j];
      if ((a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x) {
        inside = !inside;
      }
    }
    return inside;
  }
};

// Convex polygon stored counter-clockwise.
class ConvexPolygon {
 public:
  ConvexPolygon() = default;
  explicit ConvexPolygon(std::vector<Vec2> vertices) : poly_{std::move(vertices)} {
    if (poly_.vertices.size() < 3) throw PreconditionError("polygon needs at least 3 vertices");
    if (poly_.signed_area() < 0.0) std::reverse(poly_.vertices.begin(), poly_.vertices.end());
    if (!(poly_.signed_area() > 1e-12)) throw PreconditionError("polygon has zero area");
    const auto& v = poly_.vertices;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
      if (cross(v[(i + 1) % n] - v[i], v[(i + 2) % n] - v[(i + 1) % n]) < -1e-12) {
        throw PreconditionError("polygon is not convex");
      }
    }
  }

  const std::vector<Vec2>& vertices() const { return poly_.vertices; }
  double area() const { return poly_.signed_area(); }

  // Inclusive of the boundary, widened by `tol` meters.
  bool contains(const Vec2& p, double tol = 1e-9) const {
    const auto& v = poly_.vertices;
    for (std::size_t i = 0, n = v.size(); i < n; ++i) {
      const Vec2 edge = v[(i + 1) % n] - v[i];
      if (cross(edge, p - v[i]) / norm(edge) < -tol) return false;
    }
    return true;
  }

  Rect bounds() const {
    Rect r{vertices()[0].x, vertices()[0].y, vertices()[0].x, vertices()[0].y};
    for (const auto& p : vertices()) {
      r.xmin = std::min(r.xmin, p.x);
      r.ymin = std::min(r.ymin, p.y);
      r.xmax = std::max(r.xmax, p.x);
      r.ymax = std::max(r.ymax, p.y);
    }
    return r;
  }

 private:
  Polygon poly_;
};

}  // namespace crowdaug
