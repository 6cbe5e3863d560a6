#pragma once

#include <array>
#include <cmath>

namespace capl
{

struct Vec2
{
  double x = 0.0;
  double y = 0.0;

  constexpr Vec2 operator+(Vec2 const &o) const { return {x + o.x, y + o.y}; }
  constexpr Vec2 operator-(Vec2 const &o) const { return {x - o.x, y - o.y}; }
  constexpr Vec2 operator*(double s) const { return {x * s, y * s}; }
  constexpr bool operator==(Vec2 const &) const = default;
};

constexpr Vec2 operator*(double s, Vec2 const &v) { return v * s; }
constexpr double dot(Vec2 const &a, Vec2 const &b) { return a.x * b.x + a.y * b.y; }
constexpr double cross(Vec2 const &a, Vec2 const &b) { return a.x * b.y - a.y * b.x; }
/// Left-hand normal (rotated +90 degrees).
constexpr Vec2 perp(Vec2 const &a) { return {-a.y, a.x}; }
inline double norm(Vec2 const &a) { return std::hypot(a.x, a.y); }
inline double distance(Vec2 const &a, Vec2 const &b) { return norm(a - b); }

struct Vec3
{
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  constexpr Vec2 xy() const { return {x, y}; }
};

inline double distance(Vec3 const &a, Vec3 const &b)
{
  double const dx = a.x - b.x;
  double const dy = a.y - b.y;
  double const dz = a.z - b.z;
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

struct Aabb2
{
  Vec2 lo;
  Vec2 hi;

  bool intersects(Aabb2 const &o, double pad = 0.0) const
  {
    return lo.x <= o.hi.x + pad && o.lo.x <= hi.x + pad && lo.y <= o.hi.y + pad &&
           o.lo.y <= hi.y + pad;
  }
};

/// Rectangle with one side along a unit axis; the other side along perp(axis).
struct OrientedRect
{
  Vec2 center;
  Vec2 axis{1.0, 0.0};
  double half_length = 0.0;
  double half_width = 0.0;

  /// Counter-clockwise corners.
  std::array<Vec2, 4> corners() const;
  Aabb2 bounds() const;
  double area() const { return 4.0 * half_length * half_width; }
};

/// Intersection area of two convex rectangles (Sutherland-Hodgman clipping).
double intersection_area(OrientedRect const &a, OrientedRect const &b);

/// Separating-axis gap between two rectangles: positive when disjoint (the
/// largest separation over the four candidate axes), <= 0 when touching or
/// overlapping.
double separation(OrientedRect const &a, OrientedRect const &b);

} // namespace capl
