#include <capl/geometry.hpp>

#include <algorithm>
#include <limits>
#include <vector>

namespace capl
{

std::array<Vec2, 4> OrientedRect::corners() const
{
  Vec2 const u = axis * half_length;
  Vec2 const v = perp(axis) * half_width;
  return {center - u - v, center + u - v, center + u + v, center - u + v};
}

Aabb2 OrientedRect::bounds() const
{
  double const ex = std::abs(axis.x) * half_length + std::abs(axis.y) * half_width;
  double const ey = std::abs(axis.y) * half_length + std::abs(axis.x) * half_width;
  return {{center.x - ex, center.y - ey}, {center.x + ex, center.y + ey}};
}

namespace
{

// Clip `poly` against the half plane left of the directed edge a->b.
void clip_half_plane(std::vector<Vec2> &poly, std::vector<Vec2> &scratch, Vec2 a, Vec2 b)
{
  scratch.clear();
  Vec2 const e = b - a;
  std::size_t const n = poly.size();
  for (std::size_t k = 0; k < n; ++k)
  {
    Vec2 const p = poly[k];
    Vec2 const q = poly[(k + 1) % n];
    double const sp = cross(e, p - a);
    double const sq = cross(e, q - a);
    bool const p_in = sp >= 0.0;
    bool const q_in = sq >= 0.0;
    if (p_in)
      scratch.push_back(p);
    if (p_in != q_in)
    {
      double const t = sp / (sp - sq);
      scratch.push_back(p + (q - p) * t);
    }
  }
  poly.swap(scratch);
}

double polygon_area(std::vector<Vec2> const &poly)
{
  double twice = 0.0;
  for (std::size_t k = 0; k < poly.size(); ++k)
    twice += cross(poly[k], poly[(k + 1) % poly.size()]);
  return 0.5 * std::abs(twice);
}

// Half extent of a rectangle projected onto unit direction d.
double projected_radius(OrientedRect const &r, Vec2 d)
{
  return r.half_length * std::abs(dot(r.axis, d)) + r.half_width * std::abs(dot(perp(r.axis), d));
}

} // namespace

double intersection_area(OrientedRect const &a, OrientedRect const &b)
{
  if (!a.bounds().intersects(b.bounds()))
    return 0.0;
  if (separation(a, b) >= 0.0)
    return 0.0;

  thread_local std::vector<Vec2> poly;
  thread_local std::vector<Vec2> scratch;
  auto const ca = a.corners();
  auto const cb = b.corners();
  poly.assign(ca.begin(), ca.end());
  for (std::size_t k = 0; k < 4 && !poly.empty(); ++k)
    clip_half_plane(poly, scratch, cb[k], cb[(k + 1) % 4]);
  return poly.size() < 3 ? 0.0 : polygon_area(poly);
}

double separation(OrientedRect const &a, OrientedRect const &b)
{
  Vec2 const axes[4] = {a.axis, perp(a.axis), b.axis, perp(b.axis)};
  Vec2 const delta = b.center - a.center;
  double gap = -std::numeric_limits<double>::infinity();
  for (Vec2 const &d : axes)
  {
    double const g = std::abs(dot(delta, d)) - projected_radius(a, d) - projected_radius(b, d);
    gap = std::max(gap, g);
  }
  return gap;
}

} // namespace capl
