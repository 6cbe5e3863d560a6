#include <capl/errors.hpp>
#include <capl/toolpath.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <map>
#include <numbers>
#include <ostream>
#include <regex>
#include <sstream>

namespace capl
{

PowerProfile::PowerProfile(std::vector<PowerBreakpoint> breakpoints)
    : _breakpoints(std::move(breakpoints))
{
  if (_breakpoints.empty())
    throw ValidationError("power profile needs at least one breakpoint");
  for (std::size_t k = 0; k < _breakpoints.size(); ++k)
  {
    if (!(_breakpoints[k].power >= 0.0) || !std::isfinite(_breakpoints[k].power))
      throw ValidationError("power profile breakpoint has negative or non-finite power");
    if (!std::isfinite(_breakpoints[k].distance))
      throw ValidationError("power profile breakpoint has non-finite distance");
    if (k > 0 && !(_breakpoints[k].distance > _breakpoints[k - 1].distance))
      throw ValidationError("power profile distances must be strictly increasing");
  }
}

PowerProfile PowerProfile::constant(double power) { return PowerProfile({{0.0, power}}); }

bool PowerProfile::is_zero() const
{
  return std::all_of(_breakpoints.begin(), _breakpoints.end(),
                     [](PowerBreakpoint const &b) { return b.power == 0.0; });
}

double power_at(PowerProfile const &profile, double distance)
{
  auto const &bp = profile.breakpoints();
  if (distance <= bp.front().distance)
    return bp.front().power;
  if (distance >= bp.back().distance)
    return bp.back().power;
  auto const hi = std::upper_bound(bp.begin(), bp.end(), distance,
                                   [](double d, PowerBreakpoint const &b) { return d < b.distance; });
  auto const lo = hi - 1;
  double const t = (distance - lo->distance) / (hi->distance - lo->distance);
  return lo->power + t * (hi->power - lo->power);
}

double PowerProfile::integral(double a, double b) const
{
  if (b < a)
    return -integral(b, a);
  // Split [a, b] at every breakpoint; power is linear on each piece, so the
  // trapezoid rule is exact.
  double total = 0.0;
  double x = a;
  for (auto const &bp : _breakpoints)
  {
    if (bp.distance <= x)
      continue;
    if (bp.distance >= b)
      break;
    total += 0.5 * (power_at(*this, x) + power_at(*this, bp.distance)) * (bp.distance - x);
    x = bp.distance;
  }
  total += 0.5 * (power_at(*this, x) + power_at(*this, b)) * (b - x);
  return total;
}

Vec2 ScanVector::direction() const
{
  double const len = length();
  return (end - start) * (1.0 / len);
}

namespace
{

double parse_number(std::string const &token, int line)
{
  std::size_t used = 0;
  double value = 0.0;
  try
  {
    value = std::stod(token, &used);
  }
  catch (std::exception const &)
  {
    throw ParseError("expected a number, got '" + token + "'", line);
  }
  if (used != token.size() || !std::isfinite(value))
    throw ParseError("expected a number, got '" + token + "'", line);
  return value;
}

std::string format_number(double v)
{
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

} // namespace

Toolpath parse_toolpath(std::istream &in, double layer_height, int layer_index)
{
  if (!(layer_height > 0.0))
    throw ValidationError("layer height must be positive");

  struct PendingVector
  {
    ScanVector vec;
    std::string profile_id;
    int line;
  };

  std::map<std::string, PowerProfile> profiles;
  std::vector<PendingVector> pending;
  static std::regex const pair_re(R"(\(\s*([^,()\s]+)\s*,\s*([^,()\s]+)\s*\))");

  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw))
  {
    ++line_no;
    std::string const line = raw.substr(0, raw.find('#'));
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag))
      continue;

    if (tag == "P")
    {
      std::string id;
      if (!(ls >> id))
        throw ParseError("profile record without id", line_no);
      if (!id.empty() && id.back() == ':')
        id.pop_back();
      std::string rest;
      std::getline(ls, rest);

      std::vector<PowerBreakpoint> points;
      auto it = std::sregex_iterator(rest.begin(), rest.end(), pair_re);
      std::string leftover = std::regex_replace(rest, pair_re, "");
      for (; it != std::sregex_iterator(); ++it)
        points.push_back({parse_number((*it)[1].str(), line_no), parse_number((*it)[2].str(), line_no)});
      if (points.empty() || leftover.find_first_not_of(" \t\r") != std::string::npos)
        throw ParseError("profile '" + id + "' must be a list of (distance,power) pairs", line_no);
      if (profiles.count(id))
        throw ParseError("profile '" + id + "' defined twice", line_no);
      try
      {
        profiles.emplace(id, PowerProfile(std::move(points)));
      }
      catch (ValidationError const &e)
      {
        throw ValidationError("line " + std::to_string(line_no) + ": " + e.what());
      }
    }
    else if (tag == "V")
    {
      std::vector<std::string> tokens;
      for (std::string t; ls >> t;)
        tokens.push_back(t);
      if (tokens.size() != 6 && tokens.size() != 7)
        throw ParseError("vector record needs x0 y0 x1 y1 speed profile_id [F]", line_no);
      if (tokens.size() == 7 && tokens[6] != "F")
        throw ParseError("unexpected trailing token '" + tokens[6] + "'", line_no);

      PendingVector pv;
      pv.vec.start = {parse_number(tokens[0], line_no), parse_number(tokens[1], line_no)};
      pv.vec.end = {parse_number(tokens[2], line_no), parse_number(tokens[3], line_no)};
      pv.vec.speed = parse_number(tokens[4], line_no);
      pv.vec.fictitious = tokens.size() == 7;
      pv.profile_id = tokens[5];
      pv.line = line_no;
      if (pv.vec.start == pv.vec.end)
        throw ValidationError("line " + std::to_string(line_no) + ": zero-length scan vector");
      if (!(pv.vec.speed > 0.0))
        throw ValidationError("line " + std::to_string(line_no) + ": scan speed must be positive");
      pending.push_back(std::move(pv));
    }
    else
    {
      throw ParseError("unknown record type '" + tag + "'", line_no);
    }
  }

  Toolpath tp;
  tp.layer_height = layer_height;
  tp.layer_index = layer_index;
  for (auto &pv : pending)
  {
    auto const found = profiles.find(pv.profile_id);
    if (found == profiles.end())
      throw ParseError("unknown power profile '" + pv.profile_id + "'", pv.line);
    pv.vec.profile = found->second;
    if (pv.vec.fictitious && !pv.vec.profile.is_zero())
      throw ValidationError("line " + std::to_string(pv.line) + ": fictitious vector with nonzero power");
    pv.vec.id = static_cast<int>(tp.vectors.size()) + 1;
    tp.vectors.push_back(std::move(pv.vec));
  }
  return tp;
}

Toolpath read_toolpath_file(std::string const &path, double layer_height, int layer_index)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open toolpath file '" + path + "'");
  return parse_toolpath(in, layer_height, layer_index);
}

void write_toolpath(std::ostream &out, Toolpath const &tp)
{
  std::vector<PowerProfile const *> unique;
  std::vector<std::size_t> profile_of(tp.vectors.size());
  for (std::size_t v = 0; v < tp.vectors.size(); ++v)
  {
    auto const &p = tp.vectors[v].profile;
    auto const it = std::find_if(unique.begin(), unique.end(), [&](PowerProfile const *q) { return *q == p; });
    profile_of[v] = static_cast<std::size_t>(it - unique.begin());
    if (it == unique.end())
      unique.push_back(&p);
  }

  out << "# toolpath: " << tp.vectors.size() << " vectors\n";
  for (std::size_t k = 0; k < unique.size(); ++k)
  {
    out << "P P" << k;
    for (auto const &b : unique[k]->breakpoints())
      out << " (" << format_number(b.distance) << ',' << format_number(b.power) << ')';
    out << '\n';
  }
  for (std::size_t v = 0; v < tp.vectors.size(); ++v)
  {
    auto const &sv = tp.vectors[v];
    out << "V " << format_number(sv.start.x) << ' ' << format_number(sv.start.y) << ' '
        << format_number(sv.end.x) << ' ' << format_number(sv.end.y) << ' ' << format_number(sv.speed)
        << " P" << profile_of[v] << (sv.fictitious ? " F" : "") << '\n';
  }
}

namespace
{

// Rectangle contour, counter-clockwise starting at the lower-left corner.
std::array<std::pair<Vec2, Vec2>, 4> ring_edges(Vec2 lo, Vec2 hi)
{
  Vec2 const a = lo;
  Vec2 const b{hi.x, lo.y};
  Vec2 const c = hi;
  Vec2 const d{lo.x, hi.y};
  return {{{a, b}, {b, c}, {c, d}, {d, a}}};
}

// Clip the infinite line {p : dot(n, p) = c} to the box; returns false if the
// chord is degenerate.
bool clip_line(Vec2 dir, Vec2 n, double c, Vec2 lo, Vec2 hi, Vec2 &p0, Vec2 &p1)
{
  Vec2 const base = n * c;
  double tlo = -std::numeric_limits<double>::infinity();
  double thi = std::numeric_limits<double>::infinity();
  auto slab = [&](double b, double d, double l, double h) {
    if (std::abs(d) < 1e-15)
      return b >= l && b <= h;
    double t0 = (l - b) / d;
    double t1 = (h - b) / d;
    if (t0 > t1)
      std::swap(t0, t1);
    tlo = std::max(tlo, t0);
    thi = std::min(thi, t1);
    return true;
  };
  if (!slab(base.x, dir.x, lo.x, hi.x) || !slab(base.y, dir.y, lo.y, hi.y))
    return false;
  if (thi - tlo <= 1e-12)
    return false;
  p0 = base + dir * tlo;
  p1 = base + dir * thi;
  return true;
}

} // namespace

Toolpath generate_raster_layer(RasterSpec const &spec, double layer_height)
{
  if (!(spec.hatch > 0.0))
    throw ValidationError("hatch spacing must be positive");
  if (!(spec.side > spec.hatch))
    throw ValidationError("region side must exceed the hatch spacing");
  if (!(spec.speed > 0.0))
    throw ValidationError("scan speed must be positive");
  if (spec.contour_count < 0)
    throw ValidationError("contour count must be non-negative");
  if (!(layer_height > 0.0))
    throw ValidationError("layer height must be positive");

  Toolpath tp;
  tp.layer_height = layer_height;
  PowerProfile const profile = PowerProfile::constant(spec.power);
  auto push = [&](Vec2 a, Vec2 b) {
    ScanVector v;
    v.id = static_cast<int>(tp.vectors.size()) + 1;
    v.start = a;
    v.end = b;
    v.speed = spec.speed;
    v.profile = profile;
    tp.vectors.push_back(v);
  };

  Vec2 const lo = spec.origin;
  Vec2 const hi = spec.origin + Vec2{spec.side, spec.side};
  for (int k = 0; k < spec.contour_count; ++k)
  {
    double const inset = (k / 4) * spec.hatch;
    if (2.0 * inset >= spec.side)
      throw ValidationError("too many contours for the region");
    auto const edges = ring_edges(lo + Vec2{inset, inset}, hi - Vec2{inset, inset});
    push(edges[k % 4].first, edges[k % 4].second);
  }

  int const rings = (spec.contour_count + 3) / 4;
  double const inset = rings * spec.hatch;
  Vec2 const ilo = lo + Vec2{inset, inset};
  Vec2 const ihi = hi - Vec2{inset, inset};
  if (ihi.x - ilo.x <= 0.0)
    return tp;

  double const a = spec.angle_deg * std::numbers::pi / 180.0;
  Vec2 const dir{std::cos(a), std::sin(a)};
  Vec2 const n = perp(dir);
  Vec2 const corners[4] = {ilo, {ihi.x, ilo.y}, ihi, {ilo.x, ihi.y}};
  double cmin = std::numeric_limits<double>::infinity();
  double cmax = -cmin;
  for (Vec2 const &c : corners)
  {
    cmin = std::min(cmin, dot(n, c));
    cmax = std::max(cmax, dot(n, c));
  }
  int const count = static_cast<int>(std::ceil((cmax - cmin) / spec.hatch - 1e-9)) - 1;
  bool forward = true;
  for (int k = 1; k <= count; ++k)
  {
    Vec2 p0;
    Vec2 p1;
    if (!clip_line(dir, n, cmin + k * spec.hatch, ilo, ihi, p0, p1))
      continue;
    if (forward)
      push(p0, p1);
    else
      push(p1, p0);
    forward = !forward;
  }
  return tp;
}

Toolpath append_fictitious_paths(Toolpath tp, double margin, double path_spacing)
{
  if (margin < 0.0)
    throw ValidationError("fictitious margin must be non-negative");
  if (margin == 0.0)
    return tp;
  if (!(path_spacing > 0.0))
    throw ValidationError("fictitious path spacing must be positive");

  Vec2 lo{std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity()};
  Vec2 hi = lo * -1.0;
  double speed = 0.0;
  int next_id = 1;
  for (auto const &v : tp.vectors)
  {
    next_id = std::max(next_id, v.id + 1);
    if (v.fictitious)
      continue;
    if (speed == 0.0)
      speed = v.speed;
    for (Vec2 const p : {v.start, v.end})
    {
      lo = {std::min(lo.x, p.x), std::min(lo.y, p.y)};
      hi = {std::max(hi.x, p.x), std::max(hi.y, p.y)};
    }
  }
  if (speed == 0.0)
    return tp;

  int const rings = static_cast<int>(std::floor(margin / path_spacing + 1e-9));
  for (int k = 1; k <= rings; ++k)
  {
    double const off = k * path_spacing;
    for (auto const &[a, b] : ring_edges(lo - Vec2{off, off}, hi + Vec2{off, off}))
    {
      ScanVector v;
      v.id = next_id++;
      v.start = a;
      v.end = b;
      v.speed = speed;
      v.profile = PowerProfile::constant(0.0);
      v.fictitious = true;
      tp.vectors.push_back(v);
    }
  }
  return tp;
}

std::vector<SubPath> discretize(Toolpath const &tp, double target_length)
{
  if (!(target_length > 0.0))
    throw ValidationError("target element length must be positive");

  std::vector<SubPath> out;
  for (std::size_t vi = 0; vi < tp.vectors.size(); ++vi)
  {
    auto const &v = tp.vectors[vi];
    double const len = v.length();
    int const n = std::max(1, static_cast<int>(std::ceil(len / target_length - 1e-9)));
    double const sub_len = len / n;
    for (int k = 0; k < n; ++k)
    {
      SubPath sp;
      sp.vector_id = v.id;
      sp.vector_index = static_cast<int>(vi);
      sp.index_in_vector = k;
      sp.start = v.start + (v.end - v.start) * (static_cast<double>(k) / n);
      sp.end = k + 1 == n ? v.end : v.start + (v.end - v.start) * (static_cast<double>(k + 1) / n);
      sp.distance_offset = len * k / n;
      sp.duration = sub_len / v.speed;
      sp.fictitious = v.fictitious;
      sp.mean_power = v.fictitious ? 0.0
                                   : v.profile.integral(sp.distance_offset, sp.distance_offset + sub_len) / sub_len;
      out.push_back(sp);
    }
  }
  return out;
}

} // namespace capl
