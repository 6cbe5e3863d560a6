#pragma once

#include <capl/geometry.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace capl
{

struct PowerBreakpoint
{
  double distance = 0.0; // m along the vector
  double power = 0.0;    // W

  bool operator==(PowerBreakpoint const &) const = default;
};

/// Piecewise-linear laser power as a function of distance along a scan
/// vector, clamped outside the breakpoint range.
class PowerProfile
{
public:
  PowerProfile() = default;
  /// Throws ValidationError unless distances strictly increase and powers are
  /// non-negative.
  explicit PowerProfile(std::vector<PowerBreakpoint> breakpoints);

  static PowerProfile constant(double power);

  std::vector<PowerBreakpoint> const &breakpoints() const { return _breakpoints; }
  bool is_zero() const;

  /// Exact integral of power over [a, b] (W*m).
  double integral(double a, double b) const;

  bool operator==(PowerProfile const &) const = default;

private:
  std::vector<PowerBreakpoint> _breakpoints{{0.0, 0.0}};
};

double power_at(PowerProfile const &profile, double distance);

struct ScanVector
{
  int id = 0;
  Vec2 start;
  Vec2 end;
  double speed = 0.0; // m/s
  PowerProfile profile;
  bool fictitious = false;

  double length() const { return capl::distance(start, end); }
  Vec2 direction() const;

  bool operator==(ScanVector const &) const = default;
};

struct Toolpath
{
  std::vector<ScanVector> vectors;
  double layer_height = 40e-6;
  int layer_index = 0;

  bool operator==(Toolpath const &) const = default;
};

struct SubPath
{
  int vector_id = 0;
  int vector_index = 0; // position of the parent vector in Toolpath::vectors
  int index_in_vector = 0;
  Vec2 start;
  Vec2 end;
  double distance_offset = 0.0; // m from vector start
  double duration = 0.0;        // s
  double mean_power = 0.0;      // W
  bool fictitious = false;

  double length() const { return capl::distance(start, end); }
};

/// Reads the line-oriented toolpath format:
///   P <id> (<dist_m>,<power_W>)+
///   V <x0> <y0> <x1> <y1> <speed_m_s> <profile_id> [F]
/// `#` starts a comment. The optional trailing `F` marks a fictitious vector.
Toolpath parse_toolpath(std::istream &in, double layer_height = 40e-6, int layer_index = 0);
Toolpath read_toolpath_file(std::string const &path, double layer_height = 40e-6, int layer_index = 0);

/// Inverse of parse_toolpath. Profiles are deduplicated.
void write_toolpath(std::ostream &out, Toolpath const &tp);

struct RasterSpec
{
  Vec2 origin;              // lower-left corner of the square region
  double side = 2e-3;       // m
  double hatch = 100e-6;    // m
  double angle_deg = 45.0;  // raster direction
  int contour_count = 4;
  double speed = 0.8;       // m/s
  double power = 195.0;     // W
};

Toolpath generate_raster_layer(RasterSpec const &spec, double layer_height = 40e-6);

/// Appends floor(margin / spacing) rectangular fictitious contour rings
/// around the bounding box of the real vectors.
Toolpath append_fictitious_paths(Toolpath tp, double margin, double path_spacing);

std::vector<SubPath> discretize(Toolpath const &tp, double target_length);

} // namespace capl
