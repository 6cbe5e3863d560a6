#pragma once

#include <capl/geometry.hpp>
#include <capl/image.hpp>
#include <capl/mesh.hpp>
#include <capl/state.hpp>

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace capl
{

enum class MetricsSource : std::uint8_t
{
  simulated,
  experimental
};

struct MeltPoolMetrics
{
  int frame = 0;
  double snapshot_time = 0.0; // s
  Vec2 laser_position;
  double length = 0.0;        // m
  double width = 0.0;         // m
  double orientation = 0.0;   // rad
  int melted_count = 0;
  int vector_id = -1;         // -1 when unknown
  MetricsSource source = MetricsSource::simulated;
  bool outlier = false;
};

/// Regular grid of temperatures. Pixel (col, row) is centred at
/// origin + ((col + 0.5), (row + 0.5)) * pixel_size; rows increase with y.
struct TemperatureRaster
{
  Vec2 origin;
  double pixel_size = 0.0;
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double at(int col, int row) const { return values[static_cast<std::size_t>(row) * width + col]; }
  Vec2 pixel_center(int col, int row) const
  {
    return origin + Vec2{(col + 0.5) * pixel_size, (row + 0.5) * pixel_size};
  }
};

struct BinaryMask
{
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  bool at(int x, int y) const { return bits[static_cast<std::size_t>(y) * width + x] != 0; }
  std::size_t count() const;
};

struct EllipseFit
{
  double major = 0.0;       // px
  double minor = 0.0;       // px
  double orientation = 0.0; // rad in (-pi/2, pi/2], angle of the major axis from +x
  Vec2 centroid;            // px, (x = column, y = row)
};

struct RasterParams
{
  double side = 0.96e-3;  // m
  int resolution = 120;   // px per side
  double power = 1.3;     // IDW exponent
  double support_radius = 0.0; // m around the laser; 0 uses the whole window
};

struct OutlierParams
{
  double factor = 2.5;
  int window = 15;
};

/// Ids from `candidates` whose temperature is at or above the threshold.
std::vector<int> melted_set(ThermalState const &state, std::span<int const> candidates, double threshold);
/// Same over every element.
std::vector<int> melted_set(ThermalState const &state, double threshold);

/// Largest distance between top-face corners of the melted elements.
double pool_length(std::span<Element const> elements, std::span<int const> melted);

/// Inverse-distance-weighted temperature raster centred at `center`. Throws
/// ValidationError when `ids` is empty.
TemperatureRaster idw_raster(ThermalState const &state, std::span<Element const> elements, std::span<int const> ids,
                             Vec2 center, double side, int resolution, double power);

BinaryMask binarize(TemperatureRaster const &raster, double threshold);
BinaryMask binarize(GrayImage const &image, double threshold);

/// 8-connected component with the most pixels; ties go to the component whose
/// first pixel in row-major order comes first.
BinaryMask largest_component(BinaryMask const &mask);

/// Ellipse with the same second central moments as the mask (each pixel a
/// unit square). std::nullopt for an empty mask.
std::optional<EllipseFit> ellipse_fit(BinaryMask const &mask);

/// Minor axis (m) of the melt region reconstructed by IDW around the laser.
double pool_width(ThermalState const &state, std::span<Element const> elements, std::span<int const> ids,
                  Vec2 laser_position, RasterParams const &params, double threshold);

MeltPoolMetrics extract_frame_metrics(GrayImage const &image, double threshold, double pixel_size);

/// Flags zero-length frames and frames longer than `factor` times the rolling
/// median of the non-zero lengths in a centred window. Sets `outlier` and
/// returns the flags.
std::vector<bool> filter_outliers(std::span<MeltPoolMetrics> series, OutlierParams const &params = {});

/// CSV `frame,time_s,laser_x_m,laser_y_m,length_m,width_m,orientation_rad,outlier_flag,vector_id`.
void write_metrics_csv(std::ostream &out, std::span<MeltPoolMetrics const> metrics);
std::vector<MeltPoolMetrics> read_metrics_csv(std::istream &in, MetricsSource source);
std::vector<MeltPoolMetrics> read_metrics_csv_file(std::string const &path, MetricsSource source);

/// 16-bit PGM of a raster plus `<path>.txt` recording the linear K mapping.
void write_raster_pgm(std::string const &path, TemperatureRaster const &raster, double t_min, double t_max);

} // namespace capl
