#include <capl/errors.hpp>
#include <capl/meltpool.hpp>
#include <capl/parallel.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numbers>
#include <ostream>
#include <sstream>

namespace capl
{

std::size_t BinaryMask::count() const
{
  return static_cast<std::size_t>(std::count_if(bits.begin(), bits.end(), [](std::uint8_t b) { return b != 0; }));
}

std::vector<int> melted_set(ThermalState const &state, std::span<int const> candidates, double threshold)
{
  std::vector<int> out;
  for (int id : candidates)
    if (state.temperature[id] >= threshold)
      out.push_back(id);
  return out;
}

std::vector<int> melted_set(ThermalState const &state, double threshold)
{
  std::vector<int> out;
  for (std::size_t id = 0; id < state.temperature.size(); ++id)
    if (state.temperature[id] >= threshold)
      out.push_back(static_cast<int>(id));
  return out;
}

namespace
{

std::vector<Vec2> convex_hull(std::vector<Vec2> pts)
{
  std::sort(pts.begin(), pts.end(), [](Vec2 a, Vec2 b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3)
    return pts;
  std::vector<Vec2> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i)
  {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0)
      --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, lower = k + 1; i > 0; --i)
  {
    while (k >= lower && cross(hull[k - 1] - hull[k - 2], pts[i - 1] - hull[k - 2]) <= 0.0)
      --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  return hull;
}

} // namespace

double pool_length(std::span<Element const> elements, std::span<int const> melted)
{
  if (melted.empty())
    return 0.0;
  std::vector<Vec2> corners;
  corners.reserve(4 * melted.size());
  for (int id : melted)
    for (Vec2 const &c : elements[id].top_face().corners())
      corners.push_back(c);
  std::vector<Vec2> const hull = convex_hull(std::move(corners));
  double best = 0.0;
  for (std::size_t a = 0; a < hull.size(); ++a)
    for (std::size_t b = a + 1; b < hull.size(); ++b)
      best = std::max(best, distance(hull[a], hull[b]));
  return best;
}

TemperatureRaster idw_raster(ThermalState const &state, std::span<Element const> elements, std::span<int const> ids,
                             Vec2 center, double side, int resolution, double power)
{
  if (ids.empty())
    throw ValidationError("IDW reconstruction needs at least one element");
  if (resolution <= 0 || !(side > 0.0))
    throw ValidationError("raster side and resolution must be positive");

  std::vector<double> xs;
  std::vector<double> ys;
  std::vector<double> ts;
  xs.reserve(ids.size());
  ys.reserve(ids.size());
  ts.reserve(ids.size());
  for (int id : ids)
  {
    xs.push_back(elements[id].centroid.x);
    ys.push_back(elements[id].centroid.y);
    ts.push_back(state.temperature[id]);
  }

  TemperatureRaster r;
  r.pixel_size = side / resolution;
  r.origin = center - Vec2{0.5 * side, 0.5 * side};
  r.width = resolution;
  r.height = resolution;
  r.values.resize(static_cast<std::size_t>(resolution) * resolution);

  double const half_power = 0.5 * power;
  constexpr double site_tol2 = 1e-24; // (1e-12 m)^2
  std::size_t const n = xs.size();
  parallel_for(static_cast<std::size_t>(resolution), [&](std::size_t row_begin, std::size_t row_end) {
    for (int row = static_cast<int>(row_begin); row < static_cast<int>(row_end); ++row)
      for (int col = 0; col < resolution; ++col)
      {
        Vec2 const p = r.pixel_center(col, row);
        double num = 0.0;
        double den = 0.0;
        double exact = std::numeric_limits<double>::quiet_NaN();
        for (std::size_t k = 0; k < n; ++k)
        {
          double const dx = p.x - xs[k];
          double const dy = p.y - ys[k];
          double const d2 = dx * dx + dy * dy;
          if (d2 < site_tol2)
          {
            exact = ts[k];
            break;
          }
          double const w = std::pow(d2, -half_power);
          num += w * ts[k];
          den += w;
        }
        r.values[static_cast<std::size_t>(row) * resolution + col] = std::isnan(exact) ? num / den : exact;
      }
  });
  return r;
}

BinaryMask binarize(TemperatureRaster const &raster, double threshold)
{
  BinaryMask m{raster.width, raster.height, {}};
  m.bits.resize(raster.values.size());
  for (std::size_t k = 0; k < raster.values.size(); ++k)
    m.bits[k] = raster.values[k] >= threshold ? 1 : 0;
  return m;
}

BinaryMask binarize(GrayImage const &image, double threshold)
{
  BinaryMask m{image.width, image.height, {}};
  m.bits.resize(image.pixels.size());
  for (std::size_t k = 0; k < image.pixels.size(); ++k)
    m.bits[k] = image.pixels[k] >= threshold ? 1 : 0;
  return m;
}

BinaryMask largest_component(BinaryMask const &mask)
{
  std::size_t const n = mask.bits.size();
  std::vector<int> label(n, -1);
  std::vector<std::size_t> stack;
  int best_label = -1;
  std::size_t best_count = 0;
  int next = 0;
  for (std::size_t start = 0; start < n; ++start)
  {
    if (!mask.bits[start] || label[start] >= 0)
      continue;
    std::size_t count = 0;
    label[start] = next;
    stack.push_back(start);
    while (!stack.empty())
    {
      std::size_t const k = stack.back();
      stack.pop_back();
      ++count;
      int const x = static_cast<int>(k % mask.width);
      int const y = static_cast<int>(k / mask.width);
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx)
        {
          int const nx = x + dx;
          int const ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= mask.width || ny >= mask.height)
            continue;
          std::size_t const nk = static_cast<std::size_t>(ny) * mask.width + nx;
          if (mask.bits[nk] && label[nk] < 0)
          {
            label[nk] = next;
            stack.push_back(nk);
          }
        }
    }
    if (count > best_count)
    {
      best_count = count;
      best_label = next;
    }
    ++next;
  }

  BinaryMask out{mask.width, mask.height, std::vector<std::uint8_t>(n, 0)};
  for (std::size_t k = 0; k < n; ++k)
    out.bits[k] = label[k] == best_label && best_label >= 0 ? 1 : 0;
  return out;
}

std::optional<EllipseFit> ellipse_fit(BinaryMask const &mask)
{
  double sx = 0.0;
  double sy = 0.0;
  double count = 0.0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y))
      {
        sx += x;
        sy += y;
        count += 1.0;
      }
  if (count == 0.0)
    return std::nullopt;

  double const mx = sx / count;
  double const my = sy / count;
  double cxx = 0.0;
  double cyy = 0.0;
  double cxy = 0.0;
  for (int y = 0; y < mask.height; ++y)
    for (int x = 0; x < mask.width; ++x)
      if (mask.at(x, y))
      {
        cxx += (x - mx) * (x - mx);
        cyy += (y - my) * (y - my);
        cxy += (x - mx) * (y - my);
      }
  // Unit-square pixels add 1/12 variance along each axis.
  cxx = cxx / count + 1.0 / 12.0;
  cyy = cyy / count + 1.0 / 12.0;
  cxy /= count;

  double const mean = 0.5 * (cxx + cyy);
  double const radius = std::sqrt(0.25 * (cxx - cyy) * (cxx - cyy) + cxy * cxy);
  double const l1 = mean + radius;
  double const l2 = std::max(0.0, mean - radius);

  EllipseFit fit;
  fit.major = 4.0 * std::sqrt(l1);
  fit.minor = 4.0 * std::sqrt(l2);
  fit.orientation = radius > 0.0 ? 0.5 * std::atan2(2.0 * cxy, cxx - cyy) : 0.0;
  if (fit.orientation <= -0.5 * std::numbers::pi)
    fit.orientation += std::numbers::pi;
  fit.centroid = {mx, my};
  return fit;
}

double pool_width(ThermalState const &state, std::span<Element const> elements, std::span<int const> ids,
                  Vec2 laser_position, RasterParams const &params, double threshold)
{
  // IDW values are convex combinations, so nothing can reach the threshold
  // unless some element does.
  bool const any = std::any_of(ids.begin(), ids.end(), [&](int id) { return state.temperature[id] >= threshold; });
  if (!any)
    return 0.0;
  TemperatureRaster const raster =
      idw_raster(state, elements, ids, laser_position, params.side, params.resolution, params.power);
  auto const fit = ellipse_fit(largest_component(binarize(raster, threshold)));
  return fit ? fit->minor * raster.pixel_size : 0.0;
}

MeltPoolMetrics extract_frame_metrics(GrayImage const &image, double threshold, double pixel_size)
{
  MeltPoolMetrics m;
  m.source = MetricsSource::experimental;
  m.laser_position = {std::numeric_limits<double>::quiet_NaN(), std::numeric_limits<double>::quiet_NaN()};
  BinaryMask const pool = largest_component(binarize(image, threshold));
  auto const fit = ellipse_fit(pool);
  if (!fit)
    return m;
  m.length = fit->major * pixel_size;
  m.width = fit->minor * pixel_size;
  m.orientation = fit->orientation;
  m.melted_count = static_cast<int>(pool.count());
  return m;
}

std::vector<bool> filter_outliers(std::span<MeltPoolMetrics> series, OutlierParams const &params)
{
  std::vector<bool> flags(series.size(), false);
  int const half = std::max(0, params.window / 2);
  std::vector<double> window;
  for (std::size_t i = 0; i < series.size(); ++i)
  {
    if (!(series[i].length > 0.0))
    {
      flags[i] = true;
      continue;
    }
    window.clear();
    std::size_t const lo = i >= static_cast<std::size_t>(half) ? i - half : 0;
    std::size_t const hi = std::min(series.size() - 1, i + half);
    for (std::size_t k = lo; k <= hi; ++k)
      if (series[k].length > 0.0)
        window.push_back(series[k].length);
    std::sort(window.begin(), window.end());
    std::size_t const m = window.size();
    double const median = m % 2 ? window[m / 2] : 0.5 * (window[m / 2 - 1] + window[m / 2]);
    flags[i] = series[i].length > params.factor * median;
  }
  for (std::size_t i = 0; i < series.size(); ++i)
    series[i].outlier = flags[i];
  return flags;
}

void write_metrics_csv(std::ostream &out, std::span<MeltPoolMetrics const> metrics)
{
  out << "frame,time_s,laser_x_m,laser_y_m,length_m,width_m,orientation_rad,outlier_flag,vector_id\n";
  std::ostringstream row;
  row << std::setprecision(12);
  for (auto const &m : metrics)
  {
    row.str({});
    row << m.frame << ',' << m.snapshot_time << ',' << m.laser_position.x << ',' << m.laser_position.y << ','
        << m.length << ',' << m.width << ',' << m.orientation << ',' << (m.outlier ? 1 : 0) << ',' << m.vector_id
        << '\n';
    out << row.str();
  }
}

std::vector<MeltPoolMetrics> read_metrics_csv(std::istream &in, MetricsSource source)
{
  std::vector<MeltPoolMetrics> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line))
  {
    ++line_no;
    if (!line.empty() && line.back() == '\r')
      line.pop_back();
    if (line.empty() || line.rfind("frame", 0) == 0)
      continue;
    std::vector<std::string> cells;
    std::istringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');)
      cells.push_back(cell);
    if (cells.size() != 8 && cells.size() != 9)
      throw ParseError("metrics row needs 8 or 9 columns", line_no);
    auto num = [&](std::string const &s) {
      try
      {
        std::size_t used = 0;
        double const v = std::stod(s, &used);
        if (used != s.size())
          throw std::invalid_argument(s);
        return v;
      }
      catch (std::exception const &)
      {
        throw ParseError("bad number '" + s + "'", line_no);
      }
    };
    MeltPoolMetrics m;
    m.source = source;
    m.frame = static_cast<int>(num(cells[0]));
    m.snapshot_time = num(cells[1]);
    m.laser_position = {num(cells[2]), num(cells[3])};
    m.length = num(cells[4]);
    m.width = num(cells[5]);
    m.orientation = num(cells[6]);
    m.outlier = num(cells[7]) != 0.0;
    m.vector_id = cells.size() == 9 ? static_cast<int>(num(cells[8])) : -1;
    out.push_back(m);
  }
  return out;
}

std::vector<MeltPoolMetrics> read_metrics_csv_file(std::string const &path, MetricsSource source)
{
  std::ifstream in(path);
  if (!in)
    throw IoError("cannot open metrics file '" + path + "'");
  return read_metrics_csv(in, source);
}

void write_raster_pgm(std::string const &path, TemperatureRaster const &raster, double t_min, double t_max)
{
  if (!(t_max > t_min))
    throw ValidationError("raster temperature range must be non-empty");
  GrayImage img;
  img.width = raster.width;
  img.height = raster.height;
  img.maxval = 65535;
  img.pixels.resize(raster.values.size());
  for (int row = 0; row < raster.height; ++row)
    for (int col = 0; col < raster.width; ++col)
    {
      double const t = std::clamp((raster.at(col, row) - t_min) / (t_max - t_min), 0.0, 1.0);
      // Image rows run top-down, raster rows bottom-up.
      img.at(col, raster.height - 1 - row) = static_cast<std::uint16_t>(std::lround(t * 65535.0));
    }
  write_pgm(path, img);

  std::ofstream side(path + ".txt");
  if (!side)
    throw IoError("cannot write raster sidecar for '" + path + "'");
  side << std::setprecision(12) << "# T = t_min_K + value / 65535 * (t_max_K - t_min_K)\n"
       << "t_min_K = " << t_min << "\nt_max_K = " << t_max << "\npixel_size_m = " << raster.pixel_size
       << "\norigin_x_m = " << raster.origin.x << "\norigin_y_m = " << raster.origin.y << '\n';
}

} // namespace capl
