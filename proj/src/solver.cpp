#include <capl/errors.hpp>
#include <capl/solver.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

namespace capl
{

AbsorptivityModel AbsorptivityModel::constant(double alpha)
{
  if (!(alpha > 0.0 && alpha <= 1.0))
    throw ValidationError("absorptivity must lie in (0, 1]");
  AbsorptivityModel m;
  m._tail = alpha;
  return m;
}

AbsorptivityModel AbsorptivityModel::piecewise(std::vector<AbsorptivityBreakpoint> breakpoints, double tail)
{
  if (breakpoints.empty())
    return constant(tail);
  if (!(tail > 0.0 && tail <= 1.0))
    throw ValidationError("absorptivity must lie in (0, 1]");
  for (std::size_t k = 0; k < breakpoints.size(); ++k)
  {
    if (!(breakpoints[k].value > 0.0 && breakpoints[k].value <= 1.0))
      throw ValidationError("absorptivity must lie in (0, 1]");
    if (breakpoints[k].distance < 0.0 || (k > 0 && !(breakpoints[k].distance > breakpoints[k - 1].distance)))
      throw ValidationError("absorptivity breakpoints must have increasing non-negative distances");
  }
  AbsorptivityModel m;
  m._breakpoints = std::move(breakpoints);
  m._tail = tail;
  return m;
}

AbsorptivityModel AbsorptivityModel::surrogate()
{
  return piecewise({{0.0, 0.41}, {0.2e-3, 0.73}, {0.8e-3, 0.41}}, 0.41);
}

double AbsorptivityModel::at(double distance) const
{
  if (_breakpoints.empty() || distance >= _breakpoints.back().distance)
    return _tail;
  if (distance <= _breakpoints.front().distance)
    return _breakpoints.front().value;
  auto const hi = std::upper_bound(_breakpoints.begin(), _breakpoints.end(), distance,
                                   [](double d, AbsorptivityBreakpoint const &b) { return d < b.distance; });
  auto const lo = hi - 1;
  double const t = (distance - lo->distance) / (hi->distance - lo->distance);
  return lo->value + t * (hi->value - lo->value);
}

double absorptivity_at(AbsorptivityModel const &model, ScanVector const &vector, double distance)
{
  return model.at(std::clamp(distance, 0.0, vector.length()));
}

void SolverConfig::validate() const
{
  if (!(d0 > 0.0))
    throw ValidationError("d0 must be positive");
  if (!(stability_safety > 0.0 && stability_safety < 1.0))
    throw ValidationError("stability_safety must lie in (0, 1)");
  if (!(fixed_dt > 0.0))
    throw ValidationError("fixed_dt must be positive");
  if (!(active_radius >= 0.0) || !(active_temp_eps >= 0.0))
    throw ValidationError("active body radius and temperature margin must be non-negative");
  if (!(emissivity >= 0.0 && emissivity <= 1.0))
    throw ValidationError("emissivity must lie in [0, 1]");
  if (!(penetration_depth >= 0.0))
    throw ValidationError("penetration_depth must be non-negative");
  if (!(snapshot_interval > 0.0))
    throw ValidationError("snapshot_interval must be positive");
  if (!(initial_temp >= 0.0))
    throw ValidationError("initial_temp must be non-negative");
  if (raster.resolution <= 0 || !(raster.side > 0.0) || !(raster.power > 0.0))
    throw ValidationError("raster side, resolution and exponent must be positive");
}

double laser_input(Element const &e, Vec2 laser, double power, double alpha, double spot_radius,
                   double layer_fraction)
{
  Vec2 const d = laser - e.centroid.xy();
  double const u0 = dot(d, e.direction);
  double const v0 = dot(d, perp(e.direction));
  double const hl = 0.5 * e.length;
  double const hw = 0.5 * e.width;
  double const s = std::numbers::sqrt2 / spot_radius;
  // The 2D Gaussian separates along the element axes.
  double const fu = std::erf(s * (hl - u0)) + std::erf(s * (hl + u0));
  double const fv = std::erf(s * (hw - v0)) + std::erf(s * (hw + v0));
  return 0.25 * fu * fv * alpha * power * layer_fraction;
}

std::vector<double> layer_fractions(int layers, double layer_height, double penetration_depth)
{
  if (layers <= 0)
    return {};
  double const delta = penetration_depth > 0.0 ? penetration_depth : layer_height;
  double const r = layer_height / delta;
  std::vector<double> f(static_cast<std::size_t>(layers));
  double const norm = -std::expm1(-r) / -std::expm1(-layers * r);
  for (int m = 0; m < layers; ++m)
    f[m] = std::exp(-m * r) * norm;
  return f;
}

double normalize_power(std::span<double> inputs, double alpha, double power, bool laser_on)
{
  if (!laser_on || power == 0.0)
  {
    std::fill(inputs.begin(), inputs.end(), 0.0);
    return 0.0;
  }
  double const sum = std::accumulate(inputs.begin(), inputs.end(), 0.0);
  if (!(sum > 0.0))
    throw NumericalError("laser is on but illuminates no element");
  double const scale = alpha * power / sum;
  for (double &h : inputs)
    h *= scale;
  return scale;
}

double conduction_flux(ContactEdge const &edge, double T_i, double T_j, MaterialModel const &m, double d0)
{
  double const k = m.conductivity(0.5 * (T_i + T_j));
  return k * edge.area * (T_j - T_i) / std::max(d0, edge.distance);
}

double convection_flux(Element const &e, double T, MaterialModel const &m)
{
  if (e.depth != 0)
    return 0.0;
  return -m.convection * e.footprint_area() * (T - m.env_temp);
}

double radiation_flux(Element const &e, double T, double emissivity, MaterialModel const &m)
{
  if (e.depth != 0)
    return 0.0;
  double const T2 = T * T;
  double const E2 = m.env_temp * m.env_temp;
  return -emissivity * kStefanBoltzmann * e.footprint_area() * (T2 * T2 - E2 * E2);
}

namespace
{

double neighbour_temperature(int j, std::span<double const> T, MaterialModel const &m)
{
  return j == kPlatformNode ? m.substrate_temp : T[j];
}

} // namespace

double stability_dt(ContactGraph const &graph, int id, std::span<double const> T, MaterialModel const &m,
                    SolverConfig const &config)
{
  Element const &e = graph.elements()[id];
  double const Ti = T[id];
  double g = 0.0;
  for (int k : graph.incident(id))
  {
    ContactEdge const &edge = graph.edges()[k];
    double const Tj = neighbour_temperature(ContactGraph::other(edge, id), T, m);
    g += m.conductivity(0.5 * (Ti + Tj)) * edge.area / std::max(config.d0, edge.distance);
  }
  if (e.depth == 0)
  {
    g += m.convection * e.footprint_area();
    if (config.enable_radiation)
      g += 4.0 * config.emissivity * kStefanBoltzmann * Ti * Ti * Ti * e.footprint_area();
  }
  if (!(g > 0.0))
    return std::numeric_limits<double>::max();
  return config.stability_safety * m.density * m.specific_heat_eq(Ti) * e.volume() / g;
}

std::vector<int> active_body(ContactGraph const &graph, std::span<double const> T, Vec2 laser,
                             double active_radius, double hot_threshold)
{
  std::size_t const n = graph.size();
  std::vector<char> core(n, 0);
  for (std::size_t i = 0; i < n; ++i)
    core[i] = distance(graph.elements()[i].centroid.xy(), laser) <= active_radius || T[i] > hot_threshold;
  std::vector<char> in = core;
  for (std::size_t i = 0; i < n; ++i)
    if (core[i])
      for (int k : graph.incident(static_cast<int>(i)))
      {
        int const j = ContactGraph::other(graph.edges()[k], static_cast<int>(i));
        if (j != kPlatformNode)
          in[j] = 1;
      }
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i)
    if (in[i])
      out.push_back(static_cast<int>(i));
  return out;
}

BiotNumbers biot_number(Element const &e, double h, double k)
{
  return {h * e.length / k, h * e.width / k};
}

ActiveBody::ActiveBody(ContactGraph const &graph, double active_radius, double hot_threshold, bool dense)
    : _graph(&graph), _radius(active_radius), _threshold(hot_threshold), _dense(dense)
{
  std::size_t const n = graph.size();
  _stamp.assign(n, 0);
  if (_dense)
  {
    _active.resize(n);
    std::iota(_active.begin(), _active.end(), 0);
    return;
  }
  _centroids.reserve(n);
  std::vector<Aabb2> boxes;
  boxes.reserve(n);
  for (Element const &e : graph.elements())
  {
    _centroids.push_back(e.centroid.xy());
    boxes.push_back({e.centroid.xy(), e.centroid.xy()});
  }
  _grid = SpatialGrid(boxes, std::max(_radius, 1e-6));
}

void ActiveBody::reset(std::span<double const> T)
{
  _hot.clear();
  for (std::size_t i = 0; i < T.size(); ++i)
    if (T[i] > _threshold)
      _hot.push_back(static_cast<int>(i));
}

std::span<int const> ActiveBody::update(Vec2 laser)
{
  if (_dense)
    return _active;
  if (++_epoch == 0)
  {
    std::fill(_stamp.begin(), _stamp.end(), 0);
    _epoch = 1;
  }
  _active.clear();
  auto mark = [&](int id) {
    if (_stamp[id] != _epoch)
    {
      _stamp[id] = _epoch;
      _active.push_back(id);
    }
  };
  double const r2 = _radius * _radius;
  _grid.visit({laser - Vec2{_radius, _radius}, laser + Vec2{_radius, _radius}}, [&](int id) {
    Vec2 const d = _centroids[id] - laser;
    if (dot(d, d) <= r2)
      mark(id);
  });
  for (int id : _hot)
    mark(id);
  std::size_t const core = _active.size();
  for (std::size_t k = 0; k < core; ++k)
  {
    int const id = _active[k];
    for (int e : _graph->incident(id))
    {
      int const j = ContactGraph::other(_graph->edges()[e], id);
      if (j != kPlatformNode)
        mark(j);
    }
  }
  std::sort(_active.begin(), _active.end());
  return _active;
}

void ActiveBody::refresh_hot(std::span<double const> T)
{
  if (_dense)
  {
    reset(T);
    return;
  }
  _hot.clear();
  for (int id : _active)
    if (T[id] > _threshold)
      _hot.push_back(id);
}

Simulator::Simulator(ContactGraph const &graph, MaterialModel material, SolverConfig config,
                     AbsorptivityModel absorptivity)
    : _graph(&graph), _material(material), _config(config), _absorptivity(std::move(absorptivity)),
      _body(graph, config.dense_mode ? std::numeric_limits<double>::infinity() : config.active_radius,
            material.env_temp + config.active_temp_eps, config.dense_mode)
{
  _material.validate();
  _config.validate();
  double const T0 = _config.initial_temp > 0.0 ? _config.initial_temp : _material.env_temp;
  _state = ThermalState::uniform(graph.size(), T0);
  double const H = graph.size() ? graph.elements().front().height : 0.0;
  _layer_fraction = layer_fractions(std::max(1, graph.layer_count()), H, _config.penetration_depth);
}

std::span<int const> Simulator::prepare(Vec2 laser)
{
  if (_dirty)
  {
    _body.reset(_state.temperature);
    _dirty = false;
  }
  return _body.update(laser);
}

double Simulator::stable_dt() const
{
  double dt = std::numeric_limits<double>::max();
  for (int id : _body.ids())
    dt = std::min(dt, stability_dt(*_graph, id, _state.temperature, _material, _config));
  return dt;
}

StepRecord Simulator::advance(double dt, LaserContext const *laser)
{
  auto const ids = _body.ids();
  auto const &elements = _graph->elements();
  auto const &edges = _graph->edges();
  std::vector<double> const &T = _state.temperature;
  std::size_t const n = ids.size();

  StepRecord rec;
  rec.dt = dt;
  rec.active_count = static_cast<int>(n);

  _heat.assign(n, 0.0);
  bool const on = laser != nullptr && laser->power > 0.0;
  if (on)
  {
    double const w = 0.5 * _material.spot_diameter;
    for (std::size_t k = 0; k < n; ++k)
    {
      Element const &e = elements[ids[k]];
      // Beyond ~6 spot radii the Gaussian contributes below 1e-30 of the beam.
      double const reach = 6.0 * w + 0.5 * std::hypot(e.length, e.width);
      Vec2 const d = laser->position - e.centroid.xy();
      if (dot(d, d) > reach * reach)
        continue;
      _heat[k] = laser_input(e, laser->position, laser->power, laser->alpha, w, _layer_fraction[e.depth]);
    }
    rec.target_power = laser->alpha * laser->power;
  }
  rec.scale_factor = normalize_power(_heat, on ? laser->alpha : 0.0, on ? laser->power : 0.0, on);
  rec.absorbed_power = std::accumulate(_heat.begin(), _heat.end(), 0.0);
  rec.energy_in = rec.absorbed_power * dt;

  _next.resize(n);
  for (std::size_t k = 0; k < n; ++k)
  {
    int const id = ids[k];
    Element const &e = elements[id];
    double const Ti = T[id];
    double q = _heat[k];
    for (int ek : _graph->incident(id))
    {
      ContactEdge const &edge = edges[ek];
      q += conduction_flux(edge, Ti, neighbour_temperature(ContactGraph::other(edge, id), T, _material), _material,
                           _config.d0);
    }
    q += convection_flux(e, Ti, _material);
    if (_config.enable_radiation)
      q += radiation_flux(e, Ti, _config.emissivity, _material);
    double const Tn = Ti + dt * q / (_material.density * _material.specific_heat_eq(Ti) * e.volume());
    if (!std::isfinite(Tn))
      throw NumericalError("non-finite temperature at element " + std::to_string(id) + " in step " +
                           std::to_string(_step) + " (dt = " + std::to_string(dt) + " s)");
    _next[k] = Tn;
  }

  double const liquidus = _material.liquidus;
  for (std::size_t k = 0; k < n; ++k)
  {
    _state.temperature[ids[k]] = _next[k];
    if (_next[k] >= liquidus)
      _state.melted_ever[ids[k]] = 1;
  }
  _body.refresh_hot(_state.temperature);
  _state.time += dt;
  rec.step = _step++;
  rec.time = _state.time;
  return rec;
}

MeltPoolMetrics Simulator::measure(Vec2 laser) const
{
  MeltPoolMetrics m;
  m.source = MetricsSource::simulated;
  m.snapshot_time = _state.time;
  m.laser_position = laser;
  auto const &elements = _graph->elements();
  std::vector<int> const melted = melted_set(_state, _body.ids(), _material.liquidus);
  m.melted_count = static_cast<int>(melted.size());
  m.length = pool_length(elements, melted);
  if (!_config.compute_width || melted.empty())
    return m;

  if (auto const raster = raster_at(laser))
    if (auto const fit = ellipse_fit(largest_component(binarize(*raster, _material.liquidus))))
    {
      m.width = fit->minor * raster->pixel_size;
      m.orientation = fit->orientation;
    }
  return m;
}

std::optional<TemperatureRaster> Simulator::raster_at(Vec2 laser) const
{
  auto const &elements = _graph->elements();
  double const half = 0.5 * _config.raster.side;
  double const support = _config.raster.support_radius;
  std::vector<int> window;
  for (int id : _body.ids())
  {
    Element const &e = elements[id];
    if (e.depth != 0 || std::abs(e.centroid.x - laser.x) > half || std::abs(e.centroid.y - laser.y) > half)
      continue;
    if (support > 0.0 && distance(e.centroid.xy(), laser) > support)
      continue;
    window.push_back(id);
  }
  if (window.empty())
    return std::nullopt;
  return idw_raster(_state, elements, window, laser, _config.raster.side, _config.raster.resolution,
                    _config.raster.power);
}

ThermalHistory Simulator::run(Toolpath const &toolpath, std::span<SubPath const> sub_paths, SnapshotHook const &hook)
{
  ThermalHistory history;
  auto const t_start = std::chrono::steady_clock::now();
  double const interval = _config.snapshot_interval;
  double laser_time = 0.0;
  int frame = 0;

  for (SubPath const &sp : sub_paths)
  {
    if (sp.fictitious && !_config.traverse_fictitious)
      continue;
    ScanVector const &vec = toolpath.vectors.at(sp.vector_index);
    bool const on = !sp.fictitious;
    Vec2 const dir = vec.direction();
    double const speed = vec.speed;
    double const duration = sp.duration;
    double const tol = 1e-9 * duration;
    double tau = 0.0;

    while (duration - tau > tol)
    {
      double const travelled = speed * tau;
      Vec2 const pos = sp.start + dir * travelled;
      double const dist = sp.distance_offset + travelled;
      double const remaining = duration - tau;

      double dt = _config.dt_policy == DtPolicy::per_subpath ? remaining : std::min(_config.fixed_dt, remaining);
      double const next_snap = (frame + 1) * interval;
      if (on && next_snap - laser_time < dt)
        dt = next_snap - laser_time;
      prepare(pos);
      double const stable = stable_dt();
      while (dt > stable)
        dt *= 0.5;
      if (remaining - dt <= tol)
        dt = remaining;

      LaserContext ctx{pos, 0.0, 0.0, vec.id};
      if (on)
      {
        ctx.power = power_at(vec.profile, dist);
        ctx.alpha = absorptivity_at(_absorptivity, vec, dist);
      }
      _state.laser_on = on;
      history.steps.push_back(advance(dt, on ? &ctx : nullptr));
      history.max_active = std::max(history.max_active, history.steps.back().active_count);
      tau += dt;
      _state.laser_position = sp.start + dir * (speed * std::min(tau, duration));

      if (!on)
        continue;
      laser_time += dt;
      if (laser_time >= next_snap * (1.0 - 1e-9))
      {
        Snapshot snap;
        snap.metrics = measure(_state.laser_position);
        snap.metrics.frame = frame;
        snap.metrics.vector_id = vec.id;
        if (_config.record_fields)
          snap.temperature = _state.temperature;
        if (hook)
          hook(*this, snap);
        history.snapshots.push_back(std::move(snap));
        ++frame;
      }
    }
  }
  _state.laser_on = false;
  history.final_state = _state;
  history.solve_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return history;
}

} // namespace capl
