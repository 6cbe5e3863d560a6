#include <capl/errors.hpp>
#include <capl/image.hpp>
#include <capl/pipeline.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <map>
#include <numbers>
#include <ostream>
#include <regex>
#include <set>
#include <sstream>

namespace fs = std::filesystem;

namespace capl
{

AbsorptivityModel RunConfig::absorptivity_model() const
{
  if (absorptivity == "constant")
    return AbsorptivityModel::constant(absorptivity_value);
  if (absorptivity == "surrogate")
    return AbsorptivityModel::surrogate();
  if (absorptivity == "piecewise")
    return AbsorptivityModel::piecewise(absorptivity_breakpoints, absorptivity_tail);
  throw ValidationError("absorptivity must be constant, surrogate or piecewise, got '" + absorptivity + "'");
}

namespace
{

std::set<std::string> const kKnownKeys = {
    "toolpath",          "material",           "output_dir",        "layer_height",      "element_length",
    "substrate_layers",  "fictitious_margin",  "fictitious_spacing", "hatch",            "initial_width",
    "overlap_threshold", "growth_step",        "max_width",          "neighbor_search",  "platform",
    "contact_gap",       "parallel_angle_deg", "absorptivity",       "absorptivity_value", "absorptivity_distances",
    "absorptivity_values", "absorptivity_tail", "d0",                "dt_policy",         "fixed_dt",
    "stability_safety",  "active_radius",      "active_temp_eps",    "enable_radiation", "emissivity",
    "penetration_depth", "snapshot_interval",  "dense_mode",         "initial_temp",     "traverse_fictitious",
    "compute_width",     "raster_side",        "raster_resolution",  "idw_power",        "outlier_factor",
    "outlier_window",    "idw_support_radius", "write_rasters",      "write_mesh",         "seed"};

NeighborSearch parse_search(std::string const &s)
{
  if (s == "grid")
    return NeighborSearch::grid;
  if (s == "brute_force")
    return NeighborSearch::brute_force;
  throw ValidationError("neighbor_search must be grid or brute_force, got '" + s + "'");
}

void ensure_dir(std::string const &dir)
{
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw IoError("cannot create directory '" + dir + "': " + ec.message());
}

std::ofstream open_out(fs::path const &path)
{
  std::ofstream out(path);
  if (!out)
    throw IoError("cannot write '" + path.string() + "'");
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

RunConfig run_config_from_keys(KeyValues const &kv, RunConfig c)
{
  for (auto const &[key, value] : kv.values())
    if (!kKnownKeys.count(key))
      throw ValidationError("unknown configuration key '" + key + "'");

  c.toolpath = kv.get_string("toolpath", c.toolpath);
  c.material = kv.get_string("material", c.material);
  c.output_dir = kv.get_string("output_dir", c.output_dir);
  c.layer_height = kv.get_double("layer_height", c.layer_height);
  c.element_length = kv.get_double("element_length", c.element_length);
  c.substrate_layers = kv.get_int("substrate_layers", c.substrate_layers);
  c.fictitious_spacing = kv.get_double("hatch", c.fictitious_spacing);
  c.fictitious_spacing = kv.get_double("fictitious_spacing", c.fictitious_spacing);
  c.fictitious_margin = kv.get_double("fictitious_margin", c.fictitious_margin);

  c.voronoi.initial_width = kv.get_double("initial_width", c.voronoi.initial_width);
  c.voronoi.overlap_threshold = kv.get_double("overlap_threshold", c.voronoi.overlap_threshold);
  c.voronoi.growth_step = kv.get_double("growth_step", c.voronoi.growth_step);
  c.voronoi.max_width = kv.get_double("max_width", c.voronoi.max_width);
  if (kv.has("neighbor_search"))
    c.voronoi.search = c.graph.search = parse_search(kv.get_string("neighbor_search", "grid"));
  c.graph.platform = kv.get_bool("platform", c.graph.platform);
  c.graph.contact_gap = kv.get_double("contact_gap", c.graph.contact_gap);
  if (kv.has("parallel_angle_deg"))
    c.graph.parallel_angle = kv.get_double("parallel_angle_deg", 10.0) * std::numbers::pi / 180.0;

  c.absorptivity = kv.get_string("absorptivity", c.absorptivity);
  c.absorptivity_value = kv.get_double("absorptivity_value", c.absorptivity_value);
  c.absorptivity_tail = kv.get_double("absorptivity_tail", c.absorptivity_tail);
  if (kv.has("absorptivity_distances") || kv.has("absorptivity_values"))
  {
    auto const d = kv.get_doubles("absorptivity_distances");
    auto const v = kv.get_doubles("absorptivity_values");
    if (d.size() != v.size())
      throw ValidationError("absorptivity_distances and absorptivity_values differ in length");
    c.absorptivity_breakpoints.clear();
    for (std::size_t k = 0; k < d.size(); ++k)
      c.absorptivity_breakpoints.push_back({d[k], v[k]});
  }

  SolverConfig &s = c.solver;
  s.d0 = kv.get_double("d0", s.d0);
  if (kv.has("dt_policy"))
  {
    std::string const p = kv.get_string("dt_policy", "");
    if (p == "per_subpath")
      s.dt_policy = DtPolicy::per_subpath;
    else if (p == "fixed")
      s.dt_policy = DtPolicy::fixed;
    else
      throw ValidationError("dt_policy must be per_subpath or fixed, got '" + p + "'");
  }
  s.fixed_dt = kv.get_double("fixed_dt", s.fixed_dt);
  s.stability_safety = kv.get_double("stability_safety", s.stability_safety);
  s.active_radius = kv.get_double("active_radius", s.active_radius);
  s.active_temp_eps = kv.get_double("active_temp_eps", s.active_temp_eps);
  s.enable_radiation = kv.get_bool("enable_radiation", s.enable_radiation);
  s.emissivity = kv.get_double("emissivity", s.emissivity);
  s.penetration_depth = kv.get_double("penetration_depth", s.penetration_depth);
  s.snapshot_interval = kv.get_double("snapshot_interval", s.snapshot_interval);
  s.dense_mode = kv.get_bool("dense_mode", s.dense_mode);
  s.initial_temp = kv.get_double("initial_temp", s.initial_temp);
  s.traverse_fictitious = kv.get_bool("traverse_fictitious", s.traverse_fictitious);
  s.compute_width = kv.get_bool("compute_width", s.compute_width);
  s.raster.side = kv.get_double("raster_side", s.raster.side);
  s.raster.resolution = kv.get_int("raster_resolution", s.raster.resolution);
  s.raster.power = kv.get_double("idw_power", s.raster.power);
  s.raster.support_radius = kv.get_double("idw_support_radius", s.raster.support_radius);

  c.outliers.factor = kv.get_double("outlier_factor", c.outliers.factor);
  c.outliers.window = kv.get_int("outlier_window", c.outliers.window);
  c.write_rasters = kv.get_bool("write_rasters", c.write_rasters);
  c.write_mesh = kv.get_bool("write_mesh", c.write_mesh);
  c.seed = static_cast<unsigned>(kv.get_int("seed", static_cast<int>(c.seed)));

  if (!(c.element_length > 0.0) || !(c.layer_height > 0.0))
    throw ValidationError("element_length and layer_height must be positive");
  if (c.substrate_layers < 0)
    throw ValidationError("substrate_layers must be non-negative");
  if (c.fictitious_margin < 0.0 || !(c.fictitious_spacing > 0.0))
    throw ValidationError("fictitious_margin must be non-negative and fictitious_spacing positive");
  s.validate();
  c.absorptivity_model();
  return c;
}

Model build_model(Toolpath toolpath, RunConfig const &config)
{
  auto const t0 = std::chrono::steady_clock::now();
  Model m;
  if (config.fictitious_margin > 0.0)
    toolpath = append_fictitious_paths(std::move(toolpath), config.fictitious_margin, config.fictitious_spacing);
  m.sub_paths = discretize(toolpath, config.element_length);
  std::vector<Element> elements = build_elements(m.sub_paths, toolpath.layer_height, config.voronoi.initial_width,
                                                 config.substrate_layers, toolpath.layer_index);
  VoronoiParams vp = config.voronoi;
  GraphParams gp = config.graph;
  if (config.solver.dense_mode)
    vp.search = gp.search = NeighborSearch::brute_force;
  init_widths_voronoi(elements, vp);
  m.graph = build_contact_graph(std::move(elements), gp);
  m.toolpath = std::move(toolpath);
  m.setup_seconds = seconds_since(t0);
  return m;
}

std::vector<VectorSummary> summarize_by_vector(std::span<MeltPoolMetrics const> metrics)
{
  std::map<int, VectorSummary> acc;
  std::vector<int> order;
  for (auto const &m : metrics)
  {
    auto [it, fresh] = acc.try_emplace(m.vector_id);
    if (fresh)
    {
      it->second.vector_id = m.vector_id;
      order.push_back(m.vector_id);
    }
    if (m.outlier)
      continue;
    ++it->second.frames;
    it->second.mean_length += m.length;
    it->second.mean_width += m.width;
  }
  std::vector<VectorSummary> out;
  for (int id : order)
  {
    VectorSummary s = acc[id];
    if (s.frames > 0)
    {
      s.mean_length /= s.frames;
      s.mean_width /= s.frames;
    }
    out.push_back(s);
  }
  return out;
}

void write_steps_csv(std::ostream &out, std::span<StepRecord const> steps)
{
  out << "step,time_s,dt_s,active_count,scale_factor,energy_in_J\n" << std::setprecision(12);
  for (auto const &s : steps)
    out << s.step << ',' << s.time << ',' << s.dt << ',' << s.active_count << ',' << s.scale_factor << ','
        << s.energy_in << '\n';
}

void write_vector_summary_csv(std::ostream &out, std::span<VectorSummary const> vectors)
{
  out << "vector_id,frames,mean_length_m,mean_width_m\n" << std::setprecision(12);
  for (auto const &v : vectors)
    out << v.vector_id << ',' << v.frames << ',' << v.mean_length << ',' << v.mean_width << '\n';
}

SimulationResult run_simulation(RunConfig const &config, bool write_outputs)
{
  if (config.toolpath.empty())
    throw ValidationError("configuration needs a toolpath");
  MaterialModel const material = config.material.empty() ? MaterialModel::in625() : load_material(config.material);
  Toolpath tp = read_toolpath_file(config.toolpath, config.layer_height);

  SimulationResult result;
  result.model = build_model(std::move(tp), config);
  if (write_outputs)
    ensure_dir(config.output_dir);
  fs::path const out_dir(config.output_dir);

  if (write_outputs && config.write_mesh)
  {
    auto elements_out = open_out(out_dir / "elements.csv");
    write_elements_csv(elements_out, result.model.graph.elements());
    auto edges_out = open_out(out_dir / "edges.csv");
    write_edges_csv(edges_out, result.model.graph.edges());
  }

  Simulator sim(result.model.graph, material, config.solver, config.absorptivity_model());
  Simulator::SnapshotHook hook;
  if (write_outputs && config.write_rasters)
  {
    ensure_dir((out_dir / "rasters").string());
    hook = [&](Simulator const &s, Snapshot const &snap) {
      auto const raster = s.raster_at(snap.metrics.laser_position);
      if (!raster)
        return;
      double const t_max = std::max(material.liquidus,
                                    *std::max_element(raster->values.begin(), raster->values.end()));
      std::ostringstream name;
      name << "frame_" << std::setw(4) << std::setfill('0') << snap.metrics.frame << ".pgm";
      write_raster_pgm((out_dir / "rasters" / name.str()).string(), *raster, material.env_temp, t_max);
    };
  }
  result.history = sim.run(result.model.toolpath, result.model.sub_paths, hook);

  result.metrics.reserve(result.history.snapshots.size());
  for (auto const &snap : result.history.snapshots)
    result.metrics.push_back(snap.metrics);
  filter_outliers(result.metrics, config.outliers);
  result.vectors = summarize_by_vector(result.metrics);

  if (write_outputs)
  {
    auto metrics_out = open_out(out_dir / "metrics.csv");
    write_metrics_csv(metrics_out, result.metrics);
    auto steps_out = open_out(out_dir / "steps.csv");
    write_steps_csv(steps_out, result.history.steps);
    auto vectors_out = open_out(out_dir / "vectors.csv");
    write_vector_summary_csv(vectors_out, result.vectors);
  }
  return result;
}

FrameAnalysis analyze_frames(std::string const &dir, FrameParams const &params)
{
  if (!fs::is_directory(dir))
    throw IoError("'" + dir + "' is not a directory");
  static std::regex const pattern(R"(^case(\d+)_frame(\d+)\.pgm$)");
  struct Entry
  {
    int case_id;
    int frame;
    fs::path path;
  };
  std::vector<Entry> entries;
  for (auto const &item : fs::directory_iterator(dir))
  {
    std::smatch match;
    std::string const name = item.path().filename().string();
    if (!std::regex_match(name, match, pattern))
      continue;
    int const case_id = std::stoi(match[1].str());
    if (params.case_id >= 0 && case_id != params.case_id)
      continue;
    entries.push_back({case_id, std::stoi(match[2].str()), item.path()});
  }
  std::sort(entries.begin(), entries.end(), [](Entry const &a, Entry const &b) {
    return a.case_id != b.case_id ? a.case_id < b.case_id : a.frame < b.frame;
  });

  FrameAnalysis result;
  std::vector<int> cases;
  for (Entry const &e : entries)
  {
    GrayImage image;
    try
    {
      image = read_pgm(e.path.string());
    }
    catch (IoError const &err)
    {
      result.warnings.push_back(e.path.filename().string() + ": " + err.what());
      continue;
    }
    MeltPoolMetrics m = extract_frame_metrics(image, params.threshold, params.pixel_size);
    m.frame = e.frame;
    m.snapshot_time = e.frame / params.frame_rate;
    result.metrics.push_back(m);
    result.files.push_back(e.path.filename().string());
    cases.push_back(e.case_id);
  }

  // The plume filter runs within each case.
  std::size_t begin = 0;
  while (begin < result.metrics.size())
  {
    std::size_t end = begin;
    while (end < result.metrics.size() && cases[end] == cases[begin])
      ++end;
    filter_outliers(std::span(result.metrics).subspan(begin, end - begin), params.outliers);
    begin = end;
  }
  return result;
}

CompareReport compare_metrics(std::span<MeltPoolMetrics const> sim, std::span<MeltPoolMetrics const> exp)
{
  std::vector<std::string> problems;
  if (sim.size() != exp.size())
    problems.push_back("frame counts differ: " + std::to_string(sim.size()) + " simulated, " +
                       std::to_string(exp.size()) + " experimental");
  std::size_t const n = std::min(sim.size(), exp.size());
  for (std::size_t k = 0; k < n && problems.size() < 20; ++k)
    if (sim[k].frame != exp[k].frame)
      problems.push_back("row " + std::to_string(k) + ": simulated frame " + std::to_string(sim[k].frame) +
                         " vs experimental frame " + std::to_string(exp[k].frame));
  if (!problems.empty())
  {
    std::string msg = "metrics are not aligned";
    for (auto const &p : problems)
      msg += "\n  " + p;
    throw ValidationError(msg);
  }

  CompareReport report;
  std::map<int, ErrorSummary> per_vector;
  std::vector<int> order;
  for (std::size_t k = 0; k < n; ++k)
  {
    CompareRow row;
    row.frame = sim[k].frame;
    row.vector_id = sim[k].vector_id >= 0 ? sim[k].vector_id : exp[k].vector_id;
    row.sim_length = sim[k].length;
    row.exp_length = exp[k].length;
    row.sim_width = sim[k].width;
    row.exp_width = exp[k].width;
    bool const usable = !sim[k].outlier && !exp[k].outlier;
    row.included = usable && exp[k].length > 0.0;
    row.width_included = usable && exp[k].width > 0.0;
    if (row.included)
      row.length_error = std::abs(row.sim_length - row.exp_length) / row.exp_length;
    if (row.width_included)
      row.width_error = std::abs(row.sim_width - row.exp_width) / row.exp_width;

    auto [it, fresh] = per_vector.try_emplace(row.vector_id);
    if (fresh)
    {
      it->second.id = row.vector_id;
      order.push_back(row.vector_id);
    }
    for (ErrorSummary *s : {&report.overall, &it->second})
    {
      if (row.included)
      {
        ++s->frames;
        s->mean_length_error += row.length_error;
      }
      if (row.width_included)
      {
        ++s->width_frames;
        s->mean_width_error += row.width_error;
      }
    }
    report.rows.push_back(row);
  }
  auto finish = [](ErrorSummary &s) {
    if (s.frames > 0)
      s.mean_length_error /= s.frames;
    if (s.width_frames > 0)
      s.mean_width_error /= s.width_frames;
  };
  finish(report.overall);
  for (int id : order)
  {
    finish(per_vector[id]);
    report.per_vector.push_back(per_vector[id]);
  }
  return report;
}

void write_report_csv(std::ostream &out, CompareReport const &report)
{
  out << "scope,id,frames,sim_length_m,exp_length_m,length_rel_error,sim_width_m,exp_width_m,width_rel_error\n"
      << std::setprecision(12);
  for (auto const &r : report.rows)
    out << "frame," << r.frame << ',' << (r.included ? 1 : 0) << ',' << r.sim_length << ',' << r.exp_length << ','
        << (r.included ? r.length_error : std::nan("")) << ',' << r.sim_width << ',' << r.exp_width << ','
        << (r.width_included ? r.width_error : std::nan("")) << '\n';
  for (auto const &v : report.per_vector)
    out << "vector," << v.id << ',' << v.frames << ",,," << v.mean_length_error << ",,," << v.mean_width_error
        << '\n';
  out << "case,all," << report.overall.frames << ",,," << report.overall.mean_length_error << ",,,"
      << report.overall.mean_width_error << '\n';
}

std::optional<double> loglog_slope(std::span<double const> x, std::span<double const> y)
{
  std::size_t const n = std::min(x.size(), y.size());
  if (n < 2)
    return std::nullopt;
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t k = 0; k < n; ++k)
  {
    mx += std::log(x[k]);
    my += std::log(y[k]);
  }
  mx /= n;
  my /= n;
  double sxy = 0.0;
  double sxx = 0.0;
  for (std::size_t k = 0; k < n; ++k)
  {
    double const dx = std::log(x[k]) - mx;
    sxy += dx * (std::log(y[k]) - my);
    sxx += dx * dx;
  }
  if (!(sxx > 0.0))
    return std::nullopt;
  return sxy / sxx;
}

ScalingResult scaling_sweep(Toolpath const &base_scan, RunConfig const &config, std::span<int const> sizes,
                            int repeats)
{
  MaterialModel const material = config.material.empty() ? MaterialModel::in625() : load_material(config.material);
  RunConfig run = config;
  run.fictitious_margin = 0.0;
  run.solver.traverse_fictitious = true;
  run.solver.compute_width = false;
  int const layers = config.substrate_layers + 1;

  ScalingResult result;
  for (int requested : sizes)
  {
    Toolpath tp = base_scan;
    for (int rings = 0;; ++rings)
    {
      double const margin = rings * config.fictitious_spacing;
      tp = rings == 0 ? base_scan : append_fictitious_paths(base_scan, margin, config.fictitious_spacing);
      auto const count = discretize(tp, config.element_length).size() * layers;
      if (static_cast<int>(count) >= requested || rings > 100000)
        break;
    }

    ScalingPoint best;
    best.requested = requested;
    for (int r = 0; r < std::max(1, repeats); ++r)
    {
      auto const t0 = std::chrono::steady_clock::now();
      Model model = build_model(tp, run);
      Simulator sim(model.graph, material, run.solver, run.absorptivity_model());
      ThermalHistory const h = sim.run(model.toolpath, model.sub_paths);
      double const total = seconds_since(t0);
      if (r == 0 || total < best.total_seconds)
      {
        best.elements = static_cast<int>(model.graph.size());
        best.max_active = h.max_active;
        best.steps = static_cast<long>(h.steps.size());
        best.setup_seconds = model.setup_seconds;
        best.solve_seconds = h.solve_seconds;
        best.total_seconds = total;
      }
    }
    result.points.push_back(best);
  }

  std::vector<double> n;
  std::vector<double> total;
  std::vector<double> solve;
  for (auto const &p : result.points)
  {
    n.push_back(p.elements);
    total.push_back(p.total_seconds);
    solve.push_back(p.solve_seconds);
  }
  result.slope = loglog_slope(n, total);
  result.solve_slope = loglog_slope(n, solve);
  return result;
}

void write_scaling_csv(std::ostream &out, ScalingResult const &result)
{
  out << "requested,elements,max_active,steps,setup_s,solve_s,total_s\n" << std::setprecision(9);
  for (auto const &p : result.points)
    out << p.requested << ',' << p.elements << ',' << p.max_active << ',' << p.steps << ',' << p.setup_seconds << ','
        << p.solve_seconds << ',' << p.total_seconds << '\n';
}

} // namespace capl
