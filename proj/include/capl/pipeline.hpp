#pragma once

#include <capl/keyvalue.hpp>
#include <capl/materials.hpp>
#include <capl/meltpool.hpp>
#include <capl/mesh.hpp>
#include <capl/solver.hpp>
#include <capl/toolpath.hpp>

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace capl
{

/// Everything a `simulate` run needs. Paths are relative to the working
/// directory.
struct RunConfig
{
  std::string toolpath;
  std::string material; // empty for IN625 defaults
  std::string output_dir = "capl_out";
  double layer_height = 40e-6;    // m
  double element_length = 10e-6;  // m, target sub-path length
  int substrate_layers = 3;
  double fictitious_margin = 0.0; // m, 0 disables fictitious rings
  double fictitious_spacing = 100e-6;
  VoronoiParams voronoi;
  GraphParams graph;
  std::string absorptivity = "constant"; // constant | surrogate | piecewise
  double absorptivity_value = 0.43;
  std::vector<AbsorptivityBreakpoint> absorptivity_breakpoints;
  double absorptivity_tail = 0.41;
  SolverConfig solver;
  OutlierParams outliers;
  bool write_rasters = false;
  bool write_mesh = false;
  unsigned seed = 0; // reserved for synthetic generators, the pipeline is deterministic

  AbsorptivityModel absorptivity_model() const;
};

/// Reads keys such as `element_length = 10e-6` or `dense_mode = true`; keys
/// not present keep the values in `base`. Unknown keys raise ValidationError.
RunConfig run_config_from_keys(KeyValues const &kv, RunConfig base = {});

/// Toolpath discretized into a connected element mesh.
struct Model
{
  Toolpath toolpath;
  std::vector<SubPath> sub_paths;
  ContactGraph graph;
  double setup_seconds = 0.0;
};

/// Adds fictitious rings if configured, discretizes, sizes widths and builds
/// the contact graph.
Model build_model(Toolpath toolpath, RunConfig const &config);

struct VectorSummary
{
  int vector_id = 0;
  int frames = 0; // non-outlier frames
  double mean_length = 0.0;
  double mean_width = 0.0;
};

/// Per-vector means over frames not flagged as outliers.
std::vector<VectorSummary> summarize_by_vector(std::span<MeltPoolMetrics const> metrics);

struct SimulationResult
{
  Model model;
  ThermalHistory history;
  std::vector<MeltPoolMetrics> metrics;
  std::vector<VectorSummary> vectors;
};

/// Builds the model, runs it and, when `write_outputs` is set, writes
/// metrics.csv, steps.csv, vectors.csv and optional rasters into output_dir.
SimulationResult run_simulation(RunConfig const &config, bool write_outputs = true);

void write_steps_csv(std::ostream &out, std::span<StepRecord const> steps);
void write_vector_summary_csv(std::ostream &out, std::span<VectorSummary const> vectors);

struct FrameAnalysis
{
  std::vector<MeltPoolMetrics> metrics;
  std::vector<std::string> files;    // one per metrics row
  std::vector<std::string> warnings; // unreadable frames
};

struct FrameParams
{
  double threshold = 80.0;
  double pixel_size = 7.13e-6; // m/px
  double frame_rate = 20e3;    // Hz, sets time_s = frame / rate
  int case_id = -1;            // -1 accepts every case
  OutlierParams outliers;
};

/// Metrics for every `case<CC>_frame<NNNN>.pgm` in `dir`, ordered by case
/// then frame. Unreadable frames are skipped with a warning.
FrameAnalysis analyze_frames(std::string const &dir, FrameParams const &params = {});

struct CompareRow
{
  int frame = 0;
  int vector_id = -1;
  double sim_length = 0.0;
  double exp_length = 0.0;
  double length_error = 0.0;
  double sim_width = 0.0;
  double exp_width = 0.0;
  double width_error = 0.0;
  bool included = false;      // length error counts towards the means
  bool width_included = false;
};

struct ErrorSummary
{
  int id = -1; // vector id, -1 for the whole case
  int frames = 0;
  int width_frames = 0;
  double mean_length_error = 0.0;
  double mean_width_error = 0.0;
};

struct CompareReport
{
  std::vector<CompareRow> rows;
  ErrorSummary overall;
  std::vector<ErrorSummary> per_vector;
};

/// Relative errors |sim - exp| / exp per frame, skipping frames flagged as
/// outliers on either side. Throws ValidationError listing mismatched frames
/// when the two series do not line up.
CompareReport compare_metrics(std::span<MeltPoolMetrics const> sim, std::span<MeltPoolMetrics const> exp);
void write_report_csv(std::ostream &out, CompareReport const &report);

struct ScalingPoint
{
  int requested = 0;
  int elements = 0;
  int max_active = 0;
  long steps = 0;
  double setup_seconds = 0.0;
  double solve_seconds = 0.0;
  double total_seconds = 0.0;
};

struct ScalingResult
{
  std::vector<ScalingPoint> points;
  std::optional<double> slope; // log-log slope of total time, none for one size
  std::optional<double> solve_slope;
};

/// Runs `base_scan` inside growing rings of cold fictitious paths sized to
/// reach each requested element count. The laser sweeps the rings with zero
/// power so the scanned length grows with the domain. Each size is timed
/// `repeats` times and the fastest run kept.
ScalingResult scaling_sweep(Toolpath const &base_scan, RunConfig const &config, std::span<int const> sizes,
                            int repeats = 1);
void write_scaling_csv(std::ostream &out, ScalingResult const &result);

/// Least-squares slope of log(y) against log(x); nullopt with fewer than two points.
std::optional<double> loglog_slope(std::span<double const> x, std::span<double const> y);

} // namespace capl
