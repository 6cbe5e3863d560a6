#pragma once

#include <capl/materials.hpp>
#include <capl/meltpool.hpp>
#include <capl/mesh.hpp>
#include <capl/state.hpp>
#include <capl/toolpath.hpp>

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace capl
{

inline constexpr double kStefanBoltzmann = 5.670374419e-8; // W/(m^2 K^4)

struct AbsorptivityBreakpoint
{
  double distance = 0.0; // m from the vector start
  double value = 0.0;
};

/// Either a constant or a piecewise-linear function of the distance from the
/// start of the current vector, with a constant tail past the last breakpoint.
class AbsorptivityModel
{
public:
  static AbsorptivityModel constant(double alpha);
  static AbsorptivityModel piecewise(std::vector<AbsorptivityBreakpoint> breakpoints, double tail);
  /// 0.41 at the start, 0.73 at 0.2 mm, back to 0.41 at 0.8 mm.
  static AbsorptivityModel surrogate();

  double at(double distance) const;
  bool is_constant() const { return _breakpoints.empty(); }
  double tail() const { return _tail; }
  std::vector<AbsorptivityBreakpoint> const &breakpoints() const { return _breakpoints; }

private:
  std::vector<AbsorptivityBreakpoint> _breakpoints; // empty for a constant model
  double _tail = 0.43;
};

double absorptivity_at(AbsorptivityModel const &model, ScanVector const &vector, double distance);

enum class DtPolicy
{
  per_subpath,
  fixed
};

struct SolverConfig
{
  double d0 = 10e-6;                // m, conduction distance cap
  DtPolicy dt_policy = DtPolicy::per_subpath;
  double fixed_dt = 1e-6;           // s
  double stability_safety = 0.9;
  double active_radius = 0.5e-3;    // m
  double active_temp_eps = 1.0;     // K above ambient counts as hot
  bool enable_radiation = false;
  double emissivity = 0.3;
  double penetration_depth = 0.0;   // m, 0 means one layer height
  double snapshot_interval = 50e-6; // s of laser-on time
  bool dense_mode = false;
  double initial_temp = 0.0;        // K, 0 means ambient
  bool traverse_fictitious = false; // sweep fictitious vectors with the laser off
  bool compute_width = true;
  bool record_fields = false;
  RasterParams raster;

  void validate() const;
};

/// Gaussian beam (1/e^2 radius w) integrated exactly over the element's top
/// face, times alpha * P and the element's layer share.
double laser_input(Element const &e, Vec2 laser, double power, double alpha, double spot_radius,
                   double layer_fraction);

/// Beer-Lambert share of each layer of a `layers`-deep stack; sums to 1.
std::vector<double> layer_fractions(int layers, double layer_height, double penetration_depth);

/// Scales `inputs` in place so they sum to alpha * P and returns the factor.
/// Zeroes everything when the laser is off. Throws NumericalError when the
/// laser is on but nothing is illuminated.
double normalize_power(std::span<double> inputs, double alpha, double power, bool laser_on);

/// Heat flow into i, W.
double conduction_flux(ContactEdge const &edge, double T_i, double T_j, MaterialModel const &m, double d0);
double convection_flux(Element const &e, double T, MaterialModel const &m);
double radiation_flux(Element const &e, double T, double emissivity, MaterialModel const &m);

/// Largest stable explicit step for element `id`, or the max double when the
/// element exchanges no heat.
double stability_dt(ContactGraph const &graph, int id, std::span<double const> T, MaterialModel const &m,
                    SolverConfig const &config);

/// Reference active-body rule by brute force: elements within the radius of
/// the laser or hotter than ambient + eps, plus their graph neighbours.
std::vector<int> active_body(ContactGraph const &graph, std::span<double const> T, Vec2 laser,
                             double active_radius, double hot_threshold);

struct BiotNumbers
{
  double length = 0.0;
  double width = 0.0;
};
BiotNumbers biot_number(Element const &e, double h, double k);

/// Incremental active body. Only elements that were active can become hot,
/// so the hot list is refreshed from the previous active set.
class ActiveBody
{
public:
  ActiveBody(ContactGraph const &graph, double active_radius, double hot_threshold, bool dense);

  /// Rebuilds the hot list from scratch.
  void reset(std::span<double const> T);
  /// Recomputes the set around `laser` and returns it, sorted.
  std::span<int const> update(Vec2 laser);
  std::span<int const> ids() const { return _active; }
  /// Records which of the active elements are hot after a step.
  void refresh_hot(std::span<double const> T);

private:
  ContactGraph const *_graph;
  double _radius;
  double _threshold;
  bool _dense;
  SpatialGrid _grid;
  std::vector<Vec2> _centroids;
  std::vector<int> _hot;
  std::vector<int> _active;
  std::vector<std::uint32_t> _stamp;
  std::uint32_t _epoch = 0;
};

struct LaserContext
{
  Vec2 position;
  double power = 0.0; // W
  double alpha = 0.0;
  int vector_id = -1;
};

struct StepRecord
{
  long step = 0;
  double time = 0.0;
  double dt = 0.0;
  int active_count = 0;
  double scale_factor = 0.0;
  double absorbed_power = 0.0; // sum of normalized inputs, W
  double target_power = 0.0;   // alpha * P, W
  double energy_in = 0.0;      // J deposited this step
};

struct Snapshot
{
  MeltPoolMetrics metrics;
  std::vector<double> temperature; // filled when record_fields is set
};

struct ThermalHistory
{
  std::vector<Snapshot> snapshots;
  std::vector<StepRecord> steps;
  ThermalState final_state;
  double solve_seconds = 0.0;
  int max_active = 0;
};

class Simulator
{
public:
  Simulator(ContactGraph const &graph, MaterialModel material, SolverConfig config,
            AbsorptivityModel absorptivity = AbsorptivityModel::constant(0.43));

  /// Mutable access marks the hot list stale; it is rebuilt on the next prepare().
  ThermalState &state()
  {
    _dirty = true;
    return _state;
  }
  ThermalState const &state() const { return _state; }
  ContactGraph const &graph() const { return *_graph; }

  /// Active set for the given laser position (all elements in dense mode).
  std::span<int const> prepare(Vec2 laser);
  /// Smallest stable step over the prepared active set.
  double stable_dt() const;
  /// One forward-Euler step of length dt over the prepared active set.
  StepRecord advance(double dt, LaserContext const *laser);

  using SnapshotHook = std::function<void(Simulator const &, Snapshot const &)>;

  /// Scans every sub-path in order, sampling metrics every snapshot_interval
  /// of laser-on time. `hook` sees each snapshot as it is taken.
  ThermalHistory run(Toolpath const &toolpath, std::span<SubPath const> sub_paths, SnapshotHook const &hook = {});

  /// Metrics of the current state with the laser at `laser`.
  MeltPoolMetrics measure(Vec2 laser) const;
  /// IDW raster of the scanned layer around `laser`; nullopt when no active
  /// top-layer element lies in the window.
  std::optional<TemperatureRaster> raster_at(Vec2 laser) const;
  std::span<int const> active_ids() const { return _body.ids(); }
  MaterialModel const &material() const { return _material; }
  SolverConfig const &config() const { return _config; }

private:
  ContactGraph const *_graph;
  MaterialModel _material;
  SolverConfig _config;
  AbsorptivityModel _absorptivity;
  ThermalState _state;
  ActiveBody _body;
  std::vector<double> _layer_fraction;
  std::vector<double> _heat;
  std::vector<double> _next;
  long _step = 0;
  bool _dirty = true;
};

} // namespace capl
