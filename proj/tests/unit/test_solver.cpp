#include <capl/errors.hpp>
#include <capl/solver.hpp>

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

using namespace capl;

namespace
{

Element block(int id, double x, double y, double L, double W, double H = 40e-6, int depth = 0)
{
  Element e;
  e.id = e.source = id;
  e.centroid = {x, y, -(depth + 0.5) * H};
  e.length = L;
  e.width = W;
  e.height = H;
  e.depth = depth;
  return e;
}

MaterialModel constant_k(double k)
{
  MaterialModel m;
  m.k_solid_a = k;
  m.k_solid_b = 0.0;
  m.k_liquid = k;
  return m;
}

Toolpath single_track(double length, double power = 195.0)
{
  Toolpath tp;
  tp.vectors.push_back({1, {0.0, 0.0}, {length, 0.0}, 0.8, PowerProfile::constant(power), false});
  return tp;
}

Toolpath two_tracks(double length)
{
  Toolpath tp;
  tp.vectors.push_back({1, {0.0, 0.0}, {length, 0.0}, 0.8, PowerProfile::constant(195.0), false});
  tp.vectors.push_back({2, {length, 100e-6}, {0.0, 100e-6}, 0.8, PowerProfile::constant(195.0), false});
  return tp;
}

ContactGraph graph_of(Toolpath const &tp, int substrate, bool platform = true)
{
  auto const subs = discretize(tp, 10e-6);
  auto elements = build_elements(subs, tp.layer_height, 10e-6, substrate);
  init_widths_voronoi(elements, {});
  GraphParams gp;
  gp.platform = platform;
  return build_contact_graph(std::move(elements), gp);
}

} // namespace

TEST_CASE("laser input captures the full beam on a large element")
{
  Element const e = block(0, 0.0, 0.0, 1e-3, 1e-3);
  CHECK(laser_input(e, {0.0, 0.0}, 195.0, 0.43, 42.5e-6, 1.0) == doctest::Approx(83.85).epsilon(1e-12));
  CHECK(laser_input(e, {0.0, 0.0}, 195.0, 0.43, 42.5e-6, 0.25) == doctest::Approx(83.85 * 0.25).epsilon(1e-12));
  // Beam edge on the element edge: half the beam.
  CHECK(laser_input(e, {0.5e-3, 0.0}, 195.0, 0.43, 42.5e-6, 1.0) == doctest::Approx(0.5 * 83.85).epsilon(1e-9));
}

TEST_CASE("laser input far field and small element")
{
  Element const e = block(0, 0.0, 0.0, 10e-6, 10e-6);
  CHECK(laser_input(e, {6.0 * 42.5e-6, 0.0}, 195.0, 0.43, 42.5e-6, 1.0) < 1e-6 * 83.85);
  // Centred 10 x 10 um element: product of two erf factors.
  CHECK(laser_input(e, {0.0, 0.0}, 195.0, 0.43, 42.5e-6, 1.0) ==
        doctest::Approx(0.034603269106701785 * 83.85).epsilon(1e-9));
}

TEST_CASE("layer fractions")
{
  for (double delta : {0.0, 20e-6, 40e-6, 200e-6})
  {
    auto const f = layer_fractions(4, 40e-6, delta);
    REQUIRE(f.size() == 4);
    CHECK(std::accumulate(f.begin(), f.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
    for (std::size_t k = 1; k < f.size(); ++k)
      CHECK(f[k] < f[k - 1]);
  }
  auto const thin = layer_fractions(4, 40e-6, 1e-9);
  CHECK(thin[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(layer_fractions(1, 40e-6, 0.0) == std::vector<double>{1.0});
  auto const r1 = layer_fractions(2, 40e-6, 0.0);
  CHECK(r1[0] == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("power normalization")
{
  std::vector<double> h{0.5, 0.3, 0.3};
  double const scale = normalize_power(h, 0.5, 2.0, true);
  CHECK(scale == doctest::Approx(1.0 / 1.1));
  CHECK(std::accumulate(h.begin(), h.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));

  std::vector<double> off{0.5, 0.3};
  CHECK(normalize_power(off, 0.5, 2.0, false) == 0.0);
  CHECK(off == std::vector<double>{0.0, 0.0});

  std::vector<double> zero_power{0.5};
  CHECK(normalize_power(zero_power, 0.5, 0.0, true) == 0.0);
  CHECK(zero_power[0] == 0.0);

  std::vector<double> dark{0.0, 0.0};
  CHECK_THROWS_AS(normalize_power(dark, 0.5, 2.0, true), NumericalError);
}

TEST_CASE("conduction flux with capped distance")
{
  MaterialModel const m = constant_k(20.0);
  ContactEdge e{0, 1, EdgeKind::side, 1e-9, 10e-6, 0.0};
  CHECK(conduction_flux(e, 400.0, 500.0, m, 10e-6) == doctest::Approx(0.2).epsilon(1e-12));
  e.distance = 50e-6;
  CHECK(conduction_flux(e, 400.0, 500.0, m, 10e-6) == doctest::Approx(0.04).epsilon(1e-12));
  e.distance = 1e-6;
  CHECK(conduction_flux(e, 400.0, 500.0, m, 10e-6) == doctest::Approx(0.2).epsilon(1e-12));
  e.distance = 0.0;
  CHECK(std::isfinite(conduction_flux(e, 400.0, 500.0, m, 10e-6)));

  MaterialModel const in625;
  for (double d : {0.0, 5e-6, 20e-6})
  {
    e.distance = d;
    CHECK(conduction_flux(e, 700.0, 1900.0, in625, 10e-6) == -conduction_flux(e, 1900.0, 700.0, in625, 10e-6));
  }
}

TEST_CASE("surface losses")
{
  MaterialModel const m;
  Element top = block(0, 0.0, 0.0, 100e-6, 100e-6);
  CHECK(convection_flux(top, 393.0, m) == doctest::Approx(-1e-5).epsilon(1e-12));
  CHECK(radiation_flux(top, 1000.0, 0.3, m) == doctest::Approx(-1.6885750414413837e-4).epsilon(1e-12));
  CHECK(convection_flux(top, m.env_temp, m) == 0.0);
  Element buried = block(1, 0.0, 0.0, 100e-6, 100e-6, 40e-6, 1);
  CHECK(convection_flux(buried, 1000.0, m) == 0.0);
  CHECK(radiation_flux(buried, 1000.0, 0.3, m) == 0.0);
}

TEST_CASE("Biot number")
{
  auto const bi = biot_number(block(0, 0, 0, 10e-6, 10e-6), 10.0, 20.0);
  CHECK(bi.length == doctest::Approx(5e-6));
  CHECK(bi.width == doctest::Approx(5e-6));
}

TEST_CASE("absorptivity models")
{
  auto const c = AbsorptivityModel::constant(0.43);
  CHECK(c.is_constant());
  CHECK(c.at(0.0) == 0.43);
  CHECK(c.at(5e-3) == 0.43);
  auto const s = AbsorptivityModel::surrogate();
  CHECK(s.at(0.0) == doctest::Approx(0.41));
  CHECK(s.at(0.2e-3) == doctest::Approx(0.73));
  CHECK(s.at(0.1e-3) == doctest::Approx(0.57));
  CHECK(s.at(0.5e-3) == doctest::Approx(0.57));
  CHECK(s.at(0.9e-3) == doctest::Approx(0.41));
  double peak = 0.0;
  for (int k = 0; k <= 1000; ++k)
    peak = std::max(peak, s.at(k * 1e-6));
  CHECK(peak == doctest::Approx(0.73));

  ScanVector v{1, {0, 0}, {1e-4, 0}, 0.8, PowerProfile::constant(100.0), false};
  CHECK(absorptivity_at(s, v, 1.0) == doctest::Approx(s.at(1e-4)));
  CHECK(absorptivity_at(s, v, -1.0) == doctest::Approx(0.41));

  CHECK_THROWS_AS(AbsorptivityModel::constant(0.0), ValidationError);
  CHECK_THROWS_AS(AbsorptivityModel::piecewise({{0.0, 0.5}, {0.0, 0.6}}, 0.4), ValidationError);
}

TEST_CASE("stable step for two coupled elements")
{
  MaterialModel m = constant_k(20.0);
  m.convection = 0.0;
  std::vector<Element> els{block(0, 0.0, 0.0, 10e-6, 10e-6), block(1, 10e-6, 0.0, 10e-6, 10e-6)};
  ContactGraph const pair(els, {{0, 1, EdgeKind::in_path, 4e-10, 10e-6, 0.0}});
  ContactGraph const lone({els[0]}, {});
  SolverConfig cfg;
  std::vector<double> T{293.0, 293.0};
  CHECK(stability_dt(lone, 0, T, m, cfg) == std::numeric_limits<double>::max());

  double const C = m.density * m.specific_heat_eq(293.0) * els[0].volume();
  double const G = 20.0 * 4e-10 / 10e-6;
  double const dt = stability_dt(pair, 0, T, m, cfg);
  CHECK(dt == doctest::Approx(0.9 * C / G).epsilon(1e-12));

  ContactGraph const doubled(els, {{0, 1, EdgeKind::in_path, 8e-10, 10e-6, 0.0}});
  CHECK(stability_dt(doubled, 0, T, m, cfg) == doctest::Approx(0.5 * dt).epsilon(1e-12));

  // Antisymmetric mode decays at the stable step and grows at twice the step.
  auto amplitude_after = [&](double step, int steps) {
    SolverConfig c = cfg;
    c.dense_mode = true;
    Simulator sim(pair, m, c);
    sim.state().temperature = {393.0, 293.0};
    double const mean = 0.5 * (393.0 + 293.0);
    for (int k = 0; k < steps; ++k)
    {
      sim.prepare({1.0, 1.0});
      sim.advance(step, nullptr);
    }
    return std::abs(sim.state().temperature[0] - mean);
  };
  CHECK(amplitude_after(dt, 20) < 50.0);
  CHECK(amplitude_after(2.0 * dt, 20) > 50.0);
}

TEST_CASE("an isolated element at ambient stays there")
{
  MaterialModel const m;
  ContactGraph const g = graph_of(single_track(0.2e-3), 2);
  SolverConfig cfg;
  cfg.dense_mode = true;
  Simulator sim(g, m, cfg);
  sim.prepare({0.0, 0.0});
  for (int k = 0; k < 10; ++k)
    sim.advance(sim.stable_dt(), nullptr);
  for (double T : sim.state().temperature)
    CHECK(T == m.env_temp);
}

TEST_CASE("each step conserves heat exactly without losses")
{
  MaterialModel m;
  m.convection = 0.0;
  ContactGraph const g = graph_of(single_track(0.3e-3), 2, false);
  SolverConfig cfg;
  cfg.dense_mode = true;
  Simulator sim(g, m, cfg);
  LaserContext const laser{{0.15e-3, 0.0}, 195.0, 0.43, 1};
  for (int k = 0; k < 30; ++k)
  {
    std::vector<double> const before = sim.state().temperature;
    sim.prepare(laser.position);
    double const dt = std::min(1e-6, sim.stable_dt());
    StepRecord const rec = sim.advance(dt, &laser);
    CHECK(rec.absorbed_power == doctest::Approx(83.85).epsilon(1e-12));
    double stored = 0.0;
    for (auto const &e : g.elements())
      stored += m.density * m.specific_heat_eq(before[e.id]) * e.volume() *
                (sim.state().temperature[e.id] - before[e.id]);
    CHECK(stored == doctest::Approx(rec.energy_in).epsilon(1e-9));
  }
}

TEST_CASE("cooling without a laser is monotone and bounded")
{
  MaterialModel const m;
  ContactGraph const g = graph_of(two_tracks(0.2e-3), 1);
  SolverConfig cfg;
  cfg.dense_mode = true;
  Simulator sim(g, m, cfg);
  auto &T = sim.state().temperature;
  for (std::size_t i = 0; i < T.size(); ++i)
    T[i] = 293.0 + 1500.0 * ((i * 7919) % 13) / 12.0;
  sim.state().melted_ever.assign(T.size(), 0);
  double max_prev = *std::max_element(T.begin(), T.end());
  double const min0 = m.env_temp;
  std::vector<char> melted = sim.state().melted_ever;
  for (int k = 0; k < 200; ++k)
  {
    sim.prepare({0.0, 0.0});
    sim.advance(sim.stable_dt(), nullptr);
    auto const &Tn = sim.state().temperature;
    double const mx = *std::max_element(Tn.begin(), Tn.end());
    CHECK(mx <= max_prev + 1e-9);
    CHECK(*std::min_element(Tn.begin(), Tn.end()) >= min0 - 1e-9);
    max_prev = mx;
    for (std::size_t i = 0; i < melted.size(); ++i)
      CHECK(sim.state().melted_ever[i] >= melted[i]);
    melted = sim.state().melted_ever;
  }
}

TEST_CASE("incremental active body matches the brute-force rule")
{
  MaterialModel const m;
  Toolpath tp = two_tracks(1.2e-3);
  ContactGraph const g = graph_of(tp, 1);
  ActiveBody body(g, 0.3e-3, m.env_temp + 1.0, false);
  std::vector<double> T(g.size(), m.env_temp);
  for (int i = 0; i < 40; ++i)
    T[static_cast<std::size_t>(i) * 3] = 600.0;
  body.reset(T);
  for (Vec2 laser : {Vec2{0.0, 0.0}, Vec2{0.6e-3, 50e-6}, Vec2{1.2e-3, 100e-6}, Vec2{5e-3, 5e-3}})
  {
    auto const ids = body.update(laser);
    std::vector<int> const got(ids.begin(), ids.end());
    CHECK(got == active_body(g, T, laser, 0.3e-3, m.env_temp + 1.0));
    CHECK(std::is_sorted(got.begin(), got.end()));
    body.refresh_hot(T);
  }
  ActiveBody dense(g, 0.3e-3, m.env_temp + 1.0, true);
  CHECK(dense.update({9.0, 9.0}).size() == g.size());
}

TEST_CASE("snapshots land every 50 us of laser time")
{
  Toolpath const tp = single_track(0.4e-3);
  auto const subs = discretize(tp, 10e-6);
  ContactGraph const g = graph_of(tp, 1);
  SolverConfig cfg;
  cfg.compute_width = false;
  Simulator sim(g, MaterialModel{}, cfg);
  int hooked = 0;
  ThermalHistory const h = sim.run(tp, subs, [&](Simulator const &, Snapshot const &) { ++hooked; });
  // 0.4 mm at 0.8 m/s is 500 us.
  REQUIRE(h.snapshots.size() == 10);
  CHECK(hooked == 10);
  for (std::size_t k = 0; k < h.snapshots.size(); ++k)
  {
    CHECK(h.snapshots[k].metrics.frame == static_cast<int>(k));
    CHECK(h.snapshots[k].metrics.snapshot_time == doctest::Approx((k + 1) * 50e-6).epsilon(1e-9));
    CHECK(h.snapshots[k].metrics.vector_id == 1);
  }
  double total = 0.0;
  double energy = 0.0;
  for (auto const &s : h.steps)
  {
    total += s.dt;
    energy += s.energy_in;
    CHECK(s.dt > 0.0);
  }
  CHECK(total == doctest::Approx(500e-6).epsilon(1e-9));
  CHECK(energy == doctest::Approx(83.85 * 500e-6).epsilon(1e-9));
  CHECK(h.snapshots.back().metrics.length > 0.0);
  CHECK(h.max_active > 0);
}

TEST_CASE("empty toolpath gives an empty history")
{
  Toolpath const tp;
  ContactGraph const g;
  Simulator sim(g, MaterialModel{}, SolverConfig{});
  ThermalHistory const h = sim.run(tp, {});
  CHECK(h.snapshots.empty());
  CHECK(h.steps.empty());
}

TEST_CASE("fixed dt policy and fictitious traversal")
{
  Toolpath tp = single_track(0.1e-3);
  tp = append_fictitious_paths(tp, 0.1e-3, 100e-6);
  auto const subs = discretize(tp, 10e-6);
  ContactGraph const g = graph_of(tp, 1);
  SolverConfig cfg;
  cfg.compute_width = false;
  cfg.dt_policy = DtPolicy::fixed;
  cfg.fixed_dt = 2e-6;
  Simulator skip(g, MaterialModel{}, cfg);
  ThermalHistory const a = skip.run(tp, subs);
  double ta = 0.0;
  for (auto const &s : a.steps)
  {
    CHECK(s.dt <= 2e-6 * (1.0 + 1e-9));
    ta += s.dt;
  }
  CHECK(ta == doctest::Approx(0.1e-3 / 0.8).epsilon(1e-9));

  cfg.traverse_fictitious = true;
  Simulator sweep(g, MaterialModel{}, cfg);
  ThermalHistory const b = sweep.run(tp, subs);
  double tb = 0.0;
  double eb = 0.0;
  for (auto const &s : b.steps)
  {
    tb += s.dt;
    eb += s.energy_in;
  }
  CHECK(tb > ta);
  CHECK(eb == doctest::Approx(83.85 * ta).epsilon(1e-9));
  CHECK(a.snapshots.size() == b.snapshots.size());
}

TEST_CASE("solver config validation")
{
  SolverConfig c;
  CHECK_NOTHROW(c.validate());
  c.stability_safety = 1.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.d0 = 0.0;
  CHECK_THROWS_AS(c.validate(), ValidationError);
  c = {};
  c.emissivity = 1.5;
  CHECK_THROWS_AS(c.validate(), ValidationError);
}
