#include <capl/errors.hpp>
#include <capl/image.hpp>
#include <capl/pipeline.hpp>

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

using namespace capl;
namespace fs = std::filesystem;

namespace
{

fs::path fresh_dir(std::string const &name)
{
  fs::path const dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

KeyValues keys(std::string const &text)
{
  std::istringstream in(text);
  return KeyValues::parse(in);
}

GrayImage bar_frame(int length_px, int width_px)
{
  GrayImage img{120, 80, 255, std::vector<std::uint16_t>(120 * 80, 20)};
  for (int y = 40 - width_px / 2; y < 40 - width_px / 2 + width_px; ++y)
    for (int x = 10; x < 10 + length_px; ++x)
      img.at(x, y) = 220;
  return img;
}

MeltPoolMetrics row(int frame, double length, double width, int vector_id = 1)
{
  MeltPoolMetrics m;
  m.frame = frame;
  m.length = length;
  m.width = width;
  m.vector_id = vector_id;
  return m;
}

} // namespace

TEST_CASE("run config from keys")
{
  RunConfig const c = run_config_from_keys(keys("toolpath = a.txt\n"
                                                "element_length = 20e-6\n"
                                                "dense_mode = true\n"
                                                "dt_policy = fixed\n"
                                                "fixed_dt = 2e-6\n"
                                                "absorptivity = piecewise\n"
                                                "absorptivity_distances = 0, 1e-4\n"
                                                "absorptivity_values = 0.4, 0.6\n"
                                                "neighbor_search = brute_force\n"
                                                "parallel_angle_deg = 5\n"));
  CHECK(c.toolpath == "a.txt");
  CHECK(c.element_length == 20e-6);
  CHECK(c.solver.dense_mode);
  CHECK(c.solver.dt_policy == DtPolicy::fixed);
  CHECK(c.solver.fixed_dt == 2e-6);
  CHECK(c.voronoi.search == NeighborSearch::brute_force);
  CHECK(c.graph.search == NeighborSearch::brute_force);
  CHECK(c.graph.parallel_angle == doctest::Approx(5.0 * 3.141592653589793 / 180.0));
  REQUIRE(c.absorptivity_breakpoints.size() == 2);
  CHECK(c.absorptivity_model().at(0.5e-4) == doctest::Approx(0.5));

  RunConfig const d = run_config_from_keys(keys(""));
  CHECK(d.solver.d0 == 10e-6);
  CHECK(d.substrate_layers == 3);
  CHECK(d.absorptivity_model().at(0.0) == 0.43);

  CHECK_THROWS_AS(run_config_from_keys(keys("no_such_key = 1\n")), ValidationError);
  CHECK_THROWS_AS(run_config_from_keys(keys("dt_policy = sometimes\n")), ValidationError);
  CHECK_THROWS_AS(run_config_from_keys(keys("element_length = 0\n")), ValidationError);
  CHECK_THROWS_AS(run_config_from_keys(keys("absorptivity = magic\n")), ValidationError);
  CHECK_THROWS_AS(run_config_from_keys(keys("d0 = abc\n")), ParseError);
}

TEST_CASE("simulation writes its outputs")
{
  fs::path const dir = fresh_dir("capl_pipeline_sim");
  {
    std::ofstream tp(dir / "path.txt");
    tp << "P 1 (0,195)\nV 0 0 0.2e-3 0 0.8 1\n";
  }
  RunConfig c = run_config_from_keys(keys("compute_width = false\nwrite_mesh = true\nsubstrate_layers = 1\n"));
  c.toolpath = (dir / "path.txt").string();
  c.output_dir = (dir / "out").string();
  SimulationResult const r = run_simulation(c);
  CHECK(r.metrics.size() == 5);
  CHECK(r.model.graph.size() == 40);
  for (char const *name : {"metrics.csv", "steps.csv", "vectors.csv", "elements.csv", "edges.csv"})
    CHECK(fs::exists(dir / "out" / name));
  auto const back = read_metrics_csv_file((dir / "out" / "metrics.csv").string(), MetricsSource::simulated);
  REQUIRE(back.size() == r.metrics.size());
  CHECK(back.back().length == doctest::Approx(r.metrics.back().length).epsilon(1e-11));
  REQUIRE(r.vectors.size() == 1);
  CHECK(r.vectors[0].vector_id == 1);

  RunConfig missing = c;
  missing.toolpath = (dir / "none.txt").string();
  CHECK_THROWS_AS(run_simulation(missing, false), IoError);
  fs::remove_all(dir);
}

TEST_CASE("frame analysis skips unreadable frames")
{
  fs::path const dir = fresh_dir("capl_pipeline_frames");
  write_pgm((dir / "case01_frame0002.pgm").string(), bar_frame(60, 10));
  write_pgm((dir / "case01_frame0000.pgm").string(), bar_frame(40, 10));
  write_pgm((dir / "case01_frame0001.pgm").string(), bar_frame(50, 12));
  write_pgm((dir / "case02_frame0000.pgm").string(), bar_frame(30, 8));
  {
    std::ofstream junk(dir / "case01_frame0003.pgm");
    junk << "not an image";
  }
  std::ofstream(dir / "notes.txt") << "ignored";

  FrameParams p;
  p.case_id = 1;
  FrameAnalysis const a = analyze_frames(dir.string(), p);
  REQUIRE(a.metrics.size() == 3);
  CHECK(a.warnings.size() == 1);
  CHECK(a.files[0] == "case01_frame0000.pgm");
  CHECK(a.metrics[0].frame == 0);
  CHECK(a.metrics[2].frame == 2);
  CHECK(a.metrics[1].snapshot_time == doctest::Approx(50e-6));
  CHECK(a.metrics[0].length == doctest::Approx(4.0 * 40.0 / std::sqrt(12.0) * 7.13e-6).epsilon(1e-9));

  FrameAnalysis const all = analyze_frames(dir.string(), {});
  CHECK(all.metrics.size() == 4);
  CHECK(all.files.back() == "case02_frame0000.pgm");

  CHECK_THROWS_AS(analyze_frames((dir / "missing").string(), {}), IoError);
  fs::remove_all(dir);
}

TEST_CASE("comparison of aligned series")
{
  std::vector<MeltPoolMetrics> sim;
  std::vector<MeltPoolMetrics> exp;
  for (int k = 0; k < 6; ++k)
  {
    exp.push_back(row(k, 400e-6, 100e-6, -1));
    sim.push_back(row(k, 440e-6, 90e-6, k < 3 ? 1 : 2));
  }
  exp[5].outlier = true;
  exp[4].width = 0.0;
  CompareReport const r = compare_metrics(sim, exp);
  CHECK(r.overall.frames == 5);
  CHECK(r.overall.width_frames == 4);
  CHECK(r.overall.mean_length_error == doctest::Approx(0.1));
  CHECK(r.overall.mean_width_error == doctest::Approx(0.1));
  REQUIRE(r.per_vector.size() == 2);
  CHECK(r.per_vector[0].id == 1);
  CHECK(r.per_vector[0].frames == 3);
  CHECK(r.per_vector[1].frames == 2);
  CHECK(!r.rows[5].included);

  std::ostringstream out;
  write_report_csv(out, r);
  std::string const text = out.str();
  CHECK(text.rfind("scope,id,frames,", 0) == 0);
  CHECK(text.find("case,all,5,") != std::string::npos);
  CHECK(text.find("vector,2,2,") != std::string::npos);
}

TEST_CASE("misaligned series are rejected")
{
  std::vector<MeltPoolMetrics> sim{row(0, 1e-4, 1e-4), row(1, 1e-4, 1e-4)};
  std::vector<MeltPoolMetrics> shifted{row(0, 1e-4, 1e-4), row(2, 1e-4, 1e-4)};
  std::vector<MeltPoolMetrics> shorter{row(0, 1e-4, 1e-4)};
  CHECK_THROWS_AS(compare_metrics(sim, shifted), ValidationError);
  CHECK_THROWS_AS(compare_metrics(sim, shorter), ValidationError);
  try
  {
    compare_metrics(sim, shifted);
  }
  catch (ValidationError const &e)
  {
    CHECK(std::string(e.what()).find("row 1") != std::string::npos);
  }
}

TEST_CASE("log-log slope")
{
  std::vector<double> const x{1e3, 2e3, 4e3, 8e3};
  std::vector<double> y;
  for (double v : x)
    y.push_back(3e-4 * std::pow(v, 1.25));
  CHECK(*loglog_slope(x, y) == doctest::Approx(1.25));
  CHECK(!loglog_slope(std::vector<double>{1e3}, std::vector<double>{1.0}));
  CHECK(!loglog_slope(std::vector<double>{1e3, 1e3}, std::vector<double>{1.0, 2.0}));
}

TEST_CASE("scaling sweep reaches the requested sizes")
{
  Toolpath base;
  base.vectors.push_back({1, {0, 0}, {0.1e-3, 0}, 0.8, PowerProfile::constant(195.0), false});
  RunConfig c;
  c.substrate_layers = 0;
  std::vector<int> const one{100};
  ScalingResult const single = scaling_sweep(base, c, one, 1);
  REQUIRE(single.points.size() == 1);
  CHECK(single.points[0].elements >= 100);
  CHECK(!single.slope);

  std::vector<int> const two{100, 400};
  ScalingResult const pair = scaling_sweep(base, c, two, 1);
  REQUIRE(pair.points.size() == 2);
  CHECK(pair.points[1].elements >= 400);
  CHECK(pair.points[1].steps > pair.points[0].steps);
  CHECK(pair.slope.has_value());

  std::ostringstream out;
  write_scaling_csv(out, pair);
  CHECK(out.str().rfind("requested,elements,max_active,steps,setup_s,solve_s,total_s\n", 0) == 0);
}

TEST_CASE("per-vector summaries skip outliers")
{
  std::vector<MeltPoolMetrics> ms{row(0, 1e-4, 2e-5, 3), row(1, 3e-4, 4e-5, 3), row(2, 9e-4, 0.0, 5)};
  ms[2].outlier = true;
  auto const s = summarize_by_vector(ms);
  REQUIRE(s.size() == 2);
  CHECK(s[0].vector_id == 3);
  CHECK(s[0].mean_length == doctest::Approx(2e-4));
  CHECK(s[1].frames == 0);
}
