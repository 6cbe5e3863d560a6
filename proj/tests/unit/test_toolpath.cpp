#include <capl/errors.hpp>
#include <capl/toolpath.hpp>

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace capl;

namespace
{

Toolpath parse(std::string const &text)
{
  std::istringstream in(text);
  return parse_toolpath(in);
}

} // namespace

TEST_CASE("parse a single constant-power vector")
{
  Toolpath const tp = parse("P P0: (0,195)\nV 0 0 0.002 0 0.8 P0\n");
  REQUIRE(tp.vectors.size() == 1);
  ScanVector const &v = tp.vectors[0];
  CHECK(v.length() == doctest::Approx(2e-3).epsilon(1e-12));
  CHECK(v.speed == 0.8);
  CHECK_FALSE(v.fictitious);
  CHECK(power_at(v.profile, 0.0) == 195.0);
  CHECK(power_at(v.profile, 1.3e-3) == 195.0);
}

TEST_CASE("parse edge cases")
{
  CHECK(parse("").vectors.empty());
  CHECK(parse("# only a comment\n\n").vectors.empty());
  CHECK_THROWS_AS(parse("P P0 (0,195)\nV 0 0 0 0 0.8 P0\n"), ValidationError);
  CHECK_THROWS_AS(parse("P P0 (0,195)\nV 0 0 1e-3 0 0 P0\n"), ValidationError);
  CHECK_THROWS_AS(parse("P P0 (0,100) (0,200)\n"), ValidationError);
  CHECK_THROWS_AS(parse("P P0 (0,-1)\n"), ValidationError);
}

TEST_CASE("parse errors carry the line number")
{
  try
  {
    parse("P P0 (0,195)\n\nV 0 0 1e-3 0 0.8 P7\n");
    FAIL("expected a parse error");
  }
  catch (ParseError const &e)
  {
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }
  CHECK_THROWS_AS(parse("Q 1 2 3\n"), ParseError);
  CHECK_THROWS_AS(parse("V 0 0 1e-3\n"), ParseError);
}

TEST_CASE("power_at interpolates and clamps")
{
  PowerProfile const p({{0.0, 100.0}, {0.001, 200.0}});
  CHECK(power_at(p, 0.0005) == doctest::Approx(150.0));
  CHECK(power_at(p, 0.002) == 200.0);
  CHECK(power_at(p, 0.0) == 100.0);
  CHECK(power_at(PowerProfile::constant(195.0), 0.7) == 195.0);
  CHECK(p.integral(0.0, 0.001) == doctest::Approx(0.15));
  CHECK(p.integral(0.001, 0.003) == doctest::Approx(0.4));
}

TEST_CASE("raster layer geometry")
{
  RasterSpec spec;
  Toolpath const tp = generate_raster_layer(spec);
  REQUIRE(tp.vectors.size() == 4 + 25);
  for (int k = 0; k < 4; ++k)
  {
    ScanVector const &v = tp.vectors[k];
    CHECK(v.length() == doctest::Approx(2e-3));
    bool const on_boundary = (v.start.x == 0.0 || v.start.x == 2e-3 || v.start.y == 0.0 || v.start.y == 2e-3);
    CHECK(on_boundary);
  }
  double const h = std::sqrt(0.5);
  for (std::size_t k = 4; k < tp.vectors.size(); ++k)
  {
    Vec2 const d = tp.vectors[k].direction();
    CHECK(std::abs(std::abs(d.x) - h) < 1e-12);
    CHECK(std::abs(std::abs(d.y) - h) < 1e-12);
    CHECK(tp.vectors[k].speed == 0.8);
    CHECK(power_at(tp.vectors[k].profile, 1e-4) == 195.0);
  }
  // Consecutive infill lines alternate direction.
  Vec2 const a = tp.vectors[4].direction();
  Vec2 const b = tp.vectors[5].direction();
  CHECK(dot(a, b) == doctest::Approx(-1.0));

  RasterSpec bad = spec;
  bad.hatch = spec.side;
  CHECK_THROWS_AS(generate_raster_layer(bad), ValidationError);
}

TEST_CASE("fictitious rings")
{
  Toolpath const part = generate_raster_layer(RasterSpec{});
  CHECK(append_fictitious_paths(part, 0.0, 100e-6) == part);

  Toolpath const tp = append_fictitious_paths(part, 0.5e-3, 100e-6);
  std::size_t const added = tp.vectors.size() - part.vectors.size();
  CHECK(added == 5 * 4);
  double lo = 0.0;
  double hi = 0.0;
  for (std::size_t k = part.vectors.size(); k < tp.vectors.size(); ++k)
  {
    ScanVector const &v = tp.vectors[k];
    CHECK(v.fictitious);
    CHECK(v.profile.is_zero());
    CHECK(power_at(v.profile, 0.0) == 0.0);
    CHECK(power_at(v.profile, v.length()) == 0.0);
    lo = std::min({lo, v.start.x, v.start.y});
    hi = std::max({hi, v.start.x, v.start.y});
  }
  CHECK(hi - lo == doctest::Approx(3e-3));
  for (std::size_t k = 0; k < part.vectors.size(); ++k)
    CHECK(tp.vectors[k] == part.vectors[k]);
}

TEST_CASE("discretize splits evenly")
{
  Toolpath two_mm = parse("P P0 (0,195)\nV 0 0 0.002 0 0.8 P0\n");
  auto const subs = discretize(two_mm, 10e-6);
  REQUIRE(subs.size() == 200);
  for (auto const &s : subs)
    CHECK(s.length() == doctest::Approx(10e-6).epsilon(1e-9));

  Toolpath short_vec = parse("P P0 (0,195)\nV 0 0 25e-6 0 0.8 P0\n");
  auto const three = discretize(short_vec, 10e-6);
  REQUIRE(three.size() == 3);
  for (auto const &s : three)
    CHECK(s.length() == doctest::Approx(25e-6 / 3).epsilon(1e-9));

  Toolpath tiny = parse("P P0 (0,195)\nV 0 0 4e-6 0 0.8 P0\n");
  auto const one = discretize(tiny, 10e-6);
  REQUIRE(one.size() == 1);
  CHECK(one[0].end == tiny.vectors[0].end);
}

TEST_CASE("discretize invariants")
{
  Toolpath tp = append_fictitious_paths(generate_raster_layer(RasterSpec{}), 0.3e-3, 100e-6);
  tp.vectors[0].profile = PowerProfile({{0.0, 100.0}, {1e-3, 300.0}, {1.5e-3, 50.0}});
  auto const subs = discretize(tp, 10e-6);
  auto const again = discretize(tp, 10e-6);
  REQUIRE(subs.size() == again.size());

  std::vector<double> length(tp.vectors.size(), 0.0);
  std::vector<double> duration(tp.vectors.size(), 0.0);
  std::vector<double> energy(tp.vectors.size(), 0.0);
  for (std::size_t k = 0; k < subs.size(); ++k)
  {
    SubPath const &s = subs[k];
    CHECK(s.length() <= 10e-6 * (1 + 1e-12));
    CHECK(s.start == again[k].start);
    CHECK(s.mean_power == again[k].mean_power);
    length[s.vector_index] += s.length();
    duration[s.vector_index] += s.duration;
    energy[s.vector_index] += s.mean_power * s.length();
    if (s.fictitious)
      CHECK(s.mean_power == 0.0);
  }
  for (std::size_t v = 0; v < tp.vectors.size(); ++v)
  {
    ScanVector const &vec = tp.vectors[v];
    CHECK(std::abs(length[v] - vec.length()) <= 1e-12 * vec.length());
    CHECK(std::abs(duration[v] - vec.length() / vec.speed) <= 1e-12 * vec.length() / vec.speed);
  }
  // Mean power is the exact average, so the per-vector energy integral is preserved.
  CHECK(energy[0] == doctest::Approx(tp.vectors[0].profile.integral(0.0, tp.vectors[0].length())).epsilon(1e-12));
}

TEST_CASE("write_toolpath round-trips")
{
  Toolpath tp = append_fictitious_paths(generate_raster_layer(RasterSpec{}), 0.5e-3, 100e-6);
  tp.vectors[1].profile = PowerProfile({{0.0, 120.0}, {5e-4, 240.0}});
  std::stringstream buf;
  write_toolpath(buf, tp);
  Toolpath const back = parse_toolpath(buf);
  CHECK(back == tp);
}
