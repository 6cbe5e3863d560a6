#include <capl/errors.hpp>
#include <capl/keyvalue.hpp>
#include <capl/materials.hpp>

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace capl;

TEST_CASE("specific heat")
{
  MaterialModel const m;
  CHECK(m.specific_heat_eq(293.0) == doctest::Approx(409.32).epsilon(1e-12));
  CHECK(m.specific_heat_eq(1600.0) == doctest::Approx(5568.333333333333).epsilon(1e-12));
  CHECK(m.specific_heat_eq(2000.0) == 735.0);
}

TEST_CASE("conductivity")
{
  MaterialModel const m;
  CHECK(m.conductivity(1000.0) == doctest::Approx(20.3).epsilon(1e-12));
  CHECK(m.conductivity(1563.0) == doctest::Approx(28.745).epsilon(1e-12));
  CHECK(m.conductivity(1700.0) == 30.05);
  CHECK(m.conductivity(1623.0) == doctest::Approx(30.05).epsilon(1e-12));
}

TEST_CASE("latent heat bookkeeping")
{
  MaterialModel const m;
  double const mushy = m.enthalpy(m.liquidus) - m.enthalpy(m.solidus);
  double const expected = m.c_mushy * (m.liquidus - m.solidus) + m.latent_heat;
  CHECK(std::abs(mushy - expected) <= 1e-9 * expected);
  CHECK(std::abs(mushy - m.c_mushy * (m.liquidus - m.solidus) - 290e3) <= 1e-9 * 290e3);
}

TEST_CASE("enthalpy matches a numerical integral of c_eq")
{
  MaterialModel const m;
  // Midpoint rule with breakpoints on the phase boundaries; c_eq is at most linear per piece.
  auto integrate = [&](double a, double b) {
    int const n = 2000;
    double sum = 0.0;
    for (int k = 0; k < n; ++k)
      sum += m.specific_heat_eq(a + (k + 0.5) * (b - a) / n);
    return sum * (b - a) / n;
  };
  double const h = integrate(0.0, m.solidus) + integrate(m.solidus, m.liquidus) + integrate(m.liquidus, 2500.0);
  CHECK(m.enthalpy(2500.0) == doctest::Approx(h).epsilon(1e-12));
}

TEST_CASE("monotone properties over the working range")
{
  MaterialModel const m;
  double prev_h = m.enthalpy(293.0);
  double prev_k = m.conductivity(293.0);
  for (double T = 293.5; T <= 3000.0; T += 0.5)
  {
    CHECK(m.enthalpy(T) > prev_h);
    CHECK(m.conductivity(T) >= prev_k);
    prev_h = m.enthalpy(T);
    prev_k = m.conductivity(T);
  }
  // c_eq rises up to the liquidus; above it the latent share is gone.
  for (double T = 293.0; T < m.liquidus; T += 1.0)
    CHECK(m.specific_heat_eq(T + 1.0) >= m.specific_heat_eq(T));
}

TEST_CASE("material overrides")
{
  std::istringstream in("solidus_K = 1500\nliquidus_K = 1600\ndensity_kg_m3 = 8000\n");
  MaterialModel const m = material_from_keys(KeyValues::parse(in));
  CHECK(m.solidus == 1500.0);
  CHECK(m.liquidus == 1600.0);
  CHECK(m.density == 8000.0);
  CHECK(m.latent_heat == 290e3);

  std::istringstream bad("solidus_K = 1700\n");
  CHECK_THROWS_AS(material_from_keys(KeyValues::parse(bad)), ValidationError);
  CHECK_THROWS_AS(load_material("/nonexistent/material.cfg"), IoError);
}
