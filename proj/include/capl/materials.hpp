#pragma once

#include <iosfwd>
#include <string>

namespace capl
{

class KeyValues;

/// Temperature-dependent properties with latent heat spread over the mushy
/// zone as extra heat capacity (equivalent specific heat). Defaults are IN625.
struct MaterialModel
{
  double solidus = 1563.0;         // K
  double liquidus = 1623.0;        // K
  double latent_heat = 290e3;      // J/kg
  double c_solid_a = 339.0;        // J/(kg K), c = a + b T below solidus
  double c_solid_b = 0.24;         // J/(kg K^2)
  double c_mushy = 735.0;          // J/(kg K), base value in and above the mushy zone
  double k_solid_a = 5.3;          // W/(m K), k = a + b T below solidus
  double k_solid_b = 0.015;        // W/(m K^2)
  double k_liquid = 30.05;         // W/(m K)
  double density = 8440.0;         // kg/m^3
  double convection = 10.0;        // W/(m^2 K)
  double env_temp = 293.0;         // K
  double substrate_temp = 293.0;   // K
  double spot_diameter = 85e-6;    // m

  static MaterialModel in625() { return {}; }

  /// Throws ValidationError if the model is not physical.
  void validate() const;

  double specific_heat_eq(double T) const;
  double conductivity(double T) const;
  /// Integral of specific_heat_eq from 0 K to T, J/kg.
  double enthalpy(double T) const;
};

/// Overrides defaults with keys such as `solidus_K = 1563`.
MaterialModel material_from_keys(KeyValues const &kv, MaterialModel base = {});
MaterialModel load_material(std::string const &path);

} // namespace capl
