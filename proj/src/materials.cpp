#include <capl/errors.hpp>
#include <capl/keyvalue.hpp>
#include <capl/materials.hpp>

#include <algorithm>

namespace capl
{

void MaterialModel::validate() const
{
  if (!(solidus < liquidus))
    throw ValidationError("solidus must be below liquidus");
  for (double v : {solidus, latent_heat, c_mushy, k_liquid, density, env_temp, substrate_temp, spot_diameter})
    if (!(v > 0.0))
      throw ValidationError("material properties must be positive");
  if (!(convection >= 0.0))
    throw ValidationError("convection coefficient must be non-negative");
  if (!(c_solid_a + c_solid_b * env_temp > 0.0) || !(k_solid_a + k_solid_b * env_temp > 0.0))
    throw ValidationError("solid specific heat and conductivity must be positive");
}

double MaterialModel::specific_heat_eq(double T) const
{
  if (T <= solidus)
    return c_solid_a + c_solid_b * T;
  if (T <= liquidus)
    return c_mushy + latent_heat / (liquidus - solidus);
  return c_mushy;
}

double MaterialModel::conductivity(double T) const
{
  if (T <= solidus)
    return k_solid_a + k_solid_b * T;
  if (T <= liquidus)
  {
    double const k_s = k_solid_a + k_solid_b * solidus;
    return k_s + (k_liquid - k_s) * (T - solidus) / (liquidus - solidus);
  }
  return k_liquid;
}

double MaterialModel::enthalpy(double T) const
{
  double const x = std::min(T, solidus);
  double h = c_solid_a * x + 0.5 * c_solid_b * x * x;
  if (T > solidus)
    h += (c_mushy + latent_heat / (liquidus - solidus)) * (std::min(T, liquidus) - solidus);
  if (T > liquidus)
    h += c_mushy * (T - liquidus);
  return h;
}

MaterialModel material_from_keys(KeyValues const &kv, MaterialModel m)
{
  m.solidus = kv.get_double("solidus_K", m.solidus);
  m.liquidus = kv.get_double("liquidus_K", m.liquidus);
  m.latent_heat = kv.get_double("latent_heat_J_kg", m.latent_heat);
  m.c_solid_a = kv.get_double("c_solid_a", m.c_solid_a);
  m.c_solid_b = kv.get_double("c_solid_b", m.c_solid_b);
  m.c_mushy = kv.get_double("c_mushy", m.c_mushy);
  m.k_solid_a = kv.get_double("k_solid_a", m.k_solid_a);
  m.k_solid_b = kv.get_double("k_solid_b", m.k_solid_b);
  m.k_liquid = kv.get_double("k_liquid", m.k_liquid);
  m.density = kv.get_double("density_kg_m3", m.density);
  m.convection = kv.get_double("convection_W_m2K", m.convection);
  m.env_temp = kv.get_double("env_temp_K", m.env_temp);
  m.substrate_temp = kv.get_double("substrate_temp_K", m.substrate_temp);
  m.spot_diameter = kv.get_double("spot_diameter_m", m.spot_diameter);
  m.validate();
  return m;
}

MaterialModel load_material(std::string const &path) { return material_from_keys(KeyValues::load(path)); }

} // namespace capl
