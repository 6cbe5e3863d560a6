#pragma once

#include <capl/geometry.hpp>

#include <cstddef>
#include <vector>

namespace capl
{

/// Per-element lumped temperatures plus the laser and clock.
struct ThermalState
{
  std::vector<double> temperature; // K
  std::vector<char> melted_ever;
  double time = 0.0;               // s
  Vec2 laser_position;
  bool laser_on = false;

  static ThermalState uniform(std::size_t n, double T)
  {
    ThermalState s;
    s.temperature.assign(n, T);
    s.melted_ever.assign(n, 0);
    return s;
  }
};

} // namespace capl
