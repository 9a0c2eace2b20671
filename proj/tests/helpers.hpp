#pragma once

#include <memory>
#include <span>

#include "adalang/monitor.hpp"
#include "adalang/potentials.hpp"

namespace adalang::testing {

// V == 0 in `dim` dimensions.
inline PotentialModel flat_potential(std::size_t dim = 1) {
  PotentialModel m;
  m.id = "flat";
  m.dim = dim;
  m.center.assign(dim, 0.0);
  m.value = [](std::span<const double>) { return 0.0; };
  m.gradient = [](std::span<const double>, std::span<double> out) {
    for (double& v : out) v = 0.0;
  };
  return m;
}

// g(x) = g0 + slope (x - x_ref) in one dimension.
inline MonitorFunction linear_monitor(double g0, double slope, double x_ref) {
  MonitorFunction m;
  m.id = "linear";
  m.dim = 1;
  m.params = {0.01, 100.0, 1.0, 1};
  m.value = [=](std::span<const double> x) { return g0 + slope * (x[0] - x_ref); };
  m.gradient = [=](std::span<const double>, std::span<double> out) { out[0] = slope; };
  return m;
}

}  // namespace adalang::testing
