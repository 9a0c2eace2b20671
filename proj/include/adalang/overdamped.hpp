#pragma once

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adalang/core.hpp"
#include "adalang/monitor.hpp"
#include "adalang/potentials.hpp"

namespace adalang {

enum class OverdampedScheme { EM, EM_RESCALED, EM_IP };

[[nodiscard]] std::string to_string(OverdampedScheme s);
/// Accepts "EM", "EM_RESCALED", "EM_IP". Throws ValidationError otherwise.
[[nodiscard]] OverdampedScheme parse_overdamped_scheme(std::string_view name);

/// x' = x - grad V(x) h + sqrt(2 beta_inv h) z
[[nodiscard]] std::vector<double> em_step(const PotentialModel& pot, std::span<const double> x,
                                          std::span<const double> z, double h, double beta_inv);

/// x' = x - grad V(x) g(x) h + sqrt(2 beta_inv g(x) h) z. Samples exp(-beta V - log g),
/// not the Gibbs density, unless reweighted.
[[nodiscard]] std::vector<double> em_rescaled_step(const PotentialModel& pot, const MonitorFunction& mon,
                                                   std::span<const double> x, std::span<const double> z, double h,
                                                   double beta_inv);

/// x' = x - grad V(x) g(x) h + beta_inv grad g(x) h + sqrt(2 beta_inv g(x) h) z
[[nodiscard]] std::vector<double> em_ip_step(const PotentialModel& pot, const MonitorFunction& mon,
                                             std::span<const double> x, std::span<const double> z, double h,
                                             double beta_inv);

/// Stepper for the ensemble driver. Each step draws dim normals. The monitor
/// argument is ignored for EM.
[[nodiscard]] std::unique_ptr<Stepper> make_overdamped_stepper(OverdampedScheme scheme, const PotentialModel& pot,
                                                               const MonitorFunction& mon, double h, double beta_inv);

/// sum_n Q(X_n) g(X_n) h / sum_n g(X_n) h, given Q and g already evaluated
/// along a trajectory. Throws ValidationError on empty or mismatched input.
[[nodiscard]] double reweighted_average(std::span<const double> q_values, std::span<const double> g_values, double h);

/// Residuals of the discrete forward (Fokker-Planck) operators of the
/// IP-transformed and the uncorrected rescaled dynamics applied to the
/// normalized Gibbs density on a uniform grid.
struct AdjointAudit {
  std::vector<double> x;
  std::vector<double> rho;
  std::vector<double> residual_ip;
  std::vector<double> residual_naive;
  double sup_ip = 0.0;
  double sup_naive = 0.0;
  double spacing = 0.0;
  double sup_ip_refined = 0.0;  // same interval at half the spacing
  double refinement_ratio = 0.0;
};

/// Grid [lo, hi] with the given spacing (<= 0.01). Derivatives are second
/// order central differences of exactly evaluated fluxes. Throws NumericalError
/// if halving the spacing does not reduce the IP residual (grid too coarse).
[[nodiscard]] AdjointAudit adjoint_stationarity_audit(const PotentialModel& pot, const MonitorFunction& mon,
                                                      double beta_inv, double lo, double hi, double spacing);

}  // namespace adalang
