#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adalang/potentials.hpp"

namespace adalang {

/// Shape parameters of the bounded heuristic psi.
struct MonitorParams {
  double m = 0.001;    // psi(u) -> m M / (m + M) as u -> inf
  double Mcap = 2.0;   // psi(0) = Mcap
  double r = 1.0;
  int alpha = 1;

  void validate() const;
};

/// psi(u) = sqrt(1 + m^2 r u^{2 alpha}) / ( sqrt(1 + m^2 r u^{2 alpha}) / M + sqrt(r u^{2 alpha}) ),
/// evaluated as 1 / (1/M + 1/sqrt(1/s + m^2)) with s = r (u^2)^alpha. Depends on u only through
/// u^2, so negative arguments are accepted.
[[nodiscard]] double psi(double u, const MonitorParams& p);
/// d psi / du for u >= 0. At u = 0 this is 0 for alpha >= 2 and the one-sided
/// slope -M^2 sqrt(r) for alpha = 1.
[[nodiscard]] double psi_prime(double u, const MonitorParams& p);
/// psi(u) and psi'(u) sharing the intermediate terms.
[[nodiscard]] double psi_with_prime(double u, const MonitorParams& p, double& dpsi);

/// psi(1/v), written so that v = 0 is regular: 1 / (1/M + 1/sqrt(v^{2 alpha}/r + m^2)).
[[nodiscard]] double psi_of_reciprocal(double v, const MonitorParams& p);
[[nodiscard]] double psi_of_reciprocal_prime(double v, const MonitorParams& p);

/// Whether a scalar indicator G enters as psi(G) or psi(1/G).
enum class Orientation { direct, inverse };

/// Strictly positive, bounded time-rescaling factor g and its gradient.
struct MonitorFunction {
  using ScalarFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;
  using ValueGradientFn = std::function<double(std::span<const double>, std::span<double>)>;

  std::string id;
  std::size_t dim = 1;
  ScalarFn value;
  GradientFn gradient;
  ValueGradientFn value_gradient;  // optional fused evaluation
  MonitorParams params;

  [[nodiscard]] double g(std::span<const double> x) const { return value(x); }
  void grad(std::span<const double> x, std::span<double> out) const { gradient(x, out); }
  /// g(x), with grad g(x) written to out.
  double g_and_grad(std::span<const double> x, std::span<double> out) const {
    if (value_gradient) return value_gradient(x, out);
    gradient(x, out);
    return value(x);
  }
  [[nodiscard]] double g(double x) const { return value(std::span<const double>(&x, 1)); }
  [[nodiscard]] double dg(double x) const;

  /// Infimum of psi for these parameters, m M / (m + M).
  [[nodiscard]] double lower_bound() const { return params.m * params.Mcap / (params.m + params.Mcap); }
  [[nodiscard]] double upper_bound() const { return params.Mcap; }
};

using ScalarField = std::function<double(std::span<const double>)>;
using VectorField = std::function<void(std::span<const double>, std::span<double>)>;

/// g = psi o G (direct) or psi o (1/G) (inverse), gradient by the chain rule.
/// G must be non-negative.
[[nodiscard]] MonitorFunction monitor_from_scalar(ScalarField G, VectorField grad_G, std::size_t dim,
                                                  const MonitorParams& params,
                                                  Orientation orientation = Orientation::direct,
                                                  std::string id = "scalar");

/// g == c. Declared bounds default to (c/2, 2c).
[[nodiscard]] MonitorFunction constant_monitor(double c, std::size_t dim = 1);
[[nodiscard]] MonitorFunction constant_monitor(double c, std::size_t dim, const MonitorParams& declared);

/// g1 = psi(|V'|), g2 = psi(omega^2), g3 = psi(omega) for the modified harmonic potential.
[[nodiscard]] MonitorFunction monitor_grad_norm(const ModifiedHarmonicParams& pot, const MonitorParams& params);
[[nodiscard]] MonitorFunction monitor_omega_sq(const ModifiedHarmonicParams& pot, const MonitorParams& params);
[[nodiscard]] MonitorFunction monitor_omega(const ModifiedHarmonicParams& pot, const MonitorParams& params);

/// Planar monitor built on f(x, y) = (y + x^2 - 4)^2, which vanishes on the
/// narrow channel. Inverse orientation (psi(1/f)) is small near the channel.
[[nodiscard]] MonitorFunction monitor_2d_channel(const MonitorParams& params,
                                                 Orientation orientation = Orientation::inverse);

/// psi(|2(mu - a) + (y_mean - a)^2|).
[[nodiscard]] MonitorFunction monitor_bayes(double y_mean, double a, const MonitorParams& params);

// ---------------------------------------------------------------------------
// Criteria audit

struct Box {
  std::vector<double> lo;
  std::vector<double> hi;
};

struct AuditRow {
  std::string criterion;
  double estimate = 0.0;
  double bound = 0.0;
  bool pass = true;
};

struct CriteriaAudit {
  std::vector<AuditRow> rows;
  [[nodiscard]] bool passed() const;
};

/// Empirical check of boundedness and Lipschitz-type conditions on a grid of
/// n_grid points per axis. Lipschitz quotients use all grid pairs when there
/// are at most 10^6 of them, otherwise neighbouring pairs plus a strided
/// subset. Throws AuditFailure naming the point if g, grad g or grad V is
/// non-finite anywhere on the grid.
[[nodiscard]] CriteriaAudit audit_criteria(const MonitorFunction& mon, const PotentialModel& pot, const Box& domain,
                                           int n_grid);

}  // namespace adalang
