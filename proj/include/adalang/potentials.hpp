#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace adalang {

/// Potential energy V with analytic gradient. Immutable after construction.
struct PotentialModel {
  using ScalarFn = std::function<double(std::span<const double>)>;
  using GradientFn = std::function<void(std::span<const double>, std::span<double>)>;

  std::string id;
  std::size_t dim = 1;
  ScalarFn value;
  GradientFn gradient;
  std::optional<ScalarFn> laplacian;  // sum of diagonal second derivatives
  std::vector<double> center;         // default initial position

  [[nodiscard]] double V(std::span<const double> x) const { return value(x); }
  void grad(std::span<const double> x, std::span<double> out) const { gradient(x, out); }
  [[nodiscard]] double V(double x) const { return value(std::span<const double>(&x, 1)); }
  [[nodiscard]] double dV(double x) const;
};

/// Parameters of the modified harmonic potential with state-dependent
/// frequency omega(x) = b / (b/a + (x - x0)^2).
struct ModifiedHarmonicParams {
  double a = 10.0;
  double b = 0.1;
  double c = 0.1;
  double x0 = 0.5;

  [[nodiscard]] double omega(double x) const;
  [[nodiscard]] double omega_prime(double x) const;
};

/// V(x) = 1/2 ( a^{3/2} b^{1/2} x0 atan(sqrt(a/b)(x-x0)) + ab(a(x-x0)x0 - b)/(a(x-x0)^2 + b)
///              + c(x-x0)^2 + 2c(x-x0)x0 ),
/// whose derivative is V'(x) = (omega(x)^2 + c) x.
[[nodiscard]] PotentialModel modified_harmonic(const ModifiedHarmonicParams& p);

/// V(x) = k |x|^2 / 2 in `dim` dimensions.
[[nodiscard]] PotentialModel harmonic(double k, std::size_t dim = 1);

/// Negative log posterior of a Gaussian mean with a steep polynomial prior:
/// V(mu) = sum_i (y_i - mu)^2 / 2 + (mu - a)^{2K}.
[[nodiscard]] PotentialModel bayes_posterior(std::vector<double> y, int K, double a);

struct TwoPathwayParams {
  double k1 = 0.1;
  double k2 = 50.0;
  double k3 = 50.0;
  double k4 = 0.1;
};

/// Planar potential with a narrow channel along y = 4 - x^2 and a wide one
/// along y = x^2 - 4.
[[nodiscard]] PotentialModel two_pathway(const TwoPathwayParams& p = {});

}  // namespace adalang
