#include "adalang/potentials.hpp"

#include <cmath>
#include <numeric>

#include "adalang/errors.hpp"

namespace adalang {

double PotentialModel::dV(double x) const {
  double g = 0.0;
  gradient(std::span<const double>(&x, 1), std::span<double>(&g, 1));
  return g;
}

double ModifiedHarmonicParams::omega(double x) const {
  const double u = x - x0;
  return b / (b / a + u * u);
}

double ModifiedHarmonicParams::omega_prime(double x) const {
  const double u = x - x0;
  const double w = omega(x);
  return -2.0 * u * w * w / b;
}

PotentialModel modified_harmonic(const ModifiedHarmonicParams& p) {
  if (!(p.a > 0.0) || !(p.b > 0.0) || !(p.c >= 0.0))
    throw ValidationError("modified_harmonic: requires a > 0, b > 0, c >= 0");
  PotentialModel m;
  m.id = "modified_harmonic";
  m.dim = 1;
  m.center = {p.x0};
  m.value = [p](std::span<const double> x) {
    const double u = x[0] - p.x0;
    return 0.5 * (std::pow(p.a, 1.5) * std::sqrt(p.b) * p.x0 * std::atan(std::sqrt(p.a / p.b) * u) +
                  p.a * p.b * (p.a * u * p.x0 - p.b) / (p.a * u * u + p.b) + p.c * u * u + 2.0 * p.c * u * p.x0);
  };
  m.gradient = [p](std::span<const double> x, std::span<double> out) {
    const double w = p.omega(x[0]);
    out[0] = (w * w + p.c) * x[0];
  };
  m.laplacian = [p](std::span<const double> x) {
    const double w = p.omega(x[0]);
    return w * w + p.c + 2.0 * x[0] * w * p.omega_prime(x[0]);
  };
  return m;
}

PotentialModel harmonic(double k, std::size_t dim) {
  if (!(k > 0.0)) throw ValidationError("harmonic: requires k > 0");
  if (dim < 1) throw ValidationError("harmonic: requires dim >= 1");
  PotentialModel m;
  m.id = "harmonic";
  m.dim = dim;
  m.center.assign(dim, 0.0);
  m.value = [k](std::span<const double> x) {
    double s = 0.0;
    for (double v : x) s += v * v;
    return 0.5 * k * s;
  };
  m.gradient = [k](std::span<const double> x, std::span<double> out) {
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = k * x[i];
  };
  m.laplacian = [k, dim](std::span<const double>) { return k * static_cast<double>(dim); };
  return m;
}

PotentialModel bayes_posterior(std::vector<double> y, int K, double a) {
  if (K < 1) throw ValidationError("bayes_posterior: requires K >= 1");
  if (y.empty()) throw ValidationError("bayes_posterior: data vector is empty");
  const double n = static_cast<double>(y.size());
  const double sum_y = std::accumulate(y.begin(), y.end(), 0.0);
  PotentialModel m;
  m.id = "bayes";
  m.dim = 1;
  m.center = {sum_y / n};
  m.value = [y = std::move(y), K, a](std::span<const double> x) {
    const double mu = x[0];
    double s = 0.0;
    for (double yi : y) s += 0.5 * (yi - mu) * (yi - mu);
    return s + std::pow(mu - a, 2 * K);
  };
  // V'(mu) = -(sum y - N mu - 2K (mu - a)^{2K-1})
  m.gradient = [n, sum_y, K, a](std::span<const double> x, std::span<double> out) {
    const double mu = x[0];
    out[0] = -(sum_y - n * mu - 2.0 * K * std::pow(mu - a, 2 * K - 1));
  };
  m.laplacian = [n, K, a](std::span<const double> x) {
    return n + 2.0 * K * (2.0 * K - 1.0) * std::pow(x[0] - a, 2 * K - 2);
  };
  return m;
}

PotentialModel two_pathway(const TwoPathwayParams& p) {
  PotentialModel m;
  m.id = "two_pathway";
  m.dim = 2;
  m.center = {0.0, -4.0};
  m.value = [p](std::span<const double> z) {
    const double x = z[0], y = z[1];
    const double p1 = (y - x * x + 4.0) * (y - x * x + 4.0);
    const double p2 = (y + x * x - 4.0) * (y + x * x - 4.0);
    return (1.0 + p.k1 * p1 * p2) / (1.0 + p1) + p.k3 * p.k2 * p1 * p2 / (1.0 + p.k2 * p2) + p.k4 * x * x;
  };
  m.gradient = [p](std::span<const double> z, std::span<double> out) {
    const double x = z[0], y = z[1];
    const double A = y - x * x + 4.0;
    const double B = y + x * x - 4.0;
    const double p1 = A * A;
    const double p2 = B * B;
    const double den2 = 1.0 + p.k2 * p2;
    // partial derivatives of q with respect to p1 and p2
    const double q_p1 = (p.k1 * p2 - 1.0) / ((1.0 + p1) * (1.0 + p1)) + p.k3 * p.k2 * p2 / den2;
    const double q_p2 = p.k1 * p1 / (1.0 + p1) + p.k3 * p.k2 * p1 / (den2 * den2);
    out[0] = q_p1 * (-4.0 * x * A) + q_p2 * (4.0 * x * B) + 2.0 * p.k4 * x;
    out[1] = q_p1 * (2.0 * A) + q_p2 * (2.0 * B);
  };
  return m;
}

}  // namespace adalang
