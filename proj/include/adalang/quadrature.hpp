#pragma once

#include <functional>
#include <vector>

#include "adalang/potentials.hpp"

namespace adalang {

struct QuadratureResult {
  double value = 0.0;
  double abs_error = 0.0;
};

/// Adaptive Gauss-Kronrod (61 point) over `panels` equal sub-intervals of
/// [lo, hi], each refined until its relative error estimate drops below
/// rel_tol. Splitting first keeps narrow features from being stepped over.
[[nodiscard]] QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi,
                                         double rel_tol = 1e-12, int panels = 64);

/// Normalized one-dimensional Gibbs density exp(-beta V) / Z on a support
/// interval. V is shifted by its minimum over a probe grid before
/// exponentiation so Z stays representable.
class GibbsDensity {
 public:
  GibbsDensity(const PotentialModel& pot, double beta_inv, double lo, double hi, double rel_tol = 1e-12);

  [[nodiscard]] double operator()(double x) const;
  /// Unnormalized exp(-beta (V - v_shift)).
  [[nodiscard]] double weight(double x) const;

  [[nodiscard]] double beta() const { return beta_; }
  [[nodiscard]] double v_shift() const { return v_shift_; }
  /// Normalizer of the shifted weight; Z of exp(-beta V) is z_shifted * exp(-beta v_shift).
  [[nodiscard]] double z_shifted() const { return z_; }
  [[nodiscard]] double z_abs_error() const { return z_err_; }
  [[nodiscard]] double lo() const { return lo_; }
  [[nodiscard]] double hi() const { return hi_; }

 private:
  PotentialModel pot_;
  double beta_;
  double lo_, hi_;
  double v_shift_ = 0.0;
  double z_ = 1.0;
  double z_err_ = 0.0;
};

}  // namespace adalang
