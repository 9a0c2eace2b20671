#include "adalang/quadrature.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <limits>

#include "adalang/errors.hpp"

namespace adalang {

QuadratureResult integrate(const std::function<double(double)>& f, double lo, double hi, double rel_tol, int panels) {
  if (!(lo < hi)) throw ValidationError("integrate: requires lo < hi");
  if (panels < 1) throw ValidationError("integrate: panels must be >= 1");
  using GK = boost::math::quadrature::gauss_kronrod<double, 61>;
  QuadratureResult out;
  const double width = (hi - lo) / panels;
  for (int i = 0; i < panels; ++i) {
    const double a = lo + width * i;
    const double b = i + 1 == panels ? hi : lo + width * (i + 1);
    double err = 0.0;
    out.value += GK::integrate(f, a, b, 20, rel_tol, &err);
    out.abs_error += err;
  }
  return out;
}

GibbsDensity::GibbsDensity(const PotentialModel& pot, double beta_inv, double lo, double hi, double rel_tol)
    : pot_(pot), beta_(1.0 / beta_inv), lo_(lo), hi_(hi) {
  if (pot.dim != 1) throw ValidationError("GibbsDensity: potential must be one-dimensional");
  if (!(beta_inv > 0.0)) throw ValidationError("GibbsDensity: beta_inv must be > 0");
  if (!(lo < hi) || !std::isfinite(lo) || !std::isfinite(hi))
    throw ValidationError("GibbsDensity: support must be a finite interval");
  double vmin = std::numeric_limits<double>::infinity();
  constexpr int kProbe = 4096;
  for (int i = 0; i <= kProbe; ++i) vmin = std::min(vmin, pot_.V(lo + (hi - lo) * i / kProbe));
  v_shift_ = vmin;
  const auto r = integrate([this](double x) { return weight(x); }, lo, hi, rel_tol);
  z_ = r.value;
  z_err_ = r.abs_error;
  if (!(z_ > 0.0) || !std::isfinite(z_)) throw NumericalError("GibbsDensity: normalizer is not a positive finite number");
}

double GibbsDensity::weight(double x) const { return std::exp(-beta_ * (pot_.V(x) - v_shift_)); }

double GibbsDensity::operator()(double x) const { return weight(x) / z_; }

}  // namespace adalang
