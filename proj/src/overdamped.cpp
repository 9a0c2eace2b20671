#include "adalang/overdamped.hpp"

#include <algorithm>
#include <cmath>

#include "adalang/errors.hpp"
#include "adalang/quadrature.hpp"

namespace adalang {

std::string to_string(OverdampedScheme s) {
  switch (s) {
    case OverdampedScheme::EM: return "EM";
    case OverdampedScheme::EM_RESCALED: return "EM_RESCALED";
    case OverdampedScheme::EM_IP: return "EM_IP";
  }
  return "?";
}

OverdampedScheme parse_overdamped_scheme(std::string_view name) {
  if (name == "EM") return OverdampedScheme::EM;
  if (name == "EM_RESCALED") return OverdampedScheme::EM_RESCALED;
  if (name == "EM_IP") return OverdampedScheme::EM_IP;
  throw ValidationError("unknown overdamped scheme '" + std::string(name) + "'");
}

namespace {

// The update formulas below are written so that g == 1, grad g == 0 reduces
// every scheme to plain EM bit for bit.
void em_update(std::span<double> x, std::span<const double> grad, std::span<const double> z, double h,
               double beta_inv) {
  const double noise = std::sqrt(2.0 * beta_inv * h);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] - grad[i] * h + noise * z[i];
}

void rescaled_update(std::span<double> x, std::span<const double> grad, double g, std::span<const double> z, double h,
                     double beta_inv) {
  const double noise = std::sqrt(2.0 * beta_inv * g * h);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] - grad[i] * g * h + noise * z[i];
}

void ip_update(std::span<double> x, std::span<const double> grad, double g, std::span<const double> gp,
               std::span<const double> z, double h, double beta_inv) {
  const double noise = std::sqrt(2.0 * beta_inv * g * h);
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = x[i] - grad[i] * g * h + beta_inv * gp[i] * h + noise * z[i];
}

void check_dims(std::size_t d, std::span<const double> x, std::span<const double> z) {
  if (x.size() != d || z.size() != d) throw ValidationError("overdamped step: dimension mismatch");
}

class OverdampedStepper final : public Stepper {
 public:
  OverdampedStepper(OverdampedScheme scheme, const PotentialModel& pot, const MonitorFunction& mon, double h,
                    double beta_inv)
      : scheme_(scheme), pot_(pot), mon_(mon), h_(h), beta_inv_(beta_inv),
        grad_(pot.dim), gp_(pot.dim), z_(pot.dim) {}

  StepInfo step(PhaseState& s, RngStream& rng) override {
    StepInfo info;
    rng.fill_normal(z_);
    pot_.grad(s.x, grad_);
    switch (scheme_) {
      case OverdampedScheme::EM:
        em_update(s.x, grad_, z_, h_, beta_inv_);
        break;
      case OverdampedScheme::EM_RESCALED:
        info.monitor = mon_.g(s.x);
        rescaled_update(s.x, grad_, info.monitor, z_, h_, beta_inv_);
        break;
      case OverdampedScheme::EM_IP:
        info.monitor = mon_.g_and_grad(s.x, gp_);
        ip_update(s.x, grad_, info.monitor, gp_, z_, h_, beta_inv_);
        break;
    }
    return info;
  }

 private:
  OverdampedScheme scheme_;
  const PotentialModel& pot_;
  const MonitorFunction& mon_;
  double h_, beta_inv_;
  std::vector<double> grad_, gp_, z_;
};

}  // namespace

std::vector<double> em_step(const PotentialModel& pot, std::span<const double> x, std::span<const double> z, double h,
                            double beta_inv) {
  check_dims(pot.dim, x, z);
  std::vector<double> out(x.begin(), x.end()), grad(pot.dim);
  pot.grad(x, grad);
  em_update(out, grad, z, h, beta_inv);
  return out;
}

std::vector<double> em_rescaled_step(const PotentialModel& pot, const MonitorFunction& mon, std::span<const double> x,
                                     std::span<const double> z, double h, double beta_inv) {
  check_dims(pot.dim, x, z);
  std::vector<double> out(x.begin(), x.end()), grad(pot.dim);
  pot.grad(x, grad);
  rescaled_update(out, grad, mon.g(x), z, h, beta_inv);
  return out;
}

std::vector<double> em_ip_step(const PotentialModel& pot, const MonitorFunction& mon, std::span<const double> x,
                               std::span<const double> z, double h, double beta_inv) {
  check_dims(pot.dim, x, z);
  std::vector<double> out(x.begin(), x.end()), grad(pot.dim), gp(pot.dim);
  pot.grad(x, grad);
  mon.grad(x, gp);
  ip_update(out, grad, mon.g(x), gp, z, h, beta_inv);
  return out;
}

std::unique_ptr<Stepper> make_overdamped_stepper(OverdampedScheme scheme, const PotentialModel& pot,
                                                 const MonitorFunction& mon, double h, double beta_inv) {
  if (scheme != OverdampedScheme::EM && mon.dim != pot.dim)
    throw ValidationError("overdamped stepper: monitor and potential dimensions differ");
  return std::make_unique<OverdampedStepper>(scheme, pot, mon, h, beta_inv);
}

double reweighted_average(std::span<const double> q_values, std::span<const double> g_values, double h) {
  if (q_values.empty()) throw ValidationError("reweighted_average: no samples");
  if (q_values.size() != g_values.size()) throw ValidationError("reweighted_average: Q and g lengths differ");
  std::vector<double> num(q_values.size()), den(g_values.size());
  for (std::size_t i = 0; i < q_values.size(); ++i) {
    if (!(g_values[i] > 0.0)) throw ValidationError("reweighted_average: g must be > 0 on every sample");
    num[i] = q_values[i] * g_values[i] * h;
    den[i] = g_values[i] * h;
  }
  return pairwise_sum(num) / pairwise_sum(den);
}

namespace {

struct Residuals {
  std::vector<double> x, rho, ip, naive;
  double sup_ip = 0.0, sup_naive = 0.0;
};

Residuals residuals_on_grid(const PotentialModel& pot, const MonitorFunction& mon, const GibbsDensity& rho,
                            double beta_inv, double lo, double hi, double dx) {
  const auto n = static_cast<std::size_t>(std::llround((hi - lo) / dx)) + 1;
  Residuals r;
  r.x.resize(n);
  r.rho.resize(n);
  r.ip.resize(n);
  r.naive.resize(n);
  // Drift fluxes b rho and diffusion density g rho, evaluated exactly.
  auto drift_naive = [&](double x) { return -pot.dV(x) * mon.g(x) * rho(x); };
  auto correction = [&](double x) { return beta_inv * mon.dg(x) * rho(x); };
  auto diffusion = [&](double x) { return mon.g(x) * rho(x); };
  for (std::size_t i = 0; i < n; ++i) {
    const double x = lo + dx * static_cast<double>(i);
    const double xp = x + dx, xm = x - dx;
    const double d_naive = (drift_naive(xp) - drift_naive(xm)) / (2.0 * dx);
    const double d_corr = (correction(xp) - correction(xm)) / (2.0 * dx);
    const double d2 = (diffusion(xp) - 2.0 * diffusion(x) + diffusion(xm)) / (dx * dx);
    r.x[i] = x;
    r.rho[i] = rho(x);
    r.naive[i] = -d_naive + beta_inv * d2;
    r.ip[i] = -(d_naive + d_corr) + beta_inv * d2;
    r.sup_ip = std::max(r.sup_ip, std::abs(r.ip[i]));
    r.sup_naive = std::max(r.sup_naive, std::abs(r.naive[i]));
  }
  return r;
}

}  // namespace

AdjointAudit adjoint_stationarity_audit(const PotentialModel& pot, const MonitorFunction& mon, double beta_inv,
                                        double lo, double hi, double spacing) {
  if (pot.dim != 1 || mon.dim != 1) throw ValidationError("adjoint audit: one-dimensional models only");
  if (!(lo < hi)) throw ValidationError("adjoint audit: requires lo < hi");
  if (!(spacing > 0.0) || spacing > 0.01) throw ValidationError("adjoint audit: spacing must lie in (0, 0.01]");
  if (!(beta_inv > 0.0)) throw ValidationError("adjoint audit: beta_inv must be > 0");

  // Normalize over a margin wide enough to hold essentially all of the mass.
  const double margin = 10.0 * (hi - lo);
  const GibbsDensity rho(pot, beta_inv, lo - margin, hi + margin);

  Residuals coarse = residuals_on_grid(pot, mon, rho, beta_inv, lo, hi, spacing);
  const Residuals fine = residuals_on_grid(pot, mon, rho, beta_inv, lo, hi, spacing / 2.0);

  AdjointAudit out;
  out.spacing = spacing;
  out.sup_ip = coarse.sup_ip;
  out.sup_naive = coarse.sup_naive;
  out.sup_ip_refined = fine.sup_ip;
  out.refinement_ratio = fine.sup_ip > 0.0 ? coarse.sup_ip / fine.sup_ip : std::numeric_limits<double>::infinity();

  // Below this the residual is rounding noise and refinement cannot help.
  double rho_max = 0.0;
  for (double v : coarse.rho) rho_max = std::max(rho_max, v);
  const double floor = 1e-14 * rho_max / (spacing * spacing);
  if (coarse.sup_ip > floor && out.refinement_ratio < 2.0)
    throw NumericalError("adjoint audit: residual does not shrink under refinement (ratio " +
                         std::to_string(out.refinement_ratio) + "); use a finer spacing");

  out.x = std::move(coarse.x);
  out.rho = std::move(coarse.rho);
  out.residual_ip = std::move(coarse.ip);
  out.residual_naive = std::move(coarse.naive);
  return out;
}

}  // namespace adalang
