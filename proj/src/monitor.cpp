#include "adalang/monitor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "adalang/errors.hpp"

namespace adalang {

void MonitorParams::validate() const {
  if (!(m > 0.0)) throw ValidationError("monitor.m: must be > 0");
  if (!(Mcap > m)) throw ValidationError("monitor.M: must be > m");
  if (!(r > 0.0)) throw ValidationError("monitor.r: must be > 0");
  if (alpha < 1) throw ValidationError("monitor.alpha: must be a positive integer");
}

namespace {

double int_pow(double base, int e) {
  double out = 1.0;
  for (int i = 0; i < e; ++i) out *= base;
  return out;
}

}  // namespace

double psi(double u, const MonitorParams& p) {
  const double s = p.r * int_pow(u * u, p.alpha);
  const double w = s > 0.0 ? 1.0 / std::sqrt(1.0 / s + p.m * p.m) : 0.0;
  return 1.0 / (1.0 / p.Mcap + w);
}

double psi_prime(double u, const MonitorParams& p) {
  if (u < 0.0) return -psi_prime(-u, p);
  const double g = psi(u, p);
  if (u == 0.0) return p.alpha == 1 ? -p.Mcap * p.Mcap * std::sqrt(p.r) : 0.0;
  const double s = p.r * int_pow(u * u, p.alpha);
  double dw;
  if (s > 0.0) {
    const double w = 1.0 / std::sqrt(1.0 / s + p.m * p.m);
    dw = p.alpha * w * w * w / (s * u);
  } else {
    // s underflowed: use the unsimplified form.
    dw = std::sqrt(p.r) * p.alpha * int_pow(u, p.alpha - 1);
  }
  return -g * g * dw;
}

double psi_with_prime(double u, const MonitorParams& p, double& dpsi) {
  const double au = std::abs(u);
  const double s = p.r * int_pow(au * au, p.alpha);
  if (!(s > 0.0)) {
    dpsi = psi_prime(u, p);
    return psi(u, p);
  }
  const double w = 1.0 / std::sqrt(1.0 / s + p.m * p.m);
  const double g = 1.0 / (1.0 / p.Mcap + w);
  const double d = -g * g * (p.alpha * w * w * w / (s * au));
  dpsi = u < 0.0 ? -d : d;
  return g;
}

double psi_of_reciprocal(double v, const MonitorParams& p) {
  const double d = std::sqrt(int_pow(v * v, p.alpha) / p.r + p.m * p.m);
  return 1.0 / (1.0 / p.Mcap + 1.0 / d);
}

double psi_of_reciprocal_prime(double v, const MonitorParams& p) {
  const double d = std::sqrt(int_pow(v * v, p.alpha) / p.r + p.m * p.m);
  const double g = 1.0 / (1.0 / p.Mcap + 1.0 / d);
  const double dd = p.alpha * int_pow(v, 2 * p.alpha - 1) / (p.r * d);
  return g * g / (d * d) * dd;
}

double MonitorFunction::dg(double x) const {
  double out = 0.0;
  gradient(std::span<const double>(&x, 1), std::span<double>(&out, 1));
  return out;
}

MonitorFunction monitor_from_scalar(ScalarField G, VectorField grad_G, std::size_t dim, const MonitorParams& params,
                                    Orientation orientation, std::string id) {
  params.validate();
  MonitorFunction mon;
  mon.id = std::move(id);
  mon.dim = dim;
  mon.params = params;
  if (orientation == Orientation::direct) {
    mon.value = [G, params](std::span<const double> x) { return psi(G(x), params); };
    mon.gradient = [G, grad_G, params](std::span<const double> x, std::span<double> out) {
      grad_G(x, out);
      const double d = psi_prime(G(x), params);
      for (double& v : out) v *= d;
    };
  } else {
    mon.value = [G, params](std::span<const double> x) { return psi_of_reciprocal(G(x), params); };
    mon.gradient = [G, grad_G, params](std::span<const double> x, std::span<double> out) {
      grad_G(x, out);
      const double d = psi_of_reciprocal_prime(G(x), params);
      for (double& v : out) v *= d;
    };
  }
  return mon;
}

MonitorFunction constant_monitor(double c, std::size_t dim) {
  return constant_monitor(c, dim, MonitorParams{0.5 * c, 2.0 * c, 1.0, 1});
}

MonitorFunction constant_monitor(double c, std::size_t dim, const MonitorParams& declared) {
  if (!(c > 0.0)) throw ValidationError("constant_monitor: value must be > 0");
  MonitorFunction mon;
  mon.id = "constant";
  mon.dim = dim;
  mon.params = declared;
  mon.value = [c](std::span<const double>) { return c; };
  mon.gradient = [](std::span<const double>, std::span<double> out) { std::fill(out.begin(), out.end(), 0.0); };
  return mon;
}

MonitorFunction monitor_grad_norm(const ModifiedHarmonicParams& pot, const MonitorParams& params) {
  params.validate();
  MonitorFunction mon;
  mon.id = "grad_norm";
  mon.params = params;
  // |V'| with V' = (omega^2 + c) x and V'' = omega^2 + c + 2 x omega omega'
  mon.value = [pot, params](std::span<const double> x) {
    const double w = pot.omega(x[0]);
    return psi(std::abs((w * w + pot.c) * x[0]), params);
  };
  mon.gradient = [pot, params](std::span<const double> x, std::span<double> out) {
    const double w = pot.omega(x[0]);
    const double dv = (w * w + pot.c) * x[0];
    const double d2v = w * w + pot.c + 2.0 * x[0] * w * pot.omega_prime(x[0]);
    out[0] = psi_prime(dv, params) * d2v;
  };
  return mon;
}

MonitorFunction monitor_omega_sq(const ModifiedHarmonicParams& pot, const MonitorParams& params) {
  params.validate();
  MonitorFunction mon;
  mon.id = "omega_sq";
  mon.params = params;
  mon.value = [pot, params](std::span<const double> x) {
    const double w = pot.omega(x[0]);
    return psi(w * w, params);
  };
  mon.gradient = [pot, params](std::span<const double> x, std::span<double> out) {
    const double w = pot.omega(x[0]);
    out[0] = psi_prime(w * w, params) * 2.0 * w * pot.omega_prime(x[0]);
  };
  return mon;
}

MonitorFunction monitor_omega(const ModifiedHarmonicParams& pot, const MonitorParams& params) {
  params.validate();
  MonitorFunction mon;
  mon.id = "omega";
  mon.params = params;
  mon.value = [pot, params](std::span<const double> x) { return psi(pot.omega(x[0]), params); };
  mon.gradient = [pot, params](std::span<const double> x, std::span<double> out) {
    out[0] = psi_prime(pot.omega(x[0]), params) * pot.omega_prime(x[0]);
  };
  mon.value_gradient = [pot, params](std::span<const double> x, std::span<double> out) {
    const double u = x[0] - pot.x0;
    const double w = pot.b / (pot.b / pot.a + u * u);
    double d = 0.0;
    const double g = psi_with_prime(w, params, d);
    out[0] = d * (-2.0 * u * w * w / pot.b);
    return g;
  };
  return mon;
}

MonitorFunction monitor_2d_channel(const MonitorParams& params, Orientation orientation) {
  auto f = [](std::span<const double> z) {
    const double B = z[1] + z[0] * z[0] - 4.0;
    return B * B;
  };
  auto grad_f = [](std::span<const double> z, std::span<double> out) {
    const double B = z[1] + z[0] * z[0] - 4.0;
    out[0] = 4.0 * z[0] * B;
    out[1] = 2.0 * B;
  };
  return monitor_from_scalar(f, grad_f, 2, params, orientation, "two_pathway_channel");
}

MonitorFunction monitor_bayes(double y_mean, double a, const MonitorParams& params) {
  params.validate();
  const double shift = (y_mean - a) * (y_mean - a);
  MonitorFunction mon;
  mon.id = "bayes";
  mon.params = params;
  mon.value = [a, shift, params](std::span<const double> x) { return psi(2.0 * (x[0] - a) + shift, params); };
  mon.gradient = [a, shift, params](std::span<const double> x, std::span<double> out) {
    out[0] = 2.0 * psi_prime(2.0 * (x[0] - a) + shift, params);
  };
  mon.value_gradient = [a, shift, params](std::span<const double> x, std::span<double> out) {
    double d = 0.0;
    const double g = psi_with_prime(2.0 * (x[0] - a) + shift, params, d);
    out[0] = 2.0 * d;
    return g;
  };
  return mon;
}

// ---------------------------------------------------------------------------

bool CriteriaAudit::passed() const {
  return std::all_of(rows.begin(), rows.end(), [](const AuditRow& r) { return r.pass; });
}

namespace {

std::string describe(std::span<const double> x) {
  std::ostringstream os;
  os << '(';
  for (std::size_t i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
  os << ')';
  return os.str();
}

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

}  // namespace

CriteriaAudit audit_criteria(const MonitorFunction& mon, const PotentialModel& pot, const Box& domain, int n_grid) {
  const std::size_t d = pot.dim;
  if (domain.lo.size() != d || domain.hi.size() != d) throw ValidationError("audit: box dimension mismatch");
  if (n_grid < 2) throw ValidationError("audit: n_grid must be >= 2");
  for (std::size_t i = 0; i < d; ++i)
    if (!std::isfinite(domain.lo[i]) || !std::isfinite(domain.hi[i]) || !(domain.lo[i] < domain.hi[i]))
      throw ValidationError("audit: box bounds must be finite with lo < hi");

  std::size_t n_points = 1;
  for (std::size_t i = 0; i < d; ++i) n_points *= static_cast<std::size_t>(n_grid);

  // Point-major storage: coordinates, g, grad g, g * grad V.
  std::vector<double> pts(n_points * d), gval(n_points), ggrad(n_points * d), gv(n_points * d);
  std::vector<double> gradv(d);
  double lap_growth = 0.0;
  double second_max = 0.0;
  std::vector<double> xp(d), xm(d), gp(d), gm(d);
  for (std::size_t idx = 0; idx < n_points; ++idx) {
    std::size_t rem = idx;
    std::span<double> x(&pts[idx * d], d);
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t k = rem % static_cast<std::size_t>(n_grid);
      rem /= static_cast<std::size_t>(n_grid);
      x[i] = domain.lo[i] + (domain.hi[i] - domain.lo[i]) * static_cast<double>(k) / (n_grid - 1);
    }
    gval[idx] = mon.g(x);
    std::span<double> gg(&ggrad[idx * d], d);
    mon.grad(x, gg);
    pot.grad(x, gradv);
    bool finite = std::isfinite(gval[idx]);
    for (std::size_t i = 0; i < d; ++i) {
      gv[idx * d + i] = gval[idx] * gradv[i];
      finite = finite && std::isfinite(gg[i]) && std::isfinite(gradv[i]);
    }
    if (!finite) throw AuditFailure("audit: non-finite evaluation at " + describe(x));

    for (std::size_t i = 0; i < d; ++i) {
      const double delta = 1e-5 * std::max(1.0, std::abs(x[i]));
      std::copy(x.begin(), x.end(), xp.begin());
      std::copy(x.begin(), x.end(), xm.begin());
      xp[i] += delta;
      xm[i] -= delta;
      mon.grad(xp, gp);
      mon.grad(xm, gm);
      second_max = std::max(second_max, std::abs((gp[i] - gm[i]) / (2.0 * delta)));
    }
    if (pot.laplacian) {
      double r2 = 0.0;
      for (double v : x) r2 += v * v;
      lap_growth = std::max(lap_growth, std::abs((*pot.laplacian)(x)) / (1.0 + r2));
    }
  }

  double g_min = std::numeric_limits<double>::infinity(), g_max = -g_min;
  double grad_norm_max = 0.0, partial_max = 0.0;
  for (std::size_t idx = 0; idx < n_points; ++idx) {
    g_min = std::min(g_min, gval[idx]);
    g_max = std::max(g_max, gval[idx]);
    double n2 = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      n2 += ggrad[idx * d + i] * ggrad[idx * d + i];
      partial_max = std::max(partial_max, std::abs(ggrad[idx * d + i]));
    }
    grad_norm_max = std::max(grad_norm_max, std::sqrt(n2));
  }

  double lip_g = 0.0, lip_grad = 0.0, lip_gv = 0.0;
  auto visit = [&](std::size_t i, std::size_t j) {
    std::span<const double> xi(&pts[i * d], d), xj(&pts[j * d], d);
    const double dist = distance(xi, xj);
    if (dist == 0.0) return;
    lip_g = std::max(lip_g, std::abs(gval[i] - gval[j]) / dist);
    lip_grad = std::max(lip_grad, distance({&ggrad[i * d], d}, {&ggrad[j * d], d}) / dist);
    lip_gv = std::max(lip_gv, distance({&gv[i * d], d}, {&gv[j * d], d}) / dist);
  };
  constexpr std::size_t kPairBudget = 1'000'000;
  if (n_points * (n_points - 1) / 2 <= kPairBudget) {
    for (std::size_t i = 0; i < n_points; ++i)
      for (std::size_t j = i + 1; j < n_points; ++j) visit(i, j);
  } else {
    // Grid neighbours along every axis, then all pairs of a strided subset.
    std::size_t axis_stride = 1;
    for (std::size_t a = 0; a < d; ++a) {
      for (std::size_t i = 0; i < n_points; ++i) {
        const std::size_t k = (i / axis_stride) % static_cast<std::size_t>(n_grid);
        if (k + 1 < static_cast<std::size_t>(n_grid)) visit(i, i + axis_stride);
      }
      axis_stride *= static_cast<std::size_t>(n_grid);
    }
    const std::size_t keep = static_cast<std::size_t>(std::sqrt(2.0 * kPairBudget));
    const std::size_t stride = (n_points + keep - 1) / keep;
    for (std::size_t i = 0; i < n_points; i += stride)
      for (std::size_t j = i + stride; j < n_points; j += stride) visit(i, j);
  }

  const double inf = std::numeric_limits<double>::infinity();
  const double lo = mon.lower_bound();
  const double hi = mon.upper_bound();
  const double slack = 1e-12;
  CriteriaAudit audit;
  audit.rows.push_back({"C1_lipschitz_g", lip_g, inf, std::isfinite(lip_g)});
  audit.rows.push_back({"C2_lipschitz_grad_g", lip_grad, inf, std::isfinite(lip_grad)});
  audit.rows.push_back({"C3_g_min", g_min, lo, g_min > 0.0 && g_min >= lo * (1.0 - slack)});
  audit.rows.push_back({"C3_g_max", g_max, hi, g_max <= hi * (1.0 + slack)});
  audit.rows.push_back({"C4_lipschitz_g_gradV", lip_gv, inf, std::isfinite(lip_gv)});
  audit.rows.push_back({"C5_grad_g_norm_max", grad_norm_max, inf, std::isfinite(grad_norm_max)});
  audit.rows.push_back({"C5_grad_g_partial_max", partial_max, inf, std::isfinite(partial_max)});
  audit.rows.push_back({"C6_second_partial_g_max", second_max, inf, std::isfinite(second_max)});
  if (pot.laplacian) audit.rows.push_back({"A3_laplacian_V_growth", lap_growth, inf, std::isfinite(lap_growth)});
  return audit;
}

}  // namespace adalang
