#include "adalang/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "adalang/errors.hpp"
#include "adalang/overdamped.hpp"
#include "adalang/quadrature.hpp"
#include "adalang/underdamped.hpp"

namespace adalang {

ReferenceMoments gibbs_reference(const PotentialModel& pot, double beta_inv, int k_max, double lo, double hi,
                                 double rel_tol) {
  if (k_max < 1) throw ValidationError("gibbs_reference: k_max must be >= 1");
  const GibbsDensity rho(pot, beta_inv, lo, hi, rel_tol);
  const double z = rho.z_shifted();

  ReferenceMoments ref;
  ref.beta_inv = beta_inv;
  ref.lo = lo;
  ref.hi = hi;
  ref.log_Z = std::log(z) - rho.beta() * rho.v_shift();
  ref.Z = std::exp(ref.log_Z);
  ref.abs_error = rho.z_abs_error() / z;

  const double width = hi - lo;
  const auto left = integrate([&](double x) { return rho.weight(x); }, lo - width, lo, rel_tol, 16);
  const auto right = integrate([&](double x) { return rho.weight(x); }, hi, hi + width, rel_tol, 16);
  ref.tail_mass = (left.value + right.value) / z;
  if (!(ref.tail_mass < 1e-12))
    throw NumericalError("gibbs_reference: mass outside [" + std::to_string(lo) + ", " + std::to_string(hi) +
                         "] is " + std::to_string(ref.tail_mass) + "; widen the support");

  for (int k = 1; k <= k_max; ++k) {
    const auto r = integrate([&](double x) { return std::pow(x, k) * rho.weight(x); }, lo, hi, rel_tol);
    ref.moments.push_back(r.value / z);
    ref.abs_error += r.abs_error / z;
  }
  return ref;
}

std::vector<double> density_moments(const std::function<double(double)>& weight, int k_max, double lo, double hi,
                                    double rel_tol) {
  const double z = integrate(weight, lo, hi, rel_tol).value;
  if (!(z > 0.0)) throw NumericalError("density_moments: density has no mass on the interval");
  std::vector<double> out;
  for (int k = 1; k <= k_max; ++k)
    out.push_back(integrate([&](double x) { return std::pow(x, k) * weight(x); }, lo, hi, rel_tol).value / z);
  return out;
}

// ---------------------------------------------------------------------------

std::int64_t Histogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0}) + below + above;
}

Histogram make_histogram(std::span<const double> samples, double lo, double hi, int bins) {
  if (bins < 1) throw ValidationError("histogram: bins must be >= 1");
  if (!(lo < hi)) throw ValidationError("histogram: requires lo < hi");
  Histogram h;
  h.lo = lo;
  h.hi = hi;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  const double scale = bins / (hi - lo);
  for (double s : samples) {
    if (!(s >= lo)) {
      ++h.below;  // NaN lands here as well
    } else if (s >= hi) {
      ++h.above;
    } else {
      auto i = static_cast<std::size_t>((s - lo) * scale);
      h.counts[std::min(i, h.counts.size() - 1)]++;
    }
  }
  return h;
}

std::vector<double> bin_probabilities(const std::function<double(double)>& density, double lo, double hi, int bins) {
  std::vector<double> out(static_cast<std::size_t>(bins));
  const double w = (hi - lo) / bins;
  for (int i = 0; i < bins; ++i) out[i] = integrate(density, lo + w * i, lo + w * (i + 1), 1e-10, 1).value;
  return out;
}

double histogram_l1(const Histogram& hist, std::span<const double> bin_probs) {
  if (hist.counts.size() < 50) throw ValidationError("histogram_l1: at least 50 bins required");
  if (bin_probs.size() != hist.counts.size()) throw ValidationError("histogram_l1: bin count mismatch");
  const std::int64_t n = hist.total();
  if (n == 0) throw ValidationError("histogram_l1: empty sample set");
  const double inv = 1.0 / static_cast<double>(n);
  double l1 = static_cast<double>(hist.below + hist.above) * inv;
  double ref_inside = 0.0;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    l1 += std::abs(static_cast<double>(hist.counts[i]) * inv - bin_probs[i]);
    ref_inside += bin_probs[i];
  }
  return l1 + std::max(0.0, 1.0 - ref_inside);
}

double histogram_l1(std::span<const double> samples, const std::function<double(double)>& density, int bins, double lo,
                    double hi) {
  if (samples.empty()) throw ValidationError("histogram_l1: empty sample set");
  if (bins < 50) throw ValidationError("histogram_l1: at least 50 bins required");
  return histogram_l1(make_histogram(samples, lo, hi, bins), bin_probabilities(density, lo, hi, bins));
}

// ---------------------------------------------------------------------------

bool is_underdamped_scheme(const std::string& name) {
  const auto& ids = all_scheme_ids();
  return std::any_of(ids.begin(), ids.end(), [&](SchemeId id) { return to_string(id) == name; });
}

bool is_known_scheme(const std::string& name) {
  return name == "EM" || name == "EM_RESCALED" || name == "EM_IP" || is_underdamped_scheme(name);
}

bool is_adaptive_scheme(const std::string& name) {
  if (name == "EM") return false;
  if (name == "EM_RESCALED" || name == "EM_IP") return true;
  return is_adaptive(parse_scheme_id(name));
}

StepperFactory make_stepper_factory(const std::string& scheme, const PotentialModel& pot, const MonitorFunction& mon,
                                    const SamplerConfig& cfg) {
  if (is_underdamped_scheme(scheme)) {
    SplitContext ctx;
    ctx.pot = &pot;
    ctx.mon = &mon;
    ctx.beta_inv = cfg.beta_inv;
    ctx.gamma = cfg.gamma;
    ctx.fp_tol = cfg.fp_tol;
    ctx.fp_max_iter = cfg.fp_max_iter;
    const SchemeId id = parse_scheme_id(scheme);
    (void)make_splitting_stepper(id, ctx, cfg.h);  // validate eagerly
    return [id, ctx, h = cfg.h]() { return make_splitting_stepper(id, ctx, h); };
  }
  const OverdampedScheme s = parse_overdamped_scheme(scheme);
  return [s, &pot, &mon, h = cfg.h, b = cfg.beta_inv]() { return make_overdamped_stepper(s, pot, mon, h, b); };
}

// ---------------------------------------------------------------------------

namespace {

struct LineFit {
  double slope = 0.0, intercept = 0.0, r2 = 0.0, slope_se = 0.0;
};

LineFit least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  const double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  const double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
    syy += (y[i] - my) * (y[i] - my);
  }
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  const double sse = std::max(0.0, syy - f.slope * sxy);
  f.r2 = syy > 0.0 ? 1.0 - sse / syy : 1.0;
  f.slope_se = x.size() > 2 ? std::sqrt(sse / (n - 2.0) / sxx) : 0.0;
  return f;
}

}  // namespace

SlopeFit fit_slope(std::span<const SweepRow> rows) {
  SlopeFit fit;
  if (!rows.empty()) {
    fit.scheme = rows.front().scheme;
    fit.k = rows.front().k;
  }
  std::vector<SweepRow> ok;
  for (const auto& r : rows)
    if (std::isfinite(r.error) && r.error > 3.0 * r.stderr_ && r.error > 0.0 && r.h > 0.0) ok.push_back(r);
  std::sort(ok.begin(), ok.end(), [](const SweepRow& a, const SweepRow& b) { return a.h < b.h; });
  if (ok.size() < 2) return fit;

  auto fit_range = [&](std::size_t n) {
    std::vector<double> x, y;
    for (std::size_t i = 0; i < n; ++i) {
      x.push_back(std::log(ok[i].h));
      y.push_back(std::log(ok[i].error));
    }
    return least_squares(x, y);
  };
  std::size_t n = ok.size();
  LineFit best = fit_range(n);
  while (n > 2) {
    const LineFit trial = fit_range(n - 1);
    if (trial.r2 - best.r2 > 0.05) {
      best = trial;
      --n;
    } else {
      break;
    }
  }
  fit.determinate = true;
  fit.slope = best.slope;
  fit.intercept = best.intercept;
  fit.slope_stderr = best.slope_se;
  fit.r2 = best.r2;
  fit.n_points = static_cast<int>(n);
  fit.h_min = ok.front().h;
  fit.h_max = ok[n - 1].h;
  return fit;
}

const SlopeFit* ConvergenceTable::fit(const std::string& scheme, int k) const {
  for (const auto& f : fits)
    if (f.scheme == scheme && f.k == k) return &f;
  return nullptr;
}

bool ConvergenceTable::any_determinate() const {
  return std::any_of(fits.begin(), fits.end(), [](const SlopeFit& f) { return f.determinate; });
}

ConvergenceTable weak_error_sweep(const std::vector<std::string>& schemes, const std::vector<double>& hs,
                                  const ReferenceMoments& ref, const EnsembleRunner& run) {
  if (schemes.empty()) throw ValidationError("sweep: scheme list is empty");
  if (hs.empty()) throw ValidationError("sweep: h list is empty");
  for (double h : hs)
    if (!(h > 0.0)) throw ValidationError("sweep: every h must be > 0");
  ConvergenceTable table;
  const int k_max = static_cast<int>(ref.moments.size());
  for (const auto& scheme : schemes) {
    std::vector<std::vector<SweepRow>> by_k(static_cast<std::size_t>(k_max));
    for (double h : hs) {
      const EnsembleReport rep = run(scheme, h);
      for (int k = 1; k <= k_max && k <= static_cast<int>(rep.moments.size()); ++k) {
        SweepRow row;
        row.scheme = scheme;
        row.h = h;
        row.k = k;
        row.estimate = rep.moments[k - 1];
        row.error = std::abs(row.estimate - ref.moments[k - 1]);
        row.stderr_ = rep.moment_stderr[k - 1];
        row.mean_monitor = rep.mean_monitor;
        row.escaped = rep.escaped;
        table.rows.push_back(row);
        by_k[k - 1].push_back(row);
      }
    }
    for (int k = 1; k <= k_max; ++k) {
      SlopeFit f = fit_slope(by_k[k - 1]);
      f.scheme = scheme;
      f.k = k;
      table.fits.push_back(f);
    }
  }
  return table;
}

EnsembleRunner make_runner(const PotentialModel& pot, const MonitorFunction& mon, const SamplerConfig& cfg,
                           InitialSampler init, EnsembleOptions opts) {
  return [&pot, &mon, cfg, init = std::move(init), opts](const std::string& scheme, double h) {
    SamplerConfig c = cfg;
    c.h = h;
    return run_ensemble(make_stepper_factory(scheme, pot, mon, c), c, init, opts);
  };
}

// ---------------------------------------------------------------------------

std::vector<EscapeRow> escape_rate(const std::vector<std::string>& schemes, const std::vector<double>& hs,
                                   const EnsembleRunner& run) {
  std::vector<EscapeRow> rows;
  double g_min = std::numeric_limits<double>::infinity();
  auto record = [&](const std::string& scheme, double h, double h_eff) {
    const EnsembleReport rep = run(scheme, h_eff);
    EscapeRow row{scheme, h, h_eff, static_cast<double>(rep.escaped) / static_cast<double>(rep.n_traj),
                  rep.mean_monitor};
    rows.push_back(row);
    return row;
  };
  for (const auto& s : schemes) {
    if (!is_adaptive_scheme(s)) continue;
    for (double h : hs) {
      const EscapeRow row = record(s, h, h);
      if (std::isfinite(row.mean_monitor)) g_min = std::min(g_min, row.mean_monitor);
    }
  }
  const double factor = std::isfinite(g_min) ? g_min : 1.0;
  for (const auto& s : schemes) {
    if (is_adaptive_scheme(s)) continue;
    for (double h : hs) record(s, h, h * factor);
  }
  return rows;
}

// ---------------------------------------------------------------------------

const char* classify_channel(double x, double y, const ChannelSpec& spec) {
  const double bu = y + x * x - 4.0;
  const double bl = y - x * x + 4.0;
  const double fu = bu * bu, fl = bl * bl;
  if (fu < spec.upper_threshold && fu < fl) return "upper";
  if (fl < spec.lower_threshold && fl < fu) return "lower";
  return "";
}

Occupancy run_channel_occupancy(const std::string& scheme, const PotentialModel& pot, const MonitorFunction& mon,
                                const SamplerConfig& cfg, const InitialSampler& init, std::int64_t stride,
                                const ChannelSpec& spec, std::vector<TrajectoryPoint>* path) {
  cfg.validate();
  if (pot.dim != 2) throw ValidationError("channel occupancy: planar potential required");
  if (stride < 1) throw ValidationError("channel occupancy: stride must be >= 1");
  const StepperFactory factory = make_stepper_factory(scheme, pot, mon, cfg);
  Occupancy occ;
  double g_sum = 0.0;
  std::int64_t g_steps = 0;
  const std::int64_t total = cfg.burn_in_steps + cfg.n_steps();
  for (std::int64_t j = 0; j < cfg.n_traj; ++j) {
    RngStream rng = derive_stream(cfg.seed, j);
    PhaseState s = init(rng);
    auto stepper = factory();
    if (path) path->push_back({j, 0, s.x[0], s.x[1]});
    for (std::int64_t n = 1; n <= total; ++n) {
      const StepInfo info = stepper->step(s, rng);
      g_sum += info.monitor;
      ++g_steps;
      if (!info.converged || !within_bounds(s)) {
        ++occ.escaped;
        break;
      }
      if (n % stride != 0) continue;
      if (path) path->push_back({j, n, s.x[0], s.x[1]});
      if (n <= cfg.burn_in_steps) continue;
      ++occ.samples;
      const std::string_view c = classify_channel(s.x[0], s.x[1], spec);
      if (c == "upper") ++occ.upper;
      if (c == "lower") ++occ.lower;
    }
  }
  occ.mean_monitor = g_steps ? g_sum / static_cast<double>(g_steps) : std::nan("");
  return occ;
}

}  // namespace adalang
