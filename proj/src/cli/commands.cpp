#include <fmt/core.h>
#include <fmt/os.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <nlohmann/json.hpp>
#include <numeric>
#include <sstream>

#include "adalang/analysis.hpp"
#include "adalang/cli.hpp"
#include "adalang/errors.hpp"
#include "adalang/overdamped.hpp"
#include "adalang/quadrature.hpp"
#include "adalang/underdamped.hpp"

namespace adalang::cli {

namespace fs = std::filesystem;

namespace {

// Minimal CSV sink: header on open, doubles at 17 significant digits.
class Csv {
 public:
  Csv(const fs::path& path, std::initializer_list<const char*> header) : out_(path) {
    if (!out_) throw ValidationError("output: cannot write '" + path.string() + "'");
    bool first = true;
    for (const char* h : header) {
      out_ << (first ? "" : ",") << h;
      first = false;
    }
    out_ << '\n';
  }

  template <class... Ts>
  void row(const Ts&... vals) {
    bool first = true;
    ((out_ << (first ? "" : ",") << cell(vals), first = false), ...);
    out_ << '\n';
  }

 private:
  static std::string cell(double v) { return fmt::format("{:.17g}", v); }
  static std::string cell(const std::string& v) { return v; }
  static std::string cell(const char* v) { return v; }
  static std::string cell(bool v) { return v ? "pass" : "fail"; }
  template <class I, class = std::enable_if_t<std::is_integral_v<I>>>
  static std::string cell(I v) { return std::to_string(v); }

  std::ofstream out_;
};

fs::path out_dir(const ExperimentConfig& cfg) {
  fs::path p(cfg.out);
  fs::create_directories(p);
  return p;
}

int dimension_of(const PotentialSpec& p) {
  if (p.id == "harmonic") return p.dim;
  if (p.id == "two_pathway") return 2;
  return 1;
}

InitialSampler make_init(const ExperimentConfig& cfg, const PotentialModel& pot, bool momentum) {
  std::vector<double> mean = cfg.init.mean.empty() ? pot.center : cfg.init.mean;
  const double sd = cfg.init.std < 0.0 ? std::sqrt(cfg.sampler.beta_inv) : cfg.init.std;
  return gaussian_initial(std::move(mean), sd, momentum, cfg.sampler.beta_inv);
}

bool needs_momentum(const std::vector<std::string>& schemes) {
  return std::any_of(schemes.begin(), schemes.end(), [](const std::string& s) { return is_underdamped_scheme(s); });
}

std::string potential_key(const PotentialSpec& p) {
  std::ostringstream os;
  os.precision(17);
  os << p.id;
  if (p.id == "modified_harmonic") os << ':' << p.mh.a << ':' << p.mh.b << ':' << p.mh.c << ':' << p.mh.x0;
  if (p.id == "harmonic") os << ':' << p.k << ':' << p.dim;
  if (p.id == "bayes") {
    os << ':' << p.K << ':' << p.a;
    for (double y : bayes_data(p)) os << ':' << y;
  }
  if (p.id == "two_pathway") os << ':' << p.tp.k1 << ':' << p.tp.k2 << ':' << p.tp.k3 << ':' << p.tp.k4;
  return os.str();
}

// Quadrature references are cached in <out>/reference_cache.json keyed by
// potential, temperature, support and moment count.
ReferenceMoments cached_reference(const ExperimentConfig& cfg, const PotentialModel& pot) {
  const fs::path file = out_dir(cfg) / "reference_cache.json";
  std::ostringstream key;
  key.precision(17);
  key << potential_key(cfg.potential) << "|beta_inv=" << cfg.sampler.beta_inv << "|support=" << cfg.run.support_lo
      << ',' << cfg.run.support_hi << "|k_max=" << cfg.run.k_max;
  nlohmann::json cache = nlohmann::json::object();
  if (fs::exists(file)) {
    std::ifstream in(file);
    cache = nlohmann::json::parse(in, nullptr, false);
    if (cache.is_discarded() || !cache.is_object()) cache = nlohmann::json::object();
  }
  if (cache.contains(key.str())) {
    const auto& e = cache[key.str()];
    ReferenceMoments ref;
    ref.beta_inv = cfg.sampler.beta_inv;
    ref.lo = cfg.run.support_lo;
    ref.hi = cfg.run.support_hi;
    ref.Z = e.at("Z");
    ref.log_Z = e.at("log_Z");
    ref.tail_mass = e.at("tail_mass");
    ref.abs_error = e.at("abs_error");
    ref.moments = e.at("moments").get<std::vector<double>>();
    return ref;
  }
  const ReferenceMoments ref =
      gibbs_reference(pot, cfg.sampler.beta_inv, cfg.run.k_max, cfg.run.support_lo, cfg.run.support_hi);
  cache[key.str()] = {{"Z", ref.Z},
                      {"log_Z", ref.log_Z},
                      {"tail_mass", ref.tail_mass},
                      {"abs_error", ref.abs_error},
                      {"moments", ref.moments}};
  std::ofstream(file) << cache.dump(2) << '\n';
  return ref;
}

EnsembleOptions ensemble_options(const ExperimentConfig& cfg) {
  EnsembleOptions o;
  o.k_max = cfg.run.k_max;
  o.threads = cfg.run.threads;
  return o;
}

}  // namespace

PotentialModel build_potential(const PotentialSpec& spec) {
  if (spec.id == "modified_harmonic") return modified_harmonic(spec.mh);
  if (spec.id == "harmonic") return harmonic(spec.k, static_cast<std::size_t>(spec.dim));
  if (spec.id == "bayes") return bayes_posterior(bayes_data(spec), spec.K, spec.a);
  if (spec.id == "two_pathway") return two_pathway(spec.tp);
  throw ValidationError("potential.id: unknown potential '" + spec.id + "'");
}

std::vector<double> bayes_data(const PotentialSpec& spec) {
  if (!spec.y.empty()) return spec.y;
  if (spec.data_file.empty()) throw ValidationError("potential: bayes needs 'y' or 'data_file'");
  std::ifstream in(spec.data_file);
  if (!in) throw ValidationError("potential.data_file: cannot open '" + spec.data_file + "'");
  std::string line;
  std::getline(in, line);  // header
  std::vector<double> y;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    try {
      y.push_back(std::stod(line));
    } catch (const std::exception&) {
      throw ValidationError("potential.data_file: bad value '" + line + "'");
    }
  }
  if (y.empty()) throw ValidationError("potential.data_file: no data rows");
  return y;
}

MonitorFunction build_monitor(const MonitorSpec& spec, const PotentialSpec& pot) {
  const int dim = dimension_of(pot);
  const ModifiedHarmonicParams mh = spec.mh.value_or(pot.mh);
  if (spec.id == "constant") return constant_monitor(spec.value, static_cast<std::size_t>(dim), spec.params);
  if (spec.id == "grad_norm") return monitor_grad_norm(mh, spec.params);
  if (spec.id == "omega_sq") return monitor_omega_sq(mh, spec.params);
  if (spec.id == "omega") return monitor_omega(mh, spec.params);
  if (spec.id == "channel") return monitor_2d_channel(spec.params, spec.orientation);
  if (spec.id == "bayes") {
    const auto y = bayes_data(pot);
    const double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    return monitor_bayes(mean, pot.a, spec.params);
  }
  throw ValidationError("monitor.id: unknown monitor '" + spec.id + "'");
}

int cmd_sample(const ExperimentConfig& cfg) {
  const PotentialModel pot = build_potential(cfg.potential);
  const MonitorFunction mon = build_monitor(cfg.monitor, cfg.potential);
  const std::string& scheme = cfg.schemes.front();
  EnsembleOptions opts = ensemble_options(cfg);
  opts.keep_final_states = true;
  const EnsembleReport rep = run_ensemble(make_stepper_factory(scheme, pot, mon, cfg.sampler), cfg.sampler,
                                          make_init(cfg, pot, is_underdamped_scheme(scheme)), opts);

  std::vector<double> samples;
  for (const auto& s : rep.final_states)
    if (!s.escaped) samples.push_back(s.x[0]);
  const double lo = cfg.run.support_lo, hi = cfg.run.support_hi;
  const Histogram hist = make_histogram(samples, lo, hi, cfg.run.bins);
  std::vector<double> probs(hist.counts.size(), std::nan(""));
  double l1 = std::nan("");
  if (pot.dim == 1) {
    const GibbsDensity rho(pot, cfg.sampler.beta_inv, lo, hi);
    probs = bin_probabilities([&](double x) { return rho(x); }, lo, hi, cfg.run.bins);
    if (hist.total() > 0) l1 = histogram_l1(hist, probs);
  }

  const fs::path dir = out_dir(cfg);
  {
    Csv csv(dir / "histogram.csv", {"bin_left", "bin_right", "count", "ref_density"});
    for (std::size_t i = 0; i < hist.counts.size(); ++i)
      csv.row(hist.bin_left(i), hist.bin_left(i + 1), hist.counts[i], probs[i] / hist.bin_width());
  }
  {
    std::ofstream out(dir / "report.csv");
    out << "scheme,h,n_traj,escaped,mean_monitor,fp_iters_mean,fp_iters_max,fp_last_diff_max,wall_steps,"
           "samples_per_traj,histogram_l1";
    for (int k = 1; k <= cfg.run.k_max; ++k) out << ",moment_" << k << ",stderr_" << k;
    out << '\n';
    out << fmt::format("{},{:.17g},{},{},{:.17g},{:.17g},{},{:.17g},{},{},{:.17g}", scheme, cfg.sampler.h, rep.n_traj,
                       rep.escaped, rep.mean_monitor, rep.fp_iters_mean, rep.fp_iters_max, rep.fp_last_diff_max,
                       rep.wall_steps, rep.samples_per_traj, l1);
    for (int k = 0; k < cfg.run.k_max; ++k)
      out << fmt::format(",{:.17g},{:.17g}", rep.moments[k], rep.moment_stderr[k]);
    out << '\n';
  }
  std::cout << fmt::format("{}: mean_monitor={:.6g} escaped={} l1={:.6g}\n", scheme, rep.mean_monitor, rep.escaped,
                           l1);
  return kOk;
}

int cmd_sweep(const ExperimentConfig& cfg) {
  const PotentialModel pot = build_potential(cfg.potential);
  const MonitorFunction mon = build_monitor(cfg.monitor, cfg.potential);
  if (pot.dim != 1) throw ValidationError("potential.id: sweeps need a one-dimensional potential");
  const ReferenceMoments ref = cached_reference(cfg, pot);
  const EnsembleRunner run = make_runner(pot, mon, cfg.sampler, make_init(cfg, pot, needs_momentum(cfg.schemes)),
                                         ensemble_options(cfg));
  const ConvergenceTable table = weak_error_sweep(cfg.schemes, cfg.h_list, ref, run);

  const fs::path dir = out_dir(cfg);
  {
    Csv csv(dir / "convergence.csv", {"scheme", "h", "k", "error", "stderr"});
    for (const auto& r : table.rows) csv.row(r.scheme, r.h, r.k, r.error, r.stderr_);
  }
  {
    Csv csv(dir / "slopes.csv",
            {"scheme", "k", "determinate", "slope", "slope_stderr", "intercept", "r2", "n_points", "h_min", "h_max"});
    for (const auto& f : table.fits)
      csv.row(f.scheme, f.k, f.determinate ? "yes" : "no", f.slope, f.slope_stderr, f.intercept, f.r2, f.n_points,
              f.h_min, f.h_max);
  }
  bool all_fit = true;
  for (const auto& s : cfg.schemes) {
    const SlopeFit* f = table.fit(s, cfg.run.slope_k);
    if (f && f->determinate)
      std::cout << fmt::format("{}: slope(k={})={:.4f} over {} points\n", s, f->k, f->slope, f->n_points);
    else
      std::cout << fmt::format("{}: slope(k={}) indeterminate\n", s, cfg.run.slope_k);
    all_fit = all_fit && f && f->determinate;
  }
  return all_fit ? kOk : kNoFit;
}

int cmd_escape(const ExperimentConfig& cfg) {
  const PotentialModel pot = build_potential(cfg.potential);
  const MonitorFunction mon = build_monitor(cfg.monitor, cfg.potential);
  const EnsembleRunner run = make_runner(pot, mon, cfg.sampler, make_init(cfg, pot, needs_momentum(cfg.schemes)),
                                         ensemble_options(cfg));
  const auto rows = escape_rate(cfg.schemes, cfg.h_list, run);
  const fs::path dir = out_dir(cfg);
  Csv csv(dir / "escape.csv", {"scheme", "h", "fraction"});
  Csv detail(dir / "escape_matched.csv", {"scheme", "h", "h_effective", "fraction", "mean_monitor"});
  for (const auto& r : rows) {
    csv.row(r.scheme, r.h, r.fraction);
    detail.row(r.scheme, r.h, r.h_effective, r.fraction, r.mean_monitor);
    std::cout << fmt::format("{} h={:.4g} (used {:.4g}): escaped {:.4g}\n", r.scheme, r.h, r.h_effective, r.fraction);
  }
  return kOk;
}

int cmd_two_pathway(const ExperimentConfig& cfg) {
  const PotentialModel pot = build_potential(cfg.potential);
  const MonitorFunction mon = build_monitor(cfg.monitor, cfg.potential);
  if (pot.dim != 2) throw ValidationError("potential.id: two-pathway needs the two_pathway potential");
  const std::string adaptive = cfg.schemes.front();
  const std::string fixed = cfg.schemes.size() > 1 ? cfg.schemes[1] : "BAOAB_FIXED";
  if (!is_underdamped_scheme(adaptive) || !is_underdamped_scheme(fixed))
    throw ValidationError("experiment.schemes: two-pathway needs splitting schemes");
  const InitialSampler init = make_init(cfg, pot, true);
  const ChannelSpec spec{cfg.run.upper_threshold, cfg.run.lower_threshold};

  struct Run {
    std::string name, scheme;
    double h;
    Occupancy occ;
    std::vector<TrajectoryPoint> path;
  };
  std::vector<Run> runs;
  auto execute = [&](std::string name, const std::string& scheme, double h, double t_final) {
    SamplerConfig sc = cfg.sampler;
    sc.h = h;
    sc.t_final = t_final;
    Run r{std::move(name), scheme, h, {}, {}};
    r.occ = run_channel_occupancy(scheme, pot, mon, sc, init, cfg.run.stride, spec, &r.path);
    std::cout << fmt::format("{} {} h={:.5g}: upper={:.4g} lower={:.4g} mean_monitor={:.4g} escaped={}\n", r.name,
                             scheme, h, r.occ.upper_fraction(), r.occ.lower_fraction(), r.occ.mean_monitor,
                             r.occ.escaped);
    runs.push_back(std::move(r));
  };
  execute("adaptive", adaptive, cfg.sampler.h, cfg.sampler.t_final);
  const double g_bar = is_adaptive(parse_scheme_id(adaptive)) ? runs.front().occ.mean_monitor : 1.0;
  execute("matched", fixed, cfg.sampler.h * g_bar, cfg.sampler.t_final);
  execute("small_step", fixed, cfg.run.small_h,
          cfg.run.small_t_final > 0.0 ? cfg.run.small_t_final : cfg.sampler.t_final);

  const fs::path dir = out_dir(cfg);
  Csv traj(dir / "trajectory.csv", {"run", "traj", "step", "x", "y"});
  Csv occ(dir / "occupancy.csv",
          {"run", "scheme", "h", "samples", "upper_fraction", "lower_fraction", "mean_monitor", "escaped"});
  for (const auto& r : runs) {
    for (const auto& p : r.path) traj.row(r.name, p.traj, p.step, p.x, p.y);
    occ.row(r.name, r.scheme, r.h, r.occ.samples, r.occ.upper_fraction(), r.occ.lower_fraction(), r.occ.mean_monitor,
            r.occ.escaped);
  }
  return kOk;
}

int cmd_bayes_gen(const ExperimentConfig& cfg) {
  if (cfg.run.n < 1) throw ValidationError("run.n: must be >= 1");
  RngStream rng = derive_stream(cfg.sampler.seed, 0);
  Csv csv(out_dir(cfg) / "data.csv", {"y"});
  for (std::int64_t i = 0; i < cfg.run.n; ++i) csv.row(cfg.run.mu_true + rng.normal());
  return kOk;
}

int cmd_audit(const ExperimentConfig& cfg) {
  const PotentialModel pot = build_potential(cfg.potential);
  const MonitorFunction mon = build_monitor(cfg.monitor, cfg.potential);
  if (cfg.run.audit_lo.size() != pot.dim)
    throw ValidationError("run.audit_lo: expected " + std::to_string(pot.dim) + " values");
  CriteriaAudit audit = audit_criteria(mon, pot, Box{cfg.run.audit_lo, cfg.run.audit_hi}, cfg.run.n_grid);

  const fs::path dir = out_dir(cfg);
  if (pot.dim == 1) {
    const double lo = cfg.run.audit_lo[0], hi = cfg.run.audit_hi[0];
    const AdjointAudit adj = adjoint_stationarity_audit(pot, mon, cfg.sampler.beta_inv, lo, hi, cfg.run.spacing);
    Csv csv(dir / "adjoint.csv", {"x", "residual_ip", "residual_naive"});
    for (std::size_t i = 0; i < adj.x.size(); ++i) csv.row(adj.x[i], adj.residual_ip[i], adj.residual_naive[i]);

    // Uncorrected residual against the closed form -beta V' rho, where that is not negligible.
    const double beta = 1.0 / cfg.sampler.beta_inv;
    double scale = 0.0;
    for (std::size_t i = 0; i < adj.x.size(); ++i) scale = std::max(scale, std::abs(beta * pot.dV(adj.x[i]) * adj.rho[i]));
    double mismatch = 0.0;
    for (std::size_t i = 0; i < adj.x.size(); ++i) {
      const double target = -beta * pot.dV(adj.x[i]) * adj.rho[i];
      if (std::abs(target) > 1e-3 * scale)
        mismatch = std::max(mismatch, std::abs(adj.residual_naive[i] - target) / std::abs(target));
    }
    audit.rows.push_back({"adjoint_ip_refinement_ratio", adj.refinement_ratio, 4.0,
                          adj.refinement_ratio >= 3.0 && adj.refinement_ratio <= 5.0});
    audit.rows.push_back({"adjoint_ip_sup", adj.sup_ip, 1e-6, adj.sup_ip < 1e-6});
    audit.rows.push_back({"adjoint_naive_vs_closed_form", mismatch, 0.01, mismatch <= 0.01});
  }
  Csv csv(dir / "audit.csv", {"criterion", "estimate", "bound", "pass"});
  for (const auto& r : audit.rows) {
    csv.row(r.criterion, r.estimate, r.bound, r.pass);
    std::cout << fmt::format("{:<32} {:>14.6g} {:>10.3g} {}\n", r.criterion, r.estimate, r.bound,
                             r.pass ? "pass" : "FAIL");
  }
  return audit.passed() ? kOk : kCriterion;
}

int run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.experiment) {
    case Experiment::sample: return cmd_sample(cfg);
    case Experiment::sweep: return cmd_sweep(cfg);
    case Experiment::escape: return cmd_escape(cfg);
    case Experiment::audit: return cmd_audit(cfg);
    case Experiment::two_pathway: return cmd_two_pathway(cfg);
    case Experiment::bayes_gen: return cmd_bayes_gen(cfg);
  }
  return kValidation;
}

}  // namespace adalang::cli
