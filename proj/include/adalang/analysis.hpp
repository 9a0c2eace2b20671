#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "adalang/core.hpp"
#include "adalang/monitor.hpp"
#include "adalang/potentials.hpp"

namespace adalang {

// ---------------------------------------------------------------------------
// Quadrature references

struct ReferenceMoments {
  double beta_inv = 1.0;
  double Z = 0.0;       // integral of exp(-beta V); may underflow, see log_Z
  double log_Z = 0.0;
  std::vector<double> moments;  // index k-1 holds E[x^k]
  double lo = 0.0, hi = 0.0;
  double tail_mass = 0.0;       // relative mass outside [lo, hi]
  double abs_error = 0.0;       // summed quadrature error estimate (relative to Z)
};

/// Z and moments 1..k_max of exp(-beta V) / Z on [lo, hi] by adaptive
/// quadrature. Throws NumericalError if more than 1e-12 of the mass lies
/// outside the support.
[[nodiscard]] ReferenceMoments gibbs_reference(const PotentialModel& pot, double beta_inv, int k_max, double lo,
                                               double hi, double rel_tol = 1e-12);

/// Moments 1..k_max of an arbitrary (unnormalized) 1-D density on [lo, hi].
[[nodiscard]] std::vector<double> density_moments(const std::function<double(double)>& weight, int k_max, double lo,
                                                  double hi, double rel_tol = 1e-12);

// ---------------------------------------------------------------------------
// Histograms

struct Histogram {
  double lo = 0.0, hi = 1.0;
  std::vector<std::int64_t> counts;
  std::int64_t below = 0, above = 0;
  [[nodiscard]] std::int64_t total() const;
  [[nodiscard]] double bin_width() const { return (hi - lo) / static_cast<double>(counts.size()); }
  [[nodiscard]] double bin_left(std::size_t i) const { return lo + bin_width() * static_cast<double>(i); }
};

[[nodiscard]] Histogram make_histogram(std::span<const double> samples, double lo, double hi, int bins);

/// Integral of a density over each bin.
[[nodiscard]] std::vector<double> bin_probabilities(const std::function<double(double)>& density, double lo,
                                                    double hi, int bins);

/// sum_i |count_i / n - P_i| plus the sample and reference mass outside the
/// bins. Lies in [0, 2]. Requires bins >= 50 and a nonempty histogram.
[[nodiscard]] double histogram_l1(const Histogram& hist, std::span<const double> bin_probs);
[[nodiscard]] double histogram_l1(std::span<const double> samples, const std::function<double(double)>& density,
                                  int bins, double lo, double hi);

// ---------------------------------------------------------------------------
// Scheme registry

/// Names accepted: EM, EM_RESCALED, EM_IP and every SchemeId name.
[[nodiscard]] bool is_known_scheme(const std::string& name);
[[nodiscard]] bool is_underdamped_scheme(const std::string& name);
[[nodiscard]] bool is_adaptive_scheme(const std::string& name);

/// Factory for run_ensemble. pot and mon must outlive every stepper made.
[[nodiscard]] StepperFactory make_stepper_factory(const std::string& scheme, const PotentialModel& pot,
                                                  const MonitorFunction& mon, const SamplerConfig& cfg);

// ---------------------------------------------------------------------------
// Weak error sweeps

struct SweepRow {
  std::string scheme;
  double h = 0.0;
  int k = 1;
  double estimate = 0.0;
  double error = 0.0;   // |estimate - reference|
  double stderr_ = 0.0;
  double mean_monitor = 0.0;
  std::int64_t escaped = 0;
};

struct SlopeFit {
  std::string scheme;
  int k = 1;
  bool determinate = false;
  double slope = 0.0;
  double intercept = 0.0;
  double slope_stderr = 0.0;
  double r2 = 0.0;
  int n_points = 0;
  double h_min = 0.0, h_max = 0.0;
};

/// Least-squares fit of log(error) on log(h). Only points with
/// error > 3 stderr are admissible; then the largest h is dropped while doing
/// so raises R^2 by more than 0.05 (keeping at least two points). Fewer than
/// two admissible points gives an indeterminate fit.
[[nodiscard]] SlopeFit fit_slope(std::span<const SweepRow> rows);

struct ConvergenceTable {
  std::vector<SweepRow> rows;
  std::vector<SlopeFit> fits;  // one per (scheme, k)
  [[nodiscard]] const SlopeFit* fit(const std::string& scheme, int k) const;
  [[nodiscard]] bool any_determinate() const;
};

using EnsembleRunner = std::function<EnsembleReport(const std::string& scheme, double h)>;

/// Runs every (scheme, h) pair and fits slopes for each moment order.
[[nodiscard]] ConvergenceTable weak_error_sweep(const std::vector<std::string>& schemes, const std::vector<double>& hs,
                                                const ReferenceMoments& ref, const EnsembleRunner& run);

/// Convenience runner: builds the stepper with make_stepper_factory and
/// runs cfg (with h replaced) through run_ensemble.
[[nodiscard]] EnsembleRunner make_runner(const PotentialModel& pot, const MonitorFunction& mon,
                                         const SamplerConfig& cfg, InitialSampler init, EnsembleOptions opts);

// ---------------------------------------------------------------------------
// Escape statistics

struct EscapeRow {
  std::string scheme;
  double h = 0.0;            // nominal sweep value
  double h_effective = 0.0;  // step actually used
  double fraction = 0.0;
  double mean_monitor = 0.0;
};

/// Adaptive schemes run at each nominal h first. Fixed-step schemes then run
/// at h times the smallest mean monitor observed over all adaptive runs
/// (times 1 if there are none).
[[nodiscard]] std::vector<EscapeRow> escape_rate(const std::vector<std::string>& schemes,
                                                 const std::vector<double>& hs, const EnsembleRunner& run);

// ---------------------------------------------------------------------------
// Two-pathway channel occupancy

struct ChannelSpec {
  double upper_threshold = 0.01;  // on f_upper = (y + x^2 - 4)^2
  double lower_threshold = 1.0;   // on f_lower = (y - x^2 + 4)^2
};

/// "upper", "lower" or "" for a planar point.
[[nodiscard]] const char* classify_channel(double x, double y, const ChannelSpec& spec);

struct Occupancy {
  std::int64_t samples = 0;
  std::int64_t upper = 0;
  std::int64_t lower = 0;
  double mean_monitor = 0.0;
  std::int64_t escaped = 0;
  [[nodiscard]] double upper_fraction() const { return samples ? static_cast<double>(upper) / samples : 0.0; }
  [[nodiscard]] double lower_fraction() const { return samples ? static_cast<double>(lower) / samples : 0.0; }
};

struct TrajectoryPoint {
  std::int64_t traj = 0;
  std::int64_t step = 0;
  double x = 0.0, y = 0.0;
};

/// Runs cfg.n_traj planar trajectories of a splitting scheme, sampling every
/// `stride` steps after burn-in for occupancy and (if `path` is non-null) the
/// trajectory dump. An escaped trajectory stops contributing at its escape.
[[nodiscard]] Occupancy run_channel_occupancy(const std::string& scheme, const PotentialModel& pot,
                                              const MonitorFunction& mon, const SamplerConfig& cfg,
                                              const InitialSampler& init, std::int64_t stride,
                                              const ChannelSpec& spec, std::vector<TrajectoryPoint>* path);

}  // namespace adalang
