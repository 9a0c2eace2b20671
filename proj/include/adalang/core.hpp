#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "adalang/rng.hpp"

namespace adalang {

/// Position and (for underdamped runs) momentum of one trajectory.
struct PhaseState {
  std::vector<double> x;
  std::vector<double> p;  // empty in overdamped runs
  bool escaped = false;

  PhaseState() = default;
  explicit PhaseState(std::vector<double> position, std::vector<double> momentum = {});

  [[nodiscard]] std::size_t dim() const { return x.size(); }
  [[nodiscard]] bool has_momentum() const { return !p.empty(); }

  bool operator==(const PhaseState&) const = default;
};

/// A coordinate beyond this magnitude marks the trajectory as escaped.
inline constexpr double kEscapeBound = 1.0e3;

/// True when every entry is finite and |x|_inf <= kEscapeBound.
[[nodiscard]] bool within_bounds(const PhaseState& s);

struct SamplerConfig {
  double h = 0.01;
  double beta_inv = 1.0;
  double gamma = 0.1;
  double t_final = 1.0;
  std::int64_t burn_in_steps = 0;
  std::int64_t n_traj = 1;
  std::uint64_t seed = 1;
  double fp_tol = 1e-12;
  int fp_max_iter = 100;
  // 0: observables from the final state only. k > 0: additionally average
  // every k-th post-burn-in state along each trajectory.
  std::int64_t sample_stride = 0;

  /// Throws ValidationError naming the offending field.
  void validate() const;
  /// ceil(t_final / h), robust to representation error in the quotient.
  [[nodiscard]] std::int64_t n_steps() const;
};

/// Per-step diagnostics returned by a stepper.
struct StepInfo {
  double monitor = 1.0;       // g at the state the step started from
  int fp_iter_sum = 0;        // fixed-point iterations summed over A sub-steps
  int fp_solves = 0;          // number of implicit A sub-steps
  int fp_iter_max = 0;
  double fp_last_diff = 0.0;  // largest final iterate difference
  bool converged = true;
};

/// One-step map for a single trajectory. Instances are thread-confined and
/// may cache force and monitor evaluations between calls.
class Stepper {
 public:
  virtual ~Stepper() = default;
  virtual StepInfo step(PhaseState& state, RngStream& rng) = 0;
};

using StepperFactory = std::function<std::unique_ptr<Stepper>()>;
using InitialSampler = std::function<PhaseState(RngStream&)>;

struct EnsembleReport {
  std::vector<double> moments;         // index k-1 holds E[x_0^k]
  std::vector<double> moment_stderr;   // across-trajectory standard errors
  double mean_monitor = 0.0;
  std::int64_t escaped = 0;
  std::int64_t n_traj = 0;
  double fp_iters_mean = 0.0;
  std::int64_t fp_iters_max = 0;
  double fp_last_diff_max = 0.0;
  std::int64_t wall_steps = 0;         // stepper applications per trajectory
  std::int64_t samples_per_traj = 0;
  std::vector<PhaseState> final_states;  // filled only when requested

  bool operator==(const EnsembleReport&) const = default;
};

struct EnsembleOptions {
  int k_max = 4;
  unsigned threads = 1;
  bool keep_final_states = false;
};

/// Runs cfg.n_traj independent trajectories. Trajectory j draws from
/// derive_stream(cfg.seed, j), takes burn_in_steps + n_steps() steps, and is
/// marked escaped (and excluded from all averages) as soon as its state
/// leaves the escape box or a fixed-point solve fails. Per-trajectory
/// results are combined in index order with pairwise summation, so the
/// report does not depend on opts.threads.
[[nodiscard]] EnsembleReport run_ensemble(const StepperFactory& make_stepper, const SamplerConfig& cfg,
                                          const InitialSampler& init, const EnsembleOptions& opts = {});

/// Sum in fixed pairwise order; deterministic for a given input ordering.
[[nodiscard]] double pairwise_sum(std::span<const double> values);

/// Initial sampler: x ~ N(mean, std^2 I); if `with_momentum`, p ~ N(0, beta_inv I).
[[nodiscard]] InitialSampler gaussian_initial(std::vector<double> mean, double std, bool with_momentum,
                                              double beta_inv);

}  // namespace adalang
