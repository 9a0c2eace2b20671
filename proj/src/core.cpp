#include "adalang/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <string>
#include <thread>

#include "adalang/errors.hpp"

namespace adalang {

PhaseState::PhaseState(std::vector<double> position, std::vector<double> momentum)
    : x(std::move(position)), p(std::move(momentum)) {
  if (x.empty()) throw ValidationError("PhaseState: dimension must be >= 1");
  if (!p.empty() && p.size() != x.size()) throw ValidationError("PhaseState: x and p must have equal length");
}

bool within_bounds(const PhaseState& s) {
  for (double v : s.x)
    if (!std::isfinite(v) || std::abs(v) > kEscapeBound) return false;
  for (double v : s.p)
    if (!std::isfinite(v)) return false;
  return true;
}

void SamplerConfig::validate() const {
  auto fail = [](const std::string& what) { throw ValidationError("sampler." + what); };
  if (!(h > 0.0) || !std::isfinite(h)) fail("h: must be a finite value > 0");
  if (!(beta_inv > 0.0) || !std::isfinite(beta_inv)) fail("beta_inv: must be a finite value > 0");
  if (!(gamma >= 0.0) || !std::isfinite(gamma)) fail("gamma: must be a finite value >= 0");
  if (!(t_final > 0.0) || !std::isfinite(t_final)) fail("t_final: must be a finite value > 0");
  if (burn_in_steps < 0) fail("burn_in_steps: must be >= 0");
  if (n_traj < 1) fail("n_traj: must be >= 1");
  if (!(fp_tol > 0.0 && fp_tol < 1.0)) fail("fp_tol: must lie in (0, 1)");
  if (fp_max_iter < 1) fail("fp_max_iter: must be >= 1");
  if (sample_stride < 0) fail("sample_stride: must be >= 0");
}

std::int64_t SamplerConfig::n_steps() const {
  const double q = t_final / h;
  const double r = std::round(q);
  if (std::abs(q - r) <= 1e-9 * std::max(1.0, q)) return std::max<std::int64_t>(1, static_cast<std::int64_t>(r));
  return static_cast<std::int64_t>(std::ceil(q));
}

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

InitialSampler gaussian_initial(std::vector<double> mean, double std, bool with_momentum, double beta_inv) {
  if (mean.empty()) throw ValidationError("initial mean must have dimension >= 1");
  if (!(std >= 0.0)) throw ValidationError("initial std must be >= 0");
  return [mean = std::move(mean), std, with_momentum, beta_inv](RngStream& rng) {
    PhaseState s;
    s.x.resize(mean.size());
    for (std::size_t i = 0; i < mean.size(); ++i) s.x[i] = mean[i] + std * rng.normal();
    if (with_momentum) {
      s.p.resize(mean.size());
      const double sd = std::sqrt(beta_inv);
      for (double& v : s.p) v = sd * rng.normal();
    }
    return s;
  };
}

namespace {

constexpr std::int64_t kBlockSize = 256;

// Field layout of the per-trajectory and per-block accumulators.
struct Layout {
  int k_max;
  [[nodiscard]] int obs(int k) const { return k; }                 // sum of x^(k+1) means
  [[nodiscard]] int obs_sq(int k) const { return k_max + k; }      // sum of squared means
  [[nodiscard]] int kept() const { return 2 * k_max; }             // non-escaped count
  [[nodiscard]] int monitor_sum() const { return 2 * k_max + 1; }
  [[nodiscard]] int monitor_steps() const { return 2 * k_max + 2; }
  [[nodiscard]] int fp_iters() const { return 2 * k_max + 3; }
  [[nodiscard]] int fp_solves() const { return 2 * k_max + 4; }
  [[nodiscard]] int escaped() const { return 2 * k_max + 5; }
  [[nodiscard]] int size() const { return 2 * k_max + 6; }
};

struct BlockResult {
  std::vector<double> sums;
  std::int64_t fp_iter_max = 0;
  double fp_last_diff_max = 0.0;
};

struct TrajectoryResult {
  std::vector<double> fields;
  std::int64_t fp_iter_max = 0;
  double fp_last_diff_max = 0.0;
};

TrajectoryResult run_trajectory(Stepper& stepper, const SamplerConfig& cfg, const InitialSampler& init,
                                const Layout& lay, std::int64_t index, PhaseState* final_out) {
  TrajectoryResult out;
  out.fields.assign(lay.size(), 0.0);
  RngStream rng = derive_stream(cfg.seed, index);
  PhaseState state = init(rng);

  const std::int64_t n_main = cfg.n_steps();
  const std::int64_t total = cfg.burn_in_steps + n_main;
  std::vector<double> obs(lay.k_max, 0.0);
  std::int64_t n_obs = 0;
  double monitor_sum = 0.0;
  std::int64_t steps = 0;
  double fp_iters = 0.0, fp_solves = 0.0;
  bool escaped = !within_bounds(state);

  auto record = [&](double x0) {
    double pw = 1.0;
    for (int k = 0; k < lay.k_max; ++k) {
      pw *= x0;
      obs[k] += pw;
    }
    ++n_obs;
  };

  for (std::int64_t n = 1; n <= total && !escaped; ++n) {
    const StepInfo info = stepper.step(state, rng);
    ++steps;
    monitor_sum += info.monitor;
    fp_iters += info.fp_iter_sum;
    fp_solves += info.fp_solves;
    out.fp_iter_max = std::max<std::int64_t>(out.fp_iter_max, info.fp_iter_max);
    out.fp_last_diff_max = std::max(out.fp_last_diff_max, info.fp_last_diff);
    if (!info.converged || !within_bounds(state)) {
      escaped = true;
      break;
    }
    const std::int64_t post = n - cfg.burn_in_steps;
    if (post <= 0) continue;
    const bool final_step = post == n_main;
    if (final_step || (cfg.sample_stride > 0 && post % cfg.sample_stride == 0)) record(state.x[0]);
  }

  out.fields[lay.fp_iters()] = fp_iters;
  out.fields[lay.fp_solves()] = fp_solves;
  if (escaped) {
    state.escaped = true;
    out.fields[lay.escaped()] = 1.0;
  } else {
    for (int k = 0; k < lay.k_max; ++k) {
      const double mean = obs[k] / static_cast<double>(n_obs);
      out.fields[lay.obs(k)] = mean;
      out.fields[lay.obs_sq(k)] = mean * mean;
    }
    out.fields[lay.kept()] = 1.0;
    out.fields[lay.monitor_sum()] = monitor_sum;
    out.fields[lay.monitor_steps()] = static_cast<double>(steps);
  }
  if (final_out) *final_out = std::move(state);
  return out;
}

}  // namespace

EnsembleReport run_ensemble(const StepperFactory& make_stepper, const SamplerConfig& cfg, const InitialSampler& init,
                            const EnsembleOptions& opts) {
  cfg.validate();
  if (opts.k_max < 1) throw ValidationError("run_ensemble: k_max must be >= 1");
  const Layout lay{opts.k_max};
  const std::int64_t n_blocks = (cfg.n_traj + kBlockSize - 1) / kBlockSize;
  std::vector<BlockResult> blocks(static_cast<std::size_t>(n_blocks));

  EnsembleReport report;
  if (opts.keep_final_states) report.final_states.resize(static_cast<std::size_t>(cfg.n_traj));

  std::atomic<std::int64_t> next_block{0};
  auto worker = [&]() {
    std::vector<std::vector<double>> columns(lay.size());
    for (;;) {
      const std::int64_t b = next_block.fetch_add(1);
      if (b >= n_blocks) return;
      const std::int64_t first = b * kBlockSize;
      const std::int64_t last = std::min(cfg.n_traj, first + kBlockSize);
      for (auto& c : columns) c.assign(static_cast<std::size_t>(last - first), 0.0);
      BlockResult& block = blocks[static_cast<std::size_t>(b)];
      for (std::int64_t j = first; j < last; ++j) {
        auto stepper = make_stepper();
        PhaseState* final_out = opts.keep_final_states ? &report.final_states[static_cast<std::size_t>(j)] : nullptr;
        TrajectoryResult tr = run_trajectory(*stepper, cfg, init, lay, j, final_out);
        for (int f = 0; f < lay.size(); ++f) columns[f][static_cast<std::size_t>(j - first)] = tr.fields[f];
        block.fp_iter_max = std::max(block.fp_iter_max, tr.fp_iter_max);
        block.fp_last_diff_max = std::max(block.fp_last_diff_max, tr.fp_last_diff_max);
      }
      block.sums.resize(lay.size());
      for (int f = 0; f < lay.size(); ++f) block.sums[f] = pairwise_sum(columns[f]);
    }
  };

  const unsigned n_threads =
      static_cast<unsigned>(std::clamp<std::int64_t>(opts.threads == 0 ? 1 : opts.threads, 1, n_blocks));
  if (n_threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(n_threads);
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  }

  std::vector<double> totals(lay.size());
  std::vector<double> column(static_cast<std::size_t>(n_blocks));
  for (int f = 0; f < lay.size(); ++f) {
    for (std::int64_t b = 0; b < n_blocks; ++b) column[static_cast<std::size_t>(b)] = blocks[b].sums[f];
    totals[f] = pairwise_sum(column);
  }
  for (const auto& b : blocks) {
    report.fp_iters_max = std::max(report.fp_iters_max, b.fp_iter_max);
    report.fp_last_diff_max = std::max(report.fp_last_diff_max, b.fp_last_diff_max);
  }

  const double kept = totals[lay.kept()];
  report.n_traj = cfg.n_traj;
  report.escaped = static_cast<std::int64_t>(std::llround(totals[lay.escaped()]));
  report.wall_steps = cfg.burn_in_steps + cfg.n_steps();
  report.samples_per_traj = cfg.sample_stride > 0 ? cfg.n_steps() / cfg.sample_stride +
                                                        (cfg.n_steps() % cfg.sample_stride != 0 ? 1 : 0)
                                                  : 1;
  report.moments.assign(lay.k_max, std::nan(""));
  report.moment_stderr.assign(lay.k_max, std::nan(""));
  if (kept > 0) {
    for (int k = 0; k < lay.k_max; ++k) {
      const double mean = totals[lay.obs(k)] / kept;
      report.moments[k] = mean;
      if (kept > 1) {
        const double var = std::max(0.0, (totals[lay.obs_sq(k)] / kept - mean * mean) * kept / (kept - 1.0));
        report.moment_stderr[k] = std::sqrt(var / kept);
      }
    }
    report.mean_monitor = totals[lay.monitor_sum()] / totals[lay.monitor_steps()];
  } else {
    report.mean_monitor = std::nan("");
  }
  const double solves = totals[lay.fp_solves()];
  report.fp_iters_mean = solves > 0 ? totals[lay.fp_iters()] / solves : 0.0;
  return report;
}

}  // namespace adalang
