#include <doctest.h>

#include <cmath>
#include <cstring>
#include <span>
#include <vector>

#include "adalang/core.hpp"
#include "adalang/errors.hpp"
#include "adalang/overdamped.hpp"
#include "adalang/potentials.hpp"

using namespace adalang;

namespace {

class IdentityStepper final : public Stepper {
 public:
  StepInfo step(PhaseState&, RngStream&) override { return {}; }
};

// Equality that treats identical NaN payloads as equal.
bool bitwise_equal(std::span<const double> a, std::span<const double> b) {
  return a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size() * sizeof(double)) == 0;
}

bool same_report(const EnsembleReport& a, const EnsembleReport& b) {
  const double sa[] = {a.mean_monitor, a.fp_iters_mean, a.fp_last_diff_max};
  const double sb[] = {b.mean_monitor, b.fp_iters_mean, b.fp_last_diff_max};
  return bitwise_equal(a.moments, b.moments) && bitwise_equal(a.moment_stderr, b.moment_stderr) &&
         bitwise_equal(sa, sb) && a.escaped == b.escaped && a.n_traj == b.n_traj && a.fp_iters_max == b.fp_iters_max &&
         a.wall_steps == b.wall_steps && a.samples_per_traj == b.samples_per_traj;
}

StepperFactory identity_factory() {
  return [] { return std::make_unique<IdentityStepper>(); };
}

}  // namespace

TEST_CASE("derive_stream is deterministic and distinct per index") {
  auto a = derive_stream(7, 0), b = derive_stream(7, 0), c = derive_stream(7, 1);
  const double first_c = c.normal();
  bool differs = false;
  for (int i = 0; i < 1000; ++i) {
    const double za = a.normal();
    CHECK(za == b.normal());
    if (i == 0) differs = za != first_c;
  }
  CHECK(differs);
  CHECK_THROWS_AS((void)derive_stream(7, -1), std::invalid_argument);
}

TEST_CASE("pooled normal draws have mean 0 and variance 1") {
  const int streams = 100, per = 10000;
  const double n = static_cast<double>(streams) * per;
  std::vector<double> vals;
  vals.reserve(static_cast<std::size_t>(n));
  for (int s = 0; s < streams; ++s) {
    auto rng = derive_stream(2024, s);
    for (int i = 0; i < per; ++i) vals.push_back(rng.normal());
  }
  const double mean = pairwise_sum(vals) / n;
  std::vector<double> sq(vals.size());
  for (std::size_t i = 0; i < vals.size(); ++i) sq[i] = (vals[i] - mean) * (vals[i] - mean);
  const double var = pairwise_sum(sq) / (n - 1.0);
  CHECK(std::abs(mean) < 5.0 / std::sqrt(n));
  CHECK(std::abs(var - 1.0) < 0.01);
}

TEST_CASE("uniform lies in the open unit interval") {
  auto rng = derive_stream(3, 4);
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u > 0.0);
    REQUIRE(u < 1.0);
  }
}

TEST_CASE("pairwise_sum") {
  CHECK(pairwise_sum(std::vector<double>{}) == 0.0);
  std::vector<double> v(1000, 0.1);
  CHECK(pairwise_sum(v) == doctest::Approx(100.0).epsilon(1e-14));
  std::vector<double> w{1e16, 1.0, -1e16, 1.0};
  CHECK(std::isfinite(pairwise_sum(w)));
}

TEST_CASE("SamplerConfig validation and step count") {
  SamplerConfig cfg;
  cfg.h = 0.1;
  cfg.t_final = 1.0;
  CHECK(cfg.n_steps() == 10);
  cfg.h = 0.3;
  CHECK(cfg.n_steps() == 4);
  cfg.h = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.h = 0.1;
  cfg.beta_inv = -1.0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
  cfg.beta_inv = 1.0;
  cfg.n_traj = 0;
  CHECK_THROWS_AS(cfg.validate(), ValidationError);
}

TEST_CASE("identity stepper leaves the initial moments") {
  SamplerConfig cfg;
  cfg.h = 0.1;
  cfg.t_final = 1.0;
  cfg.n_traj = 50;
  const auto rep = run_ensemble(identity_factory(), cfg, gaussian_initial({1.5}, 0.0, false, 1.0));
  REQUIRE(rep.moments.size() == 4);
  for (int k = 1; k <= 4; ++k) CHECK(rep.moments[k - 1] == doctest::Approx(std::pow(1.5, k)).epsilon(1e-15));
  CHECK(rep.escaped == 0);
  CHECK(rep.wall_steps == 10);
}

TEST_CASE("ensemble reports are reproducible and thread independent") {
  const auto pot = harmonic(1.0);
  const auto mon = constant_monitor(1.0);
  SamplerConfig cfg;
  cfg.h = 0.05;
  cfg.t_final = 2.0;
  cfg.beta_inv = 1.0;
  cfg.n_traj = 1;
  cfg.seed = 99;
  auto factory = [&] { return make_overdamped_stepper(OverdampedScheme::EM, pot, mon, cfg.h, cfg.beta_inv); };
  const auto init = gaussian_initial({0.0}, 1.0, false, 1.0);
  CHECK(same_report(run_ensemble(factory, cfg, init), run_ensemble(factory, cfg, init)));

  cfg.n_traj = 257;
  EnsembleOptions one, four;
  four.threads = 4;
  CHECK(same_report(run_ensemble(factory, cfg, init, one), run_ensemble(factory, cfg, init, four)));
}

TEST_CASE("escaped trajectories are counted and excluded") {
  const auto pot = harmonic(1.0);
  const auto mon = constant_monitor(1.0);
  SamplerConfig cfg;
  cfg.h = 2.5;  // |1 - h| > 1: EM diverges on the unit harmonic well
  cfg.t_final = 2000.0;
  cfg.beta_inv = 1.0;
  cfg.n_traj = 20;
  auto factory = [&] { return make_overdamped_stepper(OverdampedScheme::EM, pot, mon, cfg.h, cfg.beta_inv); };
  const auto rep = run_ensemble(factory, cfg, gaussian_initial({1.0}, 0.0, false, 1.0));
  CHECK(rep.escaped == 20);
}

TEST_CASE("EM on the unit harmonic well samples E[x^2] = 1") {
  const auto pot = harmonic(1.0);
  const auto mon = constant_monitor(1.0);
  SamplerConfig cfg;
  cfg.h = 0.01;
  cfg.t_final = 100.0;
  cfg.beta_inv = 1.0;
  cfg.n_traj = 100000;
  cfg.seed = 5;
  auto factory = [&] { return make_overdamped_stepper(OverdampedScheme::EM, pot, mon, cfg.h, cfg.beta_inv); };
  const auto rep = run_ensemble(factory, cfg, gaussian_initial({0.0}, 1.0, false, 1.0));
  CHECK(std::abs(rep.moments[1] - 1.0) < 3.0 * rep.moment_stderr[1]);
}
