#include <doctest.h>

#include <boost/math/distributions/normal.hpp>
#include <cmath>
#include <vector>

#include "adalang/analysis.hpp"
#include "adalang/errors.hpp"
#include "adalang/overdamped.hpp"
#include "adalang/quadrature.hpp"

using namespace adalang;

TEST_CASE("Gaussian moments by quadrature") {
  const auto r = gibbs_reference(harmonic(1.0), 1.0, 4, -20.0, 20.0);
  CHECK(std::abs(r.moments[0]) < 1e-13);
  CHECK(r.moments[1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(r.moments[2]) < 1e-13);
  CHECK(r.moments[3] == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(r.Z == doctest::Approx(std::sqrt(2.0 * M_PI)).epsilon(1e-12));

  const auto r2 = gibbs_reference(harmonic(2.0), 0.5, 2, -20.0, 20.0);
  CHECK(r2.moments[1] == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("modified harmonic reference moments") {
  const auto pot = modified_harmonic({2.75, 0.1, 0.1, 0.5});
  const auto tight = gibbs_reference(pot, 0.1, 4, -10.0, 10.0, 1e-12);
  const auto loose = gibbs_reference(pot, 0.1, 4, -10.0, 10.0, 1e-10);
  // Regression values, confirmed against an independent 30-digit quadrature.
  const double pinned[] = {-0.58212404409440759, 0.78245513767384709, -1.2272811234164535, 2.3091775949276838};
  for (int k = 0; k < 4; ++k) {
    CHECK(tight.moments[k] == doctest::Approx(pinned[k]).epsilon(1e-12));
    CHECK(loose.moments[k] == doctest::Approx(tight.moments[k]).epsilon(1e-9));
  }
  CHECK(loose.log_Z == doctest::Approx(tight.log_Z).epsilon(1e-9));
  CHECK(tight.tail_mass < 1e-12);
}

TEST_CASE("quadrature support that cuts off mass is rejected") {
  CHECK_THROWS_AS((void)gibbs_reference(harmonic(1.0), 1.0, 2, -3.0, 3.0), NumericalError);
}

TEST_CASE("Gibbs density integrates to one") {
  const auto pot = modified_harmonic({10.0, 0.1, 0.1, 0.5});
  const GibbsDensity rho(pot, 0.1, -10.0, 10.0);
  const auto total = integrate([&](double x) { return rho(x); }, -10.0, 10.0);
  CHECK(total.value == doctest::Approx(1.0).epsilon(1e-11));
}

TEST_CASE("histogram L1 of exact samples is small") {
  const boost::math::normal_distribution<double> N(0.0, 1.0);
  const int n = 1000000;
  std::vector<double> s(n);
  for (int i = 0; i < n; ++i) s[i] = boost::math::quantile(N, (i + 0.5) / n);
  auto dens = [&](double x) { return boost::math::pdf(N, x); };
  CHECK(histogram_l1(s, dens, 200, -6.0, 6.0) < 0.02);

  std::vector<double> point(1000, 3.0);
  const auto narrow = [](double x) { return std::exp(-50.0 * (x + 2.0) * (x + 2.0)) / std::sqrt(M_PI / 50.0); };
  CHECK(histogram_l1(point, narrow, 200, -6.0, 6.0) == doctest::Approx(2.0).epsilon(1e-6));

  CHECK_THROWS_AS((void)histogram_l1(s, dens, 49, -6.0, 6.0), ValidationError);
  CHECK_THROWS_AS((void)histogram_l1(std::vector<double>{}, dens, 200, -6.0, 6.0), ValidationError);
}

TEST_CASE("histogram bookkeeping") {
  const auto h = make_histogram(std::vector<double>{-5.0, 0.1, 0.2, 0.9, 7.0}, 0.0, 1.0, 50);
  CHECK(h.below == 1);
  CHECK(h.above == 1);
  CHECK(h.total() == 5);
  CHECK(h.counts[5] == 1);
  CHECK(h.bin_left(10) == doctest::Approx(0.2));
}

namespace {

std::vector<SweepRow> synthetic(const std::vector<double>& hs, double C, double order, double se) {
  std::vector<SweepRow> rows;
  for (double h : hs) {
    SweepRow r;
    r.scheme = "S";
    r.h = h;
    r.k = 2;
    r.error = C * std::pow(h, order);
    r.stderr_ = se;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

TEST_CASE("slope fit") {
  const std::vector<double> hs{0.4, 0.2, 0.1, 0.04};
  auto exact = fit_slope(synthetic(hs, 3.0, 2.0, 1e-6));
  CHECK(exact.determinate);
  CHECK(exact.slope == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(exact.n_points == 4);

  auto noisy = fit_slope(synthetic(hs, 1e-3, 1.0, 1.0));
  CHECK_FALSE(noisy.determinate);

  // Only the two largest h clear three standard errors.
  auto partial = fit_slope(synthetic(hs, 1.0, 1.0, 0.05));
  CHECK(partial.determinate);
  CHECK(partial.n_points == 2);

  // A pre-asymptotic largest-h point is dropped.
  auto rows = synthetic({0.8, 0.4, 0.2, 0.1, 0.05}, 1.0, 1.0, 1e-6);
  rows[0].error = 50.0;
  auto dropped = fit_slope(rows);
  CHECK(dropped.h_max == doctest::Approx(0.4));
  CHECK(dropped.slope == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("weak error sweep with a known bias") {
  ReferenceMoments ref;
  ref.moments = {0.0, 1.0, 0.0, 3.0};
  EnsembleRunner run = [](const std::string&, double h) {
    EnsembleReport r;
    r.moments = {0.0, 1.0 + 0.5 * h * h, 0.0, 3.0 + h};
    r.moment_stderr = {1e-9, 1e-9, 1e-9, 1e-9};
    r.n_traj = 1;
    return r;
  };
  const auto table = weak_error_sweep({"A", "B"}, {0.4, 0.2, 0.1, 0.04}, ref, run);
  CHECK(table.rows.size() == 2 * 4 * 4);
  REQUIRE(table.fit("A", 2) != nullptr);
  CHECK(table.fit("A", 2)->slope == doctest::Approx(2.0).epsilon(1e-9));
  CHECK(table.fit("B", 4)->slope == doctest::Approx(1.0).epsilon(1e-9));
  CHECK_FALSE(table.fit("A", 1)->determinate);
  CHECK(table.any_determinate());
}

TEST_CASE("EM slopes agree across seeds") {
  const auto pot = harmonic(1.0);
  const auto mon = constant_monitor(1.0);
  const auto ref = gibbs_reference(pot, 1.0, 2, -20.0, 20.0);
  SamplerConfig cfg;
  cfg.beta_inv = 1.0;
  cfg.t_final = 6.0;
  cfg.n_traj = 20000;
  EnsembleOptions opts;
  opts.k_max = 2;
  std::vector<SlopeFit> fits;
  for (std::uint64_t seed : {1u, 2u}) {
    cfg.seed = seed;
    const auto run = make_runner(pot, mon, cfg, gaussian_initial({0.0}, 1.0, false, 1.0), opts);
    const auto table = weak_error_sweep({"EM"}, {0.4, 0.2, 0.1, 0.04}, ref, run);
    fits.push_back(*table.fit("EM", 2));
  }
  REQUIRE(fits[0].determinate);
  REQUIRE(fits[1].determinate);
  MESSAGE("slopes " << fits[0].slope << " +- " << fits[0].slope_stderr << ", " << fits[1].slope << " +- "
                    << fits[1].slope_stderr);
  const double combined = std::hypot(fits[0].slope_stderr, fits[1].slope_stderr);
  CHECK(std::abs(fits[0].slope - fits[1].slope) <= 3.0 * std::max(combined, 0.05));
  CHECK(fits[0].slope == doctest::Approx(1.0).epsilon(0.3));
}

TEST_CASE("escape statistics") {
  const std::vector<double> y{1.2, 2.3, 1.9, 0.4, 1.6, 2.8, 1.1, 1.7, 2.0, 1.5};
  const auto pot = bayes_posterior(y, 4, 2.0);
  const auto mon = monitor_bayes(1.65, 2.0, {0.1, 1.0, 2.0, 2});
  SamplerConfig cfg;
  cfg.beta_inv = 1.0;
  cfg.gamma = 0.1;
  cfg.t_final = 2.0;
  cfg.n_traj = 100;
  const auto init = gaussian_initial({1.65}, 1.0, true, 1.0);
  const auto run = make_runner(pot, mon, cfg, init, {});
  for (const auto& row : escape_rate({"BAOAB_FIXED", "BAOAB_HAT", "BAOAB_TILDE"}, {1e-3}, run))
    CHECK(row.fraction == 0.0);

  // With g == 1 the adaptive scheme is the fixed one.
  const auto unit = constant_monitor(1.0);
  cfg.t_final = 50.0;
  cfg.n_traj = 200;
  const auto run1 = make_runner(pot, unit, cfg, init, {});
  const auto rows = escape_rate({"BAOAB_TILDE", "BAOAB_FIXED"}, {0.05, 0.12}, run1);
  REQUIRE(rows.size() == 4);
  for (const auto& r : rows) CHECK(r.h_effective == r.h);
  CHECK(rows[0].fraction == rows[2].fraction);
  CHECK(rows[1].fraction == rows[3].fraction);
}

TEST_CASE("channel classification") {
  ChannelSpec spec;
  CHECK(std::string(classify_channel(0.0, 4.0, spec)) == "upper");
  CHECK(std::string(classify_channel(1.0, 3.0, spec)) == "upper");
  CHECK(std::string(classify_channel(0.0, -4.0, spec)) == "lower");
  CHECK(std::string(classify_channel(0.5, -3.5, spec)) == "lower");
  CHECK(std::string(classify_channel(0.0, -2.0, spec)) == "");
  CHECK(std::string(classify_channel(0.0, 0.0, spec)) == "");
}

TEST_CASE("scheme registry and factory") {
  CHECK(is_known_scheme("EM_IP"));
  CHECK(is_known_scheme("OBABO_TILDE"));
  CHECK_FALSE(is_known_scheme("RK4"));
  CHECK(is_underdamped_scheme("SPV_IP"));
  CHECK_FALSE(is_underdamped_scheme("EM"));
  CHECK(is_adaptive_scheme("EM_IP"));
  CHECK_FALSE(is_adaptive_scheme("EM"));
  const auto pot = harmonic(1.0);
  const auto mon = constant_monitor(1.0);
  CHECK_THROWS_AS((void)make_stepper_factory("RK4", pot, mon, SamplerConfig{}), ValidationError);
}
