#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fldp/errors.hpp"
#include "fldp/ldp.hpp"
#include "helpers.hpp"

using namespace fldp;

namespace {
const int kSteps = 1024;

FreeEnergyCurve quadratic_curve() {
  FreeEnergyCurve c;
  c.lambdas = default_lambda_grid(501);
  for (double l : c.lambdas) c.values.push_back(0.5 * l * l);
  c.gaps.assign(c.lambdas.size(), 1.0);
  return c;
}
}  // namespace

TEST_CASE("default lambda grid is symmetric about -1/2") {
  const std::vector<double> g = default_lambda_grid();
  REQUIRE(g.size() == 201);
  CHECK(g.front() == doctest::Approx(-3.0));
  CHECK(g.back() == doctest::Approx(2.0));
  for (std::size_t i = 0; i < g.size(); ++i)
    CHECK(g[g.size() - 1 - i] == doctest::Approx(-1.0 - g[i]).epsilon(1e-12));
}

TEST_CASE("ring free energy matches the circulant closed form") {
  const RateProtocol p = testutil::ring();
  const FreeEnergyCurve c = free_energy_curve(
      p, Functional::W, Direction::Forward, default_lambda_grid(), kSteps, 2);
  for (std::size_t i = 0; i < c.lambdas.size(); ++i) {
    const double lam = c.lambdas[i];
    const double exact =
        std::pow(2.0, 1.0 + lam) + std::pow(2.0, -lam) - 3.0;
    CHECK(std::abs(c.values[i] - exact) < 1e-7);
  }
  CHECK(std::abs(c.at(0.0)) < 1e-8);
  CHECK(std::abs(c.at(-1.0)) < 1e-8);  // Gallavotti-Cohen endpoint
  CHECK(c.at(1.0) == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("ring free energy matches a dense eigensolve oracle") {
  const RateProtocol p = testutil::ring();
  for (double lam : {-2.0, -0.7, 0.4, 1.3}) {
    const PerronData pd =
        perron(monodromy(p, Tilt::w(lam), 0.0, Direction::Forward, kSteps));
    const double oracle =
        testutil::top_real_eigenvalue(tilted_w(p, 0.0, lam));
    CHECK(pd.exponent == doctest::Approx(oracle).epsilon(1e-10));
  }
}

TEST_CASE("legendre transform of an injected quadratic is self-dual") {
  const FreeEnergyCurve c = quadratic_curve();
  std::vector<double> zs;
  for (int i = 0; i <= 100; ++i) zs.push_back(-1.0 + 0.02 * i);
  const RateFunction rf = legendre_fenchel(c, zs);
  for (std::size_t i = 0; i < zs.size(); ++i) {
    CHECK(!rf.boundary[i]);
    CHECK(std::abs(rf.values[i] - 0.5 * zs[i] * zs[i]) < 1e-6);
  }
  CHECK(std::abs(rf.minimizer_z) < 1e-3);
  CHECK(rf.minimizer_value < 1e-7);
}

TEST_CASE("flat curve transform is zero at z = 0, flagged elsewhere") {
  FreeEnergyCurve c;
  c.lambdas = default_lambda_grid(201);
  c.values.assign(201, 0.0);
  c.gaps.assign(201, 1.0);
  const RateFunction rf = legendre_fenchel(c, {-0.5, 0.0, 0.5});
  CHECK(bool(rf.boundary[0]));
  CHECK(!rf.boundary[1]);
  CHECK(bool(rf.boundary[2]));
  CHECK(rf.values[1] == doctest::Approx(0.0));
}

TEST_CASE("rate function minimizer sits at the mean entropy rate") {
  const RateProtocol p = testutil::ring();
  const FreeEnergyCurve c = free_energy_curve(
      p, Functional::S, Direction::Forward, default_lambda_grid(), kSteps, 2);
  const RateFunction rf = legendre_fenchel(c, default_z_grid(c));
  CHECK(rf.minimizer_z == doctest::Approx(std::log(2.0)).epsilon(1e-3));
  CHECK(rf.minimizer_value < 1e-9);
  CHECK(rate_at(c, derivative_at_zero(c, nullptr)) < 1e-9);
  // convexity on unflagged points
  for (std::size_t i = 1; i + 1 < rf.zs.size(); ++i) {
    if (rf.boundary[i - 1] || rf.boundary[i] || rf.boundary[i + 1]) continue;
    CHECK(rf.values[i + 1] - 2.0 * rf.values[i] + rf.values[i - 1] > -1e-7);
  }
}

TEST_CASE("derivative at zero: closed forms and stencil checks") {
  const RateProtocol ring = testutil::ring();
  const FreeEnergyCurve cs = free_energy_curve(
      ring, Functional::S, Direction::Forward, default_lambda_grid(), kSteps, 2);
  double richardson = 1.0;
  CHECK(derivative_at_zero(cs, &richardson) ==
        doctest::Approx(std::log(2.0)).epsilon(1e-6));
  CHECK(std::abs(richardson) < 1e-5);

  // detailed-balance chain: no entropy production
  const FreeEnergyCurve db = free_energy_curve(
      testutil::two_state(), Functional::S, Direction::Forward,
      default_lambda_grid(), kSteps, 2);
  CHECK(std::abs(derivative_at_zero(db, nullptr)) < 1e-8);

  FreeEnergyCurve off;
  off.lambdas = {0.1, 0.2, 0.3};
  off.values = {0.0, 0.0, 0.0};
  CHECK_THROWS_AS(derivative_at_zero(off, nullptr), ConfigError);
}

TEST_CASE("entropy production rate closed forms") {
  const RateProtocol ring = testutil::ring();
  const EpCurve ec = ep_curve(ring, 128);
  CHECK(ec.time_average == doctest::Approx(std::log(2.0)).epsilon(1e-10));
  for (double v : ec.values) CHECK(v == doctest::Approx(std::log(2.0)).epsilon(1e-9));

  const EpCurve db = ep_curve(testutil::two_state(), 128);
  CHECK(std::abs(db.time_average) < 1e-12);

  const EpCurve driven = ep_curve(testutil::cosine(), 512);
  for (double v : driven.values) CHECK(v >= 0.0);
  CHECK(driven.time_average > 0.0);
}

TEST_CASE("spectral entropy rate equals the periodic formula for driving") {
  const RateProtocol p = testutil::cosine();
  const FreeEnergyCurve cs = free_energy_curve(
      p, Functional::S, Direction::Forward, default_lambda_grid(), 2048, 2);
  const EpCurve ec = ep_curve(p, 2048);
  CHECK(derivative_at_zero(cs, nullptr) ==
        doctest::Approx(ec.time_average).epsilon(1e-5));
}

TEST_CASE("fluctuation theorem residuals for the homogeneous ring") {
  const RateProtocol p = testutil::ring();
  const std::vector<double> grid = default_lambda_grid();
  const FreeEnergyCurve cf =
      free_energy_curve(p, Functional::W, Direction::Forward, grid, kSteps, 2);
  const FreeEnergyCurve cb =
      free_energy_curve(p, Functional::W, Direction::Backward, grid, kSteps, 2);
  const std::vector<double> zg = symmetric_z_grid(cf, cb);
  const RateFunction rf = legendre_fenchel(cf, zg);
  const RateFunction rb = legendre_fenchel(cb, zg);
  const FtResiduals res = ft_residuals(cf, cb, rf, rb, p.time_symmetric());
  CHECK(res.c_max < 1e-7);
  CHECK(res.ft_max < 1e-7);
  CHECK(res.gc_max < 1e-7);
  CHECK(res.ft_points > 100);
}

TEST_CASE("residual computation rejects misaligned grids") {
  const RateProtocol p = testutil::ring();
  std::vector<double> skew;
  for (int i = 0; i < 101; ++i) skew.push_back(-2.0 + 3.5 * i / 100.0);
  const FreeEnergyCurve cf =
      free_energy_curve(p, Functional::W, Direction::Forward, skew, 256, 2);
  const FreeEnergyCurve cb =
      free_energy_curve(p, Functional::W, Direction::Backward, skew, 256, 2);
  const std::vector<double> zg = symmetric_z_grid(cf, cb, 51);
  const RateFunction rf = legendre_fenchel(cf, zg);
  const RateFunction rb = legendre_fenchel(cb, zg);
  CHECK_THROWS_AS(ft_residuals(cf, cb, rf, rb, true), ConfigError);
}

TEST_CASE("probability ratio at the symmetry point") {
  // time-symmetric driving: forward and backward coincide, exponent near 0
  const RateProtocol p = testutil::cosine();
  const double r = probability_ratio(p, 0.0, 0.2, 20.0, 4000, 21, 512, 2);
  CHECK(std::abs(r) < 0.05);
}

TEST_CASE("probability ratio flags empty bins") {
  const RateProtocol p = testutil::two_state();
  CHECK_THROWS_AS(probability_ratio(p, 50.0, 0.01, 20.0, 500, 1, 128, 1),
                  StatisticalError);
}

TEST_CASE("probability ratio tracks the bin location") {
  const RateProtocol p = testutil::ring();
  const double z = std::log(2.0);
  const double r = probability_ratio(p, z, 0.25, 10.0, 100000, 33, 256, 4);
  CHECK(std::abs(r - z) < 0.3);
}
