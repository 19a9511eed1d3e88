#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fldp/errors.hpp"
#include "fldp/propagator.hpp"
#include "helpers.hpp"

using namespace fldp;

TEST_CASE("step exponential matches the dense matrix exponential") {
  Eigen::MatrixXd m(3, 3);
  m << -0.3, 0.2, 0.1, 0.05, -0.15, 0.1, 0.2, 0.1, -0.3;
  CHECK((detail::step_exp(m) - m.exp()).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("ordered flows: descending flow is the transpose of the ascending "
          "flow of the transposed generator") {
  auto gen = [](double s) {
    Eigen::MatrixXd a(2, 2);
    a << -1.0 - 0.3 * std::sin(s), 1.0 + 0.3 * std::sin(s),
        2.0 + std::cos(2 * s), -2.0 - std::cos(2 * s);
    return a;
  };
  auto gen_t = [&](double s) -> Eigen::MatrixXd { return gen(s).transpose(); };
  const Eigen::MatrixXd down = detail::ordered_flow(gen, 0.0, 1.0, 37, false);
  const Eigen::MatrixXd up = detail::ordered_flow(gen_t, 0.0, 1.0, 37, true);
  // exact discrete identity, not just a discretization of the same limit
  CHECK((down - up.transpose()).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("law integration matches the matrix exponential for constant rates") {
  const RateProtocol p = testutil::two_state();
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.5;
  const LawTrajectory law = integrate_law(p, pi, 2.0, 512);
  const Eigen::MatrixXd a = generator(p, 0.0);
  for (double t : {0.25, 1.0, 2.0}) {
    const Eigen::VectorXd exact = (t * a).exp().transpose() * pi;
    CHECK((law.at(t) - exact).cwiseAbs().maxCoeff() < 1e-9);
  }
  CHECK(std::abs(law.at(1.7).sum() - 1.0) < 1e-12);
  CHECK(law.renorm_drift < 1e-8);
}

TEST_CASE("law integration input checks") {
  const RateProtocol p = testutil::two_state();
  Eigen::VectorXd bad(2);
  bad << 0.9, 0.3;
  CHECK_THROWS_AS(integrate_law(p, bad, 1.0, 64), ConfigError);
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.5;
  CHECK_THROWS_AS(integrate_law(p, pi, -1.0, 64), ConfigError);
  CHECK_THROWS_AS(integrate_law(p, pi, 1.0, 0), ConfigError);
}

TEST_CASE("asymptotic law: stationary for homogeneous chains") {
  const PeriodicLaw nu = asymptotic_law(testutil::two_state(), 256);
  CHECK(nu.at(0.0)(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  CHECK(nu.at(0.42)(0) == doctest::Approx(2.0 / 3.0).epsilon(1e-9));
  const PeriodicLaw ring_nu = asymptotic_law(testutil::ring(), 256);
  CHECK(ring_nu.at(0.5)(1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
}

TEST_CASE("asymptotic law: periodic fixed point of the driven flow") {
  const RateProtocol p = testutil::sine();
  const PeriodicLaw nu = asymptotic_law(p, 512);
  CHECK((nu.at(0.0) - nu.at(1.0)).cwiseAbs().maxCoeff() < 1e-9);
  // propagating the slice across a period returns it
  Eigen::VectorXd mu = nu.at(0.0);
  const LawTrajectory law = integrate_law(p, mu, 1.0, 2048);
  CHECK((law.at(1.0) - mu).cwiseAbs().maxCoeff() < 1e-8);
  for (const Eigen::VectorXd& s : nu.slices) CHECK(s.minCoeff() > 0.0);
}

TEST_CASE("monodromy is strictly positive and stochastic at zero tilt") {
  for (const RateProtocol& p :
       {testutil::ring(), testutil::cosine(), testutil::sine()}) {
    const PropagatorResult flow =
        monodromy(p, Tilt::w(0.0), 0.0, Direction::Forward, 512);
    CHECK(flow.flow.minCoeff() > 0.0);
    // zero tilt flow of the generator preserves sum against ones
    const Eigen::VectorXd ones = Eigen::VectorXd::Ones(p.n_states());
    CHECK((flow.flow * ones - ones).cwiseAbs().maxCoeff() < 1e-10);
    const PerronData pd = perron(flow);
    CHECK(std::abs(pd.exponent) < 1e-10);
  }
}

TEST_CASE("perron data on a known matrix") {
  PropagatorResult flow;
  flow.flow = Eigen::MatrixXd(2, 2);
  flow.flow << 2.0, 1.0, 1.0, 2.0;
  flow.t_start = 0.0;
  flow.t_end = 1.0;
  const PerronData pd = perron(flow);
  CHECK(pd.eigenvalue == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(pd.exponent == doctest::Approx(std::log(3.0)).epsilon(1e-10));
  CHECK(pd.right_vector(0) == doctest::Approx(0.5).epsilon(1e-9));
  CHECK(pd.left_vector.dot(pd.right_vector) == doctest::Approx(1.0));
  CHECK(pd.spectral_gap == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("perron rejects non-positive flows") {
  PropagatorResult flow;
  flow.flow = Eigen::MatrixXd(2, 2);
  flow.flow << 1.0, 0.0, 0.0, 1.0;
  flow.t_start = 0.0;
  flow.t_end = 1.0;
  CHECK_THROWS_AS(perron(flow), ConfigError);
}

TEST_CASE("monodromy agrees with the dense exponential oracle") {
  const RateProtocol p = testutil::cosine();
  const double lam = 0.5;
  auto gen = [&](double s) { return tilted_w(p, s, lam); };
  const Eigen::MatrixXd oracle = testutil::matexp_flow(gen, 0.0, 1.0, 40000);
  const PropagatorResult flow =
      monodromy(p, Tilt::w(lam), 0.0, Direction::Forward, 1024);
  CHECK((flow.flow - oracle).cwiseAbs().maxCoeff() < 1e-7);
}

TEST_CASE("mgf at lambda 0 is identically one") {
  const RateProtocol p = testutil::sine();
  const Eigen::VectorXd u =
      mgf(p, Functional::W, 0.0, 3.0, Direction::Forward, 256);
  CHECK((u - Eigen::VectorXd::Ones(2)).cwiseAbs().maxCoeff() < 1e-10);
}

TEST_CASE("mgf for S requires a covering law trajectory") {
  const RateProtocol p = testutil::cosine();
  CHECK_THROWS_AS(mgf(p, Functional::S, 0.5, 2.0, Direction::Forward, 256),
                  ConfigError);
  Eigen::VectorXd pi(2);
  pi << 0.5, 0.5;
  const LawTrajectory law = integrate_law(p, pi, 1.0, 256);
  CHECK_THROWS_AS(
      mgf(p, Functional::S, 0.5, 2.0, Direction::Forward, 256, &law),
      ConfigError);
  CHECK_NOTHROW(mgf(p, Functional::S, 0.5, 1.0, Direction::Forward, 256, &law));
}
