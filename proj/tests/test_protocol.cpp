#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fldp/errors.hpp"
#include "fldp/protocol.hpp"
#include "helpers.hpp"

using namespace fldp;

TEST_CASE("construction rejects bad configuration") {
  RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), EdgeRate::constant(1.0));
  CHECK_THROWS_AS(RateProtocol(0, 1.0, RateProtocol::EdgeMap{}), ConfigError);
  CHECK_THROWS_AS(RateProtocol(2, -1.0, RateProtocol::EdgeMap{}), ConfigError);
  RateProtocol::EdgeMap bad;
  bad.emplace(std::make_pair(0, 5), EdgeRate::constant(1.0));
  CHECK_THROWS_AS(RateProtocol(2, 1.0, std::move(bad)), ConfigError);
  RateProtocol::EdgeMap loop;
  loop.emplace(std::make_pair(1, 1), EdgeRate::constant(1.0));
  CHECK_THROWS_AS(RateProtocol(2, 1.0, std::move(loop)), ConfigError);
}

TEST_CASE("validation passes for the shipped protocol shapes") {
  for (const RateProtocol& p :
       {testutil::two_state(), testutil::ring(), testutil::cosine(),
        testutil::sine(), testutil::piecewise()}) {
    CHECK(p.validation().passed);
    CHECK_NOTHROW(p.require_valid());
    CHECK(!p.validation().irreducible_times.empty());
  }
}

TEST_CASE("one-sided edge fails ergodic consistency") {
  RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), EdgeRate::constant(1.0));
  RateProtocol p(2, 1.0, std::move(e));
  CHECK(!p.validation().passed);
  CHECK_THROWS_AS(p.require_valid(), ConfigError);
  bool found = false;
  for (const auto& v : p.validation().violations)
    if (v.check == "ergodic-consistency") found = true;
  CHECK(found);
}

TEST_CASE("negative rate fails nonnegativity") {
  RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), EdgeRate::fourier(0.2, {0.5}, {}));
  e.emplace(std::make_pair(1, 0), EdgeRate::constant(1.0));
  RateProtocol p(2, 1.0, std::move(e));
  CHECK(!p.validation().passed);
  bool found = false;
  for (const auto& v : p.validation().violations)
    if (v.check == "nonnegativity") found = true;
  CHECK(found);
}

TEST_CASE("generator rows sum to zero") {
  const RateProtocol p = testutil::sine();
  for (double t : {0.0, 0.3, 0.77}) {
    const Eigen::MatrixXd a = generator(p, t);
    for (int i = 0; i < a.rows(); ++i)
      CHECK(std::abs(a.row(i).sum()) < 1e-14);
    CHECK(a(0, 1) == doctest::Approx(1.0 + 0.5 * std::sin(2 * M_PI * t)));
  }
}

TEST_CASE("tilt reduces to the generator at lambda = 0") {
  const RateProtocol p = testutil::cosine();
  const Eigen::MatrixXd a = generator(p, 0.4);
  CHECK((tilted_w(p, 0.4, 0.0) - a).cwiseAbs().maxCoeff() == 0.0);
  Eigen::VectorXd law(2);
  law << 0.7, 0.3;
  CHECK((tilted_s(p, 0.4, 0.0, law) - a).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("tilted off-diagonals obey the parameter reflection") {
  const RateProtocol p = testutil::ring();
  const double lam = 0.37;
  const Eigen::MatrixXd l1 = tilted_w(p, 0.0, lam);
  const Eigen::MatrixXd l2 = tilted_w(p, 0.0, -(1.0 + lam));
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      if (i != j) CHECK(l2(i, j) == doctest::Approx(l1(j, i)).epsilon(1e-12));
}

TEST_CASE("entropy tilt diagonals by direction") {
  const RateProtocol p = testutil::two_state();
  Eigen::VectorXd law(2);
  law << 0.6, 0.4;
  const double lam = 0.5;
  const Eigen::MatrixXd mf = tilted_s(p, 0.0, lam, law, Direction::Forward);
  const Eigen::MatrixXd mb = tilted_s(p, 0.0, lam, law, Direction::Backward);
  // K_0 = 1, C_0 = k_10 mu_1 / mu_0 = 2 * 0.4 / 0.6
  const double k0 = 1.0, c0 = 2.0 * 0.4 / 0.6;
  CHECK(mf(0, 0) == doctest::Approx(-((1 - lam) * k0 + lam * c0)));
  CHECK(mb(0, 0) == doctest::Approx(-((1 + lam) * k0 - lam * c0)));
  Eigen::VectorXd degenerate(2);
  degenerate << 1.0, 0.0;
  CHECK_THROWS_AS(tilted_s(p, 0.0, lam, degenerate), NumericalError);
}

TEST_CASE("time reversal and the symmetry flag") {
  const RateProtocol cos_p = testutil::cosine();
  const RateProtocol sin_p = testutil::sine();
  CHECK(cos_p.time_symmetric());
  CHECK(!sin_p.time_symmetric());
  const RateProtocol rev = sin_p.time_reversed();
  for (double t : {0.1, 0.5, 0.9})
    CHECK(rev.rate(0, 1, t) ==
          doctest::Approx(sin_p.rate(0, 1, 1.0 - t)).epsilon(1e-12));
  // homogeneous chains are trivially time-symmetric
  CHECK(testutil::ring().time_symmetric());
}

TEST_CASE("piecewise rates are continuous across ramps") {
  const RateProtocol p = testutil::piecewise();
  double prev = p.rate(0, 1, 0.0);
  double max_jump = 0.0;
  const int n = 20000;
  for (int k = 1; k <= n; ++k) {
    const double t = double(k) / double(n);
    const double v = p.rate(0, 1, t);
    max_jump = std::max(max_jump, std::abs(v - prev));
    CHECK(v >= 0.5 - 1e-12);
    CHECK(v <= 2.0 + 1e-12);
    prev = v;
  }
  // bounded slope: jump per 1/20000 step limited by ramp slope 75
  CHECK(max_jump < 1.5 / 0.02 / double(n) * 1.5);
  // wrap continuity
  CHECK(p.rate(0, 1, 0.0) == doctest::Approx(p.rate(0, 1, 1.0)).epsilon(1e-12));
}

TEST_CASE("JSON round trip preserves rates") {
  for (const RateProtocol& p :
       {testutil::ring(), testutil::sine(), testutil::piecewise()}) {
    const RateProtocol q = RateProtocol::from_json(p.to_json());
    CHECK(q.n_states() == p.n_states());
    CHECK(q.period() == p.period());
    for (double t : {0.0, 0.123, 0.5, 0.871})
      for (int i = 0; i < p.n_states(); ++i)
        for (int j = 0; j < p.n_states(); ++j)
          CHECK(q.rate(i, j, t) == doctest::Approx(p.rate(i, j, t)).epsilon(1e-14));
  }
}

TEST_CASE("JSON parse errors are config errors") {
  CHECK_THROWS_AS(RateProtocol::from_json("{ not json"), ConfigError);
  CHECK_THROWS_AS(RateProtocol::from_json("{\"n_states\": 2}"), ConfigError);
  CHECK_THROWS_AS(
      RateProtocol::from_json(
          "{\"n_states\":2,\"period\":1.0,\"edges\":[{\"from\":0,\"to\":1,"
          "\"kind\":\"nope\",\"value\":1.0}]}"),
      ConfigError);
}

TEST_CASE("absent edges read as zero") {
  const RateProtocol p = testutil::two_state();
  CHECK(p.rate(0, 1, 0.25) == 1.0);
  CHECK(!p.has_edge(0, 0));
  CHECK(p.has_edge(1, 0));
}
