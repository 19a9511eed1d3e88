#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fldp/counterexample.hpp"
#include "fldp/errors.hpp"
#include "helpers.hpp"

using namespace fldp;

namespace {

Eigen::MatrixXd ring_rates(double p = 2.0, double q = 1.0) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(3, 3);
  m(0, 1) = p; m(1, 2) = p; m(2, 0) = p;
  m(1, 0) = q; m(2, 1) = q; m(0, 2) = q;
  return m;
}

}  // namespace

TEST_CASE("mixing time closed forms") {
  Eigen::MatrixXd a(2, 2);
  a << -1.0, 1.0, 2.0, -2.0;  // eigenvalues {0, -3}
  CHECK(mixing_time(a) == doctest::Approx(1.0 / 3.0).epsilon(1e-10));
  Eigen::MatrixXd sym(2, 2);
  sym << -1.0, 1.0, 1.0, -1.0;  // eigenvalues {0, -2}
  CHECK(mixing_time(sym) == doctest::Approx(0.5).epsilon(1e-10));
  // eigenvalue homogeneity under scaling
  CHECK(mixing_time(3.0 * a) == doctest::Approx(mixing_time(a) / 3.0));
  CHECK_THROWS_AS(mixing_time(Eigen::MatrixXd::Zero(2, 2)), NumericalError);
}

TEST_CASE("detailed balance detection via cycle products") {
  // driven ring: cycle product 8 forward vs 1 backward
  CHECK(!satisfies_detailed_balance(ring_rates(2.0, 1.0)));
  // equal-rate ring is reversible
  CHECK(satisfies_detailed_balance(ring_rates(1.0, 1.0)));
  // chain graph (no cycle) is always reversible
  Eigen::MatrixXd chain = Eigen::MatrixXd::Zero(3, 3);
  chain(0, 1) = 2.0; chain(1, 0) = 0.7;
  chain(1, 2) = 1.3; chain(2, 1) = 3.0;
  for (int i = 0; i < 3; ++i) {
    chain(i, i) = 0.0;
    chain(i, i) = -chain.row(i).sum();
  }
  CHECK(satisfies_detailed_balance(chain));
}

TEST_CASE("construction guard rails") {
  const Eigen::MatrixXd base = ring_rates();
  // two-state chains are always reversible
  Eigen::MatrixXd two(2, 2);
  two << 0.0, 1.0, 2.0, 0.0;
  CHECK_THROWS_AS(build_counterexample(0.5, 5.0, two, 2.0, 8), ConfigError);
  // gamma * max rate hits the upper bound
  CHECK_THROWS_AS(build_counterexample(0.5, 3.9, base, 2.0, 8), ConfigError);
  // reversible base rejected
  CHECK_THROWS_AS(build_counterexample(0.5, 5.0, ring_rates(1.0, 1.0), 2.0, 8),
                  ConfigError);
  // gamma must exceed 1
  CHECK_THROWS_AS(build_counterexample(0.5, 5.0, base, 0.9, 8), ConfigError);
  // t1 below the enforced floor
  CHECK_THROWS_AS(build_counterexample(0.5, 5.0, base, 2.0, 8, -1.0, 0.5),
                  ConfigError);
  CHECK_NOTHROW(build_counterexample(0.5, 5.0, base, 2.0, 8));
}

TEST_CASE("epoch schedule arithmetic") {
  const CounterexampleProtocol cp =
      build_counterexample(0.5, 5.0, ring_rates(), 2.0, 8);
  const EpochSchedule& s = cp.schedule();
  REQUIRE(s.epochs.size() == 8);
  CHECK(s.epochs[0] == s.t1);
  for (std::size_t k = 1; k < s.epochs.size(); ++k) {
    CHECK(s.epochs[k] == doctest::Approx(double(k + 1) * s.epochs[k - 1]));
    // epoch length ratio premise: t_{k-1}/t_k = 1/(k+1) -> 0
    CHECK(s.epochs[k - 1] / s.epochs[k] == doctest::Approx(1.0 / double(k + 1)));
  }
  CHECK(s.t1 > 10.0 * mixing_time(cp.base_generator()) - 1e-9);
  CHECK(s.epoch_index(0.5 * s.t1) == 1);
  CHECK(s.epoch_index(s.epochs[3] + 1.0) == 5);
}

TEST_CASE("rates stay inside the bounds, ramps included") {
  const CounterexampleProtocol cp =
      build_counterexample(0.5, 5.0, ring_rates(), 2.0, 6);
  const EpochSchedule& s = cp.schedule();
  // dense scan across the first boundary plus coarse scan of the horizon
  for (int i = 0; i <= 1000; ++i) {
    const double t =
        s.epochs[0] - s.smoothing_width + 2.0 * s.smoothing_width * i / 1000.0;
    const Eigen::MatrixXd a = cp.generator_at(t);
    for (int r = 0; r < 3; ++r)
      for (int c = 0; c < 3; ++c) {
        if (r == c) continue;
        CHECK(a(r, c) > 0.5);
        CHECK(a(r, c) < 5.0);
      }
    const double sc = cp.scale_at(t);
    CHECK(sc >= 1.0);
    CHECK(sc <= 2.0);
  }
  CHECK(cp.scale_at(0.5 * s.epochs[0]) == 1.0);
  CHECK(cp.scale_at(0.5 * (s.epochs[0] + s.epochs[1])) == 2.0);
  CHECK(cp.max_ramp_slope() ==
        doctest::Approx(1.0 / s.smoothing_width).epsilon(1e-12));
}

TEST_CASE("trace at lambda 0 vanishes") {
  const CounterexampleProtocol cp =
      build_counterexample(0.5, 5.0, ring_rates(), 2.0, 4);
  const std::vector<TracePoint> trace = free_energy_trace(cp, 0.0, 0.05);
  for (const TracePoint& tp : trace) CHECK(std::abs(tp.value) < 1e-8);
}

TEST_CASE("nonconvergence verdict logic") {
  std::vector<TracePoint> few = {{1, 1, 0, 0.5}, {2, 2, 1, 1.0},
                                 {3, 3, 0, 0.5}, {4, 4, 1, 1.0}};
  CHECK_THROWS_AS(detect_nonconvergence(few), StatisticalError);

  std::vector<TracePoint> trace;
  for (int k = 1; k <= 8; ++k)
    trace.push_back({double(k), k, k % 2 == 1 ? 0 : 1,
                     k % 2 == 1 ? 0.5 : 0.9});
  const NonconvergenceReport rep = detect_nonconvergence(trace);
  CHECK(rep.nonconvergent);
  CHECK(rep.verdict == "nonconvergent");
  CHECK(rep.liminf_est == doctest::Approx(0.5));
  CHECK(rep.limsup_est == doctest::Approx(0.9));
  CHECK(rep.gap == doctest::Approx(0.4));

  for (TracePoint& tp : trace) tp.value = 0.7;
  const NonconvergenceReport conv = detect_nonconvergence(trace);
  CHECK(!conv.nonconvergent);
  CHECK(conv.verdict == "convergent");
}

TEST_CASE("short construction run separates the parities") {
  const CounterexampleProtocol cp =
      build_counterexample(0.5, 5.0, ring_rates(), 2.0, 6);
  const std::vector<TracePoint> up = free_energy_trace(cp, 0.5, 0.02);
  const NonconvergenceReport rep = detect_nonconvergence(up);
  CHECK(rep.nonconvergent);
  CHECK(rep.gap > 0.1);
  // gamma-scaled epochs carry the larger value at positive lambda
  double last0 = 0, last1 = 0;
  for (const TracePoint& tp : up) (tp.parity == 0 ? last0 : last1) = tp.value;
  CHECK(last1 > last0);

  // ordering reverses at negative lambda
  const std::vector<TracePoint> down = free_energy_trace(cp, -0.5, 0.02);
  for (const TracePoint& tp : down) (tp.parity == 0 ? last0 : last1) = tp.value;
  CHECK(last1 < last0);
  CHECK(detect_nonconvergence(down).nonconvergent);
}
