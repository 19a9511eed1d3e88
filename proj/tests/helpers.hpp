#ifndef FLDP_TEST_HELPERS_HPP
#define FLDP_TEST_HELPERS_HPP

#include <fstream>
#include <sstream>
#include <string>

#include <Eigen/Eigenvalues>
#include <unsupported/Eigen/MatrixFunctions>

#include "fldp/propagator.hpp"
#include "fldp/protocol.hpp"

namespace testutil {

inline fldp::RateProtocol two_state() {
  fldp::RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), fldp::EdgeRate::constant(1.0));
  e.emplace(std::make_pair(1, 0), fldp::EdgeRate::constant(2.0));
  return fldp::RateProtocol(2, 1.0, std::move(e), "two-state");
}

inline fldp::RateProtocol ring(double p = 2.0, double q = 1.0) {
  fldp::RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), fldp::EdgeRate::constant(p));
  e.emplace(std::make_pair(1, 2), fldp::EdgeRate::constant(p));
  e.emplace(std::make_pair(2, 0), fldp::EdgeRate::constant(p));
  e.emplace(std::make_pair(1, 0), fldp::EdgeRate::constant(q));
  e.emplace(std::make_pair(2, 1), fldp::EdgeRate::constant(q));
  e.emplace(std::make_pair(0, 2), fldp::EdgeRate::constant(q));
  return fldp::RateProtocol(3, 1.0, std::move(e), "ring");
}

inline fldp::RateProtocol cosine() {
  fldp::RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), fldp::EdgeRate::fourier(1.0, {0.5}, {}));
  e.emplace(std::make_pair(1, 0), fldp::EdgeRate::constant(1.0));
  return fldp::RateProtocol(2, 1.0, std::move(e), "cosine");
}

inline fldp::RateProtocol sine() {
  fldp::RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1), fldp::EdgeRate::fourier(1.0, {}, {0.5}));
  e.emplace(std::make_pair(1, 0), fldp::EdgeRate::constant(1.0));
  return fldp::RateProtocol(2, 1.0, std::move(e), "sine");
}

inline fldp::RateProtocol piecewise() {
  fldp::RateProtocol::EdgeMap e;
  e.emplace(std::make_pair(0, 1),
            fldp::EdgeRate::piecewise({{0.0, 0.5, 2.0}, {0.5, 1.0, 0.5}}, 0.02));
  e.emplace(std::make_pair(1, 0), fldp::EdgeRate::constant(1.0));
  return fldp::RateProtocol(2, 1.0, std::move(e), "piecewise");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

// Largest real part over the spectrum (dense solve).
inline double top_real_eigenvalue(const Eigen::MatrixXd& m) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(m);
  double best = -1e300;
  for (int i = 0; i < m.rows(); ++i)
    best = std::max(best, es.eigenvalues()(i).real());
  return best;
}

// Independent flow oracle: ordered product of dense matrix exponentials of
// the generator frozen at substep midpoints (uniformization-style), earliest
// factor leftmost.
inline Eigen::MatrixXd matexp_flow(const fldp::detail::GeneratorFn& gen,
                                   double t0, double t1, int steps) {
  const int n = int(gen(t0).rows());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n, n);
  const double h = (t1 - t0) / double(steps);
  for (int k = 0; k < steps; ++k) {
    const double mid = t0 + (double(k) + 0.5) * h;
    const Eigen::MatrixXd step = (h * gen(mid)).exp();
    acc = acc * step;
  }
  return acc;
}

}  // namespace testutil

#endif
