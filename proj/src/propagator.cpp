#include "fldp/propagator.hpp"

#include <cmath>

#include "fldp/errors.hpp"

namespace fldp {

namespace {
constexpr double kGaussLo = 0.21132486540518711775;  // (3 - sqrt(3)) / 6
constexpr double kGaussHi = 0.78867513459481288225;  // (3 + sqrt(3)) / 6
constexpr double kCommutatorWeight = 0.14433756729740644113;  // sqrt(3) / 12

Eigen::VectorXd interp(const std::vector<double>& ts,
                       const std::vector<Eigen::VectorXd>& vs, double t) {
  if (ts.empty()) throw ConfigError("empty law trajectory");
  if (t <= ts.front()) return vs.front();
  if (t >= ts.back()) return vs.back();
  auto it = std::lower_bound(ts.begin(), ts.end(), t);
  std::size_t hi = std::size_t(it - ts.begin());
  std::size_t lo = hi - 1;
  const double theta = (t - ts[lo]) / (ts[hi] - ts[lo]);
  return (1.0 - theta) * vs[lo] + theta * vs[hi];
}

}  // namespace

Eigen::VectorXd PeriodicLaw::at(double s) const {
  double sm = std::fmod(s, period);
  if (sm < 0.0) sm += period;
  return interp(grid, slices, sm);
}

Eigen::VectorXd LawTrajectory::at(double t) const { return interp(times, laws, t); }

namespace detail {

Eigen::MatrixXd step_exp(const Eigen::MatrixXd& omega) {
  // Order-6 Taylor with scaling and squaring; the scaled norm is kept small
  // enough that the truncated series sits below double roundoff.
  const int n = int(omega.rows());
  const double norm = omega.cwiseAbs().rowwise().sum().maxCoeff();
  int squarings = 0;
  double scale = 1.0;
  while (norm * scale > 1.0 / 64.0 && squarings < 64) {
    scale *= 0.5;
    ++squarings;
  }
  const Eigen::MatrixXd scaled = scale * omega;
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n, n);
  for (int k = 6; k >= 1; --k)
    acc = Eigen::MatrixXd::Identity(n, n) + (scaled / double(k)) * acc;
  for (int s = 0; s < squarings; ++s) acc = acc * acc;
  return acc;
}

Eigen::MatrixXd ordered_flow(const GeneratorFn& gen, double s0, double s1,
                             int steps, bool ascending) {
  if (steps < 1) throw ConfigError("ordered_flow needs at least one step");
  const double h = (s1 - s0) / double(steps);
  const int n = int(gen(s0).rows());
  Eigen::MatrixXd acc = Eigen::MatrixXd::Identity(n, n);
  for (int k = 0; k < steps; ++k) {
    // Ascending: step k covers [s0 + k h, s0 + (k+1) h].
    // Descending: step k covers the k-th interval from the top.
    const double lo = ascending ? s0 + k * h : s1 - (k + 1) * h;
    const Eigen::MatrixXd a_lo = gen(lo + kGaussLo * h);
    const Eigen::MatrixXd a_hi = gen(lo + kGaussHi * h);
    Eigen::MatrixXd omega = 0.5 * h * (a_lo + a_hi);
    // Two-node Gauss (4th order); the commutator sign flips with the
    // traversal direction so that transposition maps one onto the other.
    const Eigen::MatrixXd comm = a_hi * a_lo - a_lo * a_hi;
    omega += (ascending ? kCommutatorWeight : -kCommutatorWeight) * h * h * comm;
    acc = step_exp(omega) * acc;
  }
  return acc;
}

}  // namespace detail

LawTrajectory integrate_law(const RateProtocol& p, const Eigen::VectorXd& pi,
                            double horizon, int steps_per_period) {
  p.require_valid();
  const int n = p.n_states();
  if (pi.size() != n) throw ConfigError("initial law dimension mismatch");
  if (std::abs(pi.sum() - 1.0) > 1e-9)
    throw ConfigError("initial law must sum to 1");
  if (horizon <= 0.0) throw ConfigError("horizon must be positive");
  if (steps_per_period < 1) throw ConfigError("steps_per_period must be positive");

  const double h0 = p.period() / double(steps_per_period);
  const long nsteps = long(std::ceil(horizon / h0 - 1e-12));

  LawTrajectory traj;
  traj.times.reserve(nsteps + 1);
  traj.laws.reserve(nsteps + 1);
  Eigen::VectorXd mu = pi;
  double t = 0.0;
  traj.times.push_back(0.0);
  traj.laws.push_back(mu);

  auto rhs = [&](double s, const Eigen::VectorXd& v) -> Eigen::VectorXd {
    return generator(p, s).transpose() * v;
  };

  for (long k = 0; k < nsteps; ++k) {
    const double h = std::min(h0, horizon - t);
    const Eigen::VectorXd k1 = rhs(t, mu);
    const Eigen::VectorXd k2 = rhs(t + h / 2.0, mu + (h / 2.0) * k1);
    const Eigen::VectorXd k3 = rhs(t + h / 2.0, mu + (h / 2.0) * k2);
    const Eigen::VectorXd k4 = rhs(t + h, mu + h * k3);
    mu += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    t += h;
    if (mu.minCoeff() < -1e-9)
      throw NumericalError(
          "law integration produced a negative component at t=" +
          std::to_string(t) + "; reduce the step size (increase steps_per_period)");
    mu = mu.cwiseMax(0.0);
    const double total = mu.sum();
    traj.renorm_drift += std::abs(total - 1.0);
    mu /= total;
    traj.times.push_back(t);
    traj.laws.push_back(mu);
  }
  return traj;
}

namespace {

Eigen::MatrixXd tilt_generator(const RateProtocol& p, const Tilt& tilt, double s,
                               Direction direction) {
  switch (tilt.kind) {
    case Tilt::Kind::None:
      return generator(p, s);
    case Tilt::Kind::W:
      return tilted_w(p, s, tilt.lambda);
    case Tilt::Kind::S: {
      Eigen::VectorXd law;
      if (tilt.periodic_law)
        law = tilt.periodic_law->at(s);
      else if (tilt.law_trajectory)
        law = tilt.law_trajectory->at(s);
      else
        throw ConfigError("S tilt requires a law");
      return tilted_s(p, s, tilt.lambda, law, direction);
    }
  }
  throw ConfigError("unknown tilt kind");
}

}  // namespace

PropagatorResult monodromy(const RateProtocol& p, const Tilt& tilt,
                           double t_anchor, Direction direction, int steps) {
  p.require_valid();
  const double T = p.period();
  auto gen = [&](double s) { return tilt_generator(p, tilt, s, direction); };
  PropagatorResult res;
  res.flow = detail::ordered_flow(gen, t_anchor, t_anchor + T, steps,
                                  direction == Direction::Backward);
  res.t_start = t_anchor;
  res.t_end = t_anchor + T;
  res.steps = steps;
  if (res.flow.minCoeff() <= 0.0)
    throw NumericalError(
        "monodromy has non-positive entries; increase the step count");
  return res;
}

PerronData perron(const PropagatorResult& flow) {
  const Eigen::MatrixXd& m = flow.flow;
  const int n = int(m.rows());
  if (m.minCoeff() <= 0.0)
    throw ConfigError("perron requires a strictly positive flow matrix");

  constexpr double kTol = 1e-12;
  constexpr int kMaxIter = 100000;

  auto iterate = [&](const Eigen::MatrixXd& mat, int& iters) {
    Eigen::VectorXd v = Eigen::VectorXd::Constant(n, 1.0 / double(n));
    double lam = 0.0;
    for (iters = 0; iters < kMaxIter; ++iters) {
      Eigen::VectorXd w = mat * v;
      const double next = w.sum();  // 1-norm of a positive vector
      w /= next;
      const bool done = std::abs(next - lam) <= kTol * std::abs(next) &&
                        (w - v).cwiseAbs().maxCoeff() <= kTol;
      lam = next;
      v = std::move(w);
      if (done) break;
    }
    if (iters >= kMaxIter)
      throw NumericalError("power iteration failed to converge");
    return std::make_pair(lam, v);
  };

  PerronData out;
  int it_r = 0, it_l = 0;
  auto [lam, v] = iterate(m, it_r);
  auto [lam_l, l] = iterate(m.transpose(), it_l);
  (void)lam_l;
  out.eigenvalue = lam;
  const double span = flow.t_end - flow.t_start;
  out.exponent = std::log(lam) / span;
  out.right_vector = v;
  out.left_vector = l / l.dot(v);
  out.power_iterations = it_r + it_l;

  // Second-eigenvalue estimate via deflation against the Perron pair.
  Eigen::VectorXd x = Eigen::VectorXd::Zero(n);
  x(0) = 1.0;
  if (n > 1) x(1) = -1.0;
  x -= out.left_vector.dot(x) * v;
  double theta2 = 0.0;
  for (int k = 0; k < 200 && n > 1; ++k) {
    Eigen::VectorXd y = m * x;
    y -= out.left_vector.dot(y) * v;
    const double norm = y.norm();
    if (norm < 1e-300) break;
    theta2 = norm / x.norm();
    x = y / norm;
  }
  out.spectral_gap = lam - theta2;
  if (!(theta2 < lam))
    throw NumericalError("degenerate spectrum: gap estimate " +
                         std::to_string(out.spectral_gap));
  return out;
}

PeriodicLaw asymptotic_law(const RateProtocol& p, int steps_per_period) {
  p.require_valid();
  const double T = p.period();
  const int n = p.n_states();
  auto gen = [&](double s) -> Eigen::MatrixXd {
    return generator(p, s).transpose();
  };
  PropagatorResult flow;
  flow.flow = detail::ordered_flow(gen, 0.0, T, steps_per_period, true);
  flow.t_start = 0.0;
  flow.t_end = T;
  flow.steps = steps_per_period;
  if (flow.flow.minCoeff() <= 0.0)
    throw NumericalError("forward-law period flow has non-positive entries");
  PerronData pd = perron(flow);
  if (std::abs(pd.eigenvalue - 1.0) > 1e-6)
    throw NumericalError("probability conservation violated: period-flow "
                         "eigenvalue " + std::to_string(pd.eigenvalue));

  PeriodicLaw nu;
  nu.period = T;
  nu.grid.reserve(steps_per_period + 1);
  nu.slices.reserve(steps_per_period + 1);
  Eigen::VectorXd slice = pd.right_vector / pd.right_vector.sum();
  const double h = T / double(steps_per_period);
  nu.grid.push_back(0.0);
  nu.slices.push_back(slice);
  for (int k = 0; k < steps_per_period; ++k) {
    const Eigen::MatrixXd step =
        detail::ordered_flow(gen, k * h, (k + 1) * h, 1, true);
    slice = step * slice;
    slice /= slice.sum();
    nu.grid.push_back((k + 1) * h);
    nu.slices.push_back(slice);
  }
  return nu;
}

Eigen::VectorXd mgf(const RateProtocol& p, Functional functional, double lambda,
                    double t, Direction direction, int steps_per_period,
                    const LawTrajectory* law) {
  p.require_valid();
  if (t <= 0.0) throw ConfigError("mgf horizon must be positive");
  Tilt tilt;
  if (functional == Functional::W) {
    tilt = Tilt::w(lambda);
  } else {
    if (!law) throw ConfigError("S functional requires a law trajectory");
    if (law->times.back() < t - 1e-9)
      throw ConfigError("law trajectory does not cover the mgf horizon");
    tilt = Tilt::s(lambda, *law);
  }
  auto gen = [&](double s) { return tilt_generator(p, tilt, s, direction); };
  const int steps =
      std::max(1, int(std::ceil(t / p.period() * double(steps_per_period))));
  const Eigen::MatrixXd flow = detail::ordered_flow(
      gen, 0.0, t, steps, direction == Direction::Backward);
  return flow * Eigen::VectorXd::Ones(p.n_states());
}

}  // namespace fldp
