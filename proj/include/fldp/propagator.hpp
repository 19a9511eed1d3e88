#ifndef FLDP_PROPAGATOR_HPP
#define FLDP_PROPAGATOR_HPP

#include <Eigen/Dense>
#include <functional>
#include <optional>
#include <vector>

#include "fldp/protocol.hpp"

namespace fldp {

enum class Functional { W, S };

/// The asymptotic T-periodic law nu(.,s), sampled on one period grid.
struct PeriodicLaw {
  double period = 0.0;
  std::vector<double> grid;                // ascending, grid.front()=0, back()=T
  std::vector<Eigen::VectorXd> slices;     // probability vector per grid time
  Eigen::VectorXd at(double s) const;      // linear interpolation, s mod T
};

/// The law mu(.,t) on the integrator step grid over [0, horizon].
struct LawTrajectory {
  std::vector<double> times;
  std::vector<Eigen::VectorXd> laws;
  double renorm_drift = 0.0;               // cumulative per-step renormalization
  std::optional<PeriodicLaw> asymptotic;
  Eigen::VectorXd at(double t) const;      // linear interpolation
};

struct PropagatorResult {
  Eigen::MatrixXd flow;
  double t_start = 0.0;
  double t_end = 0.0;
  int steps = 0;
};

struct PerronData {
  double eigenvalue = 0.0;   // spectral radius of the flow
  double exponent = 0.0;     // log(eigenvalue) / interval length
  Eigen::VectorXd right_vector;  // positive, unit 1-norm
  Eigen::VectorXd left_vector;   // positive, <left,right> = 1
  int power_iterations = 0;
  double spectral_gap = 0.0;     // eigenvalue - |second eigenvalue| estimate
};

/// Exponential tilt selector for monodromy/mgf builds.
struct Tilt {
  enum class Kind { None, W, S };
  Kind kind = Kind::None;
  double lambda = 0.0;
  const PeriodicLaw* periodic_law = nullptr;   // S tilt over one period
  const LawTrajectory* law_trajectory = nullptr;  // S tilt at finite horizon

  static Tilt none() { return {}; }
  static Tilt w(double lambda) { return {Kind::W, lambda, nullptr, nullptr}; }
  static Tilt s(double lambda, const PeriodicLaw& nu) {
    return {Kind::S, lambda, &nu, nullptr};
  }
  static Tilt s(double lambda, const LawTrajectory& mu) {
    return {Kind::S, lambda, nullptr, &mu};
  }
};

// Fixed-step 4th-order integration of d mu / dt = A*(t) mu, per-step
// renormalization with the cumulative drift logged.
LawTrajectory integrate_law(const RateProtocol& p, const Eigen::VectorXd& pi,
                            double horizon, int steps_per_period);

// Period-T time-ordered exponential of the tilted generator starting at
// t_anchor.  Forward traverses the period in descending protocol time (the
// reversed integrand of the forward MGF equation); Backward ascends.
PropagatorResult monodromy(const RateProtocol& p, const Tilt& tilt,
                           double t_anchor, Direction direction, int steps);

// Power iteration on a strictly positive flow matrix.
PerronData perron(const PropagatorResult& flow);

// Perron eigenvector of the forward-law period flow, propagated across one
// period.
PeriodicLaw asymptotic_law(const RateProtocol& p, int steps_per_period);

// Moment generating function vector u_lambda(., 0, t): component i is
// E_{i,0}[exp(lambda * functional(0,t))] (forward) or the backward-process
// analogue.  For Functional::S a LawTrajectory covering [0, t] is required.
Eigen::VectorXd mgf(const RateProtocol& p, Functional functional, double lambda,
                    double t, Direction direction, int steps_per_period,
                    const LawTrajectory* law = nullptr);

namespace detail {
// Ordered product of per-step flows of dy/ds = G(s) y over [s0, s1] traversed
// ascending, or of the descending-time integrand over the same interval.
// Each step flow is a 4th-order (two-node Gauss) approximation to the
// time-ordered step exponential.
using GeneratorFn = std::function<Eigen::MatrixXd(double)>;
Eigen::MatrixXd ordered_flow(const GeneratorFn& gen, double s0, double s1,
                             int steps, bool ascending);
Eigen::MatrixXd step_exp(const Eigen::MatrixXd& omega);
}  // namespace detail

}  // namespace fldp

#endif
