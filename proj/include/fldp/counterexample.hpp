#ifndef FLDP_COUNTEREXAMPLE_HPP
#define FLDP_COUNTEREXAMPLE_HPP

#include <Eigen/Dense>
#include <vector>

#include "fldp/propagator.hpp"

namespace fldp {

/// Epoch-doubling schedule: epoch k spans [t_{k-1}, t_k) with t_0 = 0 and
/// t_k = k * t_{k-1} for k >= 2, so consecutive epoch length ratios vanish.
struct EpochSchedule {
  double t1 = 0.0;
  std::vector<double> epochs;  // t_1 .. t_{k_max}
  int k_max = 0;
  double gamma = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double smoothing_width = 0.0;

  double horizon() const { return epochs.back(); }
  // 1-based epoch index containing t.
  int epoch_index(double t) const;
};

/// Aperiodic driving alternating a base generator (odd epochs) with its
/// gamma-scaled copy (even epochs), linear ramps at each epoch boundary.
class CounterexampleProtocol {
 public:
  CounterexampleProtocol(Eigen::MatrixXd base, EpochSchedule sched);

  int n_states() const { return int(base_.rows()); }
  const EpochSchedule& schedule() const { return sched_; }
  const Eigen::MatrixXd& base_generator() const { return base_; }

  Eigen::MatrixXd generator_at(double t) const;
  // Scale factor applied to the base generator at time t (ramps included).
  double scale_at(double t) const;
  // Largest |d scale/dt| over the ramps.
  double max_ramp_slope() const;

 private:
  Eigen::MatrixXd base_;
  EpochSchedule sched_;
};

// -1 / (second largest real part of the eigenvalues); the largest is 0.
double mixing_time(const Eigen::MatrixXd& generator);

// Kolmogorov cycle criterion: true when every simple cycle has equal forward
// and backward rate products.
bool satisfies_detailed_balance(const Eigen::MatrixXd& generator);

// base_rates: off-diagonal entries are rates (diagonal ignored).  t1 < 0 and
// smoothing_width < 0 select the defaults (10x the slower mixing time;
// min(0.01 t1, 1)).
CounterexampleProtocol build_counterexample(double alpha, double beta,
                                            const Eigen::MatrixXd& base_rates,
                                            double gamma, int k_max,
                                            double smoothing_width = -1.0,
                                            double t1 = -1.0);

struct TracePoint {
  double t = 0.0;
  int epoch = 0;
  int parity = 0;  // 0 = base generator epoch, 1 = gamma-scaled epoch
  double value = 0.0;  // c_S(lambda, t)
};

// Finite-horizon entropy-production free energy c_S(lambda, t) at the given
// sample times, from a single log-space forward solve of the tilted adjoint
// equation with the exact finite-t law co-integrated.  Uniform initial law.
std::vector<double> free_energy_trace(const detail::GeneratorFn& gen,
                                      double lambda,
                                      const std::vector<double>& sample_times,
                                      double step);

// Samples just before each epoch boundary (outside the ramp).
std::vector<TracePoint> free_energy_trace(const CounterexampleProtocol& cp,
                                          double lambda, double step = 0.01);

struct NonconvergenceReport {
  double liminf_est = 0.0;
  double limsup_est = 0.0;
  double gap = 0.0;
  bool nonconvergent = false;
  std::string verdict;  // "nonconvergent" or "convergent"
};

// Last value of each parity subsequence; nonconvergent when the gap exceeds
// 10x the integrator tolerance.
NonconvergenceReport detect_nonconvergence(const std::vector<TracePoint>& trace,
                                           double tol = 1e-6);

}  // namespace fldp

#endif
