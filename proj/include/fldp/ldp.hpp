#ifndef FLDP_LDP_HPP
#define FLDP_LDP_HPP

#include <string>
#include <vector>

#include "fldp/propagator.hpp"
#include "fldp/protocol.hpp"

namespace fldp {

/// Scaled cumulant generating function c(lambda) on a lambda grid, one value
/// per point (the principal Floquet exponent of the tilted monodromy).
struct FreeEnergyCurve {
  Functional functional = Functional::W;
  Direction direction = Direction::Forward;
  std::vector<double> lambdas;
  std::vector<double> values;
  std::vector<double> gaps;   // Perron gap per point
  int steps = 0;              // monodromy steps per period

  double at(double lambda) const;  // cubic spline evaluation
};

struct RateFunction {
  std::vector<double> zs;
  std::vector<double> values;
  std::vector<double> argmax_lambdas;
  std::vector<char> boundary;  // supremum at the lambda-grid edge: unreliable
  double minimizer_z = 0.0;
  double minimizer_value = 0.0;
};

struct EpCurve {
  std::vector<double> grid;    // times in [0, T]
  std::vector<double> values;  // e_p(s)
  double time_average = 0.0;
};

struct FtResiduals {
  double c_max = 0.0;   // |c(lambda) - c^B(-(1+lambda))|
  double c_mean = 0.0;
  double ft_max = 0.0;  // |I(z) - I^B(-z) + z| over unflagged z
  double ft_mean = 0.0;
  double gc_max = 0.0;  // |c(lambda) - c(-1-lambda)|, time-symmetric case only
  bool time_symmetric = false;
  long ft_points = 0;   // z points entering the FT residual
};

// 201 uniform points on [-3, 2]; symmetric about the pivot lambda = -1/2 so
// that lambda <-> -(1+lambda) maps grid points to grid points.
std::vector<double> default_lambda_grid(int points = 201);

// Symmetric z grid (odd point count, includes 0) covering the slope ranges of
// both curves so that z <-> -z maps grid points to grid points.
std::vector<double> symmetric_z_grid(const FreeEnergyCurve& fwd,
                                     const FreeEnergyCurve& bwd,
                                     int points = 401);

// z grid spanning the reachable slope range [c'(lambda_min), c'(lambda_max)].
std::vector<double> default_z_grid(const FreeEnergyCurve& curve,
                                   int points = 401);

FreeEnergyCurve free_energy_curve(const RateProtocol& p, Functional functional,
                                  Direction direction,
                                  const std::vector<double>& lambda_grid,
                                  int steps, int threads = 1);

// Pointwise sup_lambda {lambda z - c(lambda)}: grid argmax refined by
// golden-section search on the cubic spline; ties toward smallest lambda.
RateFunction legendre_fenchel(const FreeEnergyCurve& curve,
                              const std::vector<double>& z_grid);

// Single-point transform; sets *boundary when the sup sits at the grid edge.
double rate_at(const FreeEnergyCurve& curve, double z,
               bool* boundary = nullptr);

// 5-point central difference at lambda = 0; *richardson receives the
// difference against the spacing-2h stencil when requested.
double derivative_at_zero(const FreeEnergyCurve& curve,
                          double* richardson = nullptr);

double ep_rate(const RateProtocol& p, const PeriodicLaw& nu, double s);

EpCurve ep_curve(const RateProtocol& p, int steps);

FtResiduals ft_residuals(const FreeEnergyCurve& fwd, const FreeEnergyCurve& bwd,
                         const RateFunction& fwd_rate,
                         const RateFunction& bwd_rate, bool time_symmetric);

// Monte Carlo estimate of (1/t) log of
// P(S(0,t)/t in [z-eps, z+eps]) / P^B(S^B(0,t)/t in [-z-eps, -z+eps]).
// t is rounded to the nearest whole number of periods (>= 1).
double probability_ratio(const RateProtocol& p, double z, double epsilon,
                         double t, long n_paths, std::uint64_t seed,
                         int steps_per_period = 2048, int threads = 1);

}  // namespace fldp

#endif
