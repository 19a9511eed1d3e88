#ifndef FLDP_SIMULATE_HPP
#define FLDP_SIMULATE_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "fldp/propagator.hpp"
#include "fldp/protocol.hpp"

namespace fldp {

/// Counter-based deterministic RNG stream; one stream per (seed, path_id).
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : state_(seed) { next(); next(); }
  static RngStream for_path(std::uint64_t seed, std::uint64_t path_id);

  std::uint64_t next();
  double uniform();                 // (0, 1)
  double exponential(double rate);  // inverse transform
  // Index sampled proportionally to weights[0..n); total must equal their sum.
  int pick(const std::vector<double>& weights, double total);

 private:
  std::uint64_t state_;
};

struct Jump {
  double time = 0.0;
  int target = 0;
};

struct SeedRecord {
  std::uint64_t seed = 0;
  std::uint64_t path_id = 0;
};

struct Trajectory {
  int initial_state = 0;
  std::vector<Jump> jumps;   // strictly increasing times in (0, horizon)
  double horizon = 0.0;
  SeedRecord seed;

  int state_at(double t) const;
  int final_state() const { return jumps.empty() ? initial_state : jumps.back().target; }
};

struct PathFunctionals {
  double w_total = 0.0;
  double s_total = 0.0;
  std::vector<double> w_increments;  // one per jump
};

struct McEstimate {
  double mean = 0.0;
  double std_error = 0.0;
  long n_paths = 0;
  std::string target;
};

/// Global proposal rate for thinning: grid maximum of the escape rates with a
/// 1.001 safety factor, re-verified per proposal during sampling.
struct ThinningBound {
  double k_max = 0.0;
  static ThinningBound from(const RateProtocol& p, int grid_points = 4096);
};

// Lewis-Shedler/Ogata thinning; exact in distribution.
Trajectory sample_trajectory(const RateProtocol& p, int initial_state,
                             double horizon, RngStream& rng,
                             const ThinningBound& bound);

// Heat W(0,t) from jump increments; entropy production S(0,t) adds the
// boundary system-entropy terms from the law.
PathFunctionals path_functionals(const RateProtocol& p, const Trajectory& traj,
                                 const LawTrajectory& law);

// Reversed spacetime curve: jumps mirrored about horizon/2, targets reversed.
Trajectory reverse_trajectory(const Trajectory& traj);

// log density of the path under the chain started from pi (jump-count
// prefactor omitted: standard CTMC path density).  Survival integrals use
// composite Simpson quadrature at roughly the propagator step resolution.
double log_path_density(const RateProtocol& p, const Trajectory& traj,
                        const Eigen::VectorXd& pi, int steps_per_period = 2048);

McEstimate mc_mgf(const RateProtocol& p, Functional functional, double lambda,
                  double t, long n_paths, std::uint64_t seed,
                  int steps_per_period = 2048, int threads = 1);

McEstimate mc_time_average(const RateProtocol& p, Functional functional,
                           double t, long n_paths, std::uint64_t seed,
                           int steps_per_period = 2048, int threads = 1);

// Per-path time-averaged functional values (building block for the MC
// estimators and the probability-ratio check).
std::vector<double> sample_functionals(const RateProtocol& p,
                                       Functional functional, double t,
                                       long n_paths, std::uint64_t seed,
                                       const LawTrajectory& law, int threads);

}  // namespace fldp

#endif
