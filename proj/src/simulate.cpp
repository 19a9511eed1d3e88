#include "fldp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "fldp/errors.hpp"

namespace fldp {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * threads) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<long> next{0};
  for (int w = 0; w < threads; ++w) {
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  }
  for (auto& th : pool) th.join();
}

double log_sum_exp(const std::vector<double>& xs) {
  const double m = *std::max_element(xs.begin(), xs.end());
  if (!std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : xs) s += std::exp(x - m);
  return m + std::log(s);
}

}  // namespace

RngStream RngStream::for_path(std::uint64_t seed, std::uint64_t path_id) {
  return RngStream(splitmix64(seed) ^ splitmix64(path_id * 0x9e3779b97f4a7c15ULL + 1));
}

std::uint64_t RngStream::next() {
  state_ = splitmix64(state_);
  return state_;
}

double RngStream::uniform() {
  // 53-bit mantissa draw in (0, 1)
  const double u = double(next() >> 11) * 0x1.0p-53;
  return u <= 0.0 ? 0x1.0p-53 : u;
}

double RngStream::exponential(double rate) {
  return -std::log(uniform()) / rate;
}

int RngStream::pick(const std::vector<double>& weights, double total) {
  double target = uniform() * total;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    target -= weights[i];
    if (target <= 0.0) return int(i);
  }
  return int(weights.size()) - 1;
}

int Trajectory::state_at(double t) const {
  int s = initial_state;
  for (const Jump& j : jumps) {
    if (j.time > t) break;
    s = j.target;
  }
  return s;
}

ThinningBound ThinningBound::from(const RateProtocol& p, int grid_points) {
  p.require_valid();
  double kmax = 0.0;
  for (int g = 0; g < grid_points; ++g) {
    const double t = p.period() * double(g) / double(grid_points);
    for (int i = 0; i < p.n_states(); ++i) {
      double escape = 0.0;
      for (int j = 0; j < p.n_states(); ++j)
        if (j != i) escape += p.rate(i, j, t);
      kmax = std::max(kmax, escape);
    }
  }
  return ThinningBound{kmax * 1.001};
}

Trajectory sample_trajectory(const RateProtocol& p, int initial_state,
                             double horizon, RngStream& rng,
                             const ThinningBound& bound) {
  p.require_valid();
  if (initial_state < 0 || initial_state >= p.n_states())
    throw ConfigError("initial state out of range");
  Trajectory traj;
  traj.initial_state = initial_state;
  traj.horizon = horizon;

  const int n = p.n_states();
  std::vector<double> row(n, 0.0);
  int state = initial_state;
  double t = 0.0;
  while (true) {
    t += rng.exponential(bound.k_max);
    if (t >= horizon) break;
    double escape = 0.0;
    for (int j = 0; j < n; ++j) {
      row[j] = (j == state) ? 0.0 : p.rate(state, j, t);
      escape += row[j];
    }
    if (escape > bound.k_max)
      throw NumericalError("escape rate " + std::to_string(escape) +
                           " exceeds thinning bound " + std::to_string(bound.k_max));
    if (rng.uniform() * bound.k_max <= escape) {
      state = rng.pick(row, escape);
      traj.jumps.push_back({t, state});
    }
  }
  return traj;
}

PathFunctionals path_functionals(const RateProtocol& p, const Trajectory& traj,
                                 const LawTrajectory& law) {
  if (law.times.back() < traj.horizon - 1e-9)
    throw ConfigError("law trajectory does not cover the path horizon");
  PathFunctionals out;
  out.w_increments.reserve(traj.jumps.size());
  int from = traj.initial_state;
  for (const Jump& j : traj.jumps) {
    const double k_fwd = p.rate(from, j.target, j.time);
    const double k_bwd = p.rate(j.target, from, j.time);
    if (k_bwd <= kRateEps)
      throw ValidationError("traversed jump has zero reverse rate at t=" +
                            std::to_string(j.time));
    const double inc = std::log(k_fwd / k_bwd);
    out.w_increments.push_back(inc);
    out.w_total += inc;
    from = j.target;
  }
  const Eigen::VectorXd mu0 = law.at(0.0);
  const Eigen::VectorXd mut = law.at(traj.horizon);
  out.s_total = out.w_total + std::log(mu0(traj.initial_state)) -
                std::log(mut(traj.final_state()));
  return out;
}

Trajectory reverse_trajectory(const Trajectory& traj) {
  Trajectory rev;
  rev.horizon = traj.horizon;
  rev.seed = traj.seed;
  rev.initial_state = traj.final_state();
  int target = traj.jumps.empty() ? traj.initial_state : traj.initial_state;
  // Jump at tau from a to b becomes a jump at horizon - tau from b to a.
  for (auto it = traj.jumps.rbegin(); it != traj.jumps.rend(); ++it) {
    const std::size_t idx = std::size_t(traj.jumps.rend() - it) - 1;
    const int from_state =
        idx == 0 ? traj.initial_state : traj.jumps[idx - 1].target;
    rev.jumps.push_back({traj.horizon - it->time, from_state});
  }
  (void)target;
  return rev;
}

double log_path_density(const RateProtocol& p, const Trajectory& traj,
                        const Eigen::VectorXd& pi, int steps_per_period) {
  p.require_valid();
  double logf = std::log(pi(traj.initial_state));
  const double hq = p.period() / double(steps_per_period);

  // Composite Simpson over one holding interval; the node count depends only
  // on the interval length so that reversed evaluations reuse the same nodes.
  auto survival = [&](int state, double a, double b) {
    const double len = b - a;
    if (len <= 0.0) return 0.0;
    int m = 2 * std::max(1, int(std::ceil(len / (2.0 * hq))));
    const double h = len / double(m);
    auto escape = [&](double s) {
      double e = 0.0;
      for (int j = 0; j < p.n_states(); ++j)
        if (j != state) e += p.rate(state, j, s);
      return e;
    };
    double sum = escape(a) + escape(b);
    for (int k = 1; k < m; ++k) sum += (k % 2 ? 4.0 : 2.0) * escape(a + k * h);
    return sum * h / 3.0;
  };

  int state = traj.initial_state;
  double prev = 0.0;
  for (const Jump& j : traj.jumps) {
    logf -= survival(state, prev, j.time);
    logf += std::log(p.rate(state, j.target, j.time));
    state = j.target;
    prev = j.time;
  }
  logf -= survival(state, prev, traj.horizon);
  return logf;
}

std::vector<double> sample_functionals(const RateProtocol& p,
                                       Functional functional, double t,
                                       long n_paths, std::uint64_t seed,
                                       const LawTrajectory& law, int threads) {
  const ThinningBound bound = ThinningBound::from(p);
  const int n = p.n_states();
  std::vector<double> values(std::size_t(n_paths), 0.0);
  parallel_for(n_paths, threads, [&](long i) {
    RngStream rng = RngStream::for_path(seed, std::uint64_t(i));
    // Initial state from the law's t=0 slice.
    const Eigen::VectorXd pi = law.at(0.0);
    double u = rng.uniform();
    int init = n - 1;
    for (int s = 0; s < n; ++s) {
      u -= pi(s);
      if (u <= 0.0) { init = s; break; }
    }
    Trajectory traj = sample_trajectory(p, init, t, rng, bound);
    traj.seed = {seed, std::uint64_t(i)};
    const PathFunctionals f = path_functionals(p, traj, law);
    values[std::size_t(i)] = (functional == Functional::W) ? f.w_total : f.s_total;
  });
  return values;
}

McEstimate mc_mgf(const RateProtocol& p, Functional functional, double lambda,
                  double t, long n_paths, std::uint64_t seed,
                  int steps_per_period, int threads) {
  if (n_paths < 100) throw ConfigError("mc_mgf needs at least 100 paths");
  const Eigen::VectorXd pi =
      Eigen::VectorXd::Constant(p.n_states(), 1.0 / double(p.n_states()));
  const LawTrajectory law = integrate_law(p, pi, t, steps_per_period);
  const std::vector<double> fs =
      sample_functionals(p, functional, t, n_paths, seed, law, threads);

  McEstimate est;
  est.n_paths = n_paths;
  est.target = std::string("E[exp(lambda ") +
               (functional == Functional::W ? "W" : "S") +
               ")], lambda=" + std::to_string(lambda) + ", t=" + std::to_string(t);
  if (lambda == 0.0) {
    est.mean = 1.0;
    est.std_error = 0.0;
    return est;
  }
  // Accumulate in log space; large lambda * functional otherwise overflows.
  std::vector<double> exps(fs.size()), exps2(fs.size());
  double max_exp = -1e300;
  for (std::size_t i = 0; i < fs.size(); ++i) {
    exps[i] = lambda * fs[i];
    exps2[i] = 2.0 * lambda * fs[i];
    max_exp = std::max(max_exp, exps[i]);
  }
  const double log_mean = log_sum_exp(exps) - std::log(double(n_paths));
  const double log_m2 = log_sum_exp(exps2) - std::log(double(n_paths));
  est.mean = std::exp(log_mean);
  if (!std::isfinite(est.mean))
    throw NumericalError("mc_mgf estimate unstable: max exponent " +
                         std::to_string(max_exp));
  const double var = std::exp(log_m2) - est.mean * est.mean;
  est.std_error = std::sqrt(std::max(0.0, var) / double(n_paths));
  return est;
}

McEstimate mc_time_average(const RateProtocol& p, Functional functional,
                           double t, long n_paths, std::uint64_t seed,
                           int steps_per_period, int threads) {
  const Eigen::VectorXd pi =
      Eigen::VectorXd::Constant(p.n_states(), 1.0 / double(p.n_states()));
  const LawTrajectory law = integrate_law(p, pi, t, steps_per_period);
  const std::vector<double> fs =
      sample_functionals(p, functional, t, n_paths, seed, law, threads);
  McEstimate est;
  est.n_paths = n_paths;
  est.target = std::string("time-averaged ") +
               (functional == Functional::W ? "W" : "S") + "/t at t=" +
               std::to_string(t);
  if (t < 20.0 * p.period()) est.target += " [warning: t < 20 periods]";
  double sum = 0.0, sum2 = 0.0;
  for (double f : fs) {
    const double v = f / t;
    sum += v;
    sum2 += v * v;
  }
  est.mean = sum / double(n_paths);
  const double var = sum2 / double(n_paths) - est.mean * est.mean;
  est.std_error = std::sqrt(std::max(0.0, var) / double(n_paths));
  return est;
}

}  // namespace fldp
