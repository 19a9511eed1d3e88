#include "fldp/counterexample.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include <Eigen/Eigenvalues>

#include "fldp/errors.hpp"
#include "fldp/protocol.hpp"

namespace fldp {

namespace {

Eigen::MatrixXd with_diagonal(const Eigen::MatrixXd& rates) {
  Eigen::MatrixXd a = rates;
  for (int i = 0; i < a.rows(); ++i) {
    a(i, i) = 0.0;
    a(i, i) = -a.row(i).sum();
  }
  return a;
}

// Entropy-production tilted generator for an instantaneous generator a and
// law mu; lambda = 0 reduces to a itself.
Eigen::MatrixXd tilted_from_generator(const Eigen::MatrixXd& a, double lambda,
                                      const Eigen::VectorXd& mu) {
  const int n = int(a.rows());
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    double escape = 0.0;
    double inflow = 0.0;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      const double kij = a(i, j);
      const double kji = a(j, i);
      escape += kij;
      inflow += kji * mu(j) / mu(i);
      if (kij <= kRateEps) {
        if (kji > kRateEps)
          throw ValidationError("one-sided edge in counterexample generator");
        continue;
      }
      if (kji <= kRateEps)
        throw ValidationError("one-sided edge in counterexample generator");
      m(i, j) = (lambda == 0.0)
                    ? kij
                    : std::pow(kij, 1.0 + lambda) * std::pow(kji, -lambda) *
                          std::pow(mu(i) / mu(j), lambda);
    }
    m(i, i) = -((1.0 - lambda) * escape + lambda * inflow);
  }
  return m;
}

}  // namespace

int EpochSchedule::epoch_index(double t) const {
  for (std::size_t k = 0; k < epochs.size(); ++k)
    if (t < epochs[k]) return int(k) + 1;
  return k_max;
}

CounterexampleProtocol::CounterexampleProtocol(Eigen::MatrixXd base,
                                               EpochSchedule sched)
    : base_(std::move(base)), sched_(std::move(sched)) {}

double CounterexampleProtocol::scale_at(double t) const {
  const double w = sched_.smoothing_width;
  auto factor = [&](int epoch) { return (epoch % 2 == 1) ? 1.0 : sched_.gamma; };
  // Ramp across each interior boundary t_m, m = 1 .. k_max-1.
  for (int m = 1; m < sched_.k_max; ++m) {
    const double tm = sched_.epochs[std::size_t(m) - 1];
    if (std::abs(t - tm) <= 0.5 * w) {
      const double theta = (t - (tm - 0.5 * w)) / w;
      return (1.0 - theta) * factor(m) + theta * factor(m + 1);
    }
  }
  return factor(sched_.epoch_index(t));
}

Eigen::MatrixXd CounterexampleProtocol::generator_at(double t) const {
  return scale_at(t) * base_;
}

double CounterexampleProtocol::max_ramp_slope() const {
  return std::abs(sched_.gamma - 1.0) / sched_.smoothing_width;
}

double mixing_time(const Eigen::MatrixXd& generator) {
  Eigen::EigenSolver<Eigen::MatrixXd> es(generator);
  std::vector<double> reals(std::size_t(generator.rows()));
  for (int i = 0; i < generator.rows(); ++i)
    reals[std::size_t(i)] = es.eigenvalues()(i).real();
  std::sort(reals.begin(), reals.end(), std::greater<>());
  if (reals.size() < 2)
    throw ConfigError("mixing_time needs at least two states");
  const double lam2 = reals[1];
  if (std::abs(lam2) < 1e-12)
    throw NumericalError("degenerate spectral gap: second eigenvalue " +
                         std::to_string(lam2));
  return -1.0 / lam2;
}

bool satisfies_detailed_balance(const Eigen::MatrixXd& generator) {
  const int n = int(generator.rows());
  auto has = [&](int i, int j) { return generator(i, j) > kRateEps; };

  // Enumerate simple cycles of length >= 3 whose smallest vertex is the
  // start; compare forward and backward rate products (Kolmogorov).
  bool balanced = true;
  std::vector<int> path;
  std::vector<char> used(std::size_t(n), 0);
  std::function<void(int)> dfs = [&](int u) {
    if (!balanced) return;
    const int s = path.front();
    for (int v = 0; v < n; ++v) {
      if (!has(u, v)) continue;
      if (v == s && path.size() >= 3) {
        double lf = 0.0, lb = 0.0;
        bool ok = true;
        for (std::size_t e = 0; e < path.size(); ++e) {
          const int a = path[e];
          const int b = path[(e + 1) % path.size()];
          if (!has(b, a)) { ok = false; break; }
          lf += std::log(generator(a, b));
          lb += std::log(generator(b, a));
        }
        if (!ok || std::abs(lf - lb) > 1e-12) balanced = false;
      } else if (v > s && !used[std::size_t(v)]) {
        used[std::size_t(v)] = 1;
        path.push_back(v);
        dfs(v);
        path.pop_back();
        used[std::size_t(v)] = 0;
      }
    }
  };
  for (int s = 0; s < n - 2 && balanced; ++s) {
    path.assign(1, s);
    used.assign(std::size_t(n), 0);
    used[std::size_t(s)] = 1;
    dfs(s);
  }
  return balanced;
}

CounterexampleProtocol build_counterexample(double alpha, double beta,
                                            const Eigen::MatrixXd& base_rates,
                                            double gamma, int k_max,
                                            double smoothing_width, double t1) {
  const int n = int(base_rates.rows());
  if (base_rates.cols() != n || n < 2)
    throw ConfigError("base rates must be a square matrix, n >= 2");
  if (n == 2)
    throw ConfigError(
        "two-state chains always satisfy detailed balance; construction "
        "requires a violation");
  if (gamma <= 1.0) throw ConfigError("gamma must exceed 1");
  if (k_max < 2) throw ConfigError("k_max must be at least 2");
  if (!(alpha > 0.0 && beta > alpha)) throw ConfigError("need 0 < alpha < beta");

  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (i == j) continue;
      const double k = base_rates(i, j);
      const bool fwd = k > kRateEps;
      const bool bwd = base_rates(j, i) > kRateEps;
      if (fwd != bwd)
        throw ConfigError("base rates have a one-sided edge (" +
                          std::to_string(i + 1) + "," + std::to_string(j + 1) + ")");
      if (!fwd) continue;
      if (!(alpha < k && k < beta))
        throw ConfigError("rate " + std::to_string(k) +
                          " outside (alpha, beta)");
      if (!(alpha < gamma * k && gamma * k < beta))
        throw ConfigError("scaled rate " + std::to_string(gamma * k) +
                          " outside (alpha, beta)");
    }
  }

  const Eigen::MatrixXd a = with_diagonal(base_rates);
  if (satisfies_detailed_balance(a))
    throw ConfigError(
        "base rates satisfy detailed balance; construction requires a "
        "violation");

  const double tau = std::max(mixing_time(a), mixing_time(gamma * a));
  if (t1 < 0.0) t1 = 10.0 * tau;
  if (!(t1 > 10.0 * tau - 1e-12))
    throw ConfigError("t1 = " + std::to_string(t1) +
                      " must exceed 10x the mixing time " + std::to_string(tau));
  if (smoothing_width < 0.0) smoothing_width = std::min(0.01 * t1, 1.0);
  if (!(smoothing_width > 0.0 && smoothing_width < 0.5 * t1))
    throw ConfigError("smoothing width must lie in (0, t1/2)");

  EpochSchedule sched;
  sched.t1 = t1;
  sched.k_max = k_max;
  sched.gamma = gamma;
  sched.alpha = alpha;
  sched.beta = beta;
  sched.smoothing_width = smoothing_width;
  sched.epochs.push_back(t1);
  for (int k = 2; k <= k_max; ++k)
    sched.epochs.push_back(double(k) * sched.epochs.back());
  return CounterexampleProtocol(a, sched);
}

std::vector<double> free_energy_trace(const detail::GeneratorFn& gen,
                                      double lambda,
                                      const std::vector<double>& sample_times,
                                      double step) {
  if (sample_times.empty()) throw ConfigError("no sample times");
  if (!std::is_sorted(sample_times.begin(), sample_times.end()))
    throw ConfigError("sample times must be ascending");
  if (sample_times.front() <= 0.0)
    throw ConfigError("sample times must be positive");
  if (step <= 0.0) throw ConfigError("step must be positive");

  const int n = int(gen(0.0).rows());
  Eigen::VectorXd mu = Eigen::VectorXd::Constant(n, 1.0 / double(n));
  Eigen::VectorXd r = mu;
  double log_z = 0.0;
  double s = 0.0;

  auto advance = [&](double h) {
    const Eigen::VectorXd mu_old = mu;
    auto rhs = [&](double at, const Eigen::VectorXd& v) -> Eigen::VectorXd {
      return gen(at).transpose() * v;
    };
    const Eigen::VectorXd k1 = rhs(s, mu);
    const Eigen::VectorXd k2 = rhs(s + h / 2.0, mu + (h / 2.0) * k1);
    const Eigen::VectorXd k3 = rhs(s + h / 2.0, mu + (h / 2.0) * k2);
    const Eigen::VectorXd k4 = rhs(s + h, mu + h * k3);
    mu += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    mu = mu.cwiseMax(1e-300);
    mu /= mu.sum();

    const Eigen::VectorXd mu_mid = 0.5 * (mu_old + mu);
    const Eigen::MatrixXd m =
        tilted_from_generator(gen(s + h / 2.0), lambda, mu_mid);
    r = detail::step_exp(h * m).transpose() * r;
    const double total = r.sum();
    if (!(total > 0.0) || !std::isfinite(total))
      throw NumericalError("tilted adjoint solve lost positivity at t=" +
                           std::to_string(s));
    log_z += std::log(total);
    r /= total;
    s += h;
  };

  std::vector<double> out;
  out.reserve(sample_times.size());
  for (double target : sample_times) {
    while (target - s > step + 1e-12) advance(step);
    if (target - s > 1e-12) advance(target - s);
    out.push_back(log_z / target);
  }
  return out;
}

std::vector<TracePoint> free_energy_trace(const CounterexampleProtocol& cp,
                                          double lambda, double step) {
  const EpochSchedule& sched = cp.schedule();
  std::vector<double> times;
  std::vector<TracePoint> pts;
  for (int k = 1; k <= sched.k_max; ++k) {
    // Just before the boundary, clear of the smoothing ramp.
    const double t = sched.epochs[std::size_t(k) - 1] - sched.smoothing_width;
    times.push_back(t);
    pts.push_back({t, k, (k % 2 == 1) ? 0 : 1, 0.0});
  }
  const std::vector<double> vals = free_energy_trace(
      [&](double t) { return cp.generator_at(t); }, lambda, times, step);
  for (std::size_t i = 0; i < pts.size(); ++i) pts[i].value = vals[i];
  return pts;
}

NonconvergenceReport detect_nonconvergence(const std::vector<TracePoint>& trace,
                                           double tol) {
  int count[2] = {0, 0};
  double last[2] = {0.0, 0.0};
  for (const TracePoint& p : trace) {
    if (p.parity != 0 && p.parity != 1)
      throw ConfigError("trace parity must be 0 or 1");
    ++count[p.parity];
    last[p.parity] = p.value;
  }
  if (count[0] < 3 || count[1] < 3)
    throw StatisticalError("need at least 3 epochs per parity class, have " +
                           std::to_string(count[0]) + " and " +
                           std::to_string(count[1]));
  NonconvergenceReport rep;
  rep.liminf_est = std::min(last[0], last[1]);
  rep.limsup_est = std::max(last[0], last[1]);
  rep.gap = rep.limsup_est - rep.liminf_est;
  rep.nonconvergent = rep.gap > 10.0 * tol;
  rep.verdict = rep.nonconvergent ? "nonconvergent" : "convergent";
  return rep;
}

}  // namespace fldp
