#include "fldp/ldp.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <thread>

#include "fldp/errors.hpp"
#include "fldp/simulate.hpp"

namespace fldp {

namespace {

// Natural cubic spline through (x, y); x strictly ascending.
struct Spline {
  std::vector<double> x, y, m;  // m = second derivatives

  Spline(const std::vector<double>& xs, const std::vector<double>& ys)
      : x(xs), y(ys), m(xs.size(), 0.0) {
    const std::size_t n = x.size();
    if (n < 3) return;
    std::vector<double> diag(n, 0.0), rhs(n, 0.0), sub(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const double hl = x[i] - x[i - 1];
      const double hr = x[i + 1] - x[i];
      sub[i] = hl;
      diag[i] = 2.0 * (hl + hr);
      rhs[i] = 6.0 * ((y[i + 1] - y[i]) / hr - (y[i] - y[i - 1]) / hl);
    }
    // Thomas solve on the interior; natural ends m[0] = m[n-1] = 0.
    for (std::size_t i = 2; i + 1 < n; ++i) {
      const double w = sub[i] / diag[i - 1];
      diag[i] -= w * (x[i] - x[i - 1]);
      rhs[i] -= w * rhs[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
      const double upper = (i + 2 < n) ? (x[i + 1] - x[i]) * m[i + 1] : 0.0;
      m[i] = (rhs[i] - upper) / diag[i];
    }
  }

  double operator()(double t) const {
    const std::size_t n = x.size();
    if (t <= x.front()) t = x.front();
    if (t >= x.back()) t = x.back();
    auto it = std::upper_bound(x.begin(), x.end(), t);
    std::size_t hi = std::min(std::size_t(it - x.begin()), n - 1);
    if (hi == 0) hi = 1;
    const std::size_t lo = hi - 1;
    const double h = x[hi] - x[lo];
    const double a = (x[hi] - t) / h;
    const double b = (t - x[lo]) / h;
    return a * y[lo] + b * y[hi] +
           ((a * a * a - a) * m[lo] + (b * b * b - b) * m[hi]) * h * h / 6.0;
  }
};

void parallel_for(long n, int threads, const std::function<void(long)>& body) {
  threads = std::max(1, threads);
  if (threads == 1 || n < 2 * threads) {
    for (long i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::thread> pool;
  std::atomic<long> next{0};
  for (int w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (long i = next.fetch_add(1); i < n; i = next.fetch_add(1)) body(i);
    });
  for (auto& th : pool) th.join();
}

// Maximize f on [a, b]; ~1e-12 bracket width.
double golden_max(const std::function<double(double)>& f, double a, double b,
                  double* arg) {
  constexpr double kPhi = 0.61803398874989484820;
  double c = b - kPhi * (b - a);
  double d = a + kPhi * (b - a);
  double fc = f(c), fd = f(d);
  for (int it = 0; it < 200 && (b - a) > 1e-12; ++it) {
    if (fc > fd) {
      b = d; d = c; fd = fc;
      c = b - kPhi * (b - a);
      fc = f(c);
    } else {
      a = c; c = d; fc = fd;
      d = a + kPhi * (b - a);
      fd = f(d);
    }
  }
  const double xm = 0.5 * (a + b);
  if (arg) *arg = xm;
  return f(xm);
}

void check_curve_invariants(const FreeEnergyCurve& c) {
  const std::size_t n = c.lambdas.size();
  for (std::size_t i = 0; i < n; ++i)
    if (std::abs(c.lambdas[i]) < 1e-12 && std::abs(c.values[i]) > 1e-8)
      throw NumericalError("free energy at lambda=0 is " +
                           std::to_string(c.values[i]) + ", expected 0");
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const double d2 = c.values[i + 1] - 2.0 * c.values[i] + c.values[i - 1];
    if (d2 < -1e-7)
      throw NumericalError("free energy curve not convex near lambda=" +
                           std::to_string(c.lambdas[i]) + " (second difference " +
                           std::to_string(d2) + ")");
  }
}

double end_slope(const FreeEnergyCurve& c, bool upper) {
  const std::size_t n = c.lambdas.size();
  if (n < 2) throw ConfigError("curve too short for slope estimate");
  return upper ? (c.values[n - 1] - c.values[n - 2]) /
                     (c.lambdas[n - 1] - c.lambdas[n - 2])
               : (c.values[1] - c.values[0]) / (c.lambdas[1] - c.lambdas[0]);
}

}  // namespace

double FreeEnergyCurve::at(double lambda) const {
  return Spline(lambdas, values)(lambda);
}

std::vector<double> default_lambda_grid(int points) {
  if (points < 5) throw ConfigError("lambda grid needs >= 5 points");
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = -3.0 + 5.0 * double(i) / double(points - 1);
  return g;
}

std::vector<double> default_z_grid(const FreeEnergyCurve& curve, int points) {
  if (points < 3) throw ConfigError("z grid needs >= 3 points");
  const double lo = end_slope(curve, false);
  const double hi = end_slope(curve, true);
  std::vector<double> g(points);
  for (int i = 0; i < points; ++i)
    g[i] = lo + (hi - lo) * double(i) / double(points - 1);
  return g;
}

std::vector<double> symmetric_z_grid(const FreeEnergyCurve& fwd,
                                     const FreeEnergyCurve& bwd, int points) {
  if (points < 3) throw ConfigError("z grid needs >= 3 points");
  if (points % 2 == 0) ++points;  // include 0 and make z <-> -z exact
  double zmax = 0.0;
  for (const FreeEnergyCurve* c : {&fwd, &bwd}) {
    zmax = std::max(zmax, std::abs(end_slope(*c, false)));
    zmax = std::max(zmax, std::abs(end_slope(*c, true)));
  }
  std::vector<double> g(points);
  const int half = points / 2;
  for (int i = 0; i < points; ++i)
    g[i] = zmax * double(i - half) / double(half);
  return g;
}

FreeEnergyCurve free_energy_curve(const RateProtocol& p, Functional functional,
                                  Direction direction,
                                  const std::vector<double>& lambda_grid,
                                  int steps, int threads) {
  p.require_valid();
  if (!std::is_sorted(lambda_grid.begin(), lambda_grid.end()))
    throw ConfigError("lambda grid must be ascending");

  FreeEnergyCurve curve;
  curve.functional = functional;
  curve.direction = direction;
  curve.lambdas = lambda_grid;
  curve.values.resize(lambda_grid.size());
  curve.gaps.resize(lambda_grid.size());
  curve.steps = steps;

  PeriodicLaw nu;
  if (functional == Functional::S) nu = asymptotic_law(p, steps);

  parallel_for(long(lambda_grid.size()), threads, [&](long i) {
    const double lam = lambda_grid[std::size_t(i)];
    const Tilt tilt = (functional == Functional::W) ? Tilt::w(lam)
                                                    : Tilt::s(lam, nu);
    const PropagatorResult flow = monodromy(p, tilt, 0.0, direction, steps);
    const PerronData pd = perron(flow);
    curve.values[std::size_t(i)] = pd.exponent;
    curve.gaps[std::size_t(i)] = pd.spectral_gap;
  });

  check_curve_invariants(curve);
  return curve;
}

namespace {

// Shared core for rate_at / legendre_fenchel; spline built by the caller.
double transform_at(const FreeEnergyCurve& curve, const Spline& spline,
                    double z, double* argmax, bool* boundary) {
  const std::vector<double>& ls = curve.lambdas;
  const std::vector<double>& cs = curve.values;
  const std::size_t n = ls.size();
  std::size_t k = 0;
  double best = ls[0] * z - cs[0];
  for (std::size_t i = 1; i < n; ++i) {
    const double g = ls[i] * z - cs[i];
    if (g > best + 1e-15 * (1.0 + std::abs(best))) {
      best = g;
      k = i;
    }
  }
  const bool at_edge = (k == 0 && ls[0] * z - cs[0] >
                        ls[1] * z - cs[1] + 1e-15) ||
                       k == n - 1;
  if (boundary) *boundary = at_edge;
  if (at_edge) {
    if (argmax) *argmax = ls[k];
    return best;
  }
  const double a = ls[k == 0 ? 0 : k - 1];
  const double b = ls[std::min(k + 1, n - 1)];
  auto g = [&](double lam) { return lam * z - spline(lam); };
  return golden_max(g, a, b, argmax);
}

}  // namespace

double rate_at(const FreeEnergyCurve& curve, double z, bool* boundary) {
  const Spline spline(curve.lambdas, curve.values);
  return transform_at(curve, spline, z, nullptr, boundary);
}

RateFunction legendre_fenchel(const FreeEnergyCurve& curve,
                              const std::vector<double>& z_grid) {
  check_curve_invariants(curve);
  if (!std::is_sorted(z_grid.begin(), z_grid.end()))
    throw ConfigError("z grid must be ascending");
  const Spline spline(curve.lambdas, curve.values);

  RateFunction rf;
  rf.zs = z_grid;
  rf.values.resize(z_grid.size());
  rf.argmax_lambdas.resize(z_grid.size());
  rf.boundary.assign(z_grid.size(), 0);
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    bool edge = false;
    rf.values[i] = transform_at(curve, spline, z_grid[i],
                                &rf.argmax_lambdas[i], &edge);
    rf.boundary[i] = edge ? 1 : 0;
    if (rf.values[i] < -1e-9)
      throw NumericalError("rate function negative at z=" +
                           std::to_string(z_grid[i]) + ": " +
                           std::to_string(rf.values[i]));
    rf.values[i] = std::max(rf.values[i], 0.0);
  }

  // Minimizer: interior grid minimum refined by a parabolic vertex, then the
  // transform re-evaluated there.
  std::size_t kmin = 0;
  bool found = false;
  for (std::size_t i = 0; i < z_grid.size(); ++i) {
    if (rf.boundary[i]) continue;
    if (!found || rf.values[i] < rf.values[kmin]) {
      kmin = i;
      found = true;
    }
  }
  if (!found) throw NumericalError("no interior point in the rate function");
  double zstar = rf.zs[kmin];
  if (kmin > 0 && kmin + 1 < rf.zs.size() && !rf.boundary[kmin - 1] &&
      !rf.boundary[kmin + 1]) {
    const double y0 = rf.values[kmin - 1], y1 = rf.values[kmin],
                 y2 = rf.values[kmin + 1];
    const double denom = y0 - 2.0 * y1 + y2;
    if (std::abs(denom) > 1e-300) {
      const double h = rf.zs[kmin + 1] - rf.zs[kmin];
      double delta = 0.5 * (y0 - y2) / denom * h;
      delta = std::clamp(delta, -h, h);
      zstar += delta;
    }
  }
  rf.minimizer_z = zstar;
  rf.minimizer_value = transform_at(curve, spline, zstar, nullptr, nullptr);
  return rf;
}

double derivative_at_zero(const FreeEnergyCurve& curve, double* richardson) {
  const std::vector<double>& ls = curve.lambdas;
  const std::vector<double>& cs = curve.values;
  long i0 = -1;
  for (std::size_t i = 0; i < ls.size(); ++i)
    if (std::abs(ls[i]) < 1e-12) i0 = long(i);
  if (i0 < 2 || i0 + 2 >= long(ls.size()))
    throw ConfigError("lambda grid lacks a symmetric stencil around 0");
  const double h = ls[i0 + 1] - ls[i0];
  const double d = (-cs[i0 + 2] + 8.0 * cs[i0 + 1] - 8.0 * cs[i0 - 1] +
                    cs[i0 - 2]) / (12.0 * h);
  if (richardson) {
    double d2h;
    if (i0 >= 4 && i0 + 4 < long(ls.size()))
      d2h = (-cs[i0 + 4] + 8.0 * cs[i0 + 2] - 8.0 * cs[i0 - 2] + cs[i0 - 4]) /
            (24.0 * h);
    else
      d2h = (cs[i0 + 2] - cs[i0 - 2]) / (4.0 * h);
    *richardson = d - d2h;
  }
  return d;
}

double ep_rate(const RateProtocol& p, const PeriodicLaw& nu, double s) {
  const int n = p.n_states();
  const Eigen::VectorXd law = nu.at(s);
  for (int i = 0; i < n; ++i)
    if (!(law(i) > 1e-300))
      throw NumericalError("degenerate asymptotic law at s=" + std::to_string(s));
  double total = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const double kij = p.rate(i, j, s);
      const double kji = p.rate(j, i, s);
      if (kij <= kRateEps && kji <= kRateEps) continue;
      if (kij <= kRateEps || kji <= kRateEps)
        throw ValidationError("one-sided flux between states " +
                              std::to_string(i + 1) + " and " +
                              std::to_string(j + 1) + " at s=" + std::to_string(s));
      const double a = law(i) * kij;
      const double b = law(j) * kji;
      total += (a - b) * std::log(a / b);
    }
  }
  return total;
}

EpCurve ep_curve(const RateProtocol& p, int steps) {
  p.require_valid();
  if (steps < 2) throw ConfigError("ep_curve needs >= 2 steps");
  const PeriodicLaw nu = asymptotic_law(p, steps);
  const double T = p.period();
  EpCurve ec;
  ec.grid.resize(steps + 1);
  ec.values.resize(steps + 1);
  for (int k = 0; k <= steps; ++k) {
    ec.grid[k] = T * double(k) / double(steps);
    ec.values[k] = ep_rate(p, nu, ec.grid[k]);
    if (ec.values[k] < 0.0)
      throw NumericalError("entropy production rate negative at s=" +
                           std::to_string(ec.grid[k]));
  }
  double sum = 0.0;
  for (int k = 0; k < steps; ++k) sum += 0.5 * (ec.values[k] + ec.values[k + 1]);
  ec.time_average = sum / double(steps);
  return ec;
}

FtResiduals ft_residuals(const FreeEnergyCurve& fwd, const FreeEnergyCurve& bwd,
                         const RateFunction& fwd_rate,
                         const RateFunction& bwd_rate, bool time_symmetric) {
  const std::size_t n = fwd.lambdas.size();
  if (bwd.lambdas.size() != n)
    throw ConfigError("curve grids differ in size");
  for (std::size_t i = 0; i < n; ++i) {
    if (std::abs(fwd.lambdas[i] - bwd.lambdas[i]) > 1e-9)
      throw ConfigError("forward/backward lambda grids misaligned");
    if (std::abs(fwd.lambdas[n - 1 - i] + 1.0 + fwd.lambdas[i]) > 1e-9)
      throw ConfigError(
          "lambda grid not symmetric about -1/2; lambda <-> -(1+lambda) does "
          "not map grid points to grid points");
  }
  const std::size_t m = fwd_rate.zs.size();
  if (bwd_rate.zs.size() != m) throw ConfigError("rate grids differ in size");
  for (std::size_t i = 0; i < m; ++i) {
    if (std::abs(fwd_rate.zs[i] - bwd_rate.zs[i]) > 1e-9)
      throw ConfigError("forward/backward z grids misaligned");
    if (std::abs(fwd_rate.zs[m - 1 - i] + fwd_rate.zs[i]) > 1e-9)
      throw ConfigError("z grid not symmetric about 0");
  }

  FtResiduals out;
  out.time_symmetric = time_symmetric;
  double c_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = std::abs(fwd.values[i] - bwd.values[n - 1 - i]);
    out.c_max = std::max(out.c_max, r);
    c_sum += r;
    if (time_symmetric)
      out.gc_max = std::max(out.gc_max,
                            std::abs(fwd.values[i] - fwd.values[n - 1 - i]));
  }
  out.c_mean = c_sum / double(n);

  double ft_sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (fwd_rate.boundary[i] || bwd_rate.boundary[m - 1 - i]) continue;
    const double r = std::abs(fwd_rate.values[i] -
                              bwd_rate.values[m - 1 - i] + fwd_rate.zs[i]);
    out.ft_max = std::max(out.ft_max, r);
    ft_sum += r;
    ++out.ft_points;
  }
  if (out.ft_points > 0) out.ft_mean = ft_sum / double(out.ft_points);
  return out;
}

double probability_ratio(const RateProtocol& p, double z, double epsilon,
                         double t, long n_paths, std::uint64_t seed,
                         int steps_per_period, int threads) {
  p.require_valid();
  if (epsilon <= 0.0) throw ConfigError("epsilon must be positive");
  if (n_paths < 100) throw ConfigError("probability_ratio needs >= 100 paths");
  const double T = p.period();
  const double tr = std::max(1.0, std::round(t / T)) * T;

  const Eigen::VectorXd pi =
      Eigen::VectorXd::Constant(p.n_states(), 1.0 / double(p.n_states()));
  const LawTrajectory law = integrate_law(p, pi, tr, steps_per_period);
  const std::vector<double> fwd =
      sample_functionals(p, Functional::S, tr, n_paths, seed, law, threads);

  // Backward process: reversed-rate protocol started from mu(., t); its law
  // at time s is mu(., t - s).
  const RateProtocol prev = p.time_reversed();
  LawTrajectory law_rev;
  const std::size_t nt = law.times.size();
  law_rev.times.resize(nt);
  law_rev.laws.resize(nt);
  for (std::size_t k = 0; k < nt; ++k) {
    law_rev.times[k] = tr - law.times[nt - 1 - k];
    law_rev.laws[k] = law.laws[nt - 1 - k];
  }
  const std::vector<double> bwd = sample_functionals(
      prev, Functional::S, tr, n_paths, seed ^ 0x9e3779b97f4a7c15ULL, law_rev,
      threads);

  long n_f = 0, n_b = 0;
  for (double v : fwd)
    if (std::abs(v / tr - z) <= epsilon) ++n_f;
  for (double v : bwd)
    if (std::abs(v / tr + z) <= epsilon) ++n_b;
  if (n_f == 0 || n_b == 0)
    throw StatisticalError("empty bin in probability_ratio: forward count " +
                           std::to_string(n_f) + ", backward count " +
                           std::to_string(n_b) + " of " +
                           std::to_string(n_paths) + " paths");
  return std::log(double(n_f) / double(n_b)) / tr;
}

}  // namespace fldp
