#include "fldp.h"

#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fldp/counterexample.hpp"
#include "fldp/errors.hpp"
#include "fldp/ldp.hpp"
#include "fldp/propagator.hpp"
#include "fldp/protocol.hpp"
#include "fldp/simulate.hpp"

struct fldp_protocol {
  fldp::RateProtocol p;
};
struct fldp_curve {
  fldp::FreeEnergyCurve c;
};
struct fldp_rate_function {
  fldp::RateFunction r;
};
struct fldp_ep_curve {
  fldp::EpCurve e;
};
struct fldp_trace {
  std::vector<fldp::TracePoint> pts;
};

namespace {

thread_local std::string g_error;

template <typename Fn>
int wrap(Fn&& fn) {
  try {
    return fn();
  } catch (const fldp::Error& e) {
    g_error = e.what();
    return int(e.code());
  } catch (const std::exception& e) {
    g_error = e.what();
    return FLDP_ERR_NUMERICAL;
  }
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

fldp::Functional to_functional(int f) {
  if (f == FLDP_FUNCTIONAL_W) return fldp::Functional::W;
  if (f == FLDP_FUNCTIONAL_S) return fldp::Functional::S;
  throw fldp::ConfigError("functional must be 0 (W) or 1 (S)");
}

fldp::Direction to_direction(int d) {
  if (d == FLDP_DIRECTION_FORWARD) return fldp::Direction::Forward;
  if (d == FLDP_DIRECTION_BACKWARD) return fldp::Direction::Backward;
  throw fldp::ConfigError("direction must be 0 (forward) or 1 (backward)");
}

std::vector<double> lambda_grid(double lo, double hi, int points) {
  if (points < 5) throw fldp::ConfigError("lambda grid needs >= 5 points");
  if (!(hi > lo)) throw fldp::ConfigError("lambda_max must exceed lambda_min");
  std::vector<double> g(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i)
    g[std::size_t(i)] = lo + (hi - lo) * double(i) / double(points - 1);
  return g;
}

void require(const void* p, const char* what) {
  if (!p) throw fldp::ConfigError(std::string("null ") + what);
}

}  // namespace

extern "C" {

const char* fldp_version(void) { return "1.0.0"; }

const char* fldp_last_error(void) { return g_error.c_str(); }

void fldp_string_free(char* s) { std::free(s); }

/* ---- protocols ---------------------------------------------------------- */

int fldp_protocol_from_json(const char* json_text, fldp_protocol** out) {
  return wrap([&] {
    require(json_text, "json text");
    require(out, "output handle");
    *out = new fldp_protocol{fldp::RateProtocol::from_json(json_text)};
    return FLDP_OK;
  });
}

int fldp_protocol_from_file(const char* path, fldp_protocol** out) {
  return wrap([&] {
    require(path, "path");
    require(out, "output handle");
    std::ifstream in(path);
    if (!in) throw fldp::ConfigError(std::string("cannot open ") + path);
    std::ostringstream text;
    text << in.rdbuf();
    *out = new fldp_protocol{fldp::RateProtocol::from_json(text.str())};
    return FLDP_OK;
  });
}

void fldp_protocol_free(fldp_protocol* p) { delete p; }

int fldp_protocol_n_states(const fldp_protocol* p) {
  return p ? p->p.n_states() : 0;
}

double fldp_protocol_period(const fldp_protocol* p) {
  return p ? p->p.period() : 0.0;
}

int fldp_protocol_time_symmetric(const fldp_protocol* p) {
  return p && p->p.time_symmetric() ? 1 : 0;
}

int fldp_protocol_validate(const fldp_protocol* p, char** json_report) {
  return wrap([&] {
    require(p, "protocol");
    const fldp::ValidationReport& rep = p->p.validation();
    nlohmann::json j;
    j["passed"] = rep.passed;
    j["grid_points"] = rep.grid_points;
    j["time_symmetric"] = p->p.time_symmetric();
    j["irreducible_time_count"] = rep.irreducible_times.size();
    if (!rep.irreducible_times.empty())
      j["first_irreducible_time"] = rep.irreducible_times.front();
    j["violations"] = nlohmann::json::array();
    for (const fldp::ValidationIssue& v : rep.violations)
      j["violations"].push_back(
          {{"check", v.check}, {"time", v.time}, {"detail", v.detail}});
    if (json_report) *json_report = dup_string(j.dump(2));
    if (!rep.passed) {
      g_error = "protocol failed validation";
      return FLDP_ERR_VALIDATION;
    }
    return FLDP_OK;
  });
}

int fldp_protocol_generator(const fldp_protocol* p, double t, double* out) {
  return wrap([&] {
    require(p, "protocol");
    require(out, "output buffer");
    const Eigen::MatrixXd a = fldp::generator(p->p, t);
    for (int i = 0; i < a.rows(); ++i)
      for (int j = 0; j < a.cols(); ++j) out[i * a.cols() + j] = a(i, j);
    return FLDP_OK;
  });
}

/* ---- free energy curves ------------------------------------------------- */

int fldp_free_energy_curve(const fldp_protocol* p, int functional,
                           int direction, double lambda_min, double lambda_max,
                           int points, int steps, int threads,
                           fldp_curve** out) {
  return wrap([&] {
    require(p, "protocol");
    require(out, "output handle");
    *out = new fldp_curve{fldp::free_energy_curve(
        p->p, to_functional(functional), to_direction(direction),
        lambda_grid(lambda_min, lambda_max, points), steps, threads)};
    return FLDP_OK;
  });
}

void fldp_curve_free(fldp_curve* c) { delete c; }

int fldp_curve_size(const fldp_curve* c) {
  return c ? int(c->c.lambdas.size()) : 0;
}

int fldp_curve_data(const fldp_curve* c, double* lambdas, double* values) {
  return wrap([&] {
    require(c, "curve");
    for (std::size_t i = 0; i < c->c.lambdas.size(); ++i) {
      if (lambdas) lambdas[i] = c->c.lambdas[i];
      if (values) values[i] = c->c.values[i];
    }
    return FLDP_OK;
  });
}

int fldp_curve_derivative_at_zero(const fldp_curve* c, double* derivative,
                                  double* richardson) {
  return wrap([&] {
    require(c, "curve");
    require(derivative, "derivative output");
    *derivative = fldp::derivative_at_zero(c->c, richardson);
    return FLDP_OK;
  });
}

/* ---- rate functions ----------------------------------------------------- */

int fldp_rate_function_new(const fldp_curve* c, int z_points,
                           fldp_rate_function** out) {
  return wrap([&] {
    require(c, "curve");
    require(out, "output handle");
    *out = new fldp_rate_function{
        fldp::legendre_fenchel(c->c, fldp::default_z_grid(c->c, z_points))};
    return FLDP_OK;
  });
}

int fldp_rate_function_pair(const fldp_curve* fwd, const fldp_curve* bwd,
                            int z_points, fldp_rate_function** fwd_out,
                            fldp_rate_function** bwd_out) {
  return wrap([&] {
    require(fwd, "forward curve");
    require(bwd, "backward curve");
    require(fwd_out, "forward output handle");
    require(bwd_out, "backward output handle");
    const std::vector<double> zg =
        fldp::symmetric_z_grid(fwd->c, bwd->c, z_points);
    auto* rf = new fldp_rate_function{fldp::legendre_fenchel(fwd->c, zg)};
    try {
      *bwd_out = new fldp_rate_function{fldp::legendre_fenchel(bwd->c, zg)};
    } catch (...) {
      delete rf;
      throw;
    }
    *fwd_out = rf;
    return FLDP_OK;
  });
}

void fldp_rate_function_free(fldp_rate_function* r) { delete r; }

int fldp_rate_function_size(const fldp_rate_function* r) {
  return r ? int(r->r.zs.size()) : 0;
}

int fldp_rate_function_data(const fldp_rate_function* r, double* zs,
                            double* values, double* argmax_lambdas,
                            int* boundary) {
  return wrap([&] {
    require(r, "rate function");
    for (std::size_t i = 0; i < r->r.zs.size(); ++i) {
      if (zs) zs[i] = r->r.zs[i];
      if (values) values[i] = r->r.values[i];
      if (argmax_lambdas) argmax_lambdas[i] = r->r.argmax_lambdas[i];
      if (boundary) boundary[i] = r->r.boundary[i];
    }
    return FLDP_OK;
  });
}

int fldp_rate_function_minimizer(const fldp_rate_function* r, double* z,
                                 double* value) {
  return wrap([&] {
    require(r, "rate function");
    if (z) *z = r->r.minimizer_z;
    if (value) *value = r->r.minimizer_value;
    return FLDP_OK;
  });
}

/* ---- fluctuation-theorem residuals -------------------------------------- */

int fldp_ft_check(const fldp_protocol* p, int functional, int lambda_points,
                  int z_points, int steps, int threads, double tol,
                  char** json_report) {
  return wrap([&] {
    require(p, "protocol");
    const fldp::Functional f = to_functional(functional);
    const std::vector<double> grid = fldp::default_lambda_grid(lambda_points);
    const fldp::FreeEnergyCurve cf = fldp::free_energy_curve(
        p->p, f, fldp::Direction::Forward, grid, steps, threads);
    const fldp::FreeEnergyCurve cb = fldp::free_energy_curve(
        p->p, f, fldp::Direction::Backward, grid, steps, threads);
    const std::vector<double> zg = fldp::symmetric_z_grid(cf, cb, z_points);
    const fldp::RateFunction rf = fldp::legendre_fenchel(cf, zg);
    const fldp::RateFunction rb = fldp::legendre_fenchel(cb, zg);
    const fldp::FtResiduals res =
        fldp::ft_residuals(cf, cb, rf, rb, p->p.time_symmetric());

    const bool passed = res.c_max < tol && res.ft_max < tol &&
                        (!res.time_symmetric || res.gc_max < tol);
    nlohmann::json j;
    j["functional"] = (f == fldp::Functional::W) ? "W" : "S";
    j["time_symmetric"] = res.time_symmetric;
    j["c_symmetry_max"] = res.c_max;
    j["c_symmetry_mean"] = res.c_mean;
    j["ft_max"] = res.ft_max;
    j["ft_mean"] = res.ft_mean;
    j["gc_max"] = res.gc_max;
    j["ft_points"] = res.ft_points;
    j["tol"] = tol;
    j["passed"] = passed;
    if (json_report) *json_report = dup_string(j.dump(2));
    if (!passed) {
      g_error = "fluctuation-theorem residuals exceed tolerance";
      return FLDP_ERR_NUMERICAL;
    }
    return FLDP_OK;
  });
}

/* ---- entropy production rate -------------------------------------------- */

int fldp_ep_curve_new(const fldp_protocol* p, int steps, fldp_ep_curve** out) {
  return wrap([&] {
    require(p, "protocol");
    require(out, "output handle");
    *out = new fldp_ep_curve{fldp::ep_curve(p->p, steps)};
    return FLDP_OK;
  });
}

void fldp_ep_curve_free(fldp_ep_curve* e) { delete e; }

int fldp_ep_curve_size(const fldp_ep_curve* e) {
  return e ? int(e->e.grid.size()) : 0;
}

int fldp_ep_curve_data(const fldp_ep_curve* e, double* times, double* values) {
  return wrap([&] {
    require(e, "ep curve");
    for (std::size_t i = 0; i < e->e.grid.size(); ++i) {
      if (times) times[i] = e->e.grid[i];
      if (values) values[i] = e->e.values[i];
    }
    return FLDP_OK;
  });
}

double fldp_ep_curve_time_average(const fldp_ep_curve* e) {
  return e ? e->e.time_average : 0.0;
}

/* ---- Monte Carlo -------------------------------------------------------- */

int fldp_sample_paths(const fldp_protocol* p, double t, long n_paths,
                      uint64_t seed, int steps_per_period, int threads,
                      double* w, double* s, long* n_jumps) {
  return wrap([&] {
    require(p, "protocol");
    if (n_paths < 1) throw fldp::ConfigError("n_paths must be positive");
    const int n = p->p.n_states();
    const Eigen::VectorXd pi =
        Eigen::VectorXd::Constant(n, 1.0 / double(n));
    const fldp::LawTrajectory law =
        fldp::integrate_law(p->p, pi, t, steps_per_period);
    const fldp::ThinningBound bound = fldp::ThinningBound::from(p->p);
    for (long i = 0; i < n_paths; ++i) {
      fldp::RngStream rng = fldp::RngStream::for_path(seed, std::uint64_t(i));
      double u = rng.uniform();
      int init = n - 1;
      for (int st = 0; st < n; ++st) {
        u -= pi(st);
        if (u <= 0.0) {
          init = st;
          break;
        }
      }
      const fldp::Trajectory traj =
          fldp::sample_trajectory(p->p, init, t, rng, bound);
      const fldp::PathFunctionals f = fldp::path_functionals(p->p, traj, law);
      if (w) w[i] = f.w_total;
      if (s) s[i] = f.s_total;
      if (n_jumps) n_jumps[i] = long(traj.jumps.size());
    }
    (void)threads;
    return FLDP_OK;
  });
}

int fldp_sample_trajectory(const fldp_protocol* p, double t, uint64_t seed,
                           uint64_t path_id, int cap, double* jump_times,
                           int* jump_targets, int* n_jumps,
                           int* initial_state) {
  return wrap([&] {
    require(p, "protocol");
    const int n = p->p.n_states();
    fldp::RngStream rng = fldp::RngStream::for_path(seed, path_id);
    double u = rng.uniform();
    int init = n - 1;
    for (int st = 0; st < n; ++st) {
      u -= 1.0 / double(n);
      if (u <= 0.0) {
        init = st;
        break;
      }
    }
    const fldp::ThinningBound bound = fldp::ThinningBound::from(p->p);
    const fldp::Trajectory traj =
        fldp::sample_trajectory(p->p, init, t, rng, bound);
    if (int(traj.jumps.size()) > cap)
      throw fldp::ConfigError("trajectory has " +
                              std::to_string(traj.jumps.size()) +
                              " jumps, buffer capacity " + std::to_string(cap));
    for (std::size_t i = 0; i < traj.jumps.size(); ++i) {
      if (jump_times) jump_times[i] = traj.jumps[i].time;
      if (jump_targets) jump_targets[i] = traj.jumps[i].target;
    }
    if (n_jumps) *n_jumps = int(traj.jumps.size());
    if (initial_state) *initial_state = traj.initial_state;
    return FLDP_OK;
  });
}

int fldp_mc_mgf(const fldp_protocol* p, int functional, double lambda, double t,
                long n_paths, uint64_t seed, int steps_per_period, int threads,
                double* mean, double* std_error) {
  return wrap([&] {
    require(p, "protocol");
    const fldp::McEstimate est =
        fldp::mc_mgf(p->p, to_functional(functional), lambda, t, n_paths, seed,
                     steps_per_period, threads);
    if (mean) *mean = est.mean;
    if (std_error) *std_error = est.std_error;
    return FLDP_OK;
  });
}

int fldp_mc_time_average(const fldp_protocol* p, int functional, double t,
                         long n_paths, uint64_t seed, int steps_per_period,
                         int threads, double* mean, double* std_error) {
  return wrap([&] {
    require(p, "protocol");
    const fldp::McEstimate est =
        fldp::mc_time_average(p->p, to_functional(functional), t, n_paths, seed,
                              steps_per_period, threads);
    if (mean) *mean = est.mean;
    if (std_error) *std_error = est.std_error;
    return FLDP_OK;
  });
}

int fldp_probability_ratio(const fldp_protocol* p, double z, double epsilon,
                           double t, long n_paths, uint64_t seed,
                           int steps_per_period, int threads, double* out) {
  return wrap([&] {
    require(p, "protocol");
    require(out, "output");
    *out = fldp::probability_ratio(p->p, z, epsilon, t, n_paths, seed,
                                   steps_per_period, threads);
    return FLDP_OK;
  });
}

/* ---- non-periodic counterexample ---------------------------------------- */

int fldp_counterexample_trace(double alpha, double beta,
                              const double* base_rates, int n, double gamma,
                              int k_max, double lambda, double step,
                              double smoothing_width, double t1,
                              fldp_trace** out) {
  return wrap([&] {
    require(base_rates, "base rates");
    require(out, "output handle");
    if (n < 1) throw fldp::ConfigError("n must be positive");
    Eigen::MatrixXd base(n, n);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) base(i, j) = base_rates[i * n + j];
    const fldp::CounterexampleProtocol cp = fldp::build_counterexample(
        alpha, beta, base, gamma, k_max, smoothing_width, t1);
    *out = new fldp_trace{fldp::free_energy_trace(cp, lambda, step)};
    return FLDP_OK;
  });
}

int fldp_periodic_trace(const fldp_protocol* p, double lambda, int k_from,
                        int k_to, double step, fldp_trace** out) {
  return wrap([&] {
    require(p, "protocol");
    require(out, "output handle");
    if (k_from < 1 || k_to < k_from)
      throw fldp::ConfigError("need 1 <= k_from <= k_to");
    p->p.require_valid();
    std::vector<double> times;
    std::vector<fldp::TracePoint> pts;
    for (int k = k_from; k <= k_to; ++k) {
      times.push_back(double(k) * p->p.period());
      pts.push_back({times.back(), k, k % 2, 0.0});
    }
    const std::vector<double> vals = fldp::free_energy_trace(
        [&](double t) { return fldp::generator(p->p, t); }, lambda, times,
        step);
    for (std::size_t i = 0; i < pts.size(); ++i) pts[i].value = vals[i];
    *out = new fldp_trace{std::move(pts)};
    return FLDP_OK;
  });
}

void fldp_trace_free(fldp_trace* t) { delete t; }

int fldp_trace_size(const fldp_trace* t) { return t ? int(t->pts.size()) : 0; }

int fldp_trace_data(const fldp_trace* t, double* times, int* epochs,
                    int* parities, double* values) {
  return wrap([&] {
    require(t, "trace");
    for (std::size_t i = 0; i < t->pts.size(); ++i) {
      if (times) times[i] = t->pts[i].t;
      if (epochs) epochs[i] = t->pts[i].epoch;
      if (parities) parities[i] = t->pts[i].parity;
      if (values) values[i] = t->pts[i].value;
    }
    return FLDP_OK;
  });
}

int fldp_trace_verdict(const fldp_trace* t, double tol, double* liminf,
                       double* limsup, double* gap, int* nonconvergent) {
  return wrap([&] {
    require(t, "trace");
    const fldp::NonconvergenceReport rep =
        fldp::detect_nonconvergence(t->pts, tol);
    if (liminf) *liminf = rep.liminf_est;
    if (limsup) *limsup = rep.limsup_est;
    if (gap) *gap = rep.gap;
    if (nonconvergent) *nonconvergent = rep.nonconvergent ? 1 : 0;
    return FLDP_OK;
  });
}

/* ---- consistency report ------------------------------------------------- */

int fldp_report(const fldp_protocol* p, double t, long n_paths, uint64_t seed,
                int steps, int threads, char** json) {
  return wrap([&] {
    require(p, "protocol");
    require(json, "json output");
    const fldp::FreeEnergyCurve cs = fldp::free_energy_curve(
        p->p, fldp::Functional::S, fldp::Direction::Forward,
        fldp::default_lambda_grid(), steps, threads);
    double richardson = 0.0;
    const double deriv = fldp::derivative_at_zero(cs, &richardson);
    const fldp::EpCurve ec = fldp::ep_curve(p->p, steps);
    const fldp::McEstimate mc = fldp::mc_time_average(
        p->p, fldp::Functional::S, t, n_paths, seed, steps, threads);

    nlohmann::json j;
    j["protocol"] = p->p.description();
    j["spectral_derivative_at_zero"] = deriv;
    j["spectral_richardson_check"] = richardson;
    j["ep_time_average"] = ec.time_average;
    j["mc_mean"] = mc.mean;
    j["mc_std_error"] = mc.std_error;
    j["mc_paths"] = mc.n_paths;
    j["mc_horizon"] = t;
    j["delta_spectral_formula"] = deriv - ec.time_average;
    j["mc_sigma_distance"] =
        mc.std_error > 0.0 ? std::abs(mc.mean - ec.time_average) / mc.std_error
                           : 0.0;
    *json = dup_string(j.dump(2));
    return FLDP_OK;
  });
}

}  // extern "C"
