/* C interface to the periodic-driving fluctuation analysis library.
 *
 * All functions returning int use the shared status taxonomy:
 *   0 success, 2 config, 3 validation, 4 numerical, 5 statistical.
 * On failure fldp_last_error() returns a thread-local message describing the
 * most recent failure on the calling thread.  Objects returned through out
 * parameters are owned by the caller and released with the matching _free.
 */
#ifndef FLDP_H
#define FLDP_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

#define FLDP_OK 0
#define FLDP_ERR_CONFIG 2
#define FLDP_ERR_VALIDATION 3
#define FLDP_ERR_NUMERICAL 4
#define FLDP_ERR_STATISTICAL 5

#define FLDP_FUNCTIONAL_W 0
#define FLDP_FUNCTIONAL_S 1
#define FLDP_DIRECTION_FORWARD 0
#define FLDP_DIRECTION_BACKWARD 1

typedef struct fldp_protocol fldp_protocol;
typedef struct fldp_curve fldp_curve;
typedef struct fldp_rate_function fldp_rate_function;
typedef struct fldp_ep_curve fldp_ep_curve;
typedef struct fldp_trace fldp_trace;

const char* fldp_version(void);
const char* fldp_last_error(void);
void fldp_string_free(char* s);

/* ---- protocols ---------------------------------------------------------- */

int fldp_protocol_from_json(const char* json_text, fldp_protocol** out);
int fldp_protocol_from_file(const char* path, fldp_protocol** out);
void fldp_protocol_free(fldp_protocol* p);

int fldp_protocol_n_states(const fldp_protocol* p);
double fldp_protocol_period(const fldp_protocol* p);
int fldp_protocol_time_symmetric(const fldp_protocol* p);

/* JSON validation report in *json_report (always produced on success paths);
 * returns FLDP_ERR_VALIDATION when the protocol failed validation. */
int fldp_protocol_validate(const fldp_protocol* p, char** json_report);

/* Generator A(t) written row-major into a caller buffer of n*n doubles. */
int fldp_protocol_generator(const fldp_protocol* p, double t, double* out);

/* ---- free energy curves ------------------------------------------------- */

int fldp_free_energy_curve(const fldp_protocol* p, int functional,
                           int direction, double lambda_min, double lambda_max,
                           int points, int steps, int threads,
                           fldp_curve** out);
void fldp_curve_free(fldp_curve* c);
int fldp_curve_size(const fldp_curve* c);
int fldp_curve_data(const fldp_curve* c, double* lambdas, double* values);
int fldp_curve_derivative_at_zero(const fldp_curve* c, double* derivative,
                                  double* richardson);

/* ---- rate functions ----------------------------------------------------- */

/* z grid spanning the curve's reachable slope range. */
int fldp_rate_function_new(const fldp_curve* c, int z_points,
                           fldp_rate_function** out);
/* Shared symmetric z grid (z <-> -z exact) for a forward/backward pair. */
int fldp_rate_function_pair(const fldp_curve* fwd, const fldp_curve* bwd,
                            int z_points, fldp_rate_function** fwd_out,
                            fldp_rate_function** bwd_out);
void fldp_rate_function_free(fldp_rate_function* r);
int fldp_rate_function_size(const fldp_rate_function* r);
/* boundary[i] nonzero marks points where the supremum hit the lambda-grid
 * edge (unreliable).  Any output pointer may be NULL. */
int fldp_rate_function_data(const fldp_rate_function* r, double* zs,
                            double* values, double* argmax_lambdas,
                            int* boundary);
int fldp_rate_function_minimizer(const fldp_rate_function* r, double* z,
                                 double* value);

/* ---- fluctuation-theorem residuals -------------------------------------- */

/* Builds forward/backward curves and rate functions for the functional and
 * emits a JSON residual report.  Returns FLDP_ERR_NUMERICAL when the largest
 * residual exceeds tol (report still produced). */
int fldp_ft_check(const fldp_protocol* p, int functional, int lambda_points,
                  int z_points, int steps, int threads, double tol,
                  char** json_report);

/* ---- entropy production rate -------------------------------------------- */

int fldp_ep_curve_new(const fldp_protocol* p, int steps, fldp_ep_curve** out);
void fldp_ep_curve_free(fldp_ep_curve* e);
int fldp_ep_curve_size(const fldp_ep_curve* e);
int fldp_ep_curve_data(const fldp_ep_curve* e, double* times, double* values);
double fldp_ep_curve_time_average(const fldp_ep_curve* e);

/* ---- Monte Carlo -------------------------------------------------------- */

/* Per-path heat (w) and entropy production (s) over [0, t], uniform initial
 * law; any output pointer may be NULL.  Buffers hold n_paths entries. */
int fldp_sample_paths(const fldp_protocol* p, double t, long n_paths,
                      uint64_t seed, int steps_per_period, int threads,
                      double* w, double* s, long* n_jumps);

/* One trajectory over [0, t] for the given (seed, path_id) stream, initial
 * state drawn from the uniform law.  jump_times/jump_targets have capacity
 * `cap`; fails with a config error when the path has more jumps. */
int fldp_sample_trajectory(const fldp_protocol* p, double t, uint64_t seed,
                           uint64_t path_id, int cap, double* jump_times,
                           int* jump_targets, int* n_jumps,
                           int* initial_state);

int fldp_mc_mgf(const fldp_protocol* p, int functional, double lambda, double t,
                long n_paths, uint64_t seed, int steps_per_period, int threads,
                double* mean, double* std_error);

int fldp_mc_time_average(const fldp_protocol* p, int functional, double t,
                         long n_paths, uint64_t seed, int steps_per_period,
                         int threads, double* mean, double* std_error);

int fldp_probability_ratio(const fldp_protocol* p, double z, double epsilon,
                           double t, long n_paths, uint64_t seed,
                           int steps_per_period, int threads, double* out);

/* ---- non-periodic counterexample ---------------------------------------- */

/* base_rates: n*n row-major, off-diagonal entries are rates.  Negative
 * smoothing_width / t1 select the defaults. */
int fldp_counterexample_trace(double alpha, double beta,
                              const double* base_rates, int n, double gamma,
                              int k_max, double lambda, double step,
                              double smoothing_width, double t1,
                              fldp_trace** out);
/* Same finite-t pipeline on a periodic protocol, sampled at whole periods
 * k_from..k_to with parity k mod 2 (convergence control). */
int fldp_periodic_trace(const fldp_protocol* p, double lambda, int k_from,
                        int k_to, double step, fldp_trace** out);
void fldp_trace_free(fldp_trace* t);
int fldp_trace_size(const fldp_trace* t);
int fldp_trace_data(const fldp_trace* t, double* times, int* epochs,
                    int* parities, double* values);
int fldp_trace_verdict(const fldp_trace* t, double tol, double* liminf,
                       double* limsup, double* gap, int* nonconvergent);

/* ---- consistency report ------------------------------------------------- */

/* JSON bundling derivative_at_zero(c_S), the entropy-production time average,
 * and the Monte Carlo S/t estimate with agreement deltas. */
int fldp_report(const fldp_protocol* p, double t, long n_paths, uint64_t seed,
                int steps, int threads, char** json);

#ifdef __cplusplus
}
#endif

#endif
