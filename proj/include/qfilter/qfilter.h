/* C interface to the qfilter shared library: opaque handles and integer
 * error codes. The codes mirror the CLI exit codes:
 *   0 success, 1 verification failure, 2 config error, 3 numeric failure. */

#ifndef QFILTER_QFILTER_H
#define QFILTER_QFILTER_H

#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

enum {
    QF_OK = 0,
    QF_VERIFY_FAILURE = 1,
    QF_CONFIG_ERROR = 2,
    QF_NUMERIC_ERROR = 3
};

const char* qf_version(void);

/* thread-local message describing the most recent failure */
const char* qf_last_error(void);

/* strings returned through char** out-parameters are heap copies */
void qf_string_free(char* s);

/* ---- scenario execution -------------------------------------------------- */

/* seed_override < 0 keeps the seed from the scenario file */
int qf_run_scenario_file(const char* path, int64_t seed_override, const char* out_dir,
                         char** manifest_json);
int qf_run_scenario_text(const char* toml_text, int64_t seed_override, const char* out_dir,
                         char** manifest_json);

/* report_json receives the machine-readable suite report; returns
 * QF_VERIFY_FAILURE when any criterion fails */
int qf_verify(const char* suite, char** report_json);

int qf_convergence(const char* scenario_path, const double* dt_list, int n_dt,
                   char** report_json);

int qf_sweep(const char* scenario_path, const char* param, const double* values, int n_values,
             const char* out_dir, char** report_json);

/* ---- seeded Brownian paths ------------------------------------------------ */

typedef struct qf_wiener qf_wiener;

qf_wiener* qf_wiener_create(uint64_t seed, uint64_t stream_id, double dt, int n_steps);
int qf_wiener_increments(const qf_wiener* path, double* out, int n);
void qf_wiener_free(qf_wiener* path);

/* ---- diffusive qubit filter ------------------------------------------------
 * 2x2 complex matrices are passed row-major as interleaved (re, im) pairs,
 * length 8: m00r, m00i, m01r, m01i, m10r, m10i, m11r, m11i. */

typedef struct qf_qubit_filter qf_qubit_filter;

qf_qubit_filter* qf_qubit_filter_create(const double H[8], const double L[8],
                                        const double rho0[8]);
int qf_qubit_filter_step(qf_qubit_filter* f, double dy, double dt);
int qf_qubit_filter_density(const qf_qubit_filter* f, double rho_out[8]);
double qf_qubit_filter_log_likelihood(const qf_qubit_filter* f);
void qf_qubit_filter_free(qf_qubit_filter* f);

/* ---- free-particle Gaussian filter ---------------------------------------- */

typedef struct qf_gaussian_filter qf_gaussian_filter;

qf_gaussian_filter* qf_gaussian_filter_create(double mass, double lambda, double theta_p0,
                                              double theta_q0);
int qf_gaussian_filter_step(qf_gaussian_filter* f, double dy, double dt);
/* out: theta_p, theta_q, p_pp, p_pq, p_qq, log_density, t */
int qf_gaussian_filter_state(const qf_gaussian_filter* f, double out[7]);
void qf_gaussian_filter_free(qf_gaussian_filter* f);

#ifdef __cplusplus
}
#endif

#endif /* QFILTER_QFILTER_H */
