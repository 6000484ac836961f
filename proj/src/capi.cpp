#include "qfilter/qfilter.h"

#include <cstring>
#include <string>

#include "qfilter/belavkin.hpp"
#include "qfilter/gaussian.hpp"
#include "qfilter/scenario.hpp"
#include "qfilter/verify.hpp"

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
    char* out = new char[s.size() + 1];
    std::memcpy(out, s.c_str(), s.size() + 1);
    return out;
}

template <typename Fn>
int guarded(Fn&& fn) {
    try {
        return fn();
    } catch (const qfilter::ConfigError& e) {
        g_last_error = e.what();
        return QF_CONFIG_ERROR;
    } catch (const qfilter::NumericError& e) {
        g_last_error = e.what();
        return QF_NUMERIC_ERROR;
    } catch (const std::exception& e) {
        g_last_error = e.what();
        return QF_NUMERIC_ERROR;
    }
}

int run_scenario_common(qfilter::ScenarioConfig cfg, int64_t seed_override, const char* out_dir,
                        char** manifest_json) {
    if (seed_override >= 0) cfg.seed = static_cast<std::uint64_t>(seed_override);
    qfilter::RunManifest mf = qfilter::run_scenario(cfg, out_dir ? out_dir : ".");
    if (manifest_json) *manifest_json = dup_string(mf.to_json());
    return QF_OK;
}

}  // namespace

extern "C" {

const char* qf_version(void) { return qfilter::kToolVersion; }

const char* qf_last_error(void) { return g_last_error.c_str(); }

void qf_string_free(char* s) { delete[] s; }

int qf_run_scenario_file(const char* path, int64_t seed_override, const char* out_dir,
                         char** manifest_json) {
    return guarded([&]() {
        if (!path) throw qfilter::ConfigError("qf_run_scenario_file: path is null");
        return run_scenario_common(qfilter::load_scenario(path), seed_override, out_dir,
                                   manifest_json);
    });
}

int qf_run_scenario_text(const char* toml_text, int64_t seed_override, const char* out_dir,
                         char** manifest_json) {
    return guarded([&]() {
        if (!toml_text) throw qfilter::ConfigError("qf_run_scenario_text: text is null");
        return run_scenario_common(qfilter::parse_scenario(toml_text), seed_override, out_dir,
                                   manifest_json);
    });
}

int qf_verify(const char* suite, char** report_json) {
    return guarded([&]() {
        if (!suite) throw qfilter::ConfigError("qf_verify: suite is null");
        qfilter::SuiteReport report = qfilter::verify_suite(suite);
        if (report_json) *report_json = dup_string(report.to_json());
        return report.pass ? QF_OK : QF_VERIFY_FAILURE;
    });
}

int qf_convergence(const char* scenario_path, const double* dt_list, int n_dt,
                   char** report_json) {
    return guarded([&]() {
        if (!scenario_path || !dt_list || n_dt < 2)
            throw qfilter::ConfigError("qf_convergence: need a scenario and >= 2 dt values");
        qfilter::ScenarioConfig cfg = qfilter::load_scenario(scenario_path);
        std::vector<double> dts(dt_list, dt_list + n_dt);
        std::string report = qfilter::convergence_report(cfg, dts);
        if (report_json) *report_json = dup_string(report);
        return QF_OK;
    });
}

int qf_sweep(const char* scenario_path, const char* param, const double* values, int n_values,
             const char* out_dir, char** report_json) {
    return guarded([&]() {
        if (!scenario_path || !param || !values || n_values < 1)
            throw qfilter::ConfigError("qf_sweep: need a scenario, a parameter and values");
        qfilter::ScenarioConfig cfg = qfilter::load_scenario(scenario_path);
        std::vector<double> vals(values, values + n_values);
        std::string report =
            qfilter::sweep_report(cfg, param, vals, out_dir ? out_dir : ".");
        if (report_json) *report_json = dup_string(report);
        return QF_OK;
    });
}

// ---------------------------------------------------------------------------

struct qf_wiener {
    qfilter::WienerPath path;
};

qf_wiener* qf_wiener_create(uint64_t seed, uint64_t stream_id, double dt, int n_steps) {
    qf_wiener* out = nullptr;
    guarded([&]() {
        qfilter::TimeGrid grid(0.0, dt, n_steps);
        out = new qf_wiener{qfilter::sample_wiener_path(grid, seed, stream_id)};
        return QF_OK;
    });
    return out;
}

int qf_wiener_increments(const qf_wiener* path, double* out, int n) {
    return guarded([&]() {
        if (!path || !out) throw qfilter::ConfigError("qf_wiener_increments: null argument");
        if (n != path->path.grid.n_steps)
            throw qfilter::ConfigError("qf_wiener_increments: length mismatch");
        for (int k = 0; k < n; ++k) out[k] = path->path.increments(k);
        return QF_OK;
    });
}

void qf_wiener_free(qf_wiener* path) { delete path; }

// ---------------------------------------------------------------------------

namespace {

qfilter::cmat mat2_from_array(const double m[8]) {
    qfilter::cmat out(2, 2);
    out(0, 0) = {m[0], m[1]};
    out(0, 1) = {m[2], m[3]};
    out(1, 0) = {m[4], m[5]};
    out(1, 1) = {m[6], m[7]};
    return out;
}

void mat2_to_array(const qfilter::cmat& m, double out[8]) {
    out[0] = m(0, 0).real(); out[1] = m(0, 0).imag();
    out[2] = m(0, 1).real(); out[3] = m(0, 1).imag();
    out[4] = m(1, 0).real(); out[5] = m(1, 0).imag();
    out[6] = m(1, 1).real(); out[7] = m(1, 1).imag();
}

}  // namespace

struct qf_qubit_filter {
    qfilter::MarkovModel model;
    qfilter::PosteriorState state;
};

qf_qubit_filter* qf_qubit_filter_create(const double H[8], const double L[8],
                                        const double rho0[8]) {
    qf_qubit_filter* out = nullptr;
    guarded([&]() {
        if (!H || !L || !rho0) throw qfilter::ConfigError("qf_qubit_filter_create: null argument");
        qfilter::MarkovModel model(mat2_from_array(H), mat2_from_array(L));
        out = new qf_qubit_filter{model, qfilter::make_posterior(mat2_from_array(rho0))};
        return QF_OK;
    });
    return out;
}

int qf_qubit_filter_step(qf_qubit_filter* f, double dy, double dt) {
    return guarded([&]() {
        if (!f) throw qfilter::ConfigError("qf_qubit_filter_step: null handle");
        f->state = qfilter::belavkin_step(f->state, f->model, dy, dt);
        return QF_OK;
    });
}

int qf_qubit_filter_density(const qf_qubit_filter* f, double rho_out[8]) {
    return guarded([&]() {
        if (!f || !rho_out) throw qfilter::ConfigError("qf_qubit_filter_density: null argument");
        mat2_to_array(f->state.rho, rho_out);
        return QF_OK;
    });
}

double qf_qubit_filter_log_likelihood(const qf_qubit_filter* f) {
    return f ? f->state.log_likelihood : 0.0;
}

void qf_qubit_filter_free(qf_qubit_filter* f) { delete f; }

// ---------------------------------------------------------------------------

struct qf_gaussian_filter {
    qfilter::GaussianModel model;
    qfilter::GaussianBelief belief;
};

qf_gaussian_filter* qf_gaussian_filter_create(double mass, double lambda, double theta_p0,
                                              double theta_q0) {
    qf_gaussian_filter* out = nullptr;
    guarded([&]() {
        qfilter::GaussianModel model = qfilter::free_particle_model(mass, lambda);
        qfilter::rvec theta0(2);
        theta0 << theta_p0, theta_q0;
        out = new qf_gaussian_filter{model, qfilter::initial_belief(model, theta0)};
        return QF_OK;
    });
    return out;
}

int qf_gaussian_filter_step(qf_gaussian_filter* f, double dy, double dt) {
    return guarded([&]() {
        if (!f) throw qfilter::ConfigError("qf_gaussian_filter_step: null handle");
        qfilter::filter_step(f->belief, f->model, dy, dt);
        return QF_OK;
    });
}

int qf_gaussian_filter_state(const qf_gaussian_filter* f, double out[7]) {
    return guarded([&]() {
        if (!f || !out) throw qfilter::ConfigError("qf_gaussian_filter_state: null argument");
        out[0] = f->belief.theta(0);
        out[1] = f->belief.theta(1);
        out[2] = f->belief.p(0, 0);
        out[3] = f->belief.p(0, 1);
        out[4] = f->belief.p(1, 1);
        out[5] = f->belief.log_density;
        out[6] = f->belief.t;
        return QF_OK;
    });
}

void qf_gaussian_filter_free(qf_gaussian_filter* f) { delete f; }

}  // extern "C"
