#include "qfilter/stochastic.hpp"

#include <cmath>

namespace qfilter {

WienerPath sample_wiener_path(const TimeGrid& grid, std::uint64_t seed, std::uint64_t stream_id) {
    WienerPath path;
    path.grid = grid;
    path.seed = seed;
    path.stream_id = stream_id;
    path.increments = rvec(grid.n_steps);
    auto rng = make_stream_rng(seed, stream_id);
    std::normal_distribution<double> normal(0.0, std::sqrt(grid.dt));
    for (int k = 0; k < grid.n_steps; ++k) path.increments(k) = normal(rng);
    return path;
}

cvec rk4_step(const OdeRhs& rhs, double t, const cvec& y, double dt) {
    cvec k1 = rhs(t, y);
    cvec k2 = rhs(t + 0.5 * dt, y + 0.5 * dt * k1);
    cvec k3 = rhs(t + 0.5 * dt, y + 0.5 * dt * k2);
    cvec k4 = rhs(t + dt, y + dt * k3);
    return y + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

void check_finite(const cvec& y, int step) {
    if (!y.allFinite())
        throw NumericError("integrator: non-finite state at step " + std::to_string(step));
}

// one embedded Cash-Karp 4(5) step with error estimate
cvec rkck_step(const OdeRhs& rhs, double t, const cvec& y, double dt, double& err) {
    static const double b21 = 1.0 / 5.0;
    static const double b31 = 3.0 / 40.0, b32 = 9.0 / 40.0;
    static const double b41 = 3.0 / 10.0, b42 = -9.0 / 10.0, b43 = 6.0 / 5.0;
    static const double b51 = -11.0 / 54.0, b52 = 5.0 / 2.0, b53 = -70.0 / 27.0, b54 = 35.0 / 27.0;
    static const double b61 = 1631.0 / 55296.0, b62 = 175.0 / 512.0, b63 = 575.0 / 13824.0,
                        b64 = 44275.0 / 110592.0, b65 = 253.0 / 4096.0;
    static const double c1 = 37.0 / 378.0, c3 = 250.0 / 621.0, c4 = 125.0 / 594.0, c6 = 512.0 / 1771.0;
    static const double d1 = c1 - 2825.0 / 27648.0, d3 = c3 - 18575.0 / 48384.0,
                        d4 = c4 - 13525.0 / 55296.0, d5 = -277.0 / 14336.0, d6 = c6 - 0.25;
    cvec k1 = rhs(t, y);
    cvec k2 = rhs(t + 0.2 * dt, y + dt * (b21 * k1));
    cvec k3 = rhs(t + 0.3 * dt, y + dt * (b31 * k1 + b32 * k2));
    cvec k4 = rhs(t + 0.6 * dt, y + dt * (b41 * k1 + b42 * k2 + b43 * k3));
    cvec k5 = rhs(t + dt, y + dt * (b51 * k1 + b52 * k2 + b53 * k3 + b54 * k4));
    cvec k6 = rhs(t + 0.875 * dt, y + dt * (b61 * k1 + b62 * k2 + b63 * k3 + b64 * k4 + b65 * k5));
    cvec out = y + dt * (c1 * k1 + c3 * k3 + c4 * k4 + c6 * k6);
    err = (dt * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6)).norm();
    return out;
}

// integrate over [t, t+h] with adaptive substeps
cvec adaptive_advance(const OdeRhs& rhs, double t, cvec y, double h, double tol) {
    double remaining = h;
    double dt = h;
    int guard = 0;
    while (remaining > 1e-15 * h) {
        if (dt > remaining) dt = remaining;
        double err = 0;
        cvec trial = rkck_step(rhs, t, y, dt, err);
        double scale = std::max(1.0, y.norm());
        if (err <= tol * scale || dt < 1e-12 * h) {
            y = std::move(trial);
            t += dt;
            remaining -= dt;
            double grow = (err > 0) ? 0.9 * std::pow(tol * scale / err, 0.2) : 5.0;
            dt *= std::min(5.0, std::max(0.2, grow));
        } else {
            dt *= std::max(0.1, 0.9 * std::pow(tol * scale / err, 0.25));
        }
        if (++guard > 1000000) throw NumericError("adaptive integrator: step count exceeded");
    }
    return y;
}

}  // namespace

std::vector<cvec> integrate_ode(const OdeRhs& rhs, const cvec& y0, const TimeGrid& grid,
                                OdeScheme scheme, double tol) {
    std::vector<cvec> traj;
    traj.reserve(grid.n_steps + 1);
    traj.push_back(y0);
    cvec y = y0;
    for (int k = 0; k < grid.n_steps; ++k) {
        double t = grid.time(k);
        y = (scheme == OdeScheme::rk4) ? rk4_step(rhs, t, y, grid.dt)
                                       : adaptive_advance(rhs, t, y, grid.dt, tol);
        check_finite(y, k);
        traj.push_back(y);
    }
    return traj;
}

std::vector<cvec> integrate_sde(const SdeCoeff& drift, const SdeCoeff& diffusion,
                                const cvec& y0, const WienerPath& path) {
    std::vector<cvec> traj;
    traj.reserve(path.grid.n_steps + 1);
    traj.push_back(y0);
    cvec y = y0;
    for (int k = 0; k < path.grid.n_steps; ++k) {
        double t = path.grid.time(k);
        y = y + path.grid.dt * drift(t, y) + path.increments(k) * diffusion(t, y);
        check_finite(y, k);
        traj.push_back(y);
    }
    return traj;
}

double estimate_strong_order(const StrongOrderProblem& problem,
                             const std::vector<double>& dt_list, int n_paths,
                             std::uint64_t seed) {
    if (dt_list.size() < 3) throw ConfigError("estimate_strong_order: need >= 3 dt values");
    if (n_paths < 100) throw ConfigError("estimate_strong_order: need >= 100 paths");

    std::vector<double> log_dt, log_err;
    for (double dt : dt_list) {
        int n_steps = static_cast<int>(std::llround(problem.t_end / dt));
        TimeGrid grid(0.0, problem.t_end / n_steps, n_steps);
        double acc = 0;
        for (int p = 0; p < n_paths; ++p) {
            WienerPath path = sample_wiener_path(grid, seed, p);
            auto traj = integrate_sde(problem.drift, problem.diffusion, problem.y0, path);
            double w_T = path.increments.sum();
            acc += (traj.back() - problem.exact(w_T)).norm();
        }
        log_dt.push_back(std::log(grid.dt));
        log_err.push_back(std::log(acc / n_paths));
    }
    // least squares slope
    double n = static_cast<double>(log_dt.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < log_dt.size(); ++i) {
        sx += log_dt[i];
        sy += log_err[i];
        sxx += log_dt[i] * log_dt[i];
        sxy += log_dt[i] * log_err[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

double estimate_ode_order(const OdeRhs& rhs, const cvec& y0, double t_end,
                          const std::function<cvec(double)>& exact,
                          const std::vector<double>& dt_list) {
    if (dt_list.size() < 3) throw ConfigError("estimate_ode_order: need >= 3 dt values");
    std::vector<double> log_dt, log_err;
    for (double dt : dt_list) {
        int n_steps = static_cast<int>(std::llround(t_end / dt));
        TimeGrid grid(0.0, t_end / n_steps, n_steps);
        auto traj = integrate_ode(rhs, y0, grid, OdeScheme::rk4);
        double err = (traj.back() - exact(t_end)).norm();
        log_dt.push_back(std::log(grid.dt));
        log_err.push_back(std::log(std::max(err, 1e-300)));
    }
    double n = static_cast<double>(log_dt.size());
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (size_t i = 0; i < log_dt.size(); ++i) {
        sx += log_dt[i];
        sy += log_err[i];
        sxx += log_dt[i] * log_dt[i];
        sxy += log_dt[i] * log_err[i];
    }
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace qfilter
