#include "qfilter/belavkin.hpp"

#include <cmath>

namespace qfilter {

cmat gamma_map(const cmat& X, const MarkovModel& model) {
    const cmat& L = model.L;
    cmat Ld = L.adjoint();
    return 0.5 * (Ld * commutator(L, X) + commutator(X, Ld) * L) +
           cplx(0, 1) * commutator(X, model.H);
}

cmat delta_map(const cmat& X, const MarkovModel& model) { return commutator(X, model.L); }

namespace {
cmat random_complex(int dim, std::mt19937_64& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    cmat X(dim, dim);
    for (int i = 0; i < dim; ++i)
        for (int j = 0; j < dim; ++j) X(i, j) = cplx(normal(rng), normal(rng));
    return X;
}
}  // namespace

double validate_structure_maps(const MarkovModel& model, int n_random, std::uint64_t seed) {
    auto rng = make_stream_rng(seed, 0xf10c);
    double residual = 0;
    cmat id = cmat::Identity(model.dim, model.dim);
    residual = std::max(residual, gamma_map(id, model).norm());
    residual = std::max(residual, delta_map(id, model).norm());
    for (int k = 0; k < n_random; ++k) {
        cmat X = random_complex(model.dim, rng);
        cmat Xd = X.adjoint();
        residual = std::max(residual, (gamma_map(Xd, model) - gamma_map(X, model).adjoint()).norm());
        cmat lhs = gamma_map(Xd * X, model);
        cmat rhs = Xd * gamma_map(X, model) + gamma_map(X, model).adjoint() * X -
                   delta_map(X, model).adjoint() * delta_map(X, model);
        residual = std::max(residual, (lhs - rhs).norm());
        cmat dlhs = delta_map(Xd * X, model);
        cmat drhs = Xd * delta_map(X, model) + delta_map(Xd, model) * X;
        residual = std::max(residual, (dlhs - drhs).norm());
    }
    return residual;
}

cmat lindblad_rhs(const cmat& rho, const MarkovModel& model) {
    if (rho.rows() != model.dim) throw ConfigError("lindblad_rhs: dimension mismatch");
    const cmat& L = model.L;
    cmat Ld = L.adjoint();
    cmat LdL = Ld * L;
    return cplx(0, -1) * commutator(model.H, rho) + L * rho * Ld -
           0.5 * (LdL * rho + rho * LdL);
}

PosteriorState make_posterior(const cmat& rho0, double t0) {
    PosteriorState s;
    double tr = rho0.trace().real();
    if (!(tr > 0)) throw ConfigError("make_posterior: state must have positive trace");
    s.rho = 0.5 * (rho0 + rho0.adjoint()) / tr;
    s.log_likelihood = 0.0;
    s.t = t0;
    return s;
}

cmat zakai_step_raw(const cmat& sigma, const MarkovModel& model, double dy, double dt) {
    if (!(dt > 0)) throw ConfigError("zakai_step: dt must be positive");
    cmat out = sigma + dt * lindblad_rhs(sigma, model) +
               dy * (model.L * sigma + sigma * model.L.adjoint());
    return 0.5 * (out + out.adjoint()).eval();
}

PosteriorState zakai_step(const PosteriorState& state, const MarkovModel& model,
                          double dy, double dt) {
    cmat updated = zakai_step_raw(state.rho, model, dy, dt);
    double tr = updated.trace().real();
    if (!(tr > 1e-300))
        throw NumericError("zakai_step: trace collapse (zero-likelihood path)");
    PosteriorState next;
    next.rho = updated / tr;
    next.log_likelihood = state.log_likelihood + std::log(tr);
    next.t = state.t + dt;
    return next;
}

PosteriorState belavkin_step(const PosteriorState& state, const MarkovModel& model,
                             double dy, double dt) {
    if (!(dt > 0)) throw ConfigError("belavkin_step: dt must be positive");
    const cmat& rho = state.rho;
    cmat G = model.G();
    double g_exp = (G * rho).trace().real();
    double innovation = dy - g_exp * dt;
    cmat meas = model.L * rho + rho * model.L.adjoint() - g_exp * rho;
    cmat updated = rho + dt * lindblad_rhs(rho, model) + innovation * meas;
    updated = 0.5 * (updated + updated.adjoint()).eval();
    double tr = updated.trace().real();
    if (!(tr > 0)) throw NumericError("belavkin_step: non-positive trace");
    updated /= tr;
    double lam_min = min_eigenvalue(updated);
    if (lam_min < -1e-6)
        throw NumericError("belavkin_step: negative eigenvalue " + std::to_string(lam_min) +
                           " (step size too coarse)");
    PosteriorState next;
    next.rho = std::move(updated);
    next.log_likelihood = state.log_likelihood + g_exp * dy - 0.5 * g_exp * g_exp * dt;
    next.t = state.t + dt;
    return next;
}

cvec sse_step(const cvec& psi, const MarkovModel& model, double dy, double dt) {
    const cmat& L = model.L;
    cvec Lpsi = L * psi;
    cvec Ldag_Lpsi = L.adjoint() * Lpsi;
    double g_exp = 2.0 * (psi.adjoint() * Lpsi)(0, 0).real();
    double innovation = dy - g_exp * dt;
    cvec drift = cplx(0, -1) * (model.H * psi) - 0.5 * Ldag_Lpsi +
                 0.5 * g_exp * Lpsi - 0.125 * g_exp * g_exp * psi;
    cvec next = psi + dt * drift + innovation * (Lpsi - 0.5 * g_exp * psi);
    double nrm = next.norm();
    if (!(nrm > 0) || !next.allFinite()) throw NumericError("sse_step: degenerate state");
    return next / nrm;
}

SimulatedRecord simulate_record(const MarkovModel& model, const cmat& rho0,
                                const TimeGrid& grid, std::uint64_t seed,
                                std::uint64_t stream_id, RecordMode mode) {
    WienerPath noise = sample_wiener_path(grid, seed, stream_id);
    SimulatedRecord out;
    out.dy = rvec(grid.n_steps);
    out.states.reserve(grid.n_steps + 1);
    PosteriorState state = make_posterior(rho0, grid.t0);
    out.states.push_back(state);
    cmat G = model.G();
    for (int k = 0; k < grid.n_steps; ++k) {
        double dy;
        if (mode == RecordMode::physical) {
            double g_exp = (G * state.rho).trace().real();
            dy = g_exp * grid.dt + noise.increments(k);
        } else {
            dy = noise.increments(k);
        }
        out.dy(k) = dy;
        state = belavkin_step(state, model, dy, grid.dt);
        out.states.push_back(state);
    }
    return out;
}

DualityResult verify_duality_mc(const MarkovModel& model, const cmat& X, double g,
                                const cmat& rho0, const TimeGrid& grid, int n_paths,
                                std::uint64_t seed) {
    if (model.dim > 8) throw ConfigError("verify_duality_mc: model dimension too large");
    if (n_paths < 1000) throw ConfigError("verify_duality_mc: need >= 1000 paths");

    // deterministic side: d mu/dt = L(mu) + g (L mu + mu L+)
    const int d = model.dim;
    OdeRhs rhs = [&](double, const cvec& flat) {
        cmat mu = Eigen::Map<const cmat>(flat.data(), d, d);
        cmat dmu = lindblad_rhs(mu, model) + g * (model.L * mu + mu * model.L.adjoint());
        cvec out = Eigen::Map<const cvec>(dmu.data(), d * d);
        return out;
    };
    cmat mu0 = rho0 / rho0.trace().real();
    cvec flat0 = Eigen::Map<const cvec>(mu0.data(), d * d);
    auto traj = integrate_ode(rhs, flat0, grid, OdeScheme::adaptive, 1e-12);
    cmat mu_T = Eigen::Map<const cmat>(traj.back().data(), d, d);
    double ode_value = (mu_T * X).trace().real();

    // Monte Carlo side under the reference (Wiener) measure
    double acc = 0, acc2 = 0;
    for (int p = 0; p < n_paths; ++p) {
        WienerPath path = sample_wiener_path(grid, seed, p);
        PosteriorState state = make_posterior(rho0, grid.t0);
        double log_eg = 0;
        for (int k = 0; k < grid.n_steps; ++k) {
            double dw = path.increments(k);
            log_eg += g * dw - 0.5 * g * g * grid.dt;
            state = zakai_step(state, model, dw, grid.dt);
        }
        double v = (state.rho * X).trace().real() *
                   std::exp(state.log_likelihood + log_eg);
        acc += v;
        acc2 += v * v;
    }
    DualityResult res;
    res.mc_value = acc / n_paths;
    double var = std::max(0.0, acc2 / n_paths - res.mc_value * res.mc_value);
    res.std_error = std::sqrt(var / n_paths);
    res.ode_value = ode_value;
    res.discrepancy = std::abs(res.mc_value - ode_value);
    return res;
}

}  // namespace qfilter
