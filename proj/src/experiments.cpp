#include "qfilter/experiments.hpp"

#include <cmath>

namespace qfilter {

cmat rho_from_bloch(double x, double y, double z) {
    cmat rho = 0.5 * (cmat::Identity(2, 2) + x * sigma_x() + y * sigma_y() + z * sigma_z());
    return rho;
}

std::array<double, 3> bloch_from_rho(const cmat& rho) {
    return {(rho * sigma_x()).trace().real(), (rho * sigma_y()).trace().real(),
            (rho * sigma_z()).trace().real()};
}

MarkovModel make_qubit_model(const std::array<double, 3>& h,
                             const std::array<double, 3>& l_re,
                             const std::array<double, 3>& l_im) {
    cmat H = h[0] * sigma_x() + h[1] * sigma_y() + h[2] * sigma_z();
    cmat L = cmat::Zero(2, 2);
    const cmat paulis[3] = {sigma_x(), sigma_y(), sigma_z()};
    for (int k = 0; k < 3; ++k) L += cplx(l_re[k], l_im[k]) * paulis[k];
    return MarkovModel(H, L);
}

FreeParticleRun run_free_particle_filter(double m, double lambda, const rvec& theta0,
                                         const TimeGrid& grid, std::uint64_t seed,
                                         std::uint64_t stream_id) {
    GaussianModel gm = free_particle_model(m, lambda);
    WienerPath noise = sample_wiener_path(grid, seed, stream_id);
    FreeParticleRun run;
    run.record = rvec(grid.n_steps);
    run.beliefs.reserve(grid.n_steps + 1);
    GaussianBelief belief = initial_belief(gm, theta0);
    run.beliefs.push_back(belief);
    for (int k = 0; k < grid.n_steps; ++k) {
        double g_theta = gm.observation_g(belief.t).dot(belief.theta);
        double dy = g_theta * grid.dt + noise.increments(k);
        run.record(k) = dy;
        filter_step(belief, gm, dy, grid.dt);
        run.beliefs.push_back(belief);
    }
    run.omega = scalar_riccati_free_particle(m, lambda, grid);
    return run;
}

GridMoments grid_moments(const QuadratureRep& rep, const cvec& psi) {
    cvec means;
    rmat cov;
    expectation_and_covariance(rep, psi, {&rep.P, &rep.Q}, means, cov);
    GridMoments m;
    m.p = means(0).real();
    m.q = means(1).real();
    m.var_p = cov(0, 0);
    m.var_q = cov(1, 1);
    m.cov_pq = cov(0, 1);
    return m;
}

GridSseRun run_grid_sse(const MarkovModel& grid_model, const QuadratureRep& rep,
                        const cvec& psi0, const rvec& record, double dt) {
    GridSseRun run;
    cvec psi = psi0 / state_norm(rep, psi0);
    run.moments.push_back(grid_moments(rep, psi));
    for (int k = 0; k < record.size(); ++k) {
        psi = sse_step(psi, grid_model, record(k), dt);
        psi /= state_norm(rep, psi);
        run.moments.push_back(grid_moments(rep, psi));
    }
    run.psi_final = psi;
    return run;
}

double zakai_belavkin_sup_distance(const MarkovModel& model, const cmat& rho0,
                                   const TimeGrid& grid, std::uint64_t seed) {
    SimulatedRecord sim = simulate_record(model, rho0, grid, seed, 0, RecordMode::physical);
    PosteriorState zakai = make_posterior(rho0, grid.t0);
    double sup = 0;
    for (int k = 0; k < grid.n_steps; ++k) {
        zakai = zakai_step(zakai, model, sim.dy(k), grid.dt);
        sup = std::max(sup, trace_distance(zakai.rho, sim.states[k + 1].rho));
    }
    return sup;
}

double toyfock_filter_distance(const MarkovModel& model, const cvec& psi0, double dt,
                               int n_slots, int n_records, std::uint64_t seed) {
    double acc = 0;
    for (int r = 0; r < n_records; ++r) {
        auto rng = make_stream_rng(seed, 1000 + r);
        ConditionedTrajectory cond = sample_quadrature_record(model.H, model.L, dt, n_slots, psi0, rng);
        PosteriorState state = make_posterior(psi0 * psi0.adjoint(), 0.0);
        for (int k = 0; k < n_slots; ++k) {
            double dy = cond.record[k] * std::sqrt(dt);
            state = belavkin_step(state, model, dy, dt);
        }
        const cvec& oracle = cond.system_states.back();
        acc += trace_distance(state.rho, oracle * oracle.adjoint());
    }
    return acc / n_records;
}

OuRun run_ou_benchmark(const OuParams& prm, const TimeGrid& grid, std::uint64_t seed) {
    OuRun run;
    run.t = rvec(grid.n_steps + 1);
    for (int k = 0; k <= grid.n_steps; ++k) run.t(k) = grid.time(k);

    WienerPath signal_noise = sample_wiener_path(grid, seed, 0);
    WienerPath obs_noise = sample_wiener_path(grid, seed, 1);
    auto rng_init = make_stream_rng(seed, 2);
    std::normal_distribution<double> init(prm.z0_mean, std::sqrt(prm.z0_var));

    // true signal dz = -a z dt + sigma dv
    run.z_true = rvec(grid.n_steps + 1);
    run.z_true(0) = init(rng_init);
    run.record = rvec(grid.n_steps);
    for (int k = 0; k < grid.n_steps; ++k) {
        double z = run.z_true(k);
        run.record(k) = prm.g * z * grid.dt + obs_noise.increments(k);
        run.z_true(k + 1) = z - prm.a * z * grid.dt + prm.sigma * signal_noise.increments(k);
    }

    run.kb = kalman_bucy_classical(prm.a, prm.sigma, prm.g, prm.z0_var, prm.z0_mean, grid, run.record);

    Diffusion1D model;
    model.c = [&prm](double, double z) { return prm.a * z; };  // dz = -c dt + ... with c = a z
    model.a = [&prm](double, double) { return prm.sigma; };
    model.g = [&prm](double, double z) { return prm.g * z; };

    GridDensity density = make_gaussian_density(prm.z_min, prm.z_max, prm.grid_n, prm.z0_mean, prm.z0_var);
    run.zakai_mean = rvec(grid.n_steps + 1);
    run.zakai_var = rvec(grid.n_steps + 1);
    density_moments(density, run.zakai_mean(0), run.zakai_var(0));

    auto rng_pf = make_stream_rng(seed, 3);
    ParticleEnsemble ensemble;
    if (prm.with_particles)
        ensemble = make_gaussian_ensemble(prm.n_particles, prm.z0_mean, prm.z0_var, rng_pf);
    run.pf_mean = rvec(grid.n_steps + 1);
    run.pf_var = rvec(grid.n_steps + 1);
    if (prm.with_particles) {
        run.pf_mean(0) = ensemble.mean();
        run.pf_var(0) = ensemble.variance();
    }

    for (int k = 0; k < grid.n_steps; ++k) {
        double t = grid.time(k);
        density = zakai_pde_step(density, model, t, run.record(k), grid.dt);
        // keep the unnormalised mass in a safe range
        if (density.mass() < 1e-6 || density.mass() > 1e6) {
            double m0 = density.mass();
            density.values /= m0;
        }
        density_moments(density, run.zakai_mean(k + 1), run.zakai_var(k + 1));
        if (prm.with_particles) {
            ensemble = particle_filter_step(ensemble, model, t, run.record(k), grid.dt,
                                            0.5 * prm.n_particles, rng_pf);
            run.pf_mean(k + 1) = ensemble.mean();
            run.pf_var(k + 1) = ensemble.variance();
        }
    }
    run.final_density = density;
    if (prm.with_particles) run.pf_ess_final = ensemble.effective_sample_size();
    return run;
}

}  // namespace qfilter
