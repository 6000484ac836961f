#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qfilter/classical.hpp"
#include "qfilter/experiments.hpp"

using namespace qfilter;

TEST_CASE("commutative generator assembly") {
    auto zero = [](double, double) { return 0.0; };
    auto one = [](double, double) { return 1.0; };

    // a = 0: pure drift c = -b
    Diffusion1D pure_drift = quantum_to_classical_generator(
        zero, [](double, double z) { return 0.7 * z; }, one);
    CHECK(pure_drift.c(0.0, 2.0) == doctest::Approx(-1.4));

    // constant a and g, b = 0: c = a g
    Diffusion1D drifted = quantum_to_classical_generator(
        [](double, double) { return 1.5; }, zero, [](double, double) { return 0.4; });
    CHECK(drifted.c(0.0, -3.0) == doctest::Approx(0.6));

    // Gamma applied to x(z) = z^2: 2 c z - a^2 up to O(dz^2)
    Diffusion1D model;
    model.c = [](double, double z) { return 0.3 * z; };
    model.a = [](double, double) { return 0.9; };
    model.g = zero;
    const int n = 201;
    rvec grid(n), x2(n);
    for (int j = 0; j < n; ++j) {
        grid(j) = -2.0 + 0.02 * j;
        x2(j) = grid(j) * grid(j);
    }
    rvec gamma_x = apply_generator(model, 0.0, grid, x2);
    double worst = 0;
    for (int j = 5; j < n - 5; ++j)
        worst = std::max(worst, std::abs(gamma_x(j) - (2.0 * 0.3 * grid(j) * grid(j) - 0.81)));
    CHECK(worst < 1e-8);  // exact for a quadratic up to roundoff
}

TEST_CASE("fokker-planck mass conservation with no observation") {
    Diffusion1D model;
    model.c = [](double, double z) { return z; };      // OU drift
    model.a = [](double, double) { return 1.0; };
    model.g = [](double, double) { return 0.0; };
    GridDensity d = make_gaussian_density(-6, 6, 256, 0.3, 0.8);
    CHECK(d.mass() == doctest::Approx(1.0));
    for (int k = 0; k < 1000; ++k) d = zakai_pde_step(d, model, 0.0, 0.0, 1e-3);
    CHECK(std::abs(d.mass() - 1.0) < 1e-8);
    CHECK(d.values.minCoeff() > -1e-12);

    // stationary variance of the OU process is sigma^2 / (2 a) = 1/2
    double mean = 0, var = 0;
    GridDensity d2 = d;
    for (int k = 0; k < 4000; ++k) d2 = zakai_pde_step(d2, model, 0.0, 0.0, 1e-3);
    density_moments(d2, mean, var);
    CHECK(std::abs(mean) < 1e-6);
    CHECK(var == doctest::Approx(0.5).epsilon(5e-3));
}

TEST_CASE("stability guard") {
    Diffusion1D model;
    model.c = [](double, double) { return 0.0; };
    model.a = [](double, double) { return 5.0; };
    model.g = [](double, double) { return 0.0; };
    GridDensity d = make_gaussian_density(-6, 6, 64, 0.0, 1.0);
    CHECK_THROWS_AS(zakai_pde_step(d, model, 0.0, 0.0, 0.5), ConfigError);
}

TEST_CASE("zakai mass is a martingale under reference records") {
    Diffusion1D model;
    model.c = [](double, double z) { return z; };
    model.a = [](double, double) { return 1.0; };
    model.g = [](double, double z) { return z; };
    TimeGrid grid(0.0, 2e-3, 250);
    const int n_records = 400;
    double acc = 0, acc2 = 0;
    for (int r = 0; r < n_records; ++r) {
        WienerPath path = sample_wiener_path(grid, 314, r);
        GridDensity d = make_gaussian_density(-6, 6, 128, 0.0, 1.0);
        for (int k = 0; k < grid.n_steps; ++k)
            d = zakai_pde_step(d, model, grid.time(k), path.increments(k), grid.dt);
        double m = d.mass();
        acc += m;
        acc2 += m * m;
    }
    double mean = acc / n_records;
    double se = std::sqrt((acc2 / n_records - mean * mean) / n_records);
    CHECK(std::abs(mean - 1.0) < 3 * se + 5e-3);
}

TEST_CASE("classical kalman-bucy") {
    // stationary variance for a = sigma = g = 1 is sqrt(2) - 1
    TimeGrid grid(0.0, 1e-3, 10000);
    rvec flat = rvec::Zero(grid.n_steps);
    auto kb = kalman_bucy_classical(1.0, 1.0, 1.0, 1.0, 0.0, grid, flat);
    CHECK(std::abs(kb.variance(grid.n_steps) - (std::sqrt(2.0) - 1.0)) < 1e-6);

    // g = 0, a = 0: linear growth P(t) = P0 + sigma^2 t
    TimeGrid g2(0.0, 1e-2, 500);
    rvec flat2 = rvec::Zero(g2.n_steps);
    auto lyap = kalman_bucy_classical(0.0, 0.8, 0.0, 0.25, 0.0, g2, flat2);
    CHECK(lyap.variance(g2.n_steps) == doctest::Approx(0.25 + 0.64 * 5.0).epsilon(1e-12));

    CHECK_THROWS_AS(kalman_bucy_classical(1, 1, 1, 1, 0, grid, rvec::Zero(3)), ConfigError);
}

TEST_CASE("pde posterior matches kalman-bucy on the linear model") {
    OuParams prm;
    prm.with_particles = false;
    TimeGrid grid(0.0, 1e-3, 2000);
    OuRun run = run_ou_benchmark(prm, grid, 2023);
    double rmse_mean = 0, max_var_rel = 0;
    for (int k = 0; k <= grid.n_steps; ++k) {
        double e = run.zakai_mean(k) - run.kb.mean(k);
        rmse_mean += e * e;
        if (k > 100)
            max_var_rel = std::max(max_var_rel,
                                   std::abs(run.zakai_var(k) - run.kb.variance(k)) / run.kb.variance(k));
    }
    rmse_mean = std::sqrt(rmse_mean / (grid.n_steps + 1));
    CHECK(rmse_mean < 0.01);
    CHECK(max_var_rel < 0.01);
}

TEST_CASE("particle filter: prediction only leaves weights flat") {
    Diffusion1D model;
    model.c = [](double, double z) { return z; };
    model.a = [](double, double) { return 1.0; };
    model.g = [](double, double) { return 0.0; };
    auto rng = make_stream_rng(88, 0);
    ParticleEnsemble ens = make_gaussian_ensemble(500, 0.0, 1.0, rng);
    ParticleEnsemble next = particle_filter_step(ens, model, 0.0, 0.13, 1e-2, 0.0, rng);
    CHECK((next.weights - rvec::Constant(500, 1.0 / 500)).norm() < 1e-15);
    CHECK_THROWS_AS(particle_filter_step(ParticleEnsemble{rvec(1), rvec(1)}, model, 0, 0, 1e-2, 0, rng),
                    ConfigError);
}

TEST_CASE("particle filter agrees with the pde posterior") {
    OuParams prm;
    prm.n_particles = 4000;
    TimeGrid grid(0.0, 1e-3, 1000);
    OuRun run = run_ou_benchmark(prm, grid, 99);
    double se = std::sqrt(run.pf_var(grid.n_steps) / std::max(run.pf_ess_final, 400.0));
    CHECK(std::abs(run.pf_mean(grid.n_steps) - run.zakai_mean(grid.n_steps)) < 3 * se + 0.01);
}

TEST_CASE("systematic resampling preserves the weighted mean on average") {
    auto rng = make_stream_rng(7, 7);
    Diffusion1D model;
    model.c = [](double, double) { return 0.0; };
    model.a = [](double, double) { return 0.0; };  // no motion
    model.g = [](double, double z) { return z; };  // reweight by the observation
    const int reps = 300;
    double acc = 0, acc2 = 0;
    for (int r = 0; r < reps; ++r) {
        ParticleEnsemble ens = make_gaussian_ensemble(400, 0.0, 1.0, rng);
        // one observation step with a large threshold forces resampling
        ParticleEnsemble before = particle_filter_step(ens, model, 0.0, 0.05, 0.01, 0.0, rng);
        ParticleEnsemble after = particle_filter_step(ens, model, 0.0, 0.05, 0.01, 1e9, rng);
        double diff = after.mean() - before.mean();
        acc += diff;
        acc2 += diff * diff;
    }
    double mean = acc / reps;
    double se = std::sqrt((acc2 / reps - mean * mean) / reps);
    CHECK(std::abs(mean) < 2.6 * se + 1e-4);  // two-sided p > 0.01
}

TEST_CASE("anticorrelated transport term stays mass-plausible") {
    Diffusion1D model;
    model.c = [](double, double z) { return z; };
    model.a = [](double, double) { return 0.6; };
    model.g = [](double, double z) { return 0.5 * z; };
    GridDensity d = make_gaussian_density(-6, 6, 128, 0.0, 1.0);
    TimeGrid grid(0.0, 1e-3, 200);
    WienerPath path = sample_wiener_path(grid, 5, 5);
    for (int k = 0; k < grid.n_steps; ++k)
        d = zakai_pde_step(d, model, grid.time(k), path.increments(k), grid.dt,
                           NoiseCoupling::anticorrelated);
    CHECK(d.mass() > 0.2);
    CHECK(d.mass() < 5.0);
    CHECK(d.values.allFinite());
}
