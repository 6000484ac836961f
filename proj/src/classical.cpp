#include "qfilter/classical.hpp"

#include <cmath>

namespace qfilter {

Diffusion1D quantum_to_classical_generator(const std::function<double(double, double)>& a,
                                           const std::function<double(double, double)>& b,
                                           const std::function<double(double, double)>& g,
                                           double fd_step) {
    Diffusion1D model;
    model.a = a;
    model.g = g;
    model.c = [a, b, g, fd_step](double t, double z) {
        double da = (a(t, z + fd_step) - a(t, z - fd_step)) / (2.0 * fd_step);
        return a(t, z) * (g(t, z) - 0.5 * da) - b(t, z);
    };
    return model;
}

rvec apply_generator(const Diffusion1D& model, double t, const rvec& z_grid, const rvec& x_values) {
    const int n = static_cast<int>(z_grid.size());
    if (n < 3) throw ConfigError("apply_generator: need at least 3 grid points");
    const double dz = z_grid(1) - z_grid(0);
    rvec out = rvec::Zero(n);
    for (int j = 1; j + 1 < n; ++j) {
        double x1 = (x_values(j + 1) - x_values(j - 1)) / (2.0 * dz);
        double x2 = (x_values(j + 1) - 2.0 * x_values(j) + x_values(j - 1)) / (dz * dz);
        double a = model.a(t, z_grid(j));
        out(j) = model.c(t, z_grid(j)) * x1 - 0.5 * a * a * x2;
    }
    out(0) = out(1);
    out(n - 1) = out(n - 2);
    return out;
}

GridDensity make_gaussian_density(double z_min, double z_max, int n, double mean, double var) {
    if (!(z_max > z_min) || n < 8) throw ConfigError("make_gaussian_density: bad grid");
    GridDensity d;
    d.z_min = z_min;
    d.dz = (z_max - z_min) / (n - 1);
    d.values = rvec(n);
    for (int j = 0; j < n; ++j) {
        double u = d.z_at(j) - mean;
        d.values(j) = std::exp(-0.5 * u * u / var) / std::sqrt(2.0 * M_PI * var);
    }
    d.values /= d.mass();
    return d;
}

void density_moments(const GridDensity& d, double& mean, double& var) {
    double m0 = d.mass();
    if (!(m0 > 0)) throw NumericError("density_moments: zero mass");
    double m1 = 0, m2 = 0;
    for (int j = 0; j < d.size(); ++j) {
        double z = d.z_at(j);
        m1 += z * d.values(j);
        m2 += z * z * d.values(j);
    }
    m1 *= d.dz / m0;
    m2 *= d.dz / m0;
    mean = m1;
    var = m2 - m1 * m1;
}

namespace {

void thomas_solve(const rvec& lower, const rvec& diag, const rvec& upper, rvec& rhs) {
    const int n = static_cast<int>(diag.size());
    rvec c_star(n), d_star(n);
    c_star(0) = upper(0) / diag(0);
    d_star(0) = rhs(0) / diag(0);
    for (int i = 1; i < n; ++i) {
        double m = diag(i) - lower(i) * c_star(i - 1);
        c_star(i) = (i + 1 < n) ? upper(i) / m : 0.0;
        d_star(i) = (rhs(i) - lower(i) * d_star(i - 1)) / m;
    }
    rhs(n - 1) = d_star(n - 1);
    for (int i = n - 2; i >= 0; --i) rhs(i) = d_star(i) - c_star(i) * rhs(i + 1);
}

}  // namespace

GridDensity zakai_pde_step(const GridDensity& density, const Diffusion1D& model, double t,
                           double dy, double dt, NoiseCoupling coupling) {
    const int n = density.size();
    const double dz = density.dz;

    double a_max = 0;
    for (int j = 0; j < n; ++j) a_max = std::max(a_max, std::abs(model.a(t, density.z_at(j))));
    if (a_max > 0 && dt > 10.0 * dz * dz / (a_max * a_max))
        throw ConfigError("zakai_pde_step: stability bound dt <= 10 dz^2 / max(a^2) violated");

    // conservative flux-form Fokker-Planck matrix (tridiagonal, zero-flux ends):
    // d mu_j/dt = (F_{j+1/2} - F_{j-1/2}) / dz,
    // F_{j+1/2} = c_{j+1/2} (mu_j + mu_{j+1})/2 + (A_{j+1} mu_{j+1} - A_j mu_j)/(2 dz)
    rvec A(n), c_half(n + 1);
    for (int j = 0; j < n; ++j) {
        double a = model.a(t, density.z_at(j));
        A(j) = a * a;
    }
    for (int j = 1; j < n; ++j) c_half(j) = model.c(t, density.z_min + (j - 0.5) * dz);

    rvec lo = rvec::Zero(n), di = rvec::Zero(n), up = rvec::Zero(n);
    for (int j = 0; j < n; ++j) {
        if (j + 1 < n) {  // flux at j+1/2
            di(j) += (0.5 * c_half(j + 1) - A(j) / (2.0 * dz)) / dz;
            up(j) += (0.5 * c_half(j + 1) + A(j + 1) / (2.0 * dz)) / dz;
        }
        if (j > 0) {  // minus flux at j-1/2
            di(j) -= (0.5 * c_half(j) + A(j) / (2.0 * dz)) / dz;
            lo(j) -= (0.5 * c_half(j) - A(j - 1) / (2.0 * dz)) / dz;
        }
    }

    // Crank-Nicolson: (I - dt/2 M) mu' = (I + dt/2 M) mu
    rvec rhs(n);
    for (int j = 0; j < n; ++j) {
        double acc = density.values(j) * (1.0 + 0.5 * dt * di(j));
        if (j > 0) acc += 0.5 * dt * lo(j) * density.values(j - 1);
        if (j + 1 < n) acc += 0.5 * dt * up(j) * density.values(j + 1);
        rhs(j) = acc;
    }
    rvec l2(n), d2(n), u2(n);
    for (int j = 0; j < n; ++j) {
        l2(j) = -0.5 * dt * lo(j);
        d2(j) = 1.0 - 0.5 * dt * di(j);
        u2(j) = -0.5 * dt * up(j);
    }
    thomas_solve(l2, d2, u2, rhs);

    GridDensity out = density;
    out.values = rhs;

    if (coupling == NoiseCoupling::anticorrelated) {
        // explicit transport-in-noise term d(a mu)/dz * dy
        rvec flux(n);
        for (int j = 0; j < n; ++j) flux(j) = model.a(t, out.z_at(j)) * out.values(j);
        rvec add = rvec::Zero(n);
        for (int j = 1; j + 1 < n; ++j) add(j) = (flux(j + 1) - flux(j - 1)) / (2.0 * dz);
        out.values += dy * add;
    }

    // multiplicative observation update, exact per step
    for (int j = 0; j < n; ++j) {
        double g = model.g(t, out.z_at(j));
        out.values(j) *= std::exp(g * dy - 0.5 * g * g * dt);
    }

    double mn = out.values.minCoeff();
    if (mn < -1e-10 * std::max(1.0, out.values.maxCoeff()))
        throw NumericError("zakai_pde_step: negative density " + std::to_string(mn));
    if (!(out.mass() > 0) || !out.values.allFinite())
        throw NumericError("zakai_pde_step: density degenerate");
    return out;
}

ParticleEnsemble make_gaussian_ensemble(int n, double mean, double var, std::mt19937_64& rng) {
    if (n < 2) throw ConfigError("make_gaussian_ensemble: need >= 2 particles");
    std::normal_distribution<double> normal(mean, std::sqrt(var));
    ParticleEnsemble ens;
    ens.positions = rvec(n);
    ens.weights = rvec::Constant(n, 1.0 / n);
    for (int i = 0; i < n; ++i) ens.positions(i) = normal(rng);
    return ens;
}

ParticleEnsemble particle_filter_step(const ParticleEnsemble& ensemble, const Diffusion1D& model,
                                      double t, double dy, double dt, double resample_threshold,
                                      std::mt19937_64& rng) {
    const int n = static_cast<int>(ensemble.positions.size());
    if (n < 2) throw ConfigError("particle_filter_step: need >= 2 particles");
    std::normal_distribution<double> normal(0.0, 1.0);
    ParticleEnsemble out = ensemble;
    const double sqdt = std::sqrt(dt);
    for (int i = 0; i < n; ++i) {
        double z = out.positions(i);
        out.positions(i) = z - model.c(t, z) * dt + model.a(t, z) * sqdt * normal(rng);
    }
    double wsum = 0;
    for (int i = 0; i < n; ++i) {
        double g = model.g(t, out.positions(i));
        out.weights(i) *= std::exp(g * dy - 0.5 * g * g * dt);
        wsum += out.weights(i);
    }
    if (!(wsum > 0)) throw NumericError("particle_filter_step: total weight underflow");
    out.weights /= wsum;

    if (out.effective_sample_size() < resample_threshold) {
        // systematic resampling
        rvec cdf(n);
        double acc = 0;
        for (int i = 0; i < n; ++i) {
            acc += out.weights(i);
            cdf(i) = acc;
        }
        std::uniform_real_distribution<double> unif(0.0, 1.0 / n);
        double u = unif(rng);
        rvec resampled(n);
        int idx = 0;
        for (int i = 0; i < n; ++i) {
            double target = u + static_cast<double>(i) / n;
            while (idx + 1 < n && cdf(idx) < target) ++idx;
            resampled(i) = out.positions(idx);
        }
        out.positions = resampled;
        out.weights = rvec::Constant(n, 1.0 / n);
    }
    return out;
}

KalmanBucyTrajectory kalman_bucy_classical(double a_lin, double sigma, double g_lin,
                                           double P0, double m0, const TimeGrid& grid,
                                           const rvec& record) {
    if (record.size() != grid.n_steps)
        throw ConfigError("kalman_bucy_classical: record length mismatch");
    KalmanBucyTrajectory out;
    out.mean = rvec(grid.n_steps + 1);
    out.variance = rvec(grid.n_steps + 1);
    double m = m0, P = P0;
    out.mean(0) = m;
    out.variance(0) = P;
    auto prhs = [&](double P_) { return -2.0 * a_lin * P_ + sigma * sigma - g_lin * g_lin * P_ * P_; };
    for (int k = 0; k < grid.n_steps; ++k) {
        double dy = record(k);
        m += -a_lin * m * grid.dt + g_lin * P * (dy - g_lin * m * grid.dt);
        double k1 = prhs(P), k2 = prhs(P + 0.5 * grid.dt * k1), k3 = prhs(P + 0.5 * grid.dt * k2),
               k4 = prhs(P + grid.dt * k3);
        P += (grid.dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
        out.mean(k + 1) = m;
        out.variance(k + 1) = P;
    }
    return out;
}

}  // namespace qfilter
