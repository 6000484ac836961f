// Commutative special case: 1-d diffusion signal, Zakai PDE on a grid,
// bootstrap particle filter and the classical Kalman-Bucy filter.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qfilter/linalg.hpp"
#include "qfilter/stochastic.hpp"

namespace qfilter {

// Signal dz = -c(t,z) dt + a(t,z) dv, observation dy = g(t,z) dt + dw.
struct Diffusion1D {
    std::function<double(double, double)> c;  // drift (note the sign convention)
    std::function<double(double, double)> a;  // diffusion
    std::function<double(double, double)> g;  // observation
};

// Assemble the drift from the commutative structure maps:
// c(z) = a(z) (g(z) - 0.5 a'(z)) - b(z), a' by central differences.
Diffusion1D quantum_to_classical_generator(const std::function<double(double, double)>& a,
                                           const std::function<double(double, double)>& b,
                                           const std::function<double(double, double)>& g,
                                           double fd_step = 1e-5);

// Generator applied to a sampled function: (Gamma x)(z) = c x' - 0.5 a^2 x''.
rvec apply_generator(const Diffusion1D& model, double t, const rvec& z_grid, const rvec& x_values);

struct GridDensity {
    double z_min = 0;
    double dz = 0;
    rvec values;   // nonnegative samples of the unnormalised density

    double mass() const { return values.sum() * dz; }
    double z_at(int j) const { return z_min + j * dz; }
    int size() const { return static_cast<int>(values.size()); }
};

GridDensity make_gaussian_density(double z_min, double z_max, int n, double mean, double var);

// mean and normalised variance of the (possibly unnormalised) density
void density_moments(const GridDensity& d, double& mean, double& var);

enum class NoiseCoupling { independent, anticorrelated };

// Crank-Nicolson transport (drift + diffusion, reflecting boundaries) followed
// by the exact multiplicative observation update exp{g dy - 0.5 g^2 dt}.
// With anticorrelated coupling (v = -w) the transport-in-noise term
// -d(a mu)/dz dw is added explicitly.
GridDensity zakai_pde_step(const GridDensity& density, const Diffusion1D& model, double t,
                           double dy, double dt,
                           NoiseCoupling coupling = NoiseCoupling::independent);

struct ParticleEnsemble {
    rvec positions;
    rvec weights;  // normalised to sum 1

    double mean() const { return weights.dot(positions); }
    double variance() const {
        double m = mean();
        double acc = 0;
        for (int i = 0; i < positions.size(); ++i)
            acc += weights(i) * (positions(i) - m) * (positions(i) - m);
        return acc;
    }
    double effective_sample_size() const { return 1.0 / weights.squaredNorm(); }
};

ParticleEnsemble make_gaussian_ensemble(int n, double mean, double var, std::mt19937_64& rng);

// Euler propagation, likelihood reweighting, systematic resampling below the
// effective-sample-size threshold.
ParticleEnsemble particle_filter_step(const ParticleEnsemble& ensemble, const Diffusion1D& model,
                                      double t, double dy, double dt, double resample_threshold,
                                      std::mt19937_64& rng);

struct KalmanBucyTrajectory {
    rvec mean;      // n_steps + 1
    rvec variance;  // n_steps + 1
};

// Linear model dz = -a z dt + sigma dv, dy = g z dt + dw:
// dP/dt = -2 a P + sigma^2 - g^2 P^2, dm = -a m dt + g P (dy - g m dt).
KalmanBucyTrajectory kalman_bucy_classical(double a_lin, double sigma, double g_lin,
                                           double P0, double m0, const TimeGrid& grid,
                                           const rvec& record);

}  // namespace qfilter
