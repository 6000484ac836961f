// Seeded Brownian path generation and ODE/SDE integration.
//
// Streams are split by (seed, stream_id): trajectory k of an ensemble is
// bit-identical however the work is scheduled.

#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <vector>

#include "qfilter/linalg.hpp"

namespace qfilter {

struct TimeGrid {
    double t0 = 0.0;
    double dt = 0.0;
    int n_steps = 0;

    TimeGrid() = default;
    TimeGrid(double t0_, double dt_, int n_steps_) : t0(t0_), dt(dt_), n_steps(n_steps_) {
        if (!(dt > 0)) throw ConfigError("TimeGrid: dt must be positive");
        if (n_steps < 0) throw ConfigError("TimeGrid: n_steps must be >= 0");
    }
    double time(int k) const { return t0 + k * dt; }
    double t_end() const { return time(n_steps); }
};

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Deterministic generator for stream `stream_id` of master seed `seed`.
inline std::mt19937_64 make_stream_rng(std::uint64_t seed, std::uint64_t stream_id) {
    return std::mt19937_64(splitmix64(splitmix64(seed) ^ splitmix64(stream_id * 0x9e3779b97f4a7c15ULL + 1)));
}

struct WienerPath {
    TimeGrid grid;
    rvec increments;  // i.i.d. N(0, dt)
    std::uint64_t seed = 0;
    std::uint64_t stream_id = 0;

    double value_at(int k) const {  // W_{t_k}
        double w = 0;
        for (int i = 0; i < k; ++i) w += increments(i);
        return w;
    }
};

WienerPath sample_wiener_path(const TimeGrid& grid, std::uint64_t seed, std::uint64_t stream_id);

// ---------------------------------------------------------------------------
// ODE integration; states are flat complex vectors (real problems embed).

using OdeRhs = std::function<cvec(double, const cvec&)>;

enum class OdeScheme { rk4, adaptive };

cvec rk4_step(const OdeRhs& rhs, double t, const cvec& y, double dt);

// Trajectory sampled at the grid times (n_steps + 1 entries).
std::vector<cvec> integrate_ode(const OdeRhs& rhs, const cvec& y0, const TimeGrid& grid,
                                OdeScheme scheme = OdeScheme::rk4, double tol = 1e-10);

// ---------------------------------------------------------------------------
// SDE integration (Ito, Euler-Maruyama)

using SdeCoeff = std::function<cvec(double, const cvec&)>;

std::vector<cvec> integrate_sde(const SdeCoeff& drift, const SdeCoeff& diffusion,
                                const cvec& y0, const WienerPath& path);

// ---------------------------------------------------------------------------
// convergence-order estimation

struct StrongOrderProblem {
    SdeCoeff drift;
    SdeCoeff diffusion;
    cvec y0;
    double t_end = 1.0;
    // exact solution at t_end given terminal Brownian value W_T
    std::function<cvec(double w_T)> exact;
};

// Least-squares slope of log(strong error) vs log(dt).
double estimate_strong_order(const StrongOrderProblem& problem,
                             const std::vector<double>& dt_list, int n_paths,
                             std::uint64_t seed);

// Richardson-style order estimate for the rk4 integrator against an exact solution.
double estimate_ode_order(const OdeRhs& rhs, const cvec& y0, double t_end,
                          const std::function<cvec(double)>& exact,
                          const std::vector<double>& dt_list);

}  // namespace qfilter
