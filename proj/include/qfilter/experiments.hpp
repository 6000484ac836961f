// Building blocks shared by the scenario runner, the verification suites and
// the tests: concrete qubit models, free-particle runs on the grid, and the
// classical OU benchmark.

#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "qfilter/belavkin.hpp"
#include "qfilter/classical.hpp"
#include "qfilter/gaussian.hpp"
#include "qfilter/toyfock.hpp"

namespace qfilter {

cmat rho_from_bloch(double x, double y, double z);
std::array<double, 3> bloch_from_rho(const cmat& rho);

MarkovModel make_qubit_model(const std::array<double, 3>& h,
                             const std::array<double, 3>& l_re,
                             const std::array<double, 3>& l_im);

// --- free particle -----------------------------------------------------------

struct FreeParticleRun {
    rvec record;                        // dy increments (physical law)
    std::vector<GaussianBelief> beliefs;  // n_steps + 1
    std::vector<cplx> omega;            // scalar width along the same grid
};

// Kalman-Bucy filter driving its own physical record dy = g.theta dt + dw.
FreeParticleRun run_free_particle_filter(double m, double lambda, const rvec& theta0,
                                         const TimeGrid& grid, std::uint64_t seed,
                                         std::uint64_t stream_id);

struct GridMoments {
    double q = 0, p = 0, var_q = 0, var_p = 0, cov_pq = 0;
};

struct GridSseRun {
    std::vector<GridMoments> moments;  // n_steps + 1
    cvec psi_final;
};

// Stochastic wave-function integration of the grid realisation of the model,
// driven by the given record.
GridSseRun run_grid_sse(const MarkovModel& grid_model, const QuadratureRep& rep,
                        const cvec& psi0, const rvec& record, double dt);

GridMoments grid_moments(const QuadratureRep& rep, const cvec& psi);

// --- filter consistency helpers ----------------------------------------------

// sup over t of trace distance between the normalised linear filter and the
// nonlinear filter on one shared record.
double zakai_belavkin_sup_distance(const MarkovModel& model, const cmat& rho0,
                                   const TimeGrid& grid, std::uint64_t seed);

// mean final trace distance between the slot-conditioned state and the
// diffusive filter driven by the matched +-sqrt(dt) record.
double toyfock_filter_distance(const MarkovModel& model, const cvec& psi0, double dt,
                               int n_slots, int n_records, std::uint64_t seed);

// --- classical OU benchmark ---------------------------------------------------

struct OuRun {
    rvec t;
    rvec record;        // dy
    rvec z_true;
    KalmanBucyTrajectory kb;
    rvec zakai_mean, zakai_var;
    rvec pf_mean, pf_var;
    GridDensity final_density;
    double pf_ess_final = 0;
};

struct OuParams {
    double a = 1.0, sigma = 1.0, g = 1.0;
    double z0_mean = 0.0, z0_var = 1.0;
    double z_min = -6.0, z_max = 6.0;
    int grid_n = 256;
    int n_particles = 10000;
    bool with_particles = true;
};

OuRun run_ou_benchmark(const OuParams& params, const TimeGrid& grid, std::uint64_t seed);

}  // namespace qfilter
