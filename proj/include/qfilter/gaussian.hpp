// Gaussian (Kalman-Bucy) filter for linear quantum diffusion under continuous
// observation of G = R(zeta) + R(zeta)+: deterministic matrix Riccati flow for
// the posterior covariance, record-driven mean update, backward conjugate
// flow and characteristic functionals.
//
// Phase-space conventions (hbar = 2): components ordered (p, q) per mode,
// commutator matrix s with [R_a, R_b] = i s_ab I, canonically
// s = [[0, -2], [2, 0]]. Coefficient matrices (upsilon, omega, zeta) are
// stored in the normalisation in which the Hamiltonian quadratic form omega
// induces the symplectic mean drift s*omega/4.

#pragma once

#include <functional>
#include <vector>

#include "qfilter/belavkin.hpp"
#include "qfilter/linalg.hpp"
#include "qfilter/stochastic.hpp"

namespace qfilter {

struct SymplecticSpace {
    int n_modes = 1;
    rmat s;  // antisymmetric commutator matrix, |entries| <= 2

    static SymplecticSpace canonical(int n_modes);
    void validate() const;
};

struct GaussianModel {
    SymplecticSpace space;
    std::function<rvec(double)> upsilon;  // linear Hamiltonian term
    std::function<rmat(double)> omega;    // symmetric quadratic Hamiltonian form
    std::function<cvec(double)> zeta;     // coupling, L = R(zeta)

    int dim() const { return 2 * space.n_modes; }

    // derived coefficients at time t
    rvec zeta_re(double t) const;
    rvec zeta_im(double t) const;
    rmat lambda_mat(double t) const;   // 4 Re zeta Re zeta^T
    cmat kappa(double t) const;        // 0.5 (eps - eps#) + i omega
    rmat drift_A(double t) const;      // s (omega/4 + zr zi^T - zi zr^T)
    rvec drift_b(double t) const;      // s upsilon / 4
    rmat diffusion_D(double t) const;  // -s (zr zr^T + zi zi^T) s
    rvec observation_g(double t) const;  // 2 Re zeta
};

struct GaussianBelief {
    rvec theta;        // posterior means of R
    rmat p;            // posterior symmetric covariance
    double log_density = 0;  // ln of the record density w.r.t. Wiener measure
    double t = 0;
};

GaussianBelief initial_belief(const GaussianModel& model, const rvec& theta0);

// upsilon = 0, omega = [[1/2m, 0], [0, 0]], zeta = (sqrt(lambda)/2) (0, 1)^T.
GaussianModel free_particle_model(double m, double lambda);

// Measurement gain 2 p Re zeta - s Im zeta.
rvec filter_gain(const GaussianBelief& belief, const GaussianModel& model);

// d p/dt = A p + p A^T + D - B B^T (record independent).
rmat riccati_rhs(const rmat& p, const GaussianModel& model, double t);

// One rk4 step of the covariance flow; result symmetrised, admissibility
// (p + (i/2) s >= 0) monitored.
rmat riccati_step(const rmat& p, const GaussianModel& model, double t, double dt);

enum class MeanForm { innovation, kalman_bucy };

// Mean/likelihood update over one record increment using the start-of-step
// covariance; both forms are algebraically identical.
void mean_step(GaussianBelief& belief, const GaussianModel& model, double dy, double dt,
               MeanForm form = MeanForm::innovation);

// mean_step followed by riccati_step; advances t.
void filter_step(GaussianBelief& belief, const GaussianModel& model, double dy, double dt,
                 MeanForm form = MeanForm::innovation);

// Complex width parameter of the free-particle posterior wave function:
// d omega/dt = lambda/2 - (i/2m) omega^2, omega_0 = 1/2.
std::vector<cplx> scalar_riccati_free_particle(double m, double lambda, const TimeGrid& grid);

// Covariance matrix of the Gaussian state with width parameter omega:
// Var P = 2|omega|^2 / Re omega, Var Q = 1/(2 Re omega),
// Cov(P,Q) = -Im omega / Re omega.
rmat p_from_omega(cplx omega);
cplx omega_from_p(const rmat& p);

// Stationary width sqrt(lambda m / 2) (1 - i).
cplx free_particle_omega_limit(double m, double lambda);

cvec posterior_wavefunction(cplx omega, double q_hat, double p_hat, const QuadratureRep& rep);

// Backward conjugate flow: -d eta/dr + A(r)^T eta_r = g(r) * 2 Re zeta(r),
// terminal condition eta_t; returns eta at r + k (t - r)/n_steps, k = 0..n.
std::vector<rvec> backward_flow(const GaussianModel& model, double r, double t,
                                const std::function<double(double)>& g,
                                const rvec& eta_terminal, int n_steps);

// exp(log_density) * exp{i theta.xi - 0.5 xi.p.xi}
cplx characteristic_function(const GaussianBelief& belief, const rvec& xi);

// Residual of the closed-form characteristic functional in the first-order
// stochastic PDE (xi-derivatives by five-point central differences, time by
// the Ito increment). Returns the max relative residual.
double spde_residual_check(const GaussianModel& model, const GaussianBelief& belief0,
                           const rvec& record_dy, double dt,
                           const std::vector<rvec>& xi_samples);

// Concrete truncated realisation of the model on a position grid (one mode):
// H = (upsilon.R + omega(R,R)/2) / 4, L = R(zeta), R = (P, Q).
MarkovModel markov_model_from_gaussian(const GaussianModel& model, const QuadratureRep& rep,
                                       double t = 0.0);

}  // namespace qfilter
