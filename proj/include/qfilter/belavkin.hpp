// Truncated-Hilbert-space integration of the linear (unnormalised) and the
// nonlinear (normalised, innovation-driven) filtering equations for diffusive
// measurement of G = L + L+, single channel, unit efficiency.

#pragma once

#include <cstdint>
#include <vector>

#include "qfilter/linalg.hpp"
#include "qfilter/stochastic.hpp"

namespace qfilter {

struct MarkovModel {
    cmat H;  // hermitian
    cmat L;  // coupling
    int dim = 0;

    MarkovModel() = default;
    MarkovModel(cmat H_, cmat L_) : H(std::move(H_)), L(std::move(L_)) {
        dim = static_cast<int>(H.rows());
        if (H.rows() != H.cols() || L.rows() != L.cols() || L.rows() != H.rows())
            throw ConfigError("MarkovModel: H and L must be square and equal size");
        if (hermiticity_residual(H) > 1e-12 * std::max<double>(1.0, H.norm()))
            throw ConfigError("MarkovModel: H must be hermitian");
    }
    cmat G() const { return L + L.adjoint(); }
};

// gamma(X) = 0.5 (L+ [L, X] + [X, L+] L) + i [X, H]
cmat gamma_map(const cmat& X, const MarkovModel& model);
// delta(X) = [X, L]
cmat delta_map(const cmat& X, const MarkovModel& model);

// Max Frobenius residual of the structure identities over n_random random X:
//   (i)  gamma(X*) = gamma(X)*
//   (ii) gamma(X*X) = X* gamma(X) + gamma(X)* X - delta(X)* delta(X)
//        delta(X*X) = X* delta(X) + delta(X*) X
//   (iii) gamma(I) = 0, delta(I) = 0
double validate_structure_maps(const MarkovModel& model, int n_random, std::uint64_t seed = 1);

// Schroedinger-picture generator: -i[H, rho] + L rho L+ - 0.5 {L+L, rho}.
cmat lindblad_rhs(const cmat& rho, const MarkovModel& model);

struct PosteriorState {
    cmat rho;                  // hermitian, trace one
    double log_likelihood = 0; // ln tr(sigma) for the linear filter / record density
    double t = 0;
};

PosteriorState make_posterior(const cmat& rho0, double t0 = 0.0);

// One Euler-Maruyama step of the linear equation on the raw unnormalised state:
// sigma' = sigma + L(sigma) dt + (L sigma + sigma L+) dy. No rescaling.
cmat zakai_step_raw(const cmat& sigma, const MarkovModel& model, double dy, double dt);

// Scaled variant: state.rho stays trace one, state.log_likelihood accumulates
// ln of the per-step trace factor.
PosteriorState zakai_step(const PosteriorState& state, const MarkovModel& model,
                          double dy, double dt);

// Nonlinear a posteriori step, innovation dw~ = dy - tr[G rho] dt, renormalised.
// log_likelihood accumulates <G> dy - 0.5 <G>^2 dt.
PosteriorState belavkin_step(const PosteriorState& state, const MarkovModel& model,
                             double dy, double dt);

// Stochastic wave-function form of the same step (pure states, unit efficiency).
cvec sse_step(const cvec& psi, const MarkovModel& model, double dy, double dt);

enum class RecordMode { physical, reference };

struct SimulatedRecord {
    rvec dy;                          // record increments
    std::vector<PosteriorState> states;  // filter trajectory along the record
};

// physical: dy = tr[G rho_t] dt + dw with rho_t from belavkin_step;
// reference: dy = raw Wiener increments (trajectory still attached).
SimulatedRecord simulate_record(const MarkovModel& model, const cmat& rho0,
                                const TimeGrid& grid, std::uint64_t seed,
                                std::uint64_t stream_id, RecordMode mode);

struct DualityResult {
    double mc_value = 0;
    double ode_value = 0;
    double std_error = 0;
    double discrepancy = 0;
};

// Monte Carlo E[tr(sigma_T X) e_g(T)] under reference-measure records versus the
// deterministic integration of d mu/dt = L(mu) + g (L mu + mu L+).
DualityResult verify_duality_mc(const MarkovModel& model, const cmat& X, double g,
                                const cmat& rho0, const TimeGrid& grid, int n_paths,
                                std::uint64_t seed);

}  // namespace qfilter
