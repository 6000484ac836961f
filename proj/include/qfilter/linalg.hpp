// Dense complex linear algebra on truncated Hilbert spaces, the position-grid
// representation of the canonical pair (P, Q), Gaussian states and Weyl
// expectations.
//
// Conventions used throughout the library: hbar = 2, so [P, Q] = -2i on
// interior states and the vacuum-width Gaussian (omega = 1/2) has
// Var Q = Var P = 1.

#pragma once

#include <complex>
#include <vector>
#include <stdexcept>

#include <Eigen/Dense>

namespace qfilter {

using cplx = std::complex<double>;
using cmat = Eigen::MatrixXcd;
using cvec = Eigen::VectorXcd;
using rmat = Eigen::MatrixXd;
using rvec = Eigen::VectorXd;

struct NumericError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// generic operator helpers

inline cmat commutator(const cmat& a, const cmat& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw ConfigError("commutator: dimension mismatch");
    return a * b - b * a;
}

inline cmat anticommutator(const cmat& a, const cmat& b) { return a * b + b * a; }

inline double hermiticity_residual(const cmat& a) { return (a - a.adjoint()).norm(); }

inline double unitarity_residual(const cmat& u) {
    return (u.adjoint() * u - cmat::Identity(u.rows(), u.cols())).norm();
}

// Pade scaling-and-squaring matrix exponential (Eigen backend).
cmat expm(const cmat& a);

cmat kron(const cmat& a, const cmat& b);

// 0.5 * ||rho - sigma||_1 for hermitian matrices.
double trace_distance(const cmat& rho, const cmat& sigma);

double purity(const cmat& rho);

// Smallest eigenvalue of a hermitian matrix.
double min_eigenvalue(const cmat& h);

// Pauli matrices and qubit helpers.
cmat sigma_x();
cmat sigma_y();
cmat sigma_z();

// ---------------------------------------------------------------------------
// position-grid (Schroedinger) representation

struct QuadratureRep {
    int n = 0;                // number of grid points, power of two
    double x_min = 0, x_max = 0;
    double dx = 0;
    rvec x;                   // grid nodes
    cmat Q;                   // diagonal multiplication by x
    cmat P;                   // spectral derivative, P = (2/i) d/dx
};

// Spectral (Fourier) P; periodic boundary artifacts confined to the grid edge.
QuadratureRep build_quadrature_rep(int n_points, double x_min, double x_max);

// Weighted inner-product helpers: <phi|psi> = sum conj(phi) psi dx.
inline cplx inner(const QuadratureRep& rep, const cvec& phi, const cvec& psi) {
    return (phi.adjoint() * psi)(0, 0) * rep.dx;
}
inline double state_norm(const QuadratureRep& rep, const cvec& psi) {
    return std::sqrt(psi.squaredNorm() * rep.dx);
}

// Normalised samples of exp{-omega (x-q)^2 / 2 + i p x / 2}; Re omega > 0.
// <Q> = q, <P> = p, Var Q = 1 / (2 Re omega).
cvec gaussian_state(const QuadratureRep& rep, double q, double p, cplx omega);

cplx expectation(const QuadratureRep& rep, const cvec& psi, const cmat& op);

// Means <X_i> and symmetrised covariances 0.5<XY + YX> - <X><Y>.
void expectation_and_covariance(const QuadratureRep& rep, const cvec& psi,
                                const std::vector<const cmat*>& ops,
                                cvec& means, rmat& covariance);

// <psi| exp{i (xi_p P + xi_q Q)} |psi> via the unitary matrix exponential.
cplx weyl_expectation(const QuadratureRep& rep, const cvec& psi,
                      double xi_p, double xi_q);

// ---------------------------------------------------------------------------
// serialization (golden tests, debugging)

std::string matrix_to_json(const cmat& a);
cmat matrix_from_json(const std::string& text);

}  // namespace qfilter
