#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "qfilter/linalg.hpp"
#include "qfilter/stochastic.hpp"

using namespace qfilter;

namespace {

// independent moment oracle: plain Riemann sums, derivative by central
// finite differences (never the spectral P matrix)
struct MomentOracle {
    double q_mean, p_mean, var_q, var_p, cov_pq;
};

MomentOracle brute_force_moments(const QuadratureRep& rep, const cvec& psi) {
    const int n = rep.n;
    const double dx = rep.dx;
    cvec dpsi(n);  // P psi = (2/i) psi'
    for (int j = 0; j < n; ++j) {
        int jp = (j + 1) % n, jm = (j + n - 1) % n;
        dpsi(j) = cplx(0, -2) * (psi(jp) - psi(jm)) / (2.0 * dx);
    }
    MomentOracle m{};
    double norm2 = 0;
    for (int j = 0; j < n; ++j) norm2 += std::norm(psi(j)) * dx;
    for (int j = 0; j < n; ++j) {
        double w = std::norm(psi(j)) * dx / norm2;
        m.q_mean += rep.x(j) * w;
        m.p_mean += (std::conj(psi(j)) * dpsi(j)).real() * dx / norm2;
    }
    for (int j = 0; j < n; ++j) {
        double u = rep.x(j) - m.q_mean;
        m.var_q += u * u * std::norm(psi(j)) * dx / norm2;
        cplx dp = dpsi(j) - m.p_mean * psi(j);
        m.var_p += std::norm(dp) * dx / norm2;
        m.cov_pq += (std::conj(dp) * (u * psi(j))).real() * dx / norm2;
    }
    return m;
}

}  // namespace

TEST_CASE("quadrature representation construction") {
    CHECK_THROWS_AS(build_quadrature_rep(100, -1, 1), ConfigError);   // not a power of two
    CHECK_THROWS_AS(build_quadrature_rep(8, -1, 1), ConfigError);     // too small
    CHECK_THROWS_AS(build_quadrature_rep(64, 2.0, 2.0), ConfigError); // degenerate bounds

    QuadratureRep rep = build_quadrature_rep(256, -15, 15);
    CHECK(hermiticity_residual(rep.P) < 1e-10);
    CHECK(hermiticity_residual(rep.Q) < 1e-14);

    // Q is multiplication by the grid point
    cvec e = cvec::Zero(rep.n);
    e(17) = 1.0;
    cvec qe = rep.Q * e;
    CHECK(std::abs(qe(17) - cplx(rep.x(17), 0)) < 1e-14);
    qe(17) = 0;
    CHECK(qe.norm() == 0.0);
}

TEST_CASE("spectral P is exact on the plane-wave lattice") {
    QuadratureRep rep = build_quadrature_rep(128, -10, 10);
    const double L = rep.x_max - rep.x_min;
    for (int mode : {1, 3, 17, -5}) {
        double kappa = 2.0 * M_PI * mode / L;
        cvec psi(rep.n);
        for (int j = 0; j < rep.n; ++j) psi(j) = std::exp(cplx(0, kappa * rep.x(j)));
        cvec err = rep.P * psi - 2.0 * kappa * psi;  // P e^{i k x} = 2 k e^{i k x}
        CHECK(err.norm() / psi.norm() < 1e-10);
    }
}

TEST_CASE("canonical commutation relations on interior states") {
    QuadratureRep rep = build_quadrature_rep(512, -20, 20);
    cvec psi = gaussian_state(rep, 3.0, -1.0, cplx(0.7, 0.2));
    cvec r = rep.P * (rep.Q * psi) - rep.Q * (rep.P * psi) + cplx(0, 2) * psi;
    CHECK(r.norm() / psi.norm() < 1e-8);

    // refinement shrinks the residual for a state that is only marginally
    // resolved on the coarse grid
    auto residual_at = [](int n) {
        QuadratureRep rp = build_quadrature_rep(n, -20, 20);
        cvec ps = gaussian_state(rp, 0.0, 0.0, cplx(20.0, 0.0));
        cvec rr = rp.P * (rp.Q * ps) - rp.Q * (rp.P * ps) + cplx(0, 2) * ps;
        return rr.norm() / ps.norm();
    };
    CHECK(residual_at(1024) < residual_at(256));
}

TEST_CASE("commutator algebra") {
    cmat a = sigma_x(), b = sigma_y();
    cmat c = commutator(a, b);
    cmat expected = cplx(0, 2) * sigma_z();  // hand multiplication of 2x2 matrices
    CHECK((c - expected).norm() < 1e-15);
    CHECK(commutator(a, a).norm() == 0.0);

    auto rng = make_stream_rng(11, 0);
    std::normal_distribution<double> normal(0, 1);
    cmat h1(3, 3), h2(3, 3);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) {
            h1(i, j) = cplx(normal(rng), normal(rng));
            h2(i, j) = cplx(normal(rng), normal(rng));
        }
    h1 = 0.5 * (h1 + h1.adjoint()).eval();
    h2 = 0.5 * (h2 + h2.adjoint()).eval();
    // [A, B] is anti-hermitian for hermitian A, B
    cmat c12 = commutator(h1, h2);
    CHECK((c12 + c12.adjoint()).norm() < 1e-14);
    CHECK((c12 + commutator(h2, h1)).norm() < 1e-14);

    CHECK_THROWS_AS(commutator(h1, sigma_x()), ConfigError);
}

TEST_CASE("gaussian states: moments against the brute-force oracle") {
    QuadratureRep rep = build_quadrature_rep(512, -20, 20);

    cvec psi = gaussian_state(rep, 0, 0, 0.5);
    CHECK(std::abs(state_norm(rep, psi) - 1.0) < 1e-12);

    psi = gaussian_state(rep, 1.0, 2.0, 0.5);
    cvec means;
    rmat cov;
    expectation_and_covariance(rep, psi, {&rep.P, &rep.Q}, means, cov);
    CHECK(std::abs(means(1).real() - 1.0) < 1e-8);
    CHECK(std::abs(means(0).real() - 2.0) < 1e-8);

    MomentOracle oracle = brute_force_moments(rep, psi);
    CHECK(std::abs(oracle.q_mean - 1.0) < 1e-6);
    CHECK(std::abs(oracle.p_mean - 2.0) < 5e-3);

    // vacuum width: identity covariance
    psi = gaussian_state(rep, 0, 0, 0.5);
    expectation_and_covariance(rep, psi, {&rep.P, &rep.Q}, means, cov);
    CHECK(std::abs(cov(0, 0) - 1.0) < 1e-8);
    CHECK(std::abs(cov(1, 1) - 1.0) < 1e-8);
    CHECK(std::abs(cov(0, 1)) < 1e-8);

    // squeezed width with phase: Var Q = 1/(2 Re w), Var P = 2|w|^2/Re w,
    // Cov = -Im w / Re w (oracle-checked; the off-diagonal sign follows the
    // wave function convention exp{-w(x-q)^2/2})
    cplx w(1.0, -1.0);
    QuadratureRep fine = build_quadrature_rep(1024, -15, 15);
    psi = gaussian_state(fine, 0, 0, w);
    expectation_and_covariance(fine, psi, {&fine.P, &fine.Q}, means, cov);
    oracle = brute_force_moments(fine, psi);
    CHECK(std::abs(cov(1, 1) - 0.5) < 1e-8);
    CHECK(std::abs(cov(0, 0) - 4.0) < 1e-6);
    CHECK(std::abs(cov(0, 1) - 1.0) < 1e-6);
    // the oracle uses second-order finite differences; tolerances match O(dx^2)
    CHECK(std::abs(oracle.var_q - cov(1, 1)) < 1e-5);
    CHECK(std::abs(oracle.var_p - cov(0, 0)) < 1e-2);
    CHECK(std::abs(oracle.cov_pq - cov(0, 1)) < 5e-3);

    CHECK_THROWS_AS(gaussian_state(rep, 0, 0, cplx(-0.1, 0.3)), ConfigError);
    CHECK_THROWS_AS(gaussian_state(rep, 19.5, 0, 0.5), NumericError);  // leaks off the grid

    cvec unnormalised = 2.0 * psi;
    CHECK_THROWS_AS(expectation_and_covariance(rep, unnormalised, {&rep.Q}, means, cov),
                    ConfigError);
}

TEST_CASE("expectation of the identity") {
    QuadratureRep rep = build_quadrature_rep(256, -14, 14);
    cvec psi = gaussian_state(rep, 0.5, -1.0, 0.8);
    cmat id = cmat::Identity(rep.n, rep.n);
    cvec means;
    rmat cov;
    expectation_and_covariance(rep, psi, {&id}, means, cov);
    CHECK(std::abs(means(0) - cplx(1, 0)) < 1e-12);
    CHECK(std::abs(cov(0, 0)) < 1e-12);
}

TEST_CASE("weyl expectations") {
    QuadratureRep rep = build_quadrature_rep(256, -14, 14);

    cvec psi = gaussian_state(rep, 1.0, 0.0, 0.5);
    CHECK(std::abs(weyl_expectation(rep, psi, 0, 0) - cplx(1, 0)) < 1e-12);

    // <e^{iQ}> for the unit-width gaussian at q=1: exp{i - 1/2}
    cplx w = weyl_expectation(rep, psi, 0.0, 1.0);
    CHECK(std::abs(w - std::exp(cplx(-0.5, 1.0))) < 1e-6);

    // gaussian characteristic identity on |xi| <= 2
    for (double xp : {-1.5, -0.5, 0.5, 1.5})
        for (double xq : {-1.0, 0.0, 1.0}) {
            cplx lhs = weyl_expectation(rep, psi, xp, xq);
            cplx rhs = std::exp(cplx(-0.5 * (xp * xp + xq * xq), 0.0 * xp + 1.0 * xq));
            CHECK(std::abs(lhs - rhs) < 1e-6);
        }

    // modulus bound for an arbitrary normalised state
    cvec arb = gaussian_state(rep, -2.0, 3.0, cplx(1.2, 0.4));
    CHECK(std::abs(weyl_expectation(rep, arb, 0.7, -1.3)) <= 1.0 + 1e-12);
}

TEST_CASE("weyl group law on interior states") {
    QuadratureRep rep = build_quadrature_rep(256, -14, 14);
    // X(xi) X(eta) = exp{-(i/2) xi.s.eta} X(xi + eta) with s the commutator
    // matrix; the phase follows from the central BCH identity. The identity
    // holds on states supported away from the periodic boundary.
    rmat s(2, 2);
    s << 0, -2, 2, 0;
    auto weyl_op = [&](double xp, double xq) {
        return expm(cplx(0, 1) * (xp * rep.P + xq * rep.Q));
    };
    cvec psi = gaussian_state(rep, 0.5, -1.0, 0.8);
    double cases[][4] = {{0.6, 0.0, 0.0, 0.9}, {0.3, -0.4, 0.5, 0.2}};
    for (auto& c : cases) {
        rvec xi(2), eta(2);
        xi << c[0], c[1];
        eta << c[2], c[3];
        cvec lhs = weyl_op(xi(0), xi(1)) * (weyl_op(eta(0), eta(1)) * psi);
        double phase = -0.5 * xi.dot(s * eta);
        cvec rhs = std::exp(cplx(0, phase)) * (weyl_op(xi(0) + eta(0), xi(1) + eta(1)) * psi);
        CHECK((lhs - rhs).norm() / rhs.norm() < 1e-8);
    }
}

TEST_CASE("matrix exponential and helpers") {
    cmat a = cplx(0, 1) * sigma_y() * (M_PI / 2.0);
    cmat u = expm(a);
    CHECK(unitarity_residual(u) < 1e-12);

    cmat rho = 0.5 * cmat::Identity(2, 2);
    CHECK(purity(rho) == doctest::Approx(0.5));
    CHECK(trace_distance(rho, rho) < 1e-15);
    cmat pure = cmat::Zero(2, 2);
    pure(0, 0) = 1;
    CHECK(trace_distance(rho, pure) == doctest::Approx(0.5));

    cmat k = kron(sigma_x(), sigma_z());
    CHECK(k.rows() == 4);
    CHECK(std::abs(k(0, 2) - cplx(1, 0)) < 1e-15);
    CHECK(std::abs(k(1, 3) - cplx(-1, 0)) < 1e-15);
}

TEST_CASE("matrix json round trip") {
    cmat a(2, 2);
    a << cplx(1, 2), cplx(0, -1), cplx(3.5, 0), cplx(-0.25, 0.125);
    cmat b = matrix_from_json(matrix_to_json(a));
    CHECK((a - b).norm() == 0.0);
}
