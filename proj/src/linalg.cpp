#include "qfilter/linalg.hpp"

#include <mutex>
#include <sstream>

#include <unsupported/Eigen/MatrixFunctions>
#include <fftw3.h>

#include "json.hpp"

namespace qfilter {

cmat expm(const cmat& a) {
    if (!a.allFinite()) throw NumericError("expm: non-finite input");
    return a.exp();
}

cmat kron(const cmat& a, const cmat& b) {
    cmat out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j)
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    return out;
}

double trace_distance(const cmat& rho, const cmat& sigma) {
    cmat d = rho - sigma;
    d = 0.5 * (d + d.adjoint());
    Eigen::SelfAdjointEigenSolver<cmat> es(d, Eigen::EigenvaluesOnly);
    return 0.5 * es.eigenvalues().cwiseAbs().sum();
}

double purity(const cmat& rho) { return (rho * rho).trace().real(); }

double min_eigenvalue(const cmat& h) {
    Eigen::SelfAdjointEigenSolver<cmat> es(0.5 * (h + h.adjoint()), Eigen::EigenvaluesOnly);
    return es.eigenvalues().minCoeff();
}

cmat sigma_x() {
    cmat s(2, 2);
    s << 0, 1, 1, 0;
    return s;
}
cmat sigma_y() {
    cmat s(2, 2);
    s << 0, cplx(0, -1), cplx(0, 1), 0;
    return s;
}
cmat sigma_z() {
    cmat s(2, 2);
    s << 1, 0, 0, -1;
    return s;
}

namespace {
bool is_power_of_two(int n) { return n > 0 && (n & (n - 1)) == 0; }
std::mutex fftw_mutex;  // FFTW plan creation is not thread safe
}  // namespace

QuadratureRep build_quadrature_rep(int n_points, double x_min, double x_max) {
    if (!is_power_of_two(n_points) || n_points < 16)
        throw ConfigError("build_quadrature_rep: n_points must be a power of two >= 16");
    if (!(x_min < x_max))
        throw ConfigError("build_quadrature_rep: degenerate bounds");

    QuadratureRep rep;
    rep.n = n_points;
    rep.x_min = x_min;
    rep.x_max = x_max;
    const double length = x_max - x_min;
    rep.dx = length / n_points;
    rep.x = rvec(n_points);
    for (int j = 0; j < n_points; ++j) rep.x(j) = x_min + j * rep.dx;

    rep.Q = cmat::Zero(n_points, n_points);
    for (int j = 0; j < n_points; ++j) rep.Q(j, j) = rep.x(j);

    // frequency lattice kappa_m = 2 pi m / L, Nyquist mode zeroed
    std::vector<double> kappa(n_points);
    for (int m = 0; m < n_points; ++m) {
        int mm = (m <= n_points / 2) ? m : m - n_points;
        kappa[m] = 2.0 * M_PI * mm / length;
    }
    kappa[n_points / 2] = 0.0;

    // P column by column: P e_j = 2 * IFFT(kappa .* FFT(e_j))
    rep.P = cmat(n_points, n_points);
    {
        std::lock_guard<std::mutex> lock(fftw_mutex);
        std::vector<cplx> in(n_points), freq(n_points), out(n_points);
        fftw_plan fwd = fftw_plan_dft_1d(
            n_points, reinterpret_cast<fftw_complex*>(in.data()),
            reinterpret_cast<fftw_complex*>(freq.data()), FFTW_FORWARD, FFTW_ESTIMATE);
        fftw_plan bwd = fftw_plan_dft_1d(
            n_points, reinterpret_cast<fftw_complex*>(freq.data()),
            reinterpret_cast<fftw_complex*>(out.data()), FFTW_BACKWARD, FFTW_ESTIMATE);
        for (int j = 0; j < n_points; ++j) {
            std::fill(in.begin(), in.end(), cplx(0, 0));
            in[j] = 1.0;
            fftw_execute(fwd);
            for (int m = 0; m < n_points; ++m) freq[m] *= kappa[m];
            fftw_execute(bwd);
            for (int i = 0; i < n_points; ++i)
                rep.P(i, j) = 2.0 * out[i] / static_cast<double>(n_points);
        }
        fftw_destroy_plan(fwd);
        fftw_destroy_plan(bwd);
    }
    rep.P = 0.5 * (rep.P + rep.P.adjoint()).eval();  // kill FFT roundoff asymmetry
    return rep;
}

cvec gaussian_state(const QuadratureRep& rep, double q, double p, cplx omega) {
    if (omega.real() <= 0.0)
        throw ConfigError("gaussian_state: Re omega must be positive");
    cvec psi(rep.n);
    for (int j = 0; j < rep.n; ++j) {
        double u = rep.x(j) - q;
        psi(j) = std::exp(-0.5 * omega * u * u + cplx(0, 0.5 * p * rep.x(j)));
    }
    double nrm = state_norm(rep, psi);
    if (!(nrm > 0) || !psi.allFinite())
        throw NumericError("gaussian_state: degenerate state");
    psi /= nrm;

    // mass leak monitor: outer 5% of the grid must hold < 1e-10 of the state
    int edge = std::max(1, rep.n / 20);
    double leak = 0;
    for (int j = 0; j < edge; ++j)
        leak += std::norm(psi(j)) + std::norm(psi(rep.n - 1 - j));
    leak *= rep.dx;
    if (leak > 1e-10)
        throw NumericError("gaussian_state: state leaks outside grid");
    return psi;
}

cplx expectation(const QuadratureRep& rep, const cvec& psi, const cmat& op) {
    return inner(rep, psi, op * psi);
}

void expectation_and_covariance(const QuadratureRep& rep, const cvec& psi,
                                const std::vector<const cmat*>& ops,
                                cvec& means, rmat& covariance) {
    if (std::abs(state_norm(rep, psi) - 1.0) > 1e-8)
        throw ConfigError("expectation_and_covariance: state not normalised");
    const int k = static_cast<int>(ops.size());
    std::vector<cvec> applied(k);
    for (int i = 0; i < k; ++i) applied[i] = (*ops[i]) * psi;
    means = cvec(k);
    for (int i = 0; i < k; ++i) means(i) = inner(rep, psi, applied[i]);
    covariance = rmat(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = i; j < k; ++j) {
            // 0.5 <XY + YX> = Re <X psi | Y psi> for hermitian X, Y
            cplx sym = inner(rep, applied[i], applied[j]);
            double c = sym.real() - (std::conj(means(i)) * means(j)).real();
            covariance(i, j) = c;
            covariance(j, i) = c;
        }
}

cplx weyl_expectation(const QuadratureRep& rep, const cvec& psi,
                      double xi_p, double xi_q) {
    cmat gen = cplx(0, 1) * (xi_p * rep.P + xi_q * rep.Q);
    cmat u = expm(gen);
    if (unitarity_residual(u) > 1e-8 * rep.n)
        throw NumericError("weyl_expectation: matrix exponential not unitary");
    return inner(rep, psi, u * psi);
}

std::string matrix_to_json(const cmat& a) {
    nlohmann::json j;
    j["rows"] = a.rows();
    j["cols"] = a.cols();
    std::vector<std::vector<double>> re, im;
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        std::vector<double> r, m;
        for (Eigen::Index c = 0; c < a.cols(); ++c) {
            r.push_back(a(i, c).real());
            m.push_back(a(i, c).imag());
        }
        re.push_back(r);
        im.push_back(m);
    }
    j["re"] = re;
    j["im"] = im;
    return j.dump();
}

cmat matrix_from_json(const std::string& text) {
    auto j = nlohmann::json::parse(text);
    int rows = j.at("rows"), cols = j.at("cols");
    cmat a(rows, cols);
    for (int i = 0; i < rows; ++i)
        for (int c = 0; c < cols; ++c)
            a(i, c) = cplx(j.at("re")[i][c], j.at("im")[i][c]);
    return a;
}

}  // namespace qfilter
