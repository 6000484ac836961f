#include "qfilter/gaussian.hpp"

#include <cmath>

namespace qfilter {

SymplecticSpace SymplecticSpace::canonical(int n_modes) {
    SymplecticSpace sp;
    sp.n_modes = n_modes;
    sp.s = rmat::Zero(2 * n_modes, 2 * n_modes);
    for (int k = 0; k < n_modes; ++k) {
        sp.s(2 * k, 2 * k + 1) = -2.0;  // [P, Q] = -2i
        sp.s(2 * k + 1, 2 * k) = 2.0;
    }
    sp.validate();
    return sp;
}

void SymplecticSpace::validate() const {
    if (s.rows() != 2 * n_modes || s.cols() != 2 * n_modes)
        throw ConfigError("SymplecticSpace: s must be 2n x 2n");
    if ((s + s.transpose()).norm() > 1e-12)
        throw ConfigError("SymplecticSpace: s must be antisymmetric");
    // Heisenberg inequality on the canonical basis: 1 >= s_ab^2 / 4
    if (s.cwiseAbs().maxCoeff() > 2.0 + 1e-12)
        throw ConfigError("SymplecticSpace: |s| <= 2 violated");
}

rvec GaussianModel::zeta_re(double t) const { return zeta(t).real(); }
rvec GaussianModel::zeta_im(double t) const { return zeta(t).imag(); }

rmat GaussianModel::lambda_mat(double t) const {
    rvec zr = zeta_re(t);
    return 4.0 * zr * zr.transpose();
}

cmat GaussianModel::kappa(double t) const {
    cvec z = zeta(t);
    cmat eps = z * z.adjoint();            // eps(x#, x) = x#(zeta) x(zeta#)
    cmat eps_sharp = eps.conjugate();
    return 0.5 * (eps - eps_sharp) + cplx(0, 1) * omega(t).cast<cplx>();
}

rmat GaussianModel::drift_A(double t) const {
    rvec zr = zeta_re(t), zi = zeta_im(t);
    return space.s * (0.25 * omega(t) + zr * zi.transpose() - zi * zr.transpose());
}

rvec GaussianModel::drift_b(double t) const { return 0.25 * space.s * upsilon(t); }

rmat GaussianModel::diffusion_D(double t) const {
    rvec zr = zeta_re(t), zi = zeta_im(t);
    return -space.s * (zr * zr.transpose() + zi * zi.transpose()) * space.s;
}

rvec GaussianModel::observation_g(double t) const { return 2.0 * zeta_re(t); }

GaussianBelief initial_belief(const GaussianModel& model, const rvec& theta0) {
    GaussianBelief b;
    b.theta = theta0;
    b.p = rmat::Identity(model.dim(), model.dim());
    b.log_density = 0.0;
    b.t = 0.0;
    return b;
}

GaussianModel free_particle_model(double m, double lambda) {
    if (!(m > 0) || !(lambda > 0))
        throw ConfigError("free_particle_model: m and lambda must be positive");
    GaussianModel gm;
    gm.space = SymplecticSpace::canonical(1);
    rmat om = rmat::Zero(2, 2);
    om(0, 0) = 1.0 / (2.0 * m);
    cvec z(2);
    z << 0.0, 0.5 * std::sqrt(lambda);
    gm.upsilon = [](double) { return rvec::Zero(2); };
    gm.omega = [om](double) { return om; };
    gm.zeta = [z](double) { return z; };
    return gm;
}

rvec filter_gain(const GaussianBelief& belief, const GaussianModel& model) {
    double t = belief.t;
    return 2.0 * belief.p * model.zeta_re(t) - model.space.s * model.zeta_im(t);
}

rmat riccati_rhs(const rmat& p, const GaussianModel& model, double t) {
    rmat A = model.drift_A(t);
    rvec B = 2.0 * p * model.zeta_re(t) - model.space.s * model.zeta_im(t);
    rmat rhs = A * p + p * A.transpose() + model.diffusion_D(t) - B * B.transpose();
    return 0.5 * (rhs + rhs.transpose());
}

rmat riccati_step(const rmat& p, const GaussianModel& model, double t, double dt) {
    if (!(dt > 0)) throw ConfigError("riccati_step: dt must be positive");
    rmat k1 = riccati_rhs(p, model, t);
    rmat k2 = riccati_rhs(p + 0.5 * dt * k1, model, t + 0.5 * dt);
    rmat k3 = riccati_rhs(p + 0.5 * dt * k2, model, t + 0.5 * dt);
    rmat k4 = riccati_rhs(p + dt * k3, model, t + dt);
    rmat out = p + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    out = 0.5 * (out + out.transpose()).eval();

    cmat k_mat = out.cast<cplx>() + cplx(0, 0.5) * model.space.s.cast<cplx>();
    double lam = min_eigenvalue(k_mat);
    if (lam < -1e-8 * std::max(1.0, out.norm()))
        throw NumericError("riccati_step: admissibility breach, min eig = " + std::to_string(lam));
    return out;
}

void mean_step(GaussianBelief& belief, const GaussianModel& model, double dy, double dt,
               MeanForm form) {
    if (!(dt > 0)) throw ConfigError("mean_step: dt must be positive");
    double t = belief.t;
    rmat A = model.drift_A(t);
    rvec b = model.drift_b(t);
    rvec B = filter_gain(belief, model);
    rvec g = model.observation_g(t);
    double g_theta = g.dot(belief.theta);

    rvec theta_next;
    if (form == MeanForm::innovation) {
        double innovation = dy - g_theta * dt;
        theta_next = belief.theta + dt * (A * belief.theta + b) + innovation * B;
    } else {  // kalman_bucy: same SDE driven directly by dy
        theta_next = belief.theta + dt * (A * belief.theta + b - B * g_theta) + dy * B;
    }
    belief.log_density += g_theta * dy - 0.5 * g_theta * g_theta * dt;
    belief.theta = std::move(theta_next);
}

void filter_step(GaussianBelief& belief, const GaussianModel& model, double dy, double dt,
                 MeanForm form) {
    mean_step(belief, model, dy, dt, form);
    belief.p = riccati_step(belief.p, model, belief.t, dt);
    belief.t += dt;
}

std::vector<cplx> scalar_riccati_free_particle(double m, double lambda, const TimeGrid& grid) {
    if (!(m > 0) || !(lambda > 0))
        throw ConfigError("scalar_riccati_free_particle: m and lambda must be positive");
    auto rhs = [m, lambda](double, const cvec& y) {
        cvec out(1);
        out(0) = 0.5 * lambda - cplx(0, 0.5 / m) * y(0) * y(0);
        return out;
    };
    cvec y0(1);
    y0(0) = 0.5;
    auto traj = integrate_ode(rhs, y0, grid, OdeScheme::rk4);
    std::vector<cplx> omega;
    omega.reserve(traj.size());
    for (const auto& y : traj) {
        if (!(y(0).real() > 0))
            throw NumericError("scalar_riccati_free_particle: Re omega <= 0 (integrator fault)");
        omega.push_back(y(0));
    }
    return omega;
}

rmat p_from_omega(cplx omega) {
    double a = omega.real(), b = omega.imag();
    if (!(a > 0)) throw ConfigError("p_from_omega: Re omega must be positive");
    rmat p(2, 2);
    p(0, 0) = 2.0 * std::norm(omega) / a;
    p(0, 1) = p(1, 0) = -b / a;
    p(1, 1) = 0.5 / a;
    return p;
}

cplx omega_from_p(const rmat& p) {
    double p22 = p(1, 1);
    if (!(p22 > 0)) throw ConfigError("omega_from_p: Var Q must be positive");
    return cplx(1.0, -p(0, 1)) / (2.0 * p22);
}

cplx free_particle_omega_limit(double m, double lambda) {
    return std::sqrt(0.5 * lambda * m) * cplx(1.0, -1.0);
}

cvec posterior_wavefunction(cplx omega, double q_hat, double p_hat, const QuadratureRep& rep) {
    return gaussian_state(rep, q_hat, p_hat, omega);
}

std::vector<rvec> backward_flow(const GaussianModel& model, double r, double t,
                                const std::function<double(double)>& g,
                                const rvec& eta_terminal, int n_steps) {
    if (!(r <= t)) throw ConfigError("backward_flow: requires r <= t");
    if (n_steps < 1) throw ConfigError("backward_flow: n_steps must be >= 1");
    const double h = (t - r) / n_steps;
    // d eta/d tau = A(tau)^T eta - g(tau) 2 Re zeta(tau), integrated from t down to r
    auto rhs = [&](double tau, const rvec& eta) -> rvec {
        return model.drift_A(tau).transpose() * eta - g(tau) * 2.0 * model.zeta_re(tau);
    };
    std::vector<rvec> traj(n_steps + 1);
    traj[n_steps] = eta_terminal;
    rvec eta = eta_terminal;
    for (int k = n_steps; k > 0; --k) {
        double tau = r + k * h;
        // rk4 with negative step
        rvec k1 = rhs(tau, eta);
        rvec k2 = rhs(tau - 0.5 * h, eta - 0.5 * h * k1);
        rvec k3 = rhs(tau - 0.5 * h, eta - 0.5 * h * k2);
        rvec k4 = rhs(tau - h, eta - h * k3);
        eta = eta - (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        traj[k - 1] = eta;
    }
    return traj;
}

cplx characteristic_function(const GaussianBelief& belief, const rvec& xi) {
    cplx expo(-0.5 * xi.dot(belief.p * xi) + belief.log_density,
              belief.theta.dot(xi));
    return std::exp(expo);
}

namespace {

// five-point central gradient of the characteristic function in xi
cvec char_gradient(const GaussianBelief& belief, const rvec& xi, double h) {
    const int n = static_cast<int>(xi.size());
    cvec grad(n);
    for (int a = 0; a < n; ++a) {
        rvec e = rvec::Zero(n);
        e(a) = 1.0;
        cplx f_p2 = characteristic_function(belief, xi + 2 * h * e);
        cplx f_p1 = characteristic_function(belief, xi + h * e);
        cplx f_m1 = characteristic_function(belief, xi - h * e);
        cplx f_m2 = characteristic_function(belief, xi - 2 * h * e);
        grad(a) = (-f_p2 + 8.0 * f_p1 - 8.0 * f_m1 + f_m2) / (12.0 * h);
    }
    return grad;
}

cplx spde_rhs_dt(const GaussianModel& model, const GaussianBelief& belief, const rvec& xi,
                 double h) {
    double t = belief.t;
    rmat A = model.drift_A(t);
    rvec b = model.drift_b(t);
    rmat D = model.diffusion_D(t);
    cvec grad = char_gradient(belief, xi, h);
    cplx theta_hat = characteristic_function(belief, xi);
    cplx transport = (A.transpose() * xi).transpose().cast<cplx>() * grad;
    return transport + (cplx(0, 1) * xi.dot(b) - 0.5 * xi.dot(D * xi)) * theta_hat;
}

cplx spde_rhs_dy(const GaussianModel& model, const GaussianBelief& belief, const rvec& xi,
                 double h) {
    double t = belief.t;
    rvec zr = model.zeta_re(t);
    rvec szi = model.space.s * model.zeta_im(t);
    cvec grad = char_gradient(belief, xi, h);
    cplx theta_hat = characteristic_function(belief, xi);
    cplx acc = 0;
    for (int a = 0; a < grad.size(); ++a) acc += zr(a) * grad(a);
    return cplx(0, -2) * acc - cplx(0, 1) * xi.dot(szi) * theta_hat;
}

bool zeta_is_zero(const GaussianModel& model, double t) {
    return model.zeta(t).norm() == 0.0;
}

}  // namespace

double spde_residual_check(const GaussianModel& model, const GaussianBelief& belief0,
                           const rvec& record_dy, double dt,
                           const std::vector<rvec>& xi_samples) {
    const double h = 0.05;
    double max_residual = 0.0;

    GaussianBelief belief = belief0;
    const bool deterministic = record_dy.size() == 0;
    const int n_steps = deterministic ? 200 : static_cast<int>(record_dy.size());

    for (int k = 0; k < n_steps; ++k) {
        GaussianBelief at_start = belief;
        if (deterministic) {
            if (!zeta_is_zero(model, belief.t)) {
                // unconditional flow: covariance gains D, no measurement term
                double t0 = belief.t;
                auto prhs = [&](const rmat& p, double tau) {
                    rmat A = model.drift_A(tau);
                    rmat r = A * p + p * A.transpose() + model.diffusion_D(tau);
                    return rmat(0.5 * (r + r.transpose()));
                };
                rmat p = belief.p;
                rmat k1 = prhs(p, t0), k2 = prhs(p + 0.5 * dt * k1, t0 + 0.5 * dt),
                     k3 = prhs(p + 0.5 * dt * k2, t0 + 0.5 * dt), k4 = prhs(p + dt * k3, t0 + dt);
                belief.p = p + (dt / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4);
            } else {
                belief.p = riccati_step(belief.p, model, belief.t, dt);
            }
            // rk4 for the deterministic mean flow
            auto trhs = [&](double tau, const cvec& th) {
                rvec re = model.drift_A(tau) * th.real() + model.drift_b(tau);
                return cvec(re.cast<cplx>());
            };
            cvec th = belief.theta.cast<cplx>();
            th = rk4_step(trhs, belief.t, th, dt);
            belief.theta = th.real();
            belief.t += dt;
        } else {
            filter_step(belief, model, record_dy(k), dt);
        }

        // midpoint belief for the deterministic residual (O(dt^3) time accuracy)
        GaussianBelief mid = at_start;
        if (deterministic) {
            mid.theta = 0.5 * (at_start.theta + belief.theta);
            mid.p = 0.5 * (at_start.p + belief.p);
            mid.t = at_start.t + 0.5 * dt;
        }

        for (const rvec& xi : xi_samples) {
            cplx delta = characteristic_function(belief, xi) - characteristic_function(at_start, xi);
            cplx rhs;
            cplx scale_ref;
            if (deterministic) {
                rhs = dt * spde_rhs_dt(model, mid, xi, h);
                scale_ref = characteristic_function(mid, xi);
            } else {
                rhs = dt * spde_rhs_dt(model, at_start, xi, h) +
                      record_dy(k) * spde_rhs_dy(model, at_start, xi, h);
                scale_ref = characteristic_function(at_start, xi);
            }
            double residual = std::abs(delta - rhs) / std::max(std::abs(scale_ref), 1e-12);
            max_residual = std::max(max_residual, residual);
        }
    }
    return max_residual;
}

MarkovModel markov_model_from_gaussian(const GaussianModel& model, const QuadratureRep& rep,
                                       double t) {
    if (model.space.n_modes != 1)
        throw ConfigError("markov_model_from_gaussian: single-mode models only");
    const cmat& P = rep.P;
    const cmat& Q = rep.Q;
    std::vector<const cmat*> R = {&P, &Q};
    rvec ups = model.upsilon(t);
    rmat om = model.omega(t);
    cvec z = model.zeta(t);

    cmat H = cmat::Zero(rep.n, rep.n);
    for (int a = 0; a < 2; ++a) H += ups(a) * (*R[a]);
    for (int a = 0; a < 2; ++a)
        for (int b = 0; b < 2; ++b)
            H += 0.25 * om(a, b) * ((*R[a]) * (*R[b]) + (*R[b]) * (*R[a]));
    H *= 0.25;
    H = 0.5 * (H + H.adjoint()).eval();

    cmat L = z(0) * P + z(1) * Q;
    return MarkovModel(H, L);
}

}  // namespace qfilter
