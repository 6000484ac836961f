#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "qfilter/stochastic.hpp"

using namespace qfilter;

namespace {

// asymptotic Kolmogorov-Smirnov p-value
double ks_p_value(double d, int n) {
    double lambda = d * (std::sqrt(static_cast<double>(n)) + 0.12 + 0.11 / std::sqrt(static_cast<double>(n)));
    double p = 0;
    for (int k = 1; k <= 100; ++k)
        p += 2.0 * ((k % 2) ? 1.0 : -1.0) * std::exp(-2.0 * k * k * lambda * lambda);
    return std::clamp(p, 0.0, 1.0);
}

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

}  // namespace

TEST_CASE("time grid validation") {
    CHECK_THROWS_AS(TimeGrid(0.0, -0.1, 10), ConfigError);
    CHECK_THROWS_AS(TimeGrid(0.0, 0.0, 10), ConfigError);
    CHECK_THROWS_AS(TimeGrid(0.0, 0.1, -1), ConfigError);
    TimeGrid g(1.0, 0.25, 4);
    CHECK(g.t_end() == doctest::Approx(2.0));
}

TEST_CASE("wiener path sampling") {
    TimeGrid empty(0.0, 0.1, 0);
    CHECK(sample_wiener_path(empty, 5, 0).increments.size() == 0);

    TimeGrid grid(0.0, 1e-3, 1000);
    WienerPath a = sample_wiener_path(grid, 123, 7);
    WienerPath b = sample_wiener_path(grid, 123, 7);
    CHECK((a.increments - b.increments).norm() == 0.0);  // bit-identical regeneration
    WienerPath c = sample_wiener_path(grid, 123, 8);
    CHECK((a.increments - c.increments).norm() > 0.0);
    WienerPath d = sample_wiener_path(grid, 124, 7);
    CHECK((a.increments - d.increments).norm() > 0.0);
}

TEST_CASE("wiener increments match N(0, dt) within CLT bounds") {
    const double dt = 1e-3;
    const int n = 1000000;
    TimeGrid grid(0.0, dt, n);
    WienerPath path = sample_wiener_path(grid, 2718, 0);
    double mean = path.increments.mean();
    double var = (path.increments.array() - mean).square().sum() / (n - 1);
    CHECK(std::abs(mean) < 4.0 * std::sqrt(dt / n));
    CHECK(std::abs(var - dt) / dt < 0.01);
}

TEST_CASE("brownian scaling: pairwise-aggregated increments are N(0, 2dt)") {
    const double dt = 1e-3;
    const int n = 200000;
    TimeGrid grid(0.0, dt, n);
    WienerPath path = sample_wiener_path(grid, 13, 1);
    std::vector<double> agg(n / 2);
    for (int k = 0; k < n / 2; ++k) agg[k] = path.increments(2 * k) + path.increments(2 * k + 1);
    std::sort(agg.begin(), agg.end());
    double sigma = std::sqrt(2.0 * dt);
    double d_stat = 0;
    for (size_t i = 0; i < agg.size(); ++i) {
        double f = normal_cdf(agg[i] / sigma);
        double lo = static_cast<double>(i) / agg.size();
        double hi = static_cast<double>(i + 1) / agg.size();
        d_stat = std::max({d_stat, std::abs(f - lo), std::abs(f - hi)});
    }
    CHECK(ks_p_value(d_stat, static_cast<int>(agg.size())) > 0.01);
}

TEST_CASE("ode integration: exponential and separable solutions") {
    OdeRhs expo = [](double, const cvec& y) { return y; };
    cvec y0(1);
    y0(0) = 1.0;
    TimeGrid grid(0.0, 1e-3, 1000);
    auto traj = integrate_ode(expo, y0, grid, OdeScheme::rk4);
    CHECK(std::abs(traj.back()(0) - std::exp(1.0)) < 1e-9);

    OdeRhs quad = [](double, const cvec& y) { return cvec(-y.array().square().matrix()); };
    traj = integrate_ode(quad, y0, grid, OdeScheme::rk4);
    CHECK(std::abs(traj.back()(0) - 0.5) < 1e-9);

    auto adaptive = integrate_ode(expo, y0, TimeGrid(0.0, 0.25, 4), OdeScheme::adaptive, 1e-12);
    CHECK(std::abs(adaptive.back()(0) - std::exp(1.0)) < 1e-9);
}

TEST_CASE("ode integration aborts on non-finite states") {
    OdeRhs blowup = [](double t, const cvec& y) { return cvec(y / (0.09 - t)); };
    cvec y0(1);
    y0(0) = 1.0;
    TimeGrid grid(0.0, 0.05, 10);
    CHECK_THROWS_AS(integrate_ode(blowup, y0, grid, OdeScheme::rk4), NumericError);
}

TEST_CASE("rk4 order is four") {
    OdeRhs quad = [](double, const cvec& y) { return cvec(-y.array().square().matrix()); };
    cvec y0(1);
    y0(0) = 1.0;
    auto exact = [](double t) {
        cvec y(1);
        y(0) = 1.0 / (1.0 + t);
        return y;
    };
    double order = estimate_ode_order(quad, y0, 1.0, exact, {0.1, 0.05, 0.025, 0.0125});
    CHECK(order > 3.8);
    CHECK(order < 4.2);
}

TEST_CASE("sde with zero diffusion equals explicit euler") {
    SdeCoeff drift = [](double, const cvec& y) { return cvec(-0.8 * y); };
    SdeCoeff nodiff = [](double, const cvec& y) { return cvec(cvec::Zero(y.size())); };
    cvec y0(1);
    y0(0) = 2.0;
    TimeGrid grid(0.0, 0.01, 200);
    WienerPath path = sample_wiener_path(grid, 9, 9);
    auto traj = integrate_sde(drift, nodiff, y0, path);
    cvec y = y0;
    for (int k = 0; k < grid.n_steps; ++k) y = y + grid.dt * drift(grid.time(k), y);
    CHECK(std::abs(traj.back()(0) - y(0)) < 1e-15);
}

TEST_CASE("geometric brownian motion against the exact solution") {
    const double a = 1.0, b = 0.8;
    SdeCoeff drift = [a](double, const cvec& y) { return cvec(a * y); };
    SdeCoeff diff = [b](double, const cvec& y) { return cvec(b * y); };
    cvec y0(1);
    y0(0) = 1.0;

    // strong error shrinks as dt -> 0
    double prev_err = 1e9;
    for (double dt : {1.0 / 16, 1.0 / 64, 1.0 / 256}) {
        int n = static_cast<int>(1.0 / dt);
        TimeGrid grid(0.0, dt, n);
        double acc = 0;
        for (int p = 0; p < 200; ++p) {
            WienerPath path = sample_wiener_path(grid, 777, p);
            auto traj = integrate_sde(drift, diff, y0, path);
            double w_T = path.increments.sum();
            double exact = std::exp((a - 0.5 * b * b) + b * w_T);
            acc += std::abs(traj.back()(0) - exact);
        }
        acc /= 200;
        CHECK(acc < prev_err);
        prev_err = acc;
    }
}

TEST_CASE("euler-maruyama strong order on gbm") {
    const double a = 1.0, b = 0.8;
    StrongOrderProblem problem;
    problem.drift = [a](double, const cvec& y) { return cvec(a * y); };
    problem.diffusion = [b](double, const cvec& y) { return cvec(b * y); };
    cvec y0(1);
    y0(0) = 1.0;
    problem.y0 = y0;
    problem.t_end = 1.0;
    problem.exact = [a, b](double w_T) {
        cvec y(1);
        y(0) = std::exp((a - 0.5 * b * b) + b * w_T);
        return y;
    };
    double order = estimate_strong_order(problem, {1.0 / 8, 1.0 / 16, 1.0 / 32, 1.0 / 64, 1.0 / 128},
                                         200, 4321);
    CHECK(order > 0.35);
    CHECK(order < 0.65);

    CHECK_THROWS_AS(estimate_strong_order(problem, {0.1, 0.05}, 200, 1), ConfigError);
    CHECK_THROWS_AS(estimate_strong_order(problem, {0.1, 0.05, 0.025}, 10, 1), ConfigError);
}

TEST_CASE("linear sde ensemble mean tracks the mean ode") {
    // dX = -X dt + 0.5 dW: E X_t = X_0 e^{-t}
    SdeCoeff drift = [](double, const cvec& y) { return cvec(-y); };
    SdeCoeff diff = [](double, const cvec& y) { return cvec(cvec::Constant(y.size(), 0.5)); };
    cvec y0(1);
    y0(0) = 1.0;
    TimeGrid grid(0.0, 1e-2, 100);
    const int n_paths = 5000;
    double acc = 0, acc2 = 0;
    for (int p = 0; p < n_paths; ++p) {
        WienerPath path = sample_wiener_path(grid, 31, p);
        auto traj = integrate_sde(drift, diff, y0, path);
        double v = traj.back()(0).real();
        acc += v;
        acc2 += v * v;
    }
    double mean = acc / n_paths;
    double se = std::sqrt((acc2 / n_paths - mean * mean) / n_paths);
    CHECK(std::abs(mean - std::exp(-1.0)) < 3 * se + 0.01);
}
