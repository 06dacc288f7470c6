#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "apsk/gauss.hpp"
#include "apsk/special.hpp"
#include "support/oracles.hpp"

using namespace apsk;

namespace {

std::vector<double> log_grid(double lo, double hi, int n) {
    std::vector<double> g(n);
    const double a = std::log(lo), b = std::log(hi);
    for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
    return g;
}

} // namespace

TEST_CASE("bessel_i0 basic values") {
    CHECK(bessel_i0(0.0) == 1.0);
    // frozen from the power-series oracle
    CHECK(std::abs(bessel_i0(1.0) - 1.26606587775201) < 1e-12);
    CHECK(std::abs(bessel_i0(0.5) - 1.06348337074133) < 1e-12);
    CHECK(std::abs(bessel_i0(10.0) - 2815.71662846625) / 2815.7166 < 1e-12);
    CHECK(bessel_i0(-1.0) == bessel_i0(1.0)); // even function
}

TEST_CASE("bessel_i0 matches the quadrature oracle on a log grid") {
    for (double x : log_grid(1e-3, 1e3, 100)) {
        const double got = bessel_i0_scaled(x);
        const double want = oracle::i0_scaled(x);
        CHECK(std::abs(got - want) < 1e-8);
        CHECK(std::abs(got - want) < 1e-10 * std::max(1.0, want) + 1e-13);
    }
}

TEST_CASE("bessel_i0 high-argument asymptotics") {
    // e^x / sqrt(2 pi x), good to a few tenths of a percent at x = 50
    const double x = 50.0;
    const double asym = 1.0 / std::sqrt(2.0 * M_PI * x);
    CHECK(std::abs(bessel_i0_scaled(x) - asym) / asym < 3e-3);
    // scaled form stays finite far past double overflow of I0 itself
    CHECK(bessel_i0_scaled(1e6) > 0.0);
    CHECK(bessel_i0_scaled(1e6) < 1.0);
    CHECK(std::isfinite(bessel_i0_log(1e6)));
    CHECK(std::abs(bessel_i0_log(1e6) - (1e6 + std::log(bessel_i0_scaled(1e6)))) < 1e-6);
    CHECK(std::abs(bessel_i0_log(3.0) - std::log(bessel_i0(3.0))) < 1e-12);
}

TEST_CASE("marcum_q1 limits") {
    for (double a : {0.0, 0.3, 1.0, 4.0, 25.0}) CHECK(marcum_q1(a, 0.0) == 1.0);
    for (double b : {0.0, 0.5, 1.3, 3.0}) // a = 0 reduces to the Rayleigh tail
        CHECK(std::abs(marcum_q1(0.0, b) - std::exp(-0.5 * b * b)) < 1e-12);
}

TEST_CASE("marcum_q1 frozen value and oracle grid") {
    CHECK(std::abs(marcum_q1(1.0, 2.0) - 0.269012060035917) < 1e-9);
    CHECK(std::abs(marcum_q1(0.5, 1.0) - 0.64271423027296) < 1e-9);
    CHECK(std::abs(marcum_q1(3.0, 2.0) - 0.886720754402394) < 1e-9);
    // 10 x 10 grid against adaptive integration of the Rice density
    for (double a : log_grid(0.05, 8.0, 10))
        for (double b : log_grid(0.05, 8.0, 10))
            CHECK(std::abs(marcum_q1(a, b) - oracle::marcum_q1(a, b)) < 1e-8);
}

TEST_CASE("marcum_q1 monotonicity") {
    double prev = 1.0;
    for (double b = 0.25; b < 6.0; b += 0.25) {
        const double q = marcum_q1(2.0, b);
        CHECK(q <= prev);
        prev = q;
    }
    prev = 0.0;
    for (double a = 0.0; a < 6.0; a += 0.25) {
        const double q = marcum_q1(a, 2.0);
        CHECK(q >= prev);
        prev = q;
    }
}

TEST_CASE("rice_pdf reduces to Rayleigh at r0 = 0") {
    const double s2 = 0.37;
    for (double r : {0.01, 0.2, 0.7, 1.5}) {
        const double want = (2.0 * r / s2) * std::exp(-r * r / s2);
        CHECK(std::abs(rice_pdf(r, 0.0, s2) - want) < 1e-14 * want + 1e-300);
    }
}

TEST_CASE("rice_pdf normalizes") {
    for (double r0 : {0.0, 0.5, 1.0, 3.0}) {
        for (double s2 : {0.02, 0.3, 1.0}) {
            const double hi = r0 + 10.0 * std::sqrt(s2);
            const double mass = oracle::integrate(
                [&](double r) { return rice_pdf(r, r0, s2); }, 0.0, hi, 1e-12);
            CHECK(std::abs(mass - 1.0) < 1e-8);
        }
    }
}

TEST_CASE("rice_pdf survives extreme scale") {
    // sharp ridge: I0 argument ~ 2e6, must not overflow
    const double v = rice_pdf(1.0, 1.0, 1e-6);
    CHECK(std::isfinite(v));
    CHECK(v > 100.0);
    CHECK(std::abs(rice_log_pdf(1.0, 1.0, 1e-6) - std::log(v)) < 1e-9);
    CHECK(std::abs(rice_log_pdf(0.7, 0.4, 0.2) - std::log(rice_pdf(0.7, 0.4, 0.2))) < 1e-12);
}

TEST_CASE("rice_cdf is the integral of rice_pdf") {
    const double r0 = 1.2, s2 = 0.18;
    for (double r : {0.3, 0.9, 1.2, 1.8, 3.0}) {
        const double direct = oracle::integrate(
            [&](double t) { return rice_pdf(t, r0, s2); }, 0.0, r, 1e-12);
        CHECK(std::abs(rice_cdf(r, r0, s2) - direct) < 1e-9);
    }
    CHECK(rice_cdf(0.0, r0, s2) == 0.0);
    CHECK(rice_cdf(50.0, r0, s2) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("rice tail equals marcum_q1 in normalized form") {
    const double r0 = 0.8, s2 = 0.09;
    const double s = std::sqrt(s2 / 2.0); // per-dimension scale
    for (double r : {0.2, 0.8, 1.1, 1.6}) {
        const double tail = 1.0 - rice_cdf(r, r0, s2);
        CHECK(std::abs(tail - marcum_q1(r0 / s, r / s)) < 1e-9);
    }
}

TEST_CASE("rice_quantile round trip") {
    const double r0 = 1.0, s2 = 0.25;
    for (double p : {1e-6, 1e-4, 0.01, 0.3, 0.5, 0.9, 0.999, 1.0 - 1e-6}) {
        const double r = rice_quantile(p, r0, s2);
        CHECK(std::abs(rice_cdf(r, r0, s2) - p) < 1e-9);
    }
    // quantiles are monotone in p
    CHECK(rice_quantile(0.2, r0, s2) < rice_quantile(0.4, r0, s2));
    CHECK(rice_quantile(0.0, r0, s2) == 0.0);
}

TEST_CASE("oracle self-consistency") {
    // two independent Bessel routes: power series vs quadrature
    for (double x : log_grid(1e-2, 60.0, 25))
        CHECK(std::abs(oracle::i0_series(x) * std::exp(-x) - oracle::i0_scaled(x)) < 1e-11);
    // adaptive integrator on a known integral
    const double got = oracle::integrate([](double t) { return std::sin(t); }, 0.0, M_PI, 1e-13);
    CHECK(std::abs(got - 2.0) < 1e-11);
    // Gauss-Legendre agrees with the adaptive rule on a lumpy integrand
    auto f = [](double t) { return std::exp(-t) * std::cos(7.0 * t); };
    CHECK(std::abs(gauss_integrate(f, 0.0, 3.0, 64) -
                   oracle::integrate(f, 0.0, 3.0, 1e-13)) < 1e-11);
}
