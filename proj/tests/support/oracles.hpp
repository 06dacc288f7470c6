#pragma once

// Brute-force reference implementations used only by tests. Everything here
// trades speed for being independent of the library code under test.

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>

namespace oracle {

// e^{-x} I0(x) by direct quadrature of the integral representation
// I0(x) = (1/pi) \int_0^pi e^{x cos t} dt, with the substitution u = t*sqrt(x)
// so the peak near t = 0 stays resolved for large x.
inline double i0_scaled(double x) {
    if (x < 0.0) x = -x;
    if (x == 0.0) return 1.0;
    if (x < 1.0) {
        // composite Simpson on [0, pi], integrand is gentle here
        const int n = 4000;
        const double h = M_PI / n;
        double s = std::exp(x * (std::cos(0.0) - 1.0)) + std::exp(x * (std::cos(M_PI) - 1.0));
        for (int i = 1; i < n; ++i)
            s += std::exp(x * (std::cos(i * h) - 1.0)) * (i % 2 ? 4.0 : 2.0);
        return s * h / (3.0 * M_PI);
    }
    const double sx = std::sqrt(x);
    const double upper = std::min(M_PI * sx, 14.0);
    const int n = 6000;
    const double h = upper / n;
    auto f = [&](double u) { return std::exp(x * (std::cos(u / sx) - 1.0)); };
    double s = f(0.0) + f(upper);
    for (int i = 1; i < n; ++i) s += f(i * h) * (i % 2 ? 4.0 : 2.0);
    return s * h / (3.0 * M_PI * sx);
}

inline double i0(double x) {
    return std::exp(std::abs(x)) * i0_scaled(x);
}

// power series for I0, summed to convergence; independent of the quadrature
// route above and of the library implementation
inline double i0_series(double x) {
    const double q = x * x / 4.0;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 2000; ++k) {
        term *= q / (double(k) * double(k));
        sum += term;
        if (term < sum * 1e-18) break;
    }
    return sum;
}

// adaptive Simpson
inline double adaptive_simpson_(const std::function<double(double)>& f,
                                double a, double b, double fa, double fm, double fb,
                                double whole, double tol, int depth) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double err = left + right - whole;
    if (depth <= 0 || std::abs(err) < 15.0 * tol)
        return left + right + err / 15.0;
    return adaptive_simpson_(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
           adaptive_simpson_(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double tol = 1e-12, int depth = 40) {
    const double m = 0.5 * (a + b);
    const double fa = f(a), fm = f(m), fb = f(b);
    const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    return adaptive_simpson_(f, a, b, fa, fm, fb, whole, tol, depth);
}

// Q1(a,b) = Pr[Rice(a,1) > b] by adaptive quadrature of the unit-scale Rice
// density t e^{-(t^2+a^2)/2} I0(at), written with the scaled Bessel so large
// arguments do not overflow.
inline double marcum_q1(double a, double b) {
    if (b <= 0.0) return 1.0;
    const double hi = std::max(a, b) + 14.0;
    if (b >= hi) return 0.0;
    auto f = [a](double t) {
        return t * std::exp(-0.5 * (t - a) * (t - a)) * i0_scaled(a * t);
    };
    double v = integrate(f, b, hi, 1e-13);
    if (v < 0.0) v = 0.0;
    if (v > 1.0) v = 1.0;
    return v;
}

} // namespace oracle
