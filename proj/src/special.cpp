#include "apsk/special.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace apsk {

namespace {

// power series sum_k (x^2/4)^k / (k!)^2; all terms positive, no cancellation
double i0_series(double x) {
    const double q = x * x * 0.25;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 400; ++k) {
        term *= q / (double(k) * double(k));
        sum += term;
        if (term < sum * 1e-17) break;
    }
    return sum;
}

// asymptotic series for e^{-x} I0(x), x >= 50: terms fall below 1e-16 well
// before the series turns divergent
double i0_scaled_asymptotic(double x) {
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 30; ++k) {
        const double num = (2.0 * k - 1.0);
        term *= num * num / (8.0 * k * x);
        sum += term;
        if (term < 1e-17 * sum) break;
    }
    return sum / std::sqrt(2.0 * M_PI * x);
}

// Poisson pmf e^{-lam} lam^k / k!, seeded through logs so it stays finite
// for large lam
double poisson_pmf(int k, double lam) {
    if (lam == 0.0) return k == 0 ? 1.0 : 0.0;
    return std::exp(k * std::log(lam) - lam - std::lgamma(double(k) + 1.0));
}

// Pr[Poisson(lam) <= k]
double poisson_cdf(int k, double lam) {
    if (k < 0) return 0.0;
    if (lam == 0.0) return 1.0;
    const double sd = std::sqrt(lam);
    if (double(k) < lam - 10.0 * sd - 30.0) return 0.0;
    if (double(k) > lam + 10.0 * sd + 30.0) return 1.0;
    const int j0 = std::max(0, int(lam - 10.0 * sd - 30.0));
    double p = poisson_pmf(j0, lam);
    double cdf = p;
    for (int j = j0 + 1; j <= k; ++j) {
        p *= lam / double(j);
        cdf += p;
    }
    return std::min(cdf, 1.0);
}

} // namespace

double bessel_i0_scaled(double x) {
    x = std::abs(x);
    if (x < 50.0) return std::exp(-x) * i0_series(x);
    return i0_scaled_asymptotic(x);
}

double bessel_i0(double x) {
    x = std::abs(x);
    if (x < 50.0) return i0_series(x);
    return std::exp(x) * i0_scaled_asymptotic(x);
}

double bessel_i0_log(double x) {
    x = std::abs(x);
    if (x < 50.0) return std::log(i0_series(x));
    return x + std::log(i0_scaled_asymptotic(x));
}

double marcum_q1(double a, double b) {
    if (!(a >= 0.0) || !(b >= 0.0))
        throw std::invalid_argument("marcum_q1: arguments must be nonnegative");
    if (b == 0.0) return 1.0;
    if (std::isinf(b)) return 0.0;
    const double x = 0.5 * a * a; // Poisson mixing rate
    const double y = 0.5 * b * b; // gamma tail argument
    if (x == 0.0) return std::exp(-y);

    // Q1 = sum_k Pois(k; x) Pr[Pois(y) <= k]; sum over the bulk of Pois(x)
    const int w = int(9.0 * std::sqrt(x) + 30.0);
    const int k_lo = std::max(0, int(x) - w);
    const int k_hi = int(x) + w;

    double p = poisson_pmf(k_lo, x);       // Pois(k; x)
    double g = poisson_cdf(k_lo, y);       // Pr[Pois(y) <= k]
    double q = poisson_pmf(k_lo + 1, y);   // next pmf of Pois(y)
    double sum = p * g;
    for (int k = k_lo + 1; k <= k_hi; ++k) {
        p *= x / double(k);
        g = std::min(g + q, 1.0);
        q *= y / double(k + 1);
        sum += p * g;
    }
    return std::min(std::max(sum, 0.0), 1.0);
}

double rice_pdf(double r, double r0, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("rice_pdf: sigma2 must be positive");
    if (r < 0.0) return 0.0;
    r0 = std::abs(r0);
    const double d = r - r0;
    const double e = std::exp(-d * d / sigma2);
    return 2.0 * r / sigma2 * e * bessel_i0_scaled(2.0 * r * r0 / sigma2);
}

double rice_log_pdf(double r, double r0, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("rice_log_pdf: sigma2 must be positive");
    if (r <= 0.0) return -std::numeric_limits<double>::infinity();
    r0 = std::abs(r0);
    const double d = r - r0;
    const double z = 2.0 * r * r0 / sigma2;
    return std::log(2.0 * r / sigma2) - d * d / sigma2 + std::log(bessel_i0_scaled(z));
}

double rice_cdf(double r, double r0, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("rice_cdf: sigma2 must be positive");
    if (r <= 0.0) return 0.0;
    const double s = std::sqrt(0.5 * sigma2); // per-dimension scale
    return 1.0 - marcum_q1(std::abs(r0) / s, r / s);
}

namespace {

// standard normal quantile for moderate p, Newton on erfc
double normal_quantile(double p) {
    double z = 0.0;
    for (int it = 0; it < 60; ++it) {
        const double f = 0.5 * std::erfc(-z / std::sqrt(2.0)) - p;
        const double d = std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI);
        if (d < 1e-300) break;
        const double step = f / d;
        z -= step;
        if (std::abs(step) < 1e-13 * (1.0 + std::abs(z))) break;
    }
    return z;
}

} // namespace

double rice_quantile(double p, double r0, double sigma2) {
    if (!(p >= 0.0 && p < 1.0)) throw std::invalid_argument("rice_quantile: p must be in [0,1)");
    if (p == 0.0) return 0.0;
    r0 = std::abs(r0);
    const double s = std::sqrt(0.5 * sigma2);
    double lo = 0.0, hi = r0 + 12.0 * s;
    while (rice_cdf(hi, r0, sigma2) < p) {
        lo = hi;
        hi *= 1.5;
    }
    double r = (r0 > 6.0 * s) ? r0 + s * normal_quantile(p) : 0.5 * (lo + hi);
    if (!(r > lo && r < hi)) r = 0.5 * (lo + hi);
    for (int it = 0; it < 200; ++it) {
        const double f = rice_cdf(r, r0, sigma2) - p;
        (f < 0.0 ? lo : hi) = r;
        const double d = rice_pdf(r, r0, sigma2);
        double r_next = (d > 1e-300) ? r - f / d : 0.5 * (lo + hi);
        if (!(r_next > lo && r_next < hi)) r_next = 0.5 * (lo + hi);
        if (std::abs(r_next - r) < 1e-13 * (s + r) || hi - lo < 1e-13 * (s + r)) {
            r = r_next;
            break;
        }
        r = r_next;
    }
    return r;
}

} // namespace apsk
