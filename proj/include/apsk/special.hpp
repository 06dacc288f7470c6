#pragma once

namespace apsk {

// modified Bessel function I0, good to at least 10 significant digits
double bessel_i0(double x);

// e^{-|x|} I0(x); safe for arbitrarily large |x|
double bessel_i0_scaled(double x);

// log I0(x)
double bessel_i0_log(double x);

// Marcum Q-function of order 1 at unit per-dimension scale:
// Q1(a,b) = Pr[Rice(a,1) > b]. Absolute error <= 1e-10.
double marcum_q1(double a, double b);

// Amplitude density of x + n where |x| = r0 and n is circular complex
// Gaussian with total variance sigma2 (sigma2/2 per dimension):
// f(r) = (2r/sigma2) exp(-(r^2+r0^2)/sigma2) I0(2 r r0 / sigma2).
double rice_pdf(double r, double r0, double sigma2);

double rice_log_pdf(double r, double r0, double sigma2);

// P[R <= r] for the same amplitude law
double rice_cdf(double r, double r0, double sigma2);

// inverse of rice_cdf, bisection; p in [0,1)
double rice_quantile(double p, double r0, double sigma2);

} // namespace apsk
