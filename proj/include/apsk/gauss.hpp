#pragma once

#include <vector>

namespace apsk {

// Gauss-Legendre rule on [-1,1]; nodes ascending
struct GaussRule {
    std::vector<double> x;
    std::vector<double> w;
};

// rules are computed once per order and cached
const GaussRule& gauss_legendre(int n);

// integrate f over [a,b] with an n-point rule
template <class F>
double gauss_integrate(F&& f, double a, double b, int n) {
    const GaussRule& g = gauss_legendre(n);
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += g.w[i] * f(c + h * g.x[i]);
    return s * h;
}

} // namespace apsk
