#pragma once

#include <cstddef>
#include <vector>

namespace apsk {

// Fritsch-Carlson slopes for a shape-preserving cubic through (x, y);
// d must have the same length. Exposed separately so tables sharing one
// abscissa grid can store just values and slopes.
void pchip_slopes(const std::vector<double>& x, const double* y, double* d);

// monotone (shape-preserving) piecewise cubic interpolant
class Pchip {
public:
    Pchip() = default;
    Pchip(std::vector<double> x, std::vector<double> y);

    // clamps to the end values outside [x.front(), x.back()]
    double operator()(double t) const;

    const std::vector<double>& nodes() const { return x_; }
    const std::vector<double>& values() const { return y_; }

private:
    std::vector<double> x_, y_, d_;
};

// Hermite evaluation on one interval given endpoint values and slopes
double pchip_segment(double s, double h, double y0, double y1, double d0, double d1);

} // namespace apsk
