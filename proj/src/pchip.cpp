#include "apsk/pchip.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace apsk {

namespace {

double edge_slope(double h0, double h1, double del0, double del1) {
    double d = ((2.0 * h0 + h1) * del0 - h0 * del1) / (h0 + h1);
    if (d * del0 <= 0.0) return 0.0;
    if (del0 * del1 < 0.0 && std::abs(d) > 3.0 * std::abs(del0)) return 3.0 * del0;
    return d;
}

} // namespace

void pchip_slopes(const std::vector<double>& x, const double* y, double* d) {
    const std::size_t n = x.size();
    if (n == 0) return;
    if (n == 1) {
        d[0] = 0.0;
        return;
    }
    std::vector<double> h(n - 1), del(n - 1);
    for (std::size_t i = 0; i + 1 < n; ++i) {
        h[i] = x[i + 1] - x[i];
        if (!(h[i] > 0.0)) throw std::invalid_argument("pchip: abscissae must be strictly increasing");
        del[i] = (y[i + 1] - y[i]) / h[i];
    }
    if (n == 2) {
        d[0] = d[1] = del[0];
        return;
    }
    d[0] = edge_slope(h[0], h[1], del[0], del[1]);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        if (del[i - 1] * del[i] <= 0.0) {
            d[i] = 0.0;
        } else {
            const double w1 = 2.0 * h[i] + h[i - 1];
            const double w2 = h[i] + 2.0 * h[i - 1];
            d[i] = (w1 + w2) / (w1 / del[i - 1] + w2 / del[i]);
        }
    }
    d[n - 1] = edge_slope(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
}

double pchip_segment(double s, double h, double y0, double y1, double d0, double d1) {
    const double del = (y1 - y0) / h;
    const double c2 = (3.0 * del - 2.0 * d0 - d1) / h;
    const double c3 = (d0 + d1 - 2.0 * del) / (h * h);
    return y0 + s * (d0 + s * (c2 + s * c3));
}

Pchip::Pchip(std::vector<double> x, std::vector<double> y) : x_(std::move(x)), y_(std::move(y)) {
    if (x_.size() != y_.size() || x_.empty())
        throw std::invalid_argument("pchip: need equal-length nonempty node and value arrays");
    d_.resize(x_.size());
    pchip_slopes(x_, y_.data(), d_.data());
}

double Pchip::operator()(double t) const {
    if (t <= x_.front()) return y_.front();
    if (t >= x_.back()) return y_.back();
    const auto it = std::upper_bound(x_.begin(), x_.end(), t);
    const std::size_t i = std::size_t(it - x_.begin()) - 1;
    const double h = x_[i + 1] - x_[i];
    return pchip_segment(t - x_[i], h, y_[i], y_[i + 1], d_[i], d_[i + 1]);
}

} // namespace apsk
