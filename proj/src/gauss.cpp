#include "apsk/gauss.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>

namespace apsk {

namespace {

GaussRule make_rule(int n) {
    GaussRule g;
    g.x.resize(n);
    g.w.resize(n);
    // Newton on P_n with the usual cosine initial guess; roots come out
    // descending, stored ascending by symmetry
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        g.x[i] = -z;
        g.x[n - 1 - i] = z;
        g.w[i] = g.w[n - 1 - i] = 2.0 / ((1.0 - z * z) * pp * pp);
    }
    return g;
}

std::map<int, GaussRule> cache;
std::mutex cache_mutex;

} // namespace

const GaussRule& gauss_legendre(int n) {
    if (n < 1) throw std::invalid_argument("gauss_legendre: order must be positive");
    std::lock_guard<std::mutex> lock(cache_mutex);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, make_rule(n)).first;
    return it->second;
}

} // namespace apsk
