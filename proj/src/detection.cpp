#include "apsk/detection.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "apsk/special.hpp"

namespace apsk {

namespace {

double wrap_pi(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a <= -M_PI) a += 2.0 * M_PI;
    if (a > M_PI) a -= 2.0 * M_PI;
    return a;
}

} // namespace

int RingSystem::size() const {
    int n = 0;
    for (const auto& rg : rings) n += int(rg.phases.size());
    return n;
}

int RingSystem::ring_begin(int k) const {
    int n = 0;
    for (int i = 0; i < k; ++i) n += int(rings[i].phases.size());
    return n;
}

int RingSystem::ring_of(int i) const {
    int k = 0, acc = 0;
    while (k < ring_count() && i >= acc + int(rings[k].phases.size()))
        acc += int(rings[k++].phases.size());
    if (k == ring_count()) throw std::out_of_range("RingSystem::ring_of: bad symbol index");
    return k;
}

std::complex<double> RingSystem::symbol(int i) const {
    const int k = ring_of(i);
    const int j = i - ring_begin(k);
    return std::polar(rings[k].radius, rings[k].phases[j]);
}

RingSystem ring_system(const ApskSpec& spec) {
    RingSystem rs;
    rs.rings.resize(spec.ring_count());
    for (int k = 0; k < spec.ring_count(); ++k) {
        rs.rings[k].radius = spec.r[k];
        rs.rings[k].phases.resize(spec.l[k]);
        for (int j = 0; j < spec.l[k]; ++j)
            rs.rings[k].phases[j] = 2.0 * M_PI * j / double(spec.l[k]) + spec.phi[k];
    }
    return rs;
}

int ThresholdSet::ring_index(double R) const {
    const int K = int(mu.size()) - 1;
    for (int k = 0; k < K; ++k)
        if (R < mu[k + 1]) return k;
    return K - 1;
}

ThresholdSet map_thresholds(const RingSystem& rings, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::invalid_argument("map_thresholds: sigma2 must be positive");
    const int K = rings.ring_count();
    if (K < 1) throw std::invalid_argument("map_thresholds: empty ring system");
    const double M = double(rings.size());
    ThresholdSet th;
    th.mu.resize(K + 1);
    th.midpoint_fallback.assign(std::max(K - 1, 0), 0);
    th.mu[0] = 0.0;
    th.mu[K] = std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 < K; ++k) {
        const double rk = rings.rings[k].radius, rk1 = rings.rings[k + 1].radius;
        const double wk = std::log(rings.rings[k].phases.size() / M);
        const double wk1 = std::log(rings.rings[k + 1].phases.size() / M);
        auto resid = [&](double mu) {
            return wk + rice_log_pdf(mu, rk, sigma2) - wk1 - rice_log_pdf(mu, rk1, sigma2);
        };
        double lo = rk + 1e-12 * (rk1 - rk), hi = rk1 - 1e-12 * (rk1 - rk);
        if (lo <= 0.0) lo = 1e-12 * rk1;
        const double flo = resid(lo), fhi = resid(hi);
        if (!(flo > 0.0 && fhi < 0.0)) {
            th.mu[k + 1] = 0.5 * (rk + rk1);
            th.midpoint_fallback[k] = 1;
            continue;
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = 0.5 * (lo + hi);
            (resid(mid) > 0.0 ? lo : hi) = mid;
            if (hi - lo < 1e-15 * rk1) break;
        }
        th.mu[k + 1] = 0.5 * (lo + hi);
    }
    return th;
}

ThresholdSet map_thresholds(const ApskSpec& spec, double sigma2) {
    return map_thresholds(ring_system(spec), sigma2);
}

double correction_angle(double R, const HarmonicsView& h) {
    return h.correction(R);
}

namespace {

int nearest_phase(const Ring& ring, double angle) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (int j = 0; j < int(ring.phases.size()); ++j) {
        const double d = std::abs(wrap_pi(angle - ring.phases[j]));
        if (d < best_d) {
            best_d = d;
            best = j;
        }
    }
    return best;
}

} // namespace

std::complex<double> postcompensate(std::complex<double> y, const HarmonicsSet& hs,
                                    const ThresholdSet& th) {
    const int k = th.ring_index(std::abs(y));
    const double tc = correction_angle(std::abs(y), hs.rings[k]);
    return y * std::polar(1.0, -tc);
}

std::complex<double> postcompensate_inverse(std::complex<double> y_tilde,
                                            const HarmonicsSet& hs, const ThresholdSet& th) {
    const int k = th.ring_index(std::abs(y_tilde));
    const double tc = correction_angle(std::abs(y_tilde), hs.rings[k]);
    return y_tilde * std::polar(1.0, tc);
}

int ts_detect(std::complex<double> y, const RingSystem& rings, const HarmonicsSet& hs,
              const ThresholdSet& th) {
    const double R = std::abs(y);
    const int k = th.ring_index(R);
    const Ring& ring = rings.rings[k];
    if (ring.phases.size() == 1) return rings.ring_begin(k);
    const double tc = correction_angle(R, hs.rings[k]);
    const double angle = std::arg(y) - tc;
    return rings.ring_begin(k) + nearest_phase(ring, angle);
}

int ts_detect(std::complex<double> y, const ApskSpec& spec, const HarmonicsSet& hs,
              const ThresholdSet& th) {
    return ts_detect(y, ring_system(spec), hs, th);
}

int ml_detect(std::complex<double> y, const RingSystem& rings, const HarmonicsSet& hs) {
    const double sigma2 = hs.rings.at(0).channel().sigma2;
    // the 1/R Jacobian is common to all symbols, so comparing the joint polar
    // densities gives the same argmax and avoids the origin singularity
    const double R = std::abs(y);
    const double ay = std::arg(y);
    int best = 0;
    double best_f = -1.0;
    int i = 0;
    for (int k = 0; k < rings.ring_count(); ++k) {
        for (double psi : rings.rings[k].phases) {
            const double f = std::max(polar_density(hs.rings[k], sigma2, R, ay - psi), 0.0);
            if (f > best_f) {
                best_f = f;
                best = i;
            }
            ++i;
        }
    }
    return best;
}

int ml_detect(std::complex<double> y, const ApskSpec& spec, const HarmonicsSet& hs) {
    return ml_detect(y, ring_system(spec), hs);
}

PdfEval pdf_y_tilde(std::complex<double> y_tilde, std::complex<double> x,
                    const RingSystem& rings, const HarmonicsSet& hs,
                    const ThresholdSet& th, double sigma2) {
    int kx = -1;
    for (int k = 0; k < rings.ring_count(); ++k)
        if (std::abs(rings.rings[k].radius - std::abs(x)) <= 1e-9 * (1.0 + std::abs(x))) {
            kx = k;
            break;
        }
    if (kx < 0) throw std::invalid_argument("pdf_y_tilde: x is not on any ring");
    const std::complex<double> y = postcompensate_inverse(y_tilde, hs, th);
    return pdf_y(y, std::polar(rings.rings[kx].radius, std::arg(x)), hs.rings[kx], sigma2);
}

} // namespace apsk
