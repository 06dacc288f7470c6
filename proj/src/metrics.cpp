#include "apsk/metrics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <thread>

#include "apsk/gauss.hpp"
#include "apsk/special.hpp"

namespace apsk {

namespace {

struct Sector {
    double width;  // angular size of the decision arc
    double center; // arc midpoint, absolute angle
};

// Voronoi arcs around each symbol phase of one ring; a single-point ring
// owns the full circle
std::vector<Sector> ring_sectors(const Ring& ring) {
    const int l = int(ring.phases.size());
    std::vector<Sector> s(l);
    if (l == 1) {
        s[0] = {2.0 * M_PI, ring.phases[0]};
        return s;
    }
    std::vector<int> order(l);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return ring.phases[a] < ring.phases[b]; });
    for (int pos = 0; pos < l; ++pos) {
        const int j = order[pos];
        const double psi = ring.phases[j];
        double prev = ring.phases[order[(pos - 1 + l) % l]];
        double next = ring.phases[order[(pos + 1) % l]];
        if (pos == 0) prev -= 2.0 * M_PI;
        if (pos == l - 1) next += 2.0 * M_PI;
        const double lo = 0.5 * (psi + prev), hi = 0.5 * (psi + next);
        s[j] = {hi - lo, 0.5 * (lo + hi)};
    }
    return s;
}

struct Panel {
    double a, b;
    int first, count; // node range
};

struct RadialCell {
    std::vector<Panel> panels;
    std::vector<double> nodes, weights;
    std::vector<double> tc; // correction angle at each node, target ring's view
};

// interpolation knots of every record a view can touch; the tabulated series
// is only piecewise cubic, and it drops to zero past the grid ends, so panels
// must break at these points or the Gauss rule stalls around 1e-5 accuracy
void append_knots(const HarmonicsView& view, std::vector<double>& out) {
    if (view.a) out.insert(out.end(), view.a->r_grid.begin(), view.a->r_grid.end());
    if (view.b) out.insert(out.end(), view.b->r_grid.begin(), view.b->r_grid.end());
}

RadialCell build_cell(double lo, double hi, const std::vector<double>& cuts,
                      const std::vector<double>& knots, const HarmonicsView& view,
                      int gl_n, bool with_tc) {
    RadialCell cell;
    if (!(hi > lo)) return cell;
    std::vector<double> pts{lo, hi};
    for (double c : cuts)
        if (c > lo && c < hi) pts.push_back(c);
    for (double c : knots)
        if (c > lo && c < hi) pts.push_back(c);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    // node budget per sub-interval scales with its share of the cell, with a
    // floor that keeps short knot intervals converging as gl_n grows
    const int min_n = std::max(3, gl_n / 16);
    for (std::size_t p = 0; p + 1 < pts.size(); ++p) {
        const double a = pts[p], b = pts[p + 1];
        if (!(b > a)) continue;
        const int n = std::clamp(int(std::lround(gl_n * (b - a) / (hi - lo))), min_n, gl_n);
        const GaussRule& g = gauss_legendre(n);
        Panel pan{a, b, int(cell.nodes.size()), n};
        const double c = 0.5 * (a + b), h = 0.5 * (b - a);
        for (int q = 0; q < n; ++q) {
            cell.nodes.push_back(c + h * g.x[q]);
            cell.weights.push_back(h * g.w[q]);
        }
        cell.panels.push_back(pan);
    }
    if (with_tc) {
        cell.tc.resize(cell.nodes.size());
        for (std::size_t q = 0; q < cell.nodes.size(); ++q)
            cell.tc[q] = correction_angle(cell.nodes[q], view);
    }
    return cell;
}

double panel_distance(const Panel& p, double r0) {
    if (r0 < p.a) return p.a - r0;
    if (r0 > p.b) return r0 - p.b;
    return 0.0;
}

// sin(m w/2) * 2/m factors of the exact sector phase integral
std::vector<double> sector_factors(double width, int m_count) {
    std::vector<double> t(m_count);
    for (int m = 1; m <= m_count; ++m)
        t[m - 1] = 2.0 / m * std::sin(0.5 * m * width);
    return t;
}

double marcum_cell(double r0, double lo, double hi, double sigma2) {
    const double s = std::sqrt(sigma2);
    const double q_lo = (lo <= 0.0) ? 1.0 : marcum_q1(M_SQRT2 * r0 / s, M_SQRT2 * lo / s);
    const double q_hi = std::isinf(hi) ? 0.0 : marcum_q1(M_SQRT2 * r0 / s, M_SQRT2 * hi / s);
    return q_lo - q_hi;
}

std::vector<double> radial_cuts(const RingSystem& rings, double split, double s,
                                double trunc) {
    std::vector<double> cuts;
    for (const auto& rg : rings.rings) {
        for (double c : {rg.radius - split * s, rg.radius + split * s})
            if (c > 0.0 && c < trunc) cuts.push_back(c);
    }
    std::sort(cuts.begin(), cuts.end());
    return cuts;
}

} // namespace

double TransitionMatrix::row_sum(int i) const {
    double s = 0.0;
    for (int j = 0; j < M; ++j) s += at(i, j);
    return s;
}

TransitionMatrix transition_matrix_ts(const RingSystem& rings, const ThresholdSet& th,
                                      const HarmonicsSet& hs, const QuadratureConfig& cfg) {
    const int K = rings.ring_count();
    const int M = rings.size();
    if (int(hs.rings.size()) != K)
        throw std::invalid_argument("transition_matrix_ts: need one harmonics view per ring");
    const double sigma2 = hs.rings[0].channel().sigma2;
    const double s = std::sqrt(0.5 * sigma2);
    const double r_out = rings.rings[K - 1].radius;
    const double mu_last = (K >= 2) ? th.mu[K - 1] : 0.0;
    const double trunc = std::max(r_out, mu_last) + cfg.tail_sigmas * s;
    const std::vector<double> cuts = radial_cuts(rings, cfg.split_sigmas, s, trunc);

    // rows mix every transmit ring's series with the cell ring's correction,
    // so each cell splits at the union of all record grids
    std::vector<double> knots;
    for (const auto& v : hs.rings) append_knots(v, knots);
    std::sort(knots.begin(), knots.end());

    std::vector<std::vector<Sector>> sectors(K);
    std::vector<RadialCell> cells(K);
    for (int k = 0; k < K; ++k) {
        sectors[k] = ring_sectors(rings.rings[k]);
        if (rings.rings[k].phases.size() > 1)
            cells[k] = build_cell(th.mu[k], std::min(th.mu[k + 1], trunc), cuts, knots,
                                  hs.rings[k], cfg.radial_nodes, true);
    }

    TransitionMatrix T;
    T.M = M;
    T.method = TransitionMatrix::Method::quadrature;
    T.p.assign(std::size_t(M) * M, 0.0);

    std::array<std::complex<double>, kMaxHarmonics> coef{};
    for (int ki = 0; ki < K; ++ki) {
        const HarmonicsView& view = hs.rings[ki];
        const double r0 = rings.rings[ki].radius;
        const int mi = view.m_count();
        const int i0 = rings.ring_begin(ki);
        const int li = int(rings.rings[ki].phases.size());
        for (int kj = 0; kj < K; ++kj) {
            const int j0 = rings.ring_begin(kj);
            const int lj = int(rings.rings[kj].phases.size());
            if (lj == 1) {
                // full-circle sector: the harmonic terms integrate to zero
                const double p = marcum_cell(r0, th.mu[kj], th.mu[kj + 1], sigma2);
                for (int a = 0; a < li; ++a) T.p[std::size_t(i0 + a) * M + j0] = p;
                continue;
            }
            const RadialCell& cell = cells[kj];
            std::vector<std::vector<double>> tj(lj);
            for (int jj = 0; jj < lj; ++jj) tj[jj] = sector_factors(sectors[kj][jj].width, mi);
            for (const Panel& pan : cell.panels) {
                if (panel_distance(pan, r0) > cfg.skip_sigmas * s) continue;
                for (int q = pan.first; q < pan.first + pan.count; ++q) {
                    const double R = cell.nodes[q];
                    const double w = cell.weights[q];
                    const double fr = rice_pdf(R, r0, sigma2);
                    view.eval_all(R, coef.data());
                    // fold the node's correction angle into the coefficients
                    const std::complex<double> rot_tc = std::polar(1.0, cell.tc[q]);
                    std::complex<double> u = rot_tc;
                    for (int m = 0; m < mi; ++m) {
                        coef[m] *= u;
                        u *= rot_tc;
                    }
                    for (int a = 0; a < li; ++a) {
                        const double psi_a = rings.rings[ki].phases[a];
                        for (int jj = 0; jj < lj; ++jj) {
                            const double base = sectors[kj][jj].center - psi_a;
                            const std::complex<double> rot = std::polar(1.0, base);
                            std::complex<double> v = rot;
                            double acc = sectors[kj][jj].width * fr / (2.0 * M_PI);
                            const double* t = tj[jj].data();
                            double hsum = 0.0;
                            for (int m = 0; m < mi; ++m) {
                                hsum += (coef[m] * v).real() * t[m];
                                v *= rot;
                            }
                            acc += hsum / M_PI;
                            T.p[std::size_t(i0 + a) * M + (j0 + jj)] += w * acc;
                        }
                    }
                }
            }
            if (kj == K - 1) {
                // truncated tail mass, spread over the outer sectors by width
                const double tail = marcum_cell(r0, trunc,
                                                std::numeric_limits<double>::infinity(), sigma2);
                for (int a = 0; a < li; ++a)
                    for (int jj = 0; jj < lj; ++jj)
                        T.p[std::size_t(i0 + a) * M + (j0 + jj)] +=
                            tail * sectors[kj][jj].width / (2.0 * M_PI);
            }
        }
    }

    // validate the raw rows, then project onto the simplex: series truncation
    // can leave slightly negative entries whose clamping is paid back by a
    // row renormalization, keeping each row an exact distribution
    for (int i = 0; i < M; ++i) {
        const double dev = std::abs(T.row_sum(i) - 1.0);
        if (dev > cfg.row_sum_tol)
            throw std::runtime_error("transition_matrix_ts: row sum off by " + std::to_string(dev));
        double* row = &T.p[std::size_t(i) * M];
        for (int j = 0; j < M; ++j) row[j] = std::min(std::max(row[j], 0.0), 1.0);
        const double sum = std::accumulate(row, row + M, 0.0);
        if (sum > 0.0)
            for (int j = 0; j < M; ++j) row[j] /= sum;
    }
    return T;
}

TransitionMatrix transition_matrix_ts(const ApskSpec& spec, const ThresholdSet& th,
                                      const HarmonicsSet& hs, const QuadratureConfig& cfg) {
    return transition_matrix_ts(ring_system(spec), th, hs, cfg);
}

double sep_ts_quadrature(const RingSystem& rings, const ThresholdSet& th,
                         const HarmonicsSet& hs, const QuadratureConfig& cfg) {
    const int K = rings.ring_count();
    const int M = rings.size();
    if (int(hs.rings.size()) != K)
        throw std::invalid_argument("sep_ts_quadrature: need one view slot per ring");
    double sigma2 = 0.0;
    bool have_sigma = false;
    for (const auto& v : hs.rings)
        if (v.a) {
            sigma2 = v.channel().sigma2;
            have_sigma = true;
            break;
        }
    if (!have_sigma)
        throw std::invalid_argument("sep_ts_quadrature: no harmonics record to take sigma from");
    const double s = std::sqrt(0.5 * sigma2);
    const double r_out = rings.rings[K - 1].radius;
    const double mu_last = (K >= 2) ? th.mu[K - 1] : 0.0;
    const double trunc = std::max(r_out, mu_last) + cfg.tail_sigmas * s;
    const std::vector<double> cuts = radial_cuts(rings, cfg.split_sigmas, s, trunc);
    double correct = 0.0;
    std::array<std::complex<double>, kMaxHarmonics> coef{};
    for (int k = 0; k < K; ++k) {
        const double r0 = rings.rings[k].radius;
        const int lk = int(rings.rings[k].phases.size());
        if (lk == 1) {
            correct += marcum_cell(r0, th.mu[k], th.mu[k + 1], sigma2);
            continue;
        }
        const HarmonicsView& view = hs.rings[k];
        if (!view.a)
            throw std::invalid_argument("sep_ts_quadrature: missing harmonics for a multi-point ring");
        const int mi = view.m_count();
        std::vector<double> knots;
        append_knots(view, knots);
        std::sort(knots.begin(), knots.end());
        RadialCell cell = build_cell(th.mu[k], std::min(th.mu[k + 1], trunc), cuts, knots,
                                     view, cfg.radial_nodes, true);
        const auto sect = ring_sectors(rings.rings[k]);
        // with evenly spaced phases every diagonal term is identical
        bool uniform = true;
        for (int j = 0; j < lk; ++j)
            if (std::abs(sect[j].width - 2.0 * M_PI / lk) > 1e-12 ||
                std::abs(sect[j].center - rings.rings[k].phases[j]) > 1e-12)
                uniform = false;
        std::vector<std::vector<double>> tj;
        std::vector<double> offs(lk, 0.0);
        const int nj = uniform ? 1 : lk;
        tj.resize(nj);
        for (int j = 0; j < nj; ++j) {
            tj[j] = sector_factors(sect[j].width, mi);
            offs[j] = sect[j].center - rings.rings[k].phases[j];
        }
        for (const Panel& pan : cell.panels) {
            if (panel_distance(pan, r0) > cfg.skip_sigmas * s) continue;
            for (int q = pan.first; q < pan.first + pan.count; ++q) {
                const double R = cell.nodes[q];
                const double w = cell.weights[q];
                const double fr = rice_pdf(R, r0, sigma2);
                view.eval_all(R, coef.data());
                for (int j = 0; j < nj; ++j) {
                    const std::complex<double> rot = std::polar(1.0, cell.tc[q] + offs[j]);
                    std::complex<double> v = rot;
                    double hsum = 0.0;
                    for (int m = 0; m < mi; ++m) {
                        hsum += (coef[m] * v).real() * tj[j][m];
                        v *= rot;
                    }
                    const double mult = uniform ? double(lk) : 1.0;
                    correct += mult * w * (sect[j].width * fr / (2.0 * M_PI) + hsum / M_PI);
                }
            }
        }
    }
    return std::min(std::max(1.0 - correct / double(M), 0.0), 1.0);
}

namespace {

constexpr int kMcShards = 64;

} // namespace

TransitionMatrix transition_matrix_mc(const RingSystem& rings, DetectorKind kind,
                                      const HarmonicsSet& hs, const ThresholdSet& th,
                                      const ChannelParams& params, long long n_samples,
                                      std::uint64_t seed, int n_threads) {
    if (n_samples < 10000)
        throw std::invalid_argument("transition_matrix_mc: need at least 1e4 samples per symbol");
    validate(params);
    const int M = rings.size();
    TransitionMatrix T;
    T.M = M;
    T.method = TransitionMatrix::Method::monte_carlo;
    T.sample_count = n_samples;
    T.p.assign(std::size_t(M) * M, 0.0);

    std::vector<std::vector<long long>> counts(std::size_t(M) * kMcShards);
    auto work = [&](int task) {
        const int i = task / kMcShards, sh = task % kMcShards;
        const long long base = n_samples / kMcShards, extra = n_samples % kMcShards;
        const long long n = base + (sh < extra ? 1 : 0);
        Xoshiro256pp rng(seed, std::uint64_t(task) + 1);
        const std::complex<double> x = rings.symbol(i);
        std::vector<long long> c(M, 0);
        for (long long t = 0; t < n; ++t) {
            const auto smp = sample_channel(x, params, rng);
            const int d = (kind == DetectorKind::two_stage) ? ts_detect(smp.y, rings, hs, th)
                                                            : ml_detect(smp.y, rings, hs);
            c[d]++;
        }
        counts[task] = std::move(c);
    };
    const int tasks = M * kMcShards;
    if (n_threads <= 1) {
        for (int t = 0; t < tasks; ++t) work(t);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (int k = next.fetch_add(1); k < tasks; k = next.fetch_add(1)) work(k);
            });
        for (auto& t : pool) t.join();
    }
    for (int i = 0; i < M; ++i) {
        std::vector<long long> row(M, 0);
        for (int sh = 0; sh < kMcShards; ++sh)
            for (int j = 0; j < M; ++j) row[j] += counts[std::size_t(i) * kMcShards + sh][j];
        for (int j = 0; j < M; ++j)
            T.p[std::size_t(i) * M + j] = double(row[j]) / double(n_samples);
    }
    return T;
}

double sep(const TransitionMatrix& T) {
    double d = 0.0;
    for (int i = 0; i < T.M; ++i) d += T.at(i, i);
    return 1.0 - d / double(T.M);
}

double first_stage_error(int k, const RingSystem& rings, const ThresholdSet& th,
                         double sigma2) {
    if (k < 0 || k >= rings.ring_count())
        throw std::out_of_range("first_stage_error: ring index");
    return 1.0 - marcum_cell(rings.rings[k].radius, th.mu[k], th.mu[k + 1], sigma2);
}

double bep(const TransitionMatrix& T, const Labeling& lab) {
    if (lab.size() != T.M || (1 << lab.m) != T.M)
        throw std::invalid_argument("bep: labeling does not match matrix size");
    double acc = 0.0;
    for (int i = 0; i < T.M; ++i)
        for (int j = 0; j < T.M; ++j)
            if (i != j)
                acc += std::popcount(lab.rows[i] ^ lab.rows[j]) * T.at(i, j);
    return acc / (double(lab.m) * double(T.M));
}

RingSystem qam16_rings(double P) {
    if (!(P > 0.0)) throw std::invalid_argument("qam16_rings: power must be positive");
    const double a = std::sqrt(P / 10.0);
    RingSystem rs;
    rs.rings.resize(3);
    rs.rings[0].radius = a * std::sqrt(2.0);
    rs.rings[1].radius = a * std::sqrt(10.0);
    rs.rings[2].radius = a * std::sqrt(18.0);
    for (int j = 0; j < 4; ++j) {
        rs.rings[0].phases.push_back(M_PI / 4.0 + j * M_PI / 2.0);
        rs.rings[2].phases.push_back(M_PI / 4.0 + j * M_PI / 2.0);
    }
    const double b = std::atan2(1.0, 3.0);
    for (int quad = 0; quad < 4; ++quad) {
        const double q = quad * M_PI / 2.0;
        rs.rings[1].phases.push_back(q + b);
        rs.rings[1].phases.push_back(q + M_PI / 2.0 - b);
    }
    return rs;
}

double qam16_awgn_ml_sep(double P, double sigma2) {
    const double a = std::sqrt(P / 10.0);
    const double p = 0.75 * std::erfc(a / std::sqrt(sigma2));
    return 1.0 - (1.0 - p) * (1.0 - p);
}

double mpsk_awgn_ml_sep(int M, double P, double sigma2) {
    if (M < 2) throw std::invalid_argument("mpsk_awgn_ml_sep: need at least two phases");
    const double snr = P / sigma2;
    const double s2 = std::sin(M_PI / M) * std::sin(M_PI / M);
    auto f = [&](double th) { return std::exp(-snr * s2 / (std::sin(th) * std::sin(th))); };
    return gauss_integrate(f, 1e-12, M_PI * (M - 1) / double(M), 512) / M_PI;
}

BinomialInterval wilson_interval(long long successes, long long trials, double z) {
    if (trials <= 0) throw std::invalid_argument("wilson_interval: no trials");
    const double n = double(trials), p = double(successes) / n;
    const double z2 = z * z;
    const double den = 1.0 + z2 / n;
    const double center = (p + z2 / (2.0 * n)) / den;
    const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / den;
    return {std::max(center - half, 0.0), std::min(center + half, 1.0)};
}

std::string to_csv(const TransitionMatrix& T) {
    std::string out;
    char buf[64];
    for (int i = 0; i < T.M; ++i) {
        for (int j = 0; j < T.M; ++j) {
            std::snprintf(buf, sizeof buf, "%.10g", T.at(i, j));
            out += buf;
            out += (j + 1 < T.M) ? ',' : '\n';
        }
    }
    return out;
}

} // namespace apsk
