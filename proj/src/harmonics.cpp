#include "apsk/harmonics.hpp"

#include <algorithm>
#include <array>
#include <atomic>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "apsk/pchip.hpp"
#include "apsk/special.hpp"

namespace apsk {

namespace {

constexpr int kShards = 64;

struct ShardAccum {
    std::vector<long long> count;                      // per bin
    std::vector<double> sum_r;                         // per bin
    std::vector<std::complex<double>> moments;         // [bin * m_cap + (m-1)]
};

void run_shard(double r0, const ChannelParams& params, const std::vector<double>& edges,
               int m_cap, int n, std::uint64_t seed, std::uint64_t stream, ShardAccum& acc) {
    const int bins = int(edges.size()) + 1;
    acc.count.assign(bins, 0);
    acc.sum_r.assign(bins, 0.0);
    acc.moments.assign(std::size_t(bins) * m_cap, {0.0, 0.0});
    Xoshiro256pp rng(seed, stream);
    const std::complex<double> x(r0, 0.0);
    for (int i = 0; i < n; ++i) {
        const auto s = sample_channel(x, params, rng);
        const double R = std::abs(s.y);
        const int b = int(std::upper_bound(edges.begin(), edges.end(), R) - edges.begin());
        acc.count[b]++;
        acc.sum_r[b] += R;
        if (R > 0.0) {
            const std::complex<double> step = std::conj(s.y) / R; // e^{-j(theta-0)}
            std::complex<double> u = step;
            std::complex<double>* row = &acc.moments[std::size_t(b) * m_cap];
            for (int m = 0; m < m_cap; ++m) {
                row[m] += u;
                u *= step;
            }
        }
    }
}

// shape-preserving slopes for every stored component, shared grid
void fill_slopes(PhaseHarmonics& h) {
    h.slope.resize(h.m_count());
    std::vector<double> comp(h.r_grid.size()), dcomp(h.r_grid.size());
    for (int m = 0; m < h.m_count(); ++m) {
        h.slope[m].resize(h.r_grid.size());
        for (int part = 0; part < 2; ++part) {
            for (std::size_t i = 0; i < h.r_grid.size(); ++i)
                comp[i] = part ? h.val[m][i].imag() : h.val[m][i].real();
            pchip_slopes(h.r_grid, comp.data(), dcomp.data());
            for (std::size_t i = 0; i < h.r_grid.size(); ++i) {
                if (part)
                    h.slope[m][i].imag(dcomp[i]);
                else
                    h.slope[m][i].real(dcomp[i]);
            }
        }
    }
    h.theta_slope.resize(h.r_grid.size());
    pchip_slopes(h.r_grid, h.theta_c.data(), h.theta_slope.data());
}

} // namespace

void PhaseHarmonics::eval_all(double r, std::complex<double>* out) const {
    const int M = m_count();
    if (r_grid.empty() || r <= r_grid.front() || r >= r_grid.back()) {
        std::fill(out, out + M, std::complex<double>(0.0, 0.0));
        return;
    }
    const auto it = std::upper_bound(r_grid.begin(), r_grid.end(), r);
    const std::size_t i = std::size_t(it - r_grid.begin()) - 1;
    const double h = r_grid[i + 1] - r_grid[i];
    const double s = r - r_grid[i];
    for (int m = 0; m < M; ++m) {
        const double re = pchip_segment(s, h, val[m][i].real(), val[m][i + 1].real(),
                                        slope[m][i].real(), slope[m][i + 1].real());
        const double im = pchip_segment(s, h, val[m][i].imag(), val[m][i + 1].imag(),
                                        slope[m][i].imag(), slope[m][i + 1].imag());
        out[m] = {re, im};
    }
}

std::complex<double> PhaseHarmonics::eval(double r, int m) const {
    if (m < 1 || m > m_count()) throw std::out_of_range("PhaseHarmonics::eval: harmonic index");
    if (r_grid.empty() || r <= r_grid.front() || r >= r_grid.back()) return {0.0, 0.0};
    const auto it = std::upper_bound(r_grid.begin(), r_grid.end(), r);
    const std::size_t i = std::size_t(it - r_grid.begin()) - 1;
    const double h = r_grid[i + 1] - r_grid[i];
    const double s = r - r_grid[i];
    const int g = m - 1;
    const double re = pchip_segment(s, h, val[g][i].real(), val[g][i + 1].real(),
                                    slope[g][i].real(), slope[g][i + 1].real());
    const double im = pchip_segment(s, h, val[g][i].imag(), val[g][i + 1].imag(),
                                    slope[g][i].imag(), slope[g][i + 1].imag());
    return {re, im};
}

std::complex<double> PhaseHarmonics::eval_c1(double r) const {
    if (m_count() < 1) return {0.0, 0.0};
    return eval(r, 1);
}

double PhaseHarmonics::correction(double r) const {
    if (theta_c.empty()) return 0.0;
    if (r <= r_grid.front()) return theta_c.front();
    if (r >= r_grid.back()) return theta_c.back();
    const auto it = std::upper_bound(r_grid.begin(), r_grid.end(), r);
    const std::size_t i = std::size_t(it - r_grid.begin()) - 1;
    const double h = r_grid[i + 1] - r_grid[i];
    return pchip_segment(r - r_grid[i], h, theta_c[i], theta_c[i + 1], theta_slope[i],
                         theta_slope[i + 1]);
}

int HarmonicsView::m_count() const {
    if (!a) return 0;
    int m = a->m_count();
    if (b) m = std::max(m, b->m_count());
    return m;
}

void HarmonicsView::eval_all(double r, std::complex<double>* out) const {
    const int M = m_count();
    if (!a) return;
    if (!b || wb == 0.0) {
        a->eval_all(r, out);
        for (int m = a->m_count(); m < M; ++m) out[m] = {0.0, 0.0};
        return;
    }
    std::array<std::complex<double>, kMaxHarmonics> ta{}, tb{};
    a->eval_all(r, ta.data());
    b->eval_all(r, tb.data());
    for (int m = a->m_count(); m < M; ++m) ta[m] = {0.0, 0.0};
    for (int m = b->m_count(); m < M; ++m) tb[m] = {0.0, 0.0};
    for (int m = 0; m < M; ++m) out[m] = (1.0 - wb) * ta[m] + wb * tb[m];
}

std::complex<double> HarmonicsView::eval_c1(double r) const {
    if (!a) return {0.0, 0.0};
    std::complex<double> c = a->eval_c1(r);
    if (b && wb != 0.0) c = (1.0 - wb) * c + wb * b->eval_c1(r);
    return c;
}

double HarmonicsView::correction(double r) const {
    if (!a) return 0.0;
    double t = a->correction(r);
    if (b && wb != 0.0) t = (1.0 - wb) * t + wb * b->correction(r);
    return t;
}

PhaseHarmonics estimate_harmonics(double r0, const ChannelParams& params,
                                  const HarmonicsConfig& cfg, std::uint64_t seed,
                                  int n_threads) {
    if (cfg.n_samples < 100000)
        throw std::invalid_argument("estimate_harmonics: need at least 1e5 samples");
    if (cfg.m_max < 1 || cfg.m_max > kMaxHarmonics)
        throw std::invalid_argument("estimate_harmonics: m_max out of range");
    if (r0 < 0.0) throw std::invalid_argument("estimate_harmonics: negative amplitude");
    validate(params);
    const double sigma2 = params.sigma2;
    if (!(sigma2 > 0.0)) throw std::invalid_argument("estimate_harmonics: zero noise variance");

    int bins = std::min(cfg.bins, cfg.n_samples / cfg.min_bin_count);
    bins = std::max(bins, 8);

    // analytic bin edges under the Rice amplitude law: equal-probability over
    // the bulk plus probability-halving refinements on both flanks, so the
    // populated grid reaches out to where the ring thresholds sit
    std::vector<double> ps;
    for (int k = 1; k < bins; ++k) ps.push_back(double(k) / bins);
    const double p_min = std::max(cfg.tail_quantile, 2.0 / cfg.n_samples);
    for (double p = 0.5 / bins; p >= p_min; p *= 0.5) {
        ps.push_back(p);
        ps.push_back(1.0 - p);
    }
    std::sort(ps.begin(), ps.end());
    std::vector<double> edges;
    edges.reserve(ps.size());
    for (double p : ps) {
        const double e = rice_quantile(p, r0, sigma2);
        if (edges.empty() || e > edges.back()) edges.push_back(e);
    }
    bins = int(edges.size()) + 1;

    const int m_cap = cfg.m_max;
    std::vector<ShardAccum> shards(kShards);
    const int base = cfg.n_samples / kShards, extra = cfg.n_samples % kShards;
    auto work = [&](int s) {
        const int n = base + (s < extra ? 1 : 0);
        run_shard(r0, params, edges, m_cap, n, seed, std::uint64_t(s), shards[s]);
    };
    if (n_threads <= 1) {
        for (int s = 0; s < kShards; ++s) work(s);
    } else {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        for (int t = 0; t < n_threads; ++t)
            pool.emplace_back([&] {
                for (int s = next.fetch_add(1); s < kShards; s = next.fetch_add(1)) work(s);
            });
        for (auto& th : pool) th.join();
    }

    // merge in shard order so the result is independent of thread count
    std::vector<long long> count(bins, 0);
    std::vector<double> sum_r(bins, 0.0);
    std::vector<std::complex<double>> moments(std::size_t(bins) * m_cap, {0.0, 0.0});
    for (const auto& sh : shards) {
        for (int b = 0; b < bins; ++b) {
            count[b] += sh.count[b];
            sum_r[b] += sh.sum_r[b];
        }
        for (std::size_t i = 0; i < moments.size(); ++i) moments[i] += sh.moments[i];
    }

    // merge any underfilled bin into its neighbor (equal-probability bins make
    // this rare; it guards the per-bin moment error bound)
    std::vector<double> mean_r(bins);
    std::vector<int> keep;
    for (int b = 0; b < bins; ++b) {
        if (count[b] < cfg.min_bin_count && b + 1 < bins) {
            count[b + 1] += count[b];
            sum_r[b + 1] += sum_r[b];
            for (int m = 0; m < m_cap; ++m)
                moments[std::size_t(b + 1) * m_cap + m] += moments[std::size_t(b) * m_cap + m];
            continue;
        }
        keep.push_back(b);
    }
    if (keep.empty()) throw std::runtime_error("estimate_harmonics: all bins underfilled");
    if (count[keep.back()] < cfg.min_bin_count && keep.size() > 1) {
        const int last = keep.back(), prev = keep[keep.size() - 2];
        count[prev] += count[last];
        sum_r[prev] += sum_r[last];
        for (int m = 0; m < m_cap; ++m)
            moments[std::size_t(prev) * m_cap + m] += moments[std::size_t(last) * m_cap + m];
        keep.pop_back();
    }

    // nodes: pinned zero at r = 0, bin mean radii, pinned zero past the bulk
    const double r_hi = r0 + 6.5 * std::sqrt(0.5 * sigma2);
    std::vector<double> nodes;
    std::vector<double> node_f;     // Rice density at the node
    std::vector<long long> node_cnt; // samples behind the node (0 = pinned)
    nodes.push_back(0.0);
    node_f.push_back(0.0);
    node_cnt.push_back(0);
    std::vector<std::vector<std::complex<double>>> raw(m_cap);
    for (int m = 0; m < m_cap; ++m) raw[m].push_back({0.0, 0.0});
    for (int b : keep) {
        const double rb = sum_r[b] / double(count[b]);
        if (rb <= nodes.back() || rb >= r_hi) continue;
        nodes.push_back(rb);
        const double fr = rice_pdf(rb, r0, sigma2);
        node_f.push_back(fr);
        node_cnt.push_back(count[b]);
        for (int m = 0; m < m_cap; ++m) {
            const auto mom = moments[std::size_t(b) * m_cap + m] / double(count[b]);
            raw[m].push_back(fr * mom);
        }
    }
    nodes.push_back(r_hi);
    node_f.push_back(0.0);
    node_cnt.push_back(0);
    for (int m = 0; m < m_cap; ++m) raw[m].push_back({0.0, 0.0});

    // adaptive truncation: stop once the geometric-tail estimate falls below
    // the energy threshold, or once a harmonic's energy is indistinguishable
    // from the sampling-noise floor (keeping it would only add ringing)
    std::vector<double> energy(m_cap, 0.0);
    for (int m = 0; m < m_cap; ++m)
        for (const auto& c : raw[m]) energy[m] += std::norm(c);
    double floor_e = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (node_cnt[i] > 0) floor_e += node_f[i] * node_f[i] / double(node_cnt[i]);
    int m_keep = m_cap;
    double total = 0.0;
    for (int m = 0; m < m_cap; ++m) {
        total += energy[m];
        if (m >= 1 && cfg.noise_floor > 0.0 && energy[m] < cfg.noise_floor * floor_e) {
            m_keep = m;
            break;
        }
        const int d = std::max(3, (m + 1) / 10);
        if (m + 1 >= 8 && m - d >= 0 && energy[m - d] > 0.0) {
            double rho = std::pow(energy[m] / energy[m - d], 1.0 / d);
            rho = std::min(std::max(rho, 1e-6), 0.999);
            const double tail = energy[m] * rho / (1.0 - rho);
            if (tail < cfg.tail_energy * (total + tail)) {
                m_keep = m + 1;
                break;
            }
        }
    }

    // unwrapped correction angle per node: principal -arg C_1 joined across
    // the nodes with clear first-harmonic signal, branch fixed so the value
    // at the ring radius matches the mean nonlinear rotation there
    const std::size_t nn = nodes.size();
    std::vector<double> th(nn, 0.0);
    std::vector<char> ok(nn, 0);
    for (std::size_t i = 0; i < nn; ++i) {
        if (node_cnt[i] <= 0 || node_f[i] <= 0.0) continue;
        const double u1 = std::abs(raw[0][i]) / node_f[i];
        ok[i] = u1 * u1 * double(node_cnt[i]) > 25.0 ? 1 : 0;
    }
    const double phi_bar = mean_nlpn({r0, 0.0}, params);
    double prev = 0.0, run = 0.0;
    bool first = true;
    std::ptrdiff_t anchor = -1;
    double anchor_dist = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < nn; ++i) {
        if (!ok[i]) continue;
        const double ang = -std::arg(raw[0][i]);
        if (first) {
            run = ang;
            first = false;
        } else {
            double d = ang - prev;
            d -= 2.0 * M_PI * std::round(d / (2.0 * M_PI));
            run += d;
        }
        prev = ang;
        th[i] = run;
        if (std::abs(nodes[i] - r0) < anchor_dist) {
            anchor_dist = std::abs(nodes[i] - r0);
            anchor = std::ptrdiff_t(i);
        }
    }
    if (anchor >= 0) {
        const double shift =
            2.0 * M_PI * std::round((-phi_bar - th[std::size_t(anchor)]) / (2.0 * M_PI));
        std::ptrdiff_t last = -1;
        for (std::size_t i = 0; i < nn; ++i) {
            if (!ok[i]) continue;
            th[i] += shift;
            if (last < 0)
                for (std::size_t j = 0; j < i; ++j) th[j] = th[i];
            else
                for (std::size_t j = std::size_t(last) + 1; j < i; ++j) {
                    const double w = (nodes[j] - nodes[std::size_t(last)]) /
                                     (nodes[i] - nodes[std::size_t(last)]);
                    th[j] = (1.0 - w) * th[std::size_t(last)] + w * th[i];
                }
            last = std::ptrdiff_t(i);
        }
        for (std::size_t j = std::size_t(last) + 1; j < nn; ++j) th[j] = th[std::size_t(last)];
    } else {
        std::fill(th.begin(), th.end(), -phi_bar);
    }

    PhaseHarmonics h;
    h.r0 = r0;
    h.params = params;
    h.n_samples = cfg.n_samples;
    h.seed = seed;

    if (!cfg.r_grid.empty()) {
        // resample onto the caller's grid through the bin-level interpolant
        for (std::size_t i = 1; i < cfg.r_grid.size(); ++i)
            if (!(cfg.r_grid[i] > cfg.r_grid[i - 1]))
                throw std::invalid_argument("estimate_harmonics: r_grid must be increasing");
        h.r_grid = cfg.r_grid;
        h.val.resize(m_keep);
        for (int m = 0; m < m_keep; ++m) {
            std::vector<double> re(nodes.size()), im(nodes.size());
            for (std::size_t i = 0; i < nodes.size(); ++i) {
                re[i] = raw[m][i].real();
                im[i] = raw[m][i].imag();
            }
            Pchip pre(nodes, re), pim(nodes, im);
            h.val[m].resize(h.r_grid.size());
            for (std::size_t i = 0; i < h.r_grid.size(); ++i)
                h.val[m][i] = {pre(h.r_grid[i]), pim(h.r_grid[i])};
        }
        Pchip pth(nodes, th);
        h.theta_c.resize(h.r_grid.size());
        for (std::size_t i = 0; i < h.r_grid.size(); ++i) h.theta_c[i] = pth(h.r_grid[i]);
    } else {
        h.r_grid = nodes;
        h.val.assign(raw.begin(), raw.begin() + m_keep);
        h.theta_c = th;
    }
    fill_slopes(h);
    return h;
}

PhaseHarmonics estimate_harmonics(double r0, const ChannelParams& params, int m_max,
                                  const std::vector<double>& r_grid, int n_samples,
                                  std::uint64_t seed) {
    HarmonicsConfig cfg;
    cfg.m_max = m_max;
    cfg.n_samples = n_samples;
    cfg.r_grid = r_grid;
    return estimate_harmonics(r0, params, cfg, seed);
}

double polar_density(const HarmonicsView& h, double sigma2, double r, double dtheta) {
    double g = rice_pdf(r, h.r0, sigma2) / (2.0 * M_PI);
    const int M = h.m_count();
    if (M > 0) {
        std::array<std::complex<double>, kMaxHarmonics> c{};
        h.eval_all(r, c.data());
        const std::complex<double> step = std::polar(1.0, dtheta);
        std::complex<double> u = step;
        double s = 0.0;
        for (int m = 0; m < M; ++m) {
            s += (c[m] * u).real();
            u *= step;
        }
        g += s / M_PI;
    }
    return g;
}

std::string to_json_string(const PhaseHarmonics& h) {
    nlohmann::json j;
    j["format"] = "apsk-harmonics";
    j["version"] = 1;
    j["r0"] = h.r0;
    j["n_samples"] = h.n_samples;
    j["seed"] = h.seed;
    nlohmann::json p;
    p["gamma"] = h.params.gamma;
    p["L_km"] = h.params.L;
    p["N"] = h.params.N;
    p["n_sp"] = h.params.n_sp;
    p["h"] = h.params.h;
    p["nu"] = h.params.nu;
    p["alpha"] = h.params.alpha;
    p["delta_nu"] = h.params.delta_nu;
    p["sigma2"] = h.params.sigma2;
    p["sigma0_sq"] = h.params.sigma0_sq;
    j["params"] = std::move(p);
    j["r_grid"] = h.r_grid;
    j["theta_c"] = h.theta_c;
    nlohmann::json hs = nlohmann::json::array();
    for (const auto& vm : h.val) {
        std::vector<double> re(vm.size()), im(vm.size());
        for (std::size_t i = 0; i < vm.size(); ++i) {
            re[i] = vm[i].real();
            im[i] = vm[i].imag();
        }
        hs.push_back({{"re", re}, {"im", im}});
    }
    j["harmonics"] = std::move(hs);
    return j.dump();
}

PhaseHarmonics harmonics_from_json(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    if (j.at("format").get<std::string>() != "apsk-harmonics" || j.at("version").get<int>() != 1)
        throw std::runtime_error("harmonics_from_json: unsupported record format");
    PhaseHarmonics h;
    h.r0 = j.at("r0").get<double>();
    h.n_samples = j.at("n_samples").get<int>();
    h.seed = j.at("seed").get<std::uint64_t>();
    const auto& p = j.at("params");
    h.params.gamma = p.at("gamma").get<double>();
    h.params.L = p.at("L_km").get<double>();
    h.params.N = p.at("N").get<int>();
    h.params.n_sp = p.at("n_sp").get<double>();
    h.params.h = p.at("h").get<double>();
    h.params.nu = p.at("nu").get<double>();
    h.params.alpha = p.at("alpha").get<double>();
    h.params.delta_nu = p.at("delta_nu").get<double>();
    h.params.sigma2 = p.at("sigma2").get<double>();
    h.params.sigma0_sq = p.at("sigma0_sq").get<double>();
    h.r_grid = j.at("r_grid").get<std::vector<double>>();
    h.theta_c = j.at("theta_c").get<std::vector<double>>();
    if (h.r_grid.size() < 2 || h.theta_c.size() != h.r_grid.size())
        throw std::runtime_error("harmonics_from_json: grid/angle size mismatch");
    for (std::size_t i = 1; i < h.r_grid.size(); ++i)
        if (!(h.r_grid[i] > h.r_grid[i - 1]))
            throw std::runtime_error("harmonics_from_json: grid not increasing");
    for (const auto& hm : j.at("harmonics")) {
        const auto re = hm.at("re").get<std::vector<double>>();
        const auto im = hm.at("im").get<std::vector<double>>();
        if (re.size() != h.r_grid.size() || im.size() != h.r_grid.size())
            throw std::runtime_error("harmonics_from_json: harmonic length mismatch");
        std::vector<std::complex<double>> vm(re.size());
        for (std::size_t i = 0; i < re.size(); ++i) vm[i] = {re[i], im[i]};
        h.val.push_back(std::move(vm));
    }
    if (h.m_count() > kMaxHarmonics)
        throw std::runtime_error("harmonics_from_json: too many harmonics");
    fill_slopes(h);
    return h;
}

PdfEval pdf_y(std::complex<double> y, std::complex<double> x, const HarmonicsView& h,
              double sigma2) {
    if (!h.a) throw std::invalid_argument("pdf_y: empty harmonics view");
    const double r0 = std::abs(x);
    if (std::abs(r0 - h.r0) > 1e-9 * (1.0 + r0))
        throw std::invalid_argument("pdf_y: harmonics were built for a different amplitude");
    const double cs2 = h.channel().sigma2;
    if (std::abs(sigma2 - cs2) > 1e-9 * cs2)
        throw std::invalid_argument("pdf_y: harmonics were built for a different noise variance");
    double R = std::abs(y);
    const double dtheta = std::arg(y) - std::arg(x);
    const double floor_r = 1e-9 * (h.r0 + std::sqrt(sigma2));
    if (R < floor_r) R = floor_r;
    const double raw = polar_density(h, sigma2, R, dtheta) / R;
    return {std::max(raw, 0.0), raw};
}

} // namespace apsk
