#include "apsk/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "apsk/rng.hpp"

namespace apsk {

namespace {

constexpr double kQuantumFactor = 1e-3; // exact-mode amplitude step / sqrt(P)
constexpr double kGridRatio = 1.05;     // interpolation grid, amplitude ratio
constexpr double kTieTol = 1e-8;        // partition tie window

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

std::string record_key(double r0, const ChannelParams& p, const HarmonicsConfig& c,
                       std::uint64_t seed) {
    char buf[512];
    std::snprintf(buf, sizeof buf,
                  "r0=%.17g;sigma2=%.17g;gamma_l=%.17g;N=%d;n=%d;seed=%llu;"
                  "m=%d;bins=%d;tail=%.17g;floor=%.17g;minbin=%d;tailq=%.17g",
                  r0, p.sigma2, p.gamma_l(), p.N, c.n_samples, (unsigned long long)seed,
                  c.m_max, c.bins, c.tail_energy, c.noise_floor, c.min_bin_count,
                  c.tail_quantile);
    return buf;
}

} // namespace

HarmonicsStore::HarmonicsStore(const ChannelParams& params, const HarmonicsConfig& cfg,
                               std::uint64_t seed)
    : params_(params), cfg_(cfg), seed_(seed) {
    validate(params_);
}

void HarmonicsStore::set_power_scale(double P) {
    if (!(P > 0.0)) throw std::invalid_argument("HarmonicsStore: power must be positive");
    const double q = kQuantumFactor * std::sqrt(P);
    if (quantum_ > 0.0 && std::abs(q - quantum_) <= 1e-12 * quantum_) return;
    quantum_ = q;
    cells_.clear();
}

// estimate a record, or fetch it from the disk cache when one is configured
std::shared_ptr<const PhaseHarmonics> HarmonicsStore::materialize(double r0,
                                                                  std::uint64_t rec_seed) {
    std::string path;
    if (!cache_dir_.empty() && cfg_.r_grid.empty()) {
        const std::string key = record_key(r0, params_, cfg_, rec_seed);
        char name[48];
        std::snprintf(name, sizeof name, "apskh-%016llx.json",
                      (unsigned long long)fnv1a(key));
        path = cache_dir_ + "/" + name;
        std::ifstream in(path, std::ios::binary);
        if (in) {
            std::ostringstream text;
            text << in.rdbuf();
            try {
                auto rec = std::make_shared<PhaseHarmonics>(harmonics_from_json(text.str()));
                const bool match = std::abs(rec->r0 - r0) <= 1e-12 * (1.0 + r0) &&
                                   std::abs(rec->params.sigma2 - params_.sigma2) <=
                                       1e-12 * params_.sigma2 &&
                                   std::abs(rec->params.gamma_l() - params_.gamma_l()) <=
                                       1e-12 * (1.0 + params_.gamma_l()) &&
                                   rec->params.N == params_.N &&
                                   rec->n_samples == cfg_.n_samples && rec->seed == rec_seed;
                if (match) return rec;
            } catch (const std::exception&) {
                // fall through and rebuild the record
            }
        }
    }
    auto rec = std::make_shared<PhaseHarmonics>(
        estimate_harmonics(r0, params_, cfg_, rec_seed, threads_));
    ++estimates_;
    if (!path.empty()) {
        std::error_code ec;
        std::filesystem::create_directories(cache_dir_, ec);
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (out) out << to_json_string(*rec);
        // cache write failures only cost time on the next run
    }
    return rec;
}

std::shared_ptr<const PhaseHarmonics> HarmonicsStore::record_at(long long key) {
    auto it = cells_.find(key);
    if (it != cells_.end()) return it->second;
    const std::uint64_t rec_seed =
        SplitMix64(seed_ + 0x9e3779b97f4a7c15ULL * std::uint64_t(key + 1)).next();
    auto rec = materialize(double(key) * quantum_, rec_seed);
    cells_.emplace(key, rec);
    return rec;
}

std::shared_ptr<const PhaseHarmonics> HarmonicsStore::grid_record_at(long long expo) {
    auto it = grid_cells_.find(expo);
    if (it != grid_cells_.end()) return it->second;
    const std::uint64_t rec_seed =
        SplitMix64(seed_ ^ 0xa5a5a5a500000000ULL ^
                   0x9e3779b97f4a7c15ULL * std::uint64_t(expo + 1)).next();
    auto rec = materialize(std::pow(kGridRatio, double(expo)), rec_seed);
    grid_cells_.emplace(expo, rec);
    return rec;
}

HarmonicsView HarmonicsStore::view_impl(double r0, HarmonicsSet* keep) {
    if (quantum_ <= 0.0)
        throw std::logic_error("HarmonicsStore: set_power_scale before requesting views");
    if (r0 < 0.0) throw std::invalid_argument("HarmonicsStore: negative amplitude");
    auto retain = [&](const std::shared_ptr<const PhaseHarmonics>& rec) {
        if (keep) keep->owned.push_back(rec);
    };
    if (!interpolate_) {
        auto rec = record_at(std::llround(r0 / quantum_));
        retain(rec);
        return HarmonicsView(*rec);
    }
    const double lg = std::log(std::max(r0, 1e-100)) / std::log(kGridRatio);
    const long long lo = (long long)std::floor(lg);
    const double frac = lg - double(lo);
    if (frac < 1e-9 || frac > 1.0 - 1e-9) {
        auto rec = grid_record_at(lo + (frac > 0.5 ? 1 : 0));
        retain(rec);
        HarmonicsView v(*rec);
        v.r0 = r0;
        return v;
    }
    auto ra = grid_record_at(lo);
    auto rb = grid_record_at(lo + 1);
    retain(ra);
    retain(rb);
    HarmonicsView v;
    v.a = ra.get();
    v.b = rb.get();
    v.wb = (r0 - ra->r0) / (rb->r0 - ra->r0);
    v.r0 = r0;
    return v;
}

HarmonicsView HarmonicsStore::view(double r0) {
    return view_impl(r0, nullptr);
}

HarmonicsSet HarmonicsStore::views(const RingSystem& rings) {
    HarmonicsSet hs;
    hs.rings.resize(rings.ring_count());
    for (int k = 0; k < rings.ring_count(); ++k) {
        if (rings.rings[k].phases.size() < 2) continue;
        hs.rings[k] = view_impl(rings.rings[k].radius, &hs);
    }
    return hs;
}

HarmonicsSet HarmonicsStore::views(const ApskSpec& spec) {
    return views(ring_system(spec));
}

HarmonicsSet HarmonicsStore::views_all(const RingSystem& rings) {
    HarmonicsSet hs;
    hs.rings.resize(rings.ring_count());
    for (int k = 0; k < rings.ring_count(); ++k)
        hs.rings[k] = view_impl(rings.rings[k].radius, &hs);
    return hs;
}

double evaluate_sep(const ApskSpec& spec, HarmonicsStore& store,
                    const QuadratureConfig& qcfg) {
    const RingSystem rs = ring_system(spec);
    const double sigma2 = store.params().sigma2;
    const ThresholdSet th = map_thresholds(rs, sigma2);
    bool any_multi = false;
    for (const auto& ring : rs.rings)
        if (ring.phases.size() > 1) any_multi = true;
    if (!any_multi) {
        // pure amplitude constellation: stage 1 is the whole decision
        double err = 0.0;
        for (int k = 0; k < rs.ring_count(); ++k)
            err += first_stage_error(k, rs, th, sigma2);
        return err / double(rs.size());
    }
    const HarmonicsSet hs = store.views(rs);
    return sep_ts_quadrature(rs, th, hs, qcfg);
}

namespace {

struct RadiiObjective {
    const RingPartition* l;
    double P;
    HarmonicsStore* store;
    int K, k0; // k0 = index of the first power-carrying ring
    long long evals = 0;
    double best_f = std::numeric_limits<double>::infinity();
    ApskSpec best_spec;

    int dims() const { return K - 1 - k0; }

    double operator()(const std::vector<double>& x) {
        ++evals;
        std::vector<double> r(K, 0.0);
        double acc = 1.0; // first gap pinned; scale is restored by projection
        r[k0] = acc;
        for (int t = 0; t < dims(); ++t) {
            acc += std::exp(std::clamp(x[t], -12.0, 12.0));
            r[k0 + 1 + t] = acc;
        }
        try {
            const ApskSpec spec =
                rescale_power(build_apsk(*l, r, std::vector<double>(K, 0.0)), P);
            const double f = evaluate_sep(spec, *store);
            if (!std::isfinite(f)) return std::numeric_limits<double>::infinity();
            if (f < best_f) {
                best_f = f;
                best_spec = spec;
            }
            return f;
        } catch (const std::exception&) {
            return std::numeric_limits<double>::infinity();
        }
    }
};

// one Nelder-Mead run; returns true if the simplex spread converged
bool nelder_mead(RadiiObjective& obj, std::vector<double> x0, const NmConfig& nm) {
    const int d = int(x0.size());
    std::vector<std::vector<double>> X(d + 1, x0);
    std::vector<double> F(d + 1);
    for (int i = 1; i <= d; ++i) X[i][i - 1] += nm.step;
    for (int i = 0; i <= d; ++i) F[i] = obj(X[i]);

    std::vector<int> idx(d + 1);
    for (int it = 0; it < nm.max_iters; ++it) {
        for (int i = 0; i <= d; ++i) idx[i] = i;
        std::sort(idx.begin(), idx.end(), [&](int a, int b) { return F[a] < F[b]; });
        const int lo = idx[0], hi = idx[d], hi2 = idx[d - 1];
        const double denom = std::max(std::abs(F[lo]), 1e-300);
        if (std::isfinite(F[hi]) && (F[hi] - F[lo]) / denom < nm.spread_tol) return true;

        std::vector<double> c(d, 0.0);
        for (int i = 0; i <= d; ++i)
            if (i != hi)
                for (int t = 0; t < d; ++t) c[t] += X[i][t] / d;

        auto blend = [&](double w) {
            std::vector<double> p(d);
            for (int t = 0; t < d; ++t) p[t] = c[t] + w * (c[t] - X[hi][t]);
            return p;
        };
        std::vector<double> xr = blend(nm.reflect);
        const double fr = obj(xr);
        if (fr < F[lo]) {
            std::vector<double> xe = blend(nm.expand);
            const double fe = obj(xe);
            if (fe < fr) {
                X[hi] = std::move(xe);
                F[hi] = fe;
            } else {
                X[hi] = std::move(xr);
                F[hi] = fr;
            }
            continue;
        }
        if (fr < F[hi2]) {
            X[hi] = std::move(xr);
            F[hi] = fr;
            continue;
        }
        std::vector<double> xc = blend(fr < F[hi] ? nm.contract : -nm.contract);
        const double fc = obj(xc);
        if (fc < std::min(fr, F[hi])) {
            X[hi] = std::move(xc);
            F[hi] = fc;
            continue;
        }
        for (int i = 0; i <= d; ++i) {
            if (i == lo) continue;
            for (int t = 0; t < d; ++t) X[i][t] = X[lo][t] + nm.shrink * (X[i][t] - X[lo][t]);
            F[i] = obj(X[i]);
        }
    }
    return false;
}

bool partition_preferred(const RingPartition& a, const RingPartition& b) {
    if (a.size() != b.size()) return a.size() < b.size();
    return a < b;
}

} // namespace

OptimizationResult optimize_radii(const RingPartition& l, double P, HarmonicsStore& store,
                                  const NmConfig& nm, std::uint64_t seed) {
    if (l.empty()) throw std::invalid_argument("optimize_radii: empty partition");
    store.set_power_scale(P);
    OptimizationResult res;
    const int K = int(l.size());
    const int k0 = (l[0] == 1) ? 1 : 0;

    if (K == 1 && l[0] == 1) {
        res.spec = build_apsk(l, {0.0}, {0.0});
        res.sep = evaluate_sep(res.spec, store);
        res.evaluations = 1;
        res.converged = true;
        return res;
    }

    RadiiObjective obj{&l, P, &store, K, k0, 0,
                       std::numeric_limits<double>::infinity(), ApskSpec{}};
    if (obj.dims() == 0) {
        const ApskSpec fixed = build_apsk(l, uniform_radii(l, P), std::vector<double>(K, 0.0));
        res.spec = fixed;
        res.sep = evaluate_sep(fixed, store);
        res.evaluations = 1;
        res.converged = true;
        return res;
    }

    Xoshiro256pp rng(seed, 0x4e6d);
    bool best_converged = false;
    for (int s = 0; s < std::max(nm.restarts, 1); ++s) {
        std::vector<double> x0(obj.dims(), 0.0);
        if (s > 0)
            for (double& v : x0) v = nm.jitter * rng.normal();
        const double before = obj.best_f;
        const bool conv = nelder_mead(obj, std::move(x0), nm);
        if (obj.best_f < before || s == 0) best_converged = conv;
        ++res.restarts_used;
    }
    res.spec = obj.best_spec;
    res.sep = obj.best_f;
    res.evaluations = obj.evals;
    res.converged = best_converged;
    if (!std::isfinite(res.sep))
        throw std::runtime_error("optimize_radii: no feasible radius vector found");
    return res;
}

OptimizationResult optimize_partition(int M, double P, HarmonicsStore& store,
                                      bool uniform_only, int max_rings, const NmConfig& nm,
                                      std::uint64_t seed) {
    if (M < 1 || M > 16)
        throw std::invalid_argument("optimize_partition: exhaustive mode needs 1 <= M <= 16");
    store.set_power_scale(P);
    OptimizationResult best;
    best.sep = std::numeric_limits<double>::infinity();
    long long evals = 0;
    for (const RingPartition& part : enumerate_partitions(M, max_rings)) {
        OptimizationResult cand;
        if (uniform_only) {
            cand.spec = (M == 1) ? build_apsk(part, {0.0}, {0.0})
                                 : build_apsk(part, uniform_radii(part, P),
                                              std::vector<double>(part.size(), 0.0));
            cand.sep = evaluate_sep(cand.spec, store);
            cand.evaluations = 1;
            cand.converged = true;
        } else {
            cand = optimize_radii(part, P, store, nm, seed);
        }
        evals += cand.evaluations;
        const bool take = best.spec.l.empty() || cand.sep < best.sep - kTieTol ||
                          (cand.sep <= best.sep + kTieTol &&
                           partition_preferred(part, best.spec.l));
        if (take) best = cand;
    }
    best.evaluations = evals;
    return best;
}

OptimizationResult joint_optimize(int M, double P, HarmonicsStore& store, int max_rings,
                                  const NmConfig& nm, std::uint64_t seed) {
    return optimize_partition(M, P, store, false, max_rings, nm, seed);
}

double qam16_ts_sep(double P, HarmonicsStore& store) {
    store.set_power_scale(P);
    const RingSystem rs = qam16_rings(P);
    const ThresholdSet th = map_thresholds(rs, store.params().sigma2);
    const HarmonicsSet hs = store.views(rs);
    return sep_ts_quadrature(rs, th, hs);
}

std::vector<SweepRow> power_sweep(int M, const ChannelParams& params,
                                  const std::vector<double>& p_dbm, const SweepConfig& cfg) {
    if (p_dbm.empty()) throw std::invalid_argument("power_sweep: empty power list");
    validate(params);
    HarmonicsStore store(params, cfg.harmonics, cfg.seed);
    HarmonicsConfig ref_cfg = cfg.harmonics;
    if (cfg.ref_samples > 0) ref_cfg.n_samples = cfg.ref_samples;
    HarmonicsStore ref_store(params, ref_cfg, SplitMix64(cfg.seed ^ 0x716d5a).next());
    store.set_cache_dir(cfg.cache_dir);
    ref_store.set_cache_dir(cfg.cache_dir);

    std::vector<SweepRow> rows;
    rows.reserve(p_dbm.size());
    for (double pd : p_dbm) {
        const double P = dbm_to_watt(pd);
        store.set_power_scale(P);
        store.set_interpolation(true);
        const OptimizationResult res =
            (cfg.mode == SweepMode::uniform_partition)
                ? optimize_partition(M, P, store, true, cfg.max_rings, cfg.nm, cfg.seed)
                : joint_optimize(M, P, store, cfg.max_rings, cfg.nm, cfg.seed);
        // score the winner on unblended records
        store.set_interpolation(false);
        SweepRow row;
        row.p_dbm = pd;
        row.l = res.spec.l;
        row.r = res.spec.r;
        row.sep = evaluate_sep(res.spec, store);
        row.sep_ref_qam16_ts = qam16_ts_sep(P, ref_store);
        row.sep_ref_awgn_ml = (M == 16) ? qam16_awgn_ml_sep(P, params.sigma2)
                                        : mpsk_awgn_ml_sep(M, P, params.sigma2);
        rows.push_back(std::move(row));
    }
    return rows;
}

std::string to_csv(const std::vector<SweepRow>& rows) {
    std::string out = "P_dBm,l,r,sep,sep_ref_qam16_ts,sep_ref_awgn_ml\n";
    char buf[64];
    for (const SweepRow& row : rows) {
        std::snprintf(buf, sizeof buf, "%.10g", row.p_dbm);
        out += buf;
        out += ',';
        for (std::size_t k = 0; k < row.l.size(); ++k) {
            if (k) out += '-';
            out += std::to_string(row.l[k]);
        }
        out += ",\"";
        for (std::size_t k = 0; k < row.r.size(); ++k) {
            if (k) out += ',';
            std::snprintf(buf, sizeof buf, "%.10g", row.r[k]);
            out += buf;
        }
        out += '"';
        for (double v : {row.sep, row.sep_ref_qam16_ts, row.sep_ref_awgn_ml}) {
            std::snprintf(buf, sizeof buf, ",%.10g", v);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

} // namespace apsk
