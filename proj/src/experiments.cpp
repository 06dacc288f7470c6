#include "apsk/experiments.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>
#include <stdexcept>

#include <json.hpp>

#include "apsk/labeling.hpp"
#include "apsk/rng.hpp"

namespace apsk {

namespace {

using nlohmann::json;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.10g", v);
    return buf;
}

std::string dashed(const RingPartition& l) {
    std::string s;
    for (std::size_t k = 0; k < l.size(); ++k) {
        if (k) s += '-';
        s += std::to_string(l[k]);
    }
    return s;
}

std::string quoted_list(const std::vector<double>& v) {
    std::string s = "\"";
    for (std::size_t k = 0; k < v.size(); ++k) {
        if (k) s += ',';
        s += fmt(v[k]);
    }
    s += '"';
    return s;
}

RingPartition partition_from_string(const std::string& text) {
    RingPartition l;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find('-', pos);
        if (next == std::string::npos) next = text.size();
        l.push_back(std::stoi(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return l;
}

const std::set<std::string> kExperiments = {
    "scatter",      "sep_sweep",    "partition_sweep",
    "joint_sweep",  "radius_trace", "labeling_study"};

void write_file(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open " + path + " for writing");
    out << body;
    if (!out) throw std::runtime_error("write failed for " + path);
}

struct ExperimentContext {
    const RunConfig* cfg;
    ChannelParams params;
    std::vector<double> grid;
    std::vector<std::string> files; // relative to out_dir
    std::string out_dir;

    void emit(const std::string& name, const std::string& body) {
        write_file(out_dir + "/" + name, body);
        files.push_back(name);
    }
};

HarmonicsConfig harmonics_config(const RunConfig& cfg) {
    HarmonicsConfig h;
    h.n_samples = cfg.harmonic_samples;
    return h;
}

void run_scatter(ExperimentContext& ctx) {
    const RunConfig& cfg = *ctx.cfg;
    const long long n = cfg.mc_samples;
    for (std::size_t pi = 0; pi < ctx.grid.size(); ++pi) {
        const double P = dbm_to_watt(ctx.grid[pi]);
        const RingSystem rs = qam16_rings(P);
        Xoshiro256pp rng(cfg.seed, pi + 1);
        std::string body = "x_re,x_im,y_re,y_im,phi_nl\n";
        for (long long t = 0; t < n; ++t) {
            const std::complex<double> x = rs.symbol(int(t % 16));
            const ChannelSample smp = sample_channel(x, ctx.params, rng);
            body += fmt(x.real()) + ',' + fmt(x.imag()) + ',' + fmt(smp.y.real()) + ',' +
                    fmt(smp.y.imag()) + ',' + fmt(smp.phi_nl) + '\n';
        }
        ctx.emit("scatter_" + fmt(ctx.grid[pi]) + "dBm.csv", body);
    }
}

void run_sep_sweep(ExperimentContext& ctx) {
    const RunConfig& cfg = *ctx.cfg;
    HarmonicsStore store(ctx.params, harmonics_config(cfg), cfg.seed);
    store.set_threads(cfg.threads);
    store.set_cache_dir(cfg.cache_dir);
    QuadratureConfig qcfg;
    qcfg.radial_nodes = cfg.radial_nodes;
    const auto parts = enumerate_partitions(cfg.M, cfg.max_rings);
    std::string body = "P_dBm,l,sep\n";
    for (double pd : ctx.grid) {
        const double P = dbm_to_watt(pd);
        store.set_power_scale(P);
        for (const RingPartition& l : parts) {
            const ApskSpec spec = (cfg.M == 1)
                                      ? build_apsk(l, {0.0}, {0.0})
                                      : build_apsk(l, uniform_radii(l, P),
                                                   std::vector<double>(l.size(), 0.0));
            double s;
            if (cfg.detector == "ts") {
                s = evaluate_sep(spec, store, qcfg);
            } else {
                const RingSystem rs = ring_system(spec);
                const ThresholdSet th = map_thresholds(rs, ctx.params.sigma2);
                const HarmonicsSet hs = store.views_all(rs);
                s = sep(transition_matrix_mc(rs, DetectorKind::max_likelihood, hs, th,
                                             ctx.params, cfg.mc_samples, cfg.seed,
                                             cfg.threads));
            }
            body += fmt(pd) + ',' + dashed(l) + ',' + fmt(s) + '\n';
        }
    }
    ctx.emit("sep_sweep.csv", body);
}

void run_power_sweep(ExperimentContext& ctx, SweepMode mode, const std::string& name) {
    const RunConfig& cfg = *ctx.cfg;
    SweepConfig sc;
    sc.mode = mode;
    sc.max_rings = cfg.max_rings;
    sc.nm.restarts = cfg.nm_restarts;
    sc.harmonics = harmonics_config(cfg);
    sc.seed = cfg.seed;
    sc.ref_samples = cfg.ref_samples;
    sc.cache_dir = cfg.cache_dir;
    const auto rows = power_sweep(cfg.M, ctx.params, ctx.grid, sc);
    ctx.emit(name, to_csv(rows));
}

void run_radius_trace(ExperimentContext& ctx) {
    const RunConfig& cfg = *ctx.cfg;
    HarmonicsStore store(ctx.params, harmonics_config(cfg), cfg.seed);
    store.set_threads(cfg.threads);
    store.set_cache_dir(cfg.cache_dir);
    NmConfig nm;
    nm.restarts = cfg.nm_restarts;
    std::string body = "P_dBm,r,sep,converged,evaluations\n";
    for (double pd : ctx.grid) {
        const double P = dbm_to_watt(pd);
        store.set_power_scale(P);
        store.set_interpolation(true);
        const OptimizationResult res = optimize_radii(cfg.partition, P, store, nm, cfg.seed);
        store.set_interpolation(false);
        const double sep_exact = evaluate_sep(res.spec, store);
        body += fmt(pd) + ',' + quoted_list(res.spec.r) + ',' + fmt(sep_exact) + ',' +
                (res.converged ? '1' : '0') + ',' + std::to_string(res.evaluations) + '\n';
    }
    ctx.emit("radius_trace.csv", body);
}

void run_labeling_study(ExperimentContext& ctx) {
    const RunConfig& cfg = *ctx.cfg;
    HarmonicsStore store(ctx.params, harmonics_config(cfg), cfg.seed);
    store.set_threads(cfg.threads);
    store.set_cache_dir(cfg.cache_dir);
    NmConfig nm;
    nm.restarts = cfg.nm_restarts;
    QuadratureConfig qcfg;
    qcfg.radial_nodes = cfg.radial_nodes;
    std::string body = "P_dBm,phi,sep,sep_over_m,bep_proposed,bep_gray0\n";
    for (double pd : ctx.grid) {
        const double P = dbm_to_watt(pd);
        store.set_power_scale(P);
        std::vector<double> radii;
        if (cfg.uniform_only) {
            radii = uniform_radii(cfg.partition, P);
        } else {
            store.set_interpolation(true);
            radii = optimize_radii(cfg.partition, P, store, nm, cfg.seed).spec.r;
            store.set_interpolation(false);
        }
        const std::vector<double> zero(cfg.partition.size(), 0.0);
        const ApskSpec spec0 = build_apsk(cfg.partition, radii, zero);
        const RingSystem rs0 = ring_system(spec0);
        const ThresholdSet th = map_thresholds(rs0, ctx.params.sigma2);
        const HarmonicsSet hs = store.views(rs0);
        const std::vector<double> phi = proposed_phase_offsets(spec0, th, hs);
        const ApskSpec spec_prop = build_apsk(cfg.partition, radii, phi);
        const Labeling lab = gray_rectangular(spec0);
        const TransitionMatrix t0 = transition_matrix_ts(rs0, th, hs, qcfg);
        const TransitionMatrix tp =
            transition_matrix_ts(ring_system(spec_prop), th, hs, qcfg);
        const double s = sep(tp);
        body += fmt(pd) + ',' + quoted_list(phi) + ',' + fmt(s) + ',' +
                fmt(s / double(lab.m)) + ',' + fmt(bep(tp, lab)) + ',' + fmt(bep(t0, lab)) +
                '\n';
    }
    ctx.emit("labeling_study.csv", body);
}

} // namespace

std::vector<double> power_grid(const RunConfig& cfg) {
    std::vector<double> g;
    const int n = int(std::floor((cfg.pmax_dbm - cfg.pmin_dbm) / cfg.pstep_db + 1e-9)) + 1;
    for (int i = 0; i < n; ++i) g.push_back(cfg.pmin_dbm + i * cfg.pstep_db);
    return g;
}

void validate_config(const RunConfig& cfg) {
    if (!kExperiments.count(cfg.experiment))
        throw std::invalid_argument("unknown experiment '" + cfg.experiment + "'");
    if (!(cfg.pstep_db > 0.0) || cfg.pmax_dbm < cfg.pmin_dbm)
        throw std::invalid_argument("power grid is empty or inverted");
    if (!(cfg.L_km > 0.0)) throw std::invalid_argument("fiber length must be positive");
    if (cfg.N < 1) throw std::invalid_argument("span count must be positive");
    if (cfg.threads < 1) throw std::invalid_argument("threads must be positive");
    if (cfg.harmonic_samples < 100000)
        throw std::invalid_argument("harmonic_samples below the estimator minimum (1e5)");
    if (cfg.detector != "ts" && cfg.detector != "ml")
        throw std::invalid_argument("detector must be ts or ml");
    if (cfg.experiment == "sep_sweep" || cfg.experiment == "partition_sweep" ||
        cfg.experiment == "joint_sweep") {
        if (cfg.M != 2 && cfg.M != 4 && cfg.M != 8 && cfg.M != 16)
            throw std::invalid_argument("optimization experiments need M in {2,4,8,16}");
    }
    if (cfg.experiment == "radius_trace" || cfg.experiment == "labeling_study") {
        if (cfg.partition.empty())
            throw std::invalid_argument(cfg.experiment + " needs a ring partition (--l)");
        for (int lk : cfg.partition)
            if (lk < 1) throw std::invalid_argument("ring sizes must be positive");
    }
    if (cfg.experiment == "labeling_study") {
        const int K = int(cfg.partition.size());
        if (K < 2) throw std::invalid_argument("labeling_study needs at least two rings");
        for (int lk : cfg.partition)
            if (lk != cfg.partition[0] || lk < 2)
                throw std::invalid_argument(
                    "labeling_study needs equal ring sizes of at least 2");
    }
    if (cfg.detector == "ml" && cfg.mc_samples < 10000)
        throw std::invalid_argument("ml detector needs mc_samples >= 1e4");
}

RunConfig config_from_json(const std::string& text) {
    const json j = json::parse(text);
    RunConfig cfg;
    for (const auto& [key, value] : j.items()) {
        if (key == "experiment") cfg.experiment = value.get<std::string>();
        else if (key == "M") cfg.M = value.get<int>();
        else if (key == "L_km") cfg.L_km = value.get<double>();
        else if (key == "N") cfg.N = value.get<int>();
        else if (key == "pmin_dbm") cfg.pmin_dbm = value.get<double>();
        else if (key == "pmax_dbm") cfg.pmax_dbm = value.get<double>();
        else if (key == "pstep_db") cfg.pstep_db = value.get<double>();
        else if (key == "seed") cfg.seed = value.get<std::uint64_t>();
        else if (key == "out_dir") cfg.out_dir = value.get<std::string>();
        else if (key == "detector") cfg.detector = value.get<std::string>();
        else if (key == "uniform_only") cfg.uniform_only = value.get<bool>();
        else if (key == "max_rings") cfg.max_rings = value.get<int>();
        else if (key == "threads") cfg.threads = value.get<int>();
        else if (key == "partition") {
            if (value.is_string()) cfg.partition = partition_from_string(value.get<std::string>());
            else cfg.partition = value.get<RingPartition>();
        }
        else if (key == "harmonic_samples") cfg.harmonic_samples = value.get<int>();
        else if (key == "ref_samples") cfg.ref_samples = value.get<int>();
        else if (key == "mc_samples") cfg.mc_samples = value.get<int>();
        else if (key == "nm_restarts") cfg.nm_restarts = value.get<int>();
        else if (key == "radial_nodes") cfg.radial_nodes = value.get<int>();
        else if (key == "cache_dir") cfg.cache_dir = value.get<std::string>();
        else throw std::invalid_argument("unknown config key '" + key + "'");
    }
    return cfg;
}

std::string to_json_string(const RunConfig& cfg) {
    json j;
    j["experiment"] = cfg.experiment;
    j["M"] = cfg.M;
    j["L_km"] = cfg.L_km;
    j["N"] = cfg.N;
    j["pmin_dbm"] = cfg.pmin_dbm;
    j["pmax_dbm"] = cfg.pmax_dbm;
    j["pstep_db"] = cfg.pstep_db;
    j["seed"] = cfg.seed;
    j["out_dir"] = cfg.out_dir;
    j["detector"] = cfg.detector;
    j["uniform_only"] = cfg.uniform_only;
    j["max_rings"] = cfg.max_rings;
    j["threads"] = cfg.threads;
    j["partition"] = cfg.partition;
    j["harmonic_samples"] = cfg.harmonic_samples;
    j["ref_samples"] = cfg.ref_samples;
    j["mc_samples"] = cfg.mc_samples;
    j["nm_restarts"] = cfg.nm_restarts;
    j["radial_nodes"] = cfg.radial_nodes;
    j["cache_dir"] = cfg.cache_dir;
    return j.dump(2);
}

RunOutput run(const RunConfig& cfg) {
    validate_config(cfg);
    const auto t0 = std::chrono::steady_clock::now();

    ExperimentContext ctx;
    ctx.cfg = &cfg;
    ctx.params = channel_params(cfg.L_km, cfg.N);
    ctx.grid = power_grid(cfg);
    ctx.out_dir = cfg.out_dir.empty() ? "." : cfg.out_dir;
    std::filesystem::create_directories(ctx.out_dir);

    std::string error;
    try {
        if (cfg.experiment == "scatter") run_scatter(ctx);
        else if (cfg.experiment == "sep_sweep") run_sep_sweep(ctx);
        else if (cfg.experiment == "partition_sweep")
            run_power_sweep(ctx, SweepMode::uniform_partition, "partition_sweep.csv");
        else if (cfg.experiment == "joint_sweep")
            run_power_sweep(ctx, SweepMode::joint, "joint_sweep.csv");
        else if (cfg.experiment == "radius_trace") run_radius_trace(ctx);
        else if (cfg.experiment == "labeling_study") run_labeling_study(ctx);
    } catch (const std::exception& e) {
        error = e.what();
    }

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    json manifest;
    manifest["schema_version"] = 1;
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = json::parse(to_json_string(cfg));
    manifest["seed"] = cfg.seed;
    manifest["wall_seconds"] = wall;
    manifest["files"] = ctx.files;
    manifest["status"] = error.empty() ? "ok" : "error";
    if (!error.empty()) manifest["error"] = error;
    write_file(ctx.out_dir + "/manifest.json", manifest.dump(2) + "\n");
    if (!error.empty()) throw std::runtime_error(error);

    RunOutput out;
    out.files = ctx.files;
    out.files.push_back("manifest.json");
    out.wall_seconds = wall;
    return out;
}

} // namespace apsk
