#include <cstdint>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "apsk/experiments.hpp"

namespace {

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read config file " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

apsk::RingPartition parse_partition(const std::string& text) {
    apsk::RingPartition l;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t next = text.find('-', pos);
        if (next == std::string::npos) next = text.size();
        l.push_back(std::stoi(text.substr(pos, next - pos)));
        pos = next + 1;
    }
    return l;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"APSK constellation design experiments for the nonlinear optical channel"};

    std::string config_path, experiment, detector, out_dir, partition, cache_dir;
    int M = 0, N = 0, max_rings = 0, threads = 0;
    int harmonic_samples = 0, ref_samples = 0, mc_samples = 0, nm_restarts = 0,
        radial_nodes = 0;
    double L_km = 0, pmin = 0, pmax = 0, pstep = 0;
    std::uint64_t seed = 0;
    bool uniform_only = true;

    app.add_option("--config", config_path, "JSON config file; flags override its fields");
    app.add_option("--experiment", experiment,
                   "scatter | sep_sweep | partition_sweep | joint_sweep | radius_trace | "
                   "labeling_study");
    app.add_option("--M", M, "constellation size");
    app.add_option("--L-km", L_km, "fiber length in km");
    app.add_option("--N", N, "amplifier spans");
    app.add_option("--pmin-dbm", pmin, "first power point, dBm");
    app.add_option("--pmax-dbm", pmax, "last power point, dBm");
    app.add_option("--pstep-db", pstep, "power step, dB");
    app.add_option("--seed", seed, "master RNG seed");
    app.add_option("--out", out_dir, "output directory");
    app.add_option("--detector", detector, "ts (quadrature) or ml (Monte Carlo)");
    app.add_flag("--uniform-only,!--no-uniform-only", uniform_only,
                 "keep uniform radii (no Nelder-Mead)");
    app.add_option("--max-rings", max_rings, "partition search ring cap; 0 = none");
    app.add_option("--threads", threads, "worker threads");
    app.add_option("--l", partition, "ring partition, dash-separated (e.g. 4-4)");
    app.add_option("--harmonic-samples", harmonic_samples, "samples per harmonic record");
    app.add_option("--ref-samples", ref_samples, "samples for reference-curve records");
    app.add_option("--mc-samples", mc_samples, "Monte-Carlo samples per symbol / cloud");
    app.add_option("--nm-restarts", nm_restarts, "Nelder-Mead restarts");
    app.add_option("--radial-nodes", radial_nodes, "Gauss-Legendre nodes per radial panel");
    app.add_option("--cache-dir", cache_dir, "harmonic-record cache directory");

    CLI11_PARSE(app, argc, argv);

    apsk::RunConfig cfg;
    try {
        if (!config_path.empty()) cfg = apsk::config_from_json(slurp(config_path));
        if (app.count("--experiment")) cfg.experiment = experiment;
        if (app.count("--M")) cfg.M = M;
        if (app.count("--L-km")) cfg.L_km = L_km;
        if (app.count("--N")) cfg.N = N;
        if (app.count("--pmin-dbm")) cfg.pmin_dbm = pmin;
        if (app.count("--pmax-dbm")) cfg.pmax_dbm = pmax;
        if (app.count("--pstep-db")) cfg.pstep_db = pstep;
        if (app.count("--seed")) cfg.seed = seed;
        if (app.count("--out")) cfg.out_dir = out_dir;
        if (app.count("--detector")) cfg.detector = detector;
        if (app.count("--uniform-only") || app.count("--no-uniform-only"))
            cfg.uniform_only = uniform_only;
        if (app.count("--max-rings")) cfg.max_rings = max_rings;
        if (app.count("--threads")) cfg.threads = threads;
        if (app.count("--l")) cfg.partition = parse_partition(partition);
        if (app.count("--harmonic-samples")) cfg.harmonic_samples = harmonic_samples;
        if (app.count("--ref-samples")) cfg.ref_samples = ref_samples;
        if (app.count("--mc-samples")) cfg.mc_samples = mc_samples;
        if (app.count("--nm-restarts")) cfg.nm_restarts = nm_restarts;
        if (app.count("--radial-nodes")) cfg.radial_nodes = radial_nodes;
        if (app.count("--cache-dir")) cfg.cache_dir = cache_dir;
        apsk::validate_config(cfg);
    } catch (const std::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    }

    try {
        const apsk::RunOutput out = apsk::run(cfg);
        for (const std::string& f : out.files) std::cout << cfg.out_dir << "/" << f << "\n";
        std::cerr << "done in " << out.wall_seconds << " s\n";
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 3;
    }
}
