#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apsk/optimize.hpp"

namespace apsk {

inline constexpr const char* kToolVersion = "0.1.0";

// One experiment invocation. Built from a JSON file and/or flag overrides;
// every field has a workable default so minimal configs stay short.
struct RunConfig {
    std::string experiment = "sep_sweep"; // scatter | sep_sweep | partition_sweep |
                                          // joint_sweep | radius_trace | labeling_study
    int M = 4;
    double L_km = 7000.0;
    int N = 100;
    double pmin_dbm = -15.0;
    double pmax_dbm = 5.0;
    double pstep_db = 0.5;
    std::uint64_t seed = 1;
    std::string out_dir = "out";
    std::string detector = "ts"; // ts (quadrature) | ml (Monte Carlo)
    bool uniform_only = true;
    int max_rings = 0;
    int threads = 1;
    RingPartition partition;     // radius_trace / labeling_study subject
    int harmonic_samples = 200000;
    int ref_samples = 0;         // reference-curve records; 0 = harmonic_samples
    int mc_samples = 100000;     // per symbol (ml detector), or per scatter cloud
    int nm_restarts = 8;
    int radial_nodes = 64;
    std::string cache_dir;       // harmonic-record cache; empty = off
};

RunConfig config_from_json(const std::string& text);
std::string to_json_string(const RunConfig& cfg);

// throws std::invalid_argument on bad settings; exit code 2 territory
void validate_config(const RunConfig& cfg);

struct RunOutput {
    std::vector<std::string> files; // paths written, manifest last
    double wall_seconds = 0.0;
};

// Executes the experiment and writes its CSV outputs plus manifest.json
// into cfg.out_dir. The manifest is written even when the experiment body
// fails; the failure is then rethrown.
RunOutput run(const RunConfig& cfg);

std::vector<double> power_grid(const RunConfig& cfg);

} // namespace apsk
