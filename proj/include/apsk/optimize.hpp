#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "apsk/harmonics.hpp"
#include "apsk/metrics.hpp"

namespace apsk {

// Lazily filled cache of harmonic tables for one channel setting. Amplitudes
// are quantized to a fraction of sqrt(P) so repeated objective evaluations
// with nearly identical radii share records. In interpolating mode requests
// are instead served by blending the two nearest records of a fixed
// geometric amplitude grid; that grid is power independent, so one sweep's
// records carry over to the next power step. With a cache directory set,
// records are persisted as versioned JSON keyed by amplitude, channel,
// sample count and seed. Not thread safe; one store per worker.
class HarmonicsStore {
public:
    HarmonicsStore(const ChannelParams& params, const HarmonicsConfig& cfg,
                   std::uint64_t seed);

    const ChannelParams& params() const { return params_; }

    // amplitude quantum tracks sqrt(P); changing the scale drops the
    // exact-mode records (grid records are unaffected)
    void set_power_scale(double P);
    void set_interpolation(bool on) { interpolate_ = on; }
    void set_threads(int n) { threads_ = n; }
    void set_cache_dir(const std::string& dir) { cache_dir_ = dir; }

    // valid until the next power-scale change
    HarmonicsView view(double r0);
    // views for every ring holding at least two points; singleton rings get
    // empty slots (their statistics never enter the two-stage quadrature).
    // The returned set owns its records and outlives cache clears.
    HarmonicsSet views(const RingSystem& rings);
    HarmonicsSet views(const ApskSpec& spec);
    // views for every ring, as maximum-likelihood detection needs them
    HarmonicsSet views_all(const RingSystem& rings);

    std::size_t record_count() const { return cells_.size() + grid_cells_.size(); }
    long long estimates_done() const { return estimates_; }

private:
    HarmonicsView view_impl(double r0, HarmonicsSet* keep);
    std::shared_ptr<const PhaseHarmonics> record_at(long long key);
    std::shared_ptr<const PhaseHarmonics> grid_record_at(long long expo);
    std::shared_ptr<const PhaseHarmonics> materialize(double r0, std::uint64_t rec_seed);

    ChannelParams params_;
    HarmonicsConfig cfg_;
    std::uint64_t seed_;
    double quantum_ = 0.0; // exact-mode amplitude step
    bool interpolate_ = false;
    int threads_ = 1;
    long long estimates_ = 0;
    std::string cache_dir_;
    std::map<long long, std::shared_ptr<const PhaseHarmonics>> cells_;      // exact
    std::map<long long, std::shared_ptr<const PhaseHarmonics>> grid_cells_; // geometric
};

struct NmConfig {
    double reflect = 1.0;
    double expand = 2.0;
    double contract = 0.5;
    double shrink = 0.5;
    double spread_tol = 1e-4; // relative SEP spread across the simplex
    int max_iters = 400;
    int restarts = 8;         // including the uniform-radius start
    double jitter = 0.35;     // log-gap perturbation of the other starts
    double step = 0.3;        // initial simplex edge, log-gap units
};

struct OptimizationResult {
    ApskSpec spec;
    double sep = 0.0;
    long long evaluations = 0;
    bool converged = false;
    int restarts_used = 0;
};

// SEP of one spec under two-stage detection, records supplied by the store
double evaluate_sep(const ApskSpec& spec, HarmonicsStore& store,
                    const QuadratureConfig& qcfg = {});

// Nelder-Mead over ring radii at fixed partition and power. Radii are
// parameterized by log gaps with the first gap pinned, and every proposal is
// rescaled onto the power constraint, so the search is unconstrained in
// K-1 dimensions (K-2 when ring 1 is the origin point).
OptimizationResult optimize_radii(const RingPartition& l, double P, HarmonicsStore& store,
                                  const NmConfig& nm = {}, std::uint64_t seed = 1);

// Exhaustive scan of ring partitions (compositions of M, innermost first).
// uniform_only keeps radii uniform; otherwise each partition gets a radius
// optimization. Ties within 1e-8 go to fewer rings, then lexicographically
// smaller l.
OptimizationResult optimize_partition(int M, double P, HarmonicsStore& store,
                                      bool uniform_only = true, int max_rings = 0,
                                      const NmConfig& nm = {}, std::uint64_t seed = 1);

OptimizationResult joint_optimize(int M, double P, HarmonicsStore& store, int max_rings = 0,
                                  const NmConfig& nm = {}, std::uint64_t seed = 1);

enum class SweepMode { uniform_partition, joint };

struct SweepRow {
    double p_dbm = 0.0;
    RingPartition l;
    std::vector<double> r;
    double sep = 0.0;
    double sep_ref_qam16_ts = 0.0;
    double sep_ref_awgn_ml = 0.0;
};

struct SweepConfig {
    SweepMode mode = SweepMode::uniform_partition;
    int max_rings = 0;
    NmConfig nm;
    HarmonicsConfig harmonics;
    std::uint64_t seed = 1;
    // n_samples for the reference 16-QAM records; 0 = same as harmonics
    int ref_samples = 0;
    std::string cache_dir; // harmonic-record cache; empty = off
};

// One row per power point: the winning constellation, its SEP, 16-QAM under
// two-stage detection at the same power, and the matched AWGN-ML baseline
// (16-QAM for M = 16, M-PSK otherwise).
std::vector<SweepRow> power_sweep(int M, const ChannelParams& params,
                                  const std::vector<double>& p_dbm, const SweepConfig& cfg);

// 16-QAM under the two-stage detector; the workhorse reference curve
double qam16_ts_sep(double P, HarmonicsStore& store);

std::string to_csv(const std::vector<SweepRow>& rows);

} // namespace apsk
