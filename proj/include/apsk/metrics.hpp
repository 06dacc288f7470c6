#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apsk/detection.hpp"
#include "apsk/labeling.hpp"

namespace apsk {

enum class DetectorKind { two_stage, max_likelihood };

struct TransitionMatrix {
    enum class Method { quadrature, monte_carlo };

    int M = 0;
    std::vector<double> p; // row-major, p[i*M + j] = P(decide j | sent i)
    Method method = Method::quadrature;
    long long sample_count = 0; // per symbol, Monte-Carlo only

    double at(int i, int j) const { return p[std::size_t(i) * M + j]; }
    double row_sum(int i) const;
};

struct QuadratureConfig {
    int radial_nodes = 64;      // Gauss-Legendre nodes per radial panel
    double tail_sigmas = 8.0;   // truncation past max(r_K, mu_{K-1}), in sigma/sqrt2
    double split_sigmas = 6.0;  // panel cuts at ring radii +- this, in sigma/sqrt2
    double skip_sigmas = 9.0;   // drop panels farther than this from the source ring
    double row_sum_tol = 1e-4;  // refuse results whose rows deviate more
};

// Transition probabilities of the two-stage detector by radial quadrature.
// The decision cells are annular sectors, so the phase integral of the
// harmonic series is evaluated in closed form per sector; only the radial
// dimension is done numerically. Harmonic views are required for every ring.
TransitionMatrix transition_matrix_ts(const RingSystem& rings, const ThresholdSet& th,
                                      const HarmonicsSet& hs,
                                      const QuadratureConfig& cfg = {});
TransitionMatrix transition_matrix_ts(const ApskSpec& spec, const ThresholdSet& th,
                                      const HarmonicsSet& hs,
                                      const QuadratureConfig& cfg = {});

// SEP under the two-stage detector without forming the full matrix. Views
// are needed only for rings holding at least two points; single-point rings
// reduce to Marcum Q differences.
double sep_ts_quadrature(const RingSystem& rings, const ThresholdSet& th,
                         const HarmonicsSet& hs, const QuadratureConfig& cfg = {});

// empirical transition matrix; n_samples channel draws per symbol, split
// over fixed shards so the result is independent of thread count
TransitionMatrix transition_matrix_mc(const RingSystem& rings, DetectorKind kind,
                                      const HarmonicsSet& hs, const ThresholdSet& th,
                                      const ChannelParams& params, long long n_samples,
                                      std::uint64_t seed, int n_threads = 1);

double sep(const TransitionMatrix& T);

// P_k^(e) = 1 - (Q1(rho_k, rho~_{k-1}) - Q1(rho_k, rho~_k)); k is 0-based
double first_stage_error(int k, const RingSystem& rings, const ThresholdSet& th,
                         double sigma2);

double bep(const TransitionMatrix& T, const Labeling& lab);

// 16-QAM as three rings (4/8/4 points) at amplitudes sqrt(P/10)*{sqrt2,
// sqrt10, sqrt18}; the middle ring's phases are not equally spaced
RingSystem qam16_rings(double P);

// closed-form ML symbol error probabilities on the linear AWGN channel
double qam16_awgn_ml_sep(double P, double sigma2);
double mpsk_awgn_ml_sep(int M, double P, double sigma2);

struct BinomialInterval {
    double lo = 0.0, hi = 0.0;
};

// Wilson score interval (default 95%)
BinomialInterval wilson_interval(long long successes, long long trials, double z = 1.959964);

std::string to_csv(const TransitionMatrix& T);

} // namespace apsk
