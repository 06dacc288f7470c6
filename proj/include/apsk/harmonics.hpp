#pragma once

#include <complex>
#include <cstdint>
#include <memory>
#include <vector>

#include "apsk/channel.hpp"

namespace apsk {

// hard cap on series length; lets evaluation buffers live on the stack
inline constexpr int kMaxHarmonics = 96;

// Tabulated Fourier coefficients C_m(r, r0) of the conditional observation
// PDF in polar form,
//   joint density of (R, theta) = f_R(r)/(2pi) + (1/pi) sum_m Re{C_m(r,r0) e^{jm(theta-theta0)}},
// estimated from channel samples: C_m(r, r0) = f_R(r) E[e^{-jm(theta-theta0)} | R = r].
// Values and shape-preserving cubic slopes are stored per harmonic on one
// shared radius grid. Immutable after construction.
struct PhaseHarmonics {
    double r0 = 0.0;
    ChannelParams params;
    int n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> r_grid;                            // strictly increasing
    std::vector<std::vector<std::complex<double>>> val;    // [harmonic-1][node]
    std::vector<std::vector<std::complex<double>>> slope;  // same layout
    // correction angle -arg C_1 per node, unwrapped so it is continuous in r
    // (it can run past +-pi); branch fixed by the mean nonlinear rotation at r0
    std::vector<double> theta_c;
    std::vector<double> theta_slope;

    int m_count() const { return int(val.size()); }

    // C_m at radius r for all m, zero outside the grid; out must hold m_count()
    void eval_all(double r, std::complex<double>* out) const;
    std::complex<double> eval(double r, int m) const; // m is 1-based
    std::complex<double> eval_c1(double r) const;     // first harmonic only

    // unwrapped correction angle at radius r, held constant past the grid ends
    double correction(double r) const;
};

struct HarmonicsConfig {
    int m_max = 64;           // cap on retained harmonics
    int bins = 200;           // equal-probability radius bins over the bulk
    int n_samples = 400000;
    double tail_energy = 1e-6; // adaptive truncation threshold (fraction)
    // optionally drop harmonics whose energy is below this multiple of the
    // sampling-noise floor. Off by default: the cut tends to land where the
    // true coefficients still matter, and the resulting partial-sum ringing
    // biases sector probabilities far more than the noise the cut removes.
    double noise_floor = 0.0;
    int min_bin_count = 100;
    // extra bin edges are added by halving the covered probability on both
    // flanks down to this level, so the correction angle stays estimable out
    // where the ring-decision thresholds sit
    double tail_quantile = 1e-5;
    std::vector<double> r_grid; // optional output grid; empty = bin means
};

// Monte-Carlo estimation of the harmonic table for input amplitude r0.
// Work is split over a fixed number of internal shards with derived rng
// streams, so the result depends on the seed but not on n_threads.
PhaseHarmonics estimate_harmonics(double r0, const ChannelParams& params,
                                  const HarmonicsConfig& cfg, std::uint64_t seed,
                                  int n_threads = 1);

PhaseHarmonics estimate_harmonics(double r0, const ChannelParams& params, int m_max,
                                  const std::vector<double>& r_grid, int n_samples,
                                  std::uint64_t seed);

// Non-owning evaluation handle; either one record or a linear blend of two
// neighboring records (used when amplitudes are looked up on a lazy grid).
struct HarmonicsView {
    const PhaseHarmonics* a = nullptr;
    const PhaseHarmonics* b = nullptr;
    double wb = 0.0;   // blend weight of b
    double r0 = 0.0;   // amplitude the view stands for

    HarmonicsView() = default;
    HarmonicsView(const PhaseHarmonics& rec) : a(&rec), r0(rec.r0) {}

    int m_count() const;
    void eval_all(double r, std::complex<double>* out) const;
    std::complex<double> eval_c1(double r) const;
    double correction(double r) const;
    const ChannelParams& channel() const { return a->params; }
};

// one view per ring, index-aligned with the ring list it was built for
struct HarmonicsSet {
    std::vector<HarmonicsView> rings;
    std::vector<std::shared_ptr<const PhaseHarmonics>> owned; // keep-alive
};

struct PdfEval {
    double value = 0.0; // clamped at 0
    double raw = 0.0;   // before clamping (series truncation can go negative)
};

// joint polar density at radius r, phase offset dtheta from the transmitted
// phase; raw series value, no clamping
double polar_density(const HarmonicsView& h, double sigma2, double r, double dtheta);

// conditional density of y given x = |view r0| e^{j arg x}, per unit area
PdfEval pdf_y(std::complex<double> y, std::complex<double> x, const HarmonicsView& h,
              double sigma2);

// versioned JSON round-trip for cached records; interpolation slopes are
// rebuilt on load, and loading rejects records of an unknown version
std::string to_json_string(const PhaseHarmonics& h);
PhaseHarmonics harmonics_from_json(const std::string& text);

} // namespace apsk
