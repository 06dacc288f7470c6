#pragma once

#include <complex>
#include <vector>

#include "apsk/constellation.hpp"
#include "apsk/harmonics.hpp"

namespace apsk {

// Generalized ring geometry: each ring is a radius plus a sorted list of
// absolute symbol phases. ApskSpec maps onto this directly; the 16-QAM
// reference uses it with unevenly spaced phases on the middle ring.
struct Ring {
    double radius;
    std::vector<double> phases;
};

struct RingSystem {
    std::vector<Ring> rings;

    int ring_count() const { return int(rings.size()); }
    int size() const;
    int ring_begin(int k) const;
    std::complex<double> symbol(int i) const;
    int ring_of(int i) const;
};

RingSystem ring_system(const ApskSpec& spec);

// Radius decision boundaries: mu[0] = 0, mu[K] = +inf, interior thresholds
// between consecutive ring radii. midpoint_fallback[k] marks an interior
// threshold where the MAP equation had no bracketed sign change and the
// interval midpoint was used instead.
struct ThresholdSet {
    std::vector<double> mu;
    std::vector<char> midpoint_fallback;

    int ring_index(double R) const; // half-open cells [mu_k, mu_{k+1})
};

// Interior mu_k solves l_k f(mu|r_k) = l_{k+1} f(mu|r_{k+1}) with ring priors
// proportional to point counts; bisection on the log-density difference.
ThresholdSet map_thresholds(const RingSystem& rings, double sigma2);
ThresholdSet map_thresholds(const ApskSpec& spec, double sigma2);

// theta_c(R, ring) = -arg C_1(R, r_ring); R clamped to the populated part of
// the harmonic grid
double correction_angle(double R, const HarmonicsView& h);

// amplitude-dependent phase rotation of the two-stage detector and its
// inverse; both preserve |y|, so they are bijections of the plane
std::complex<double> postcompensate(std::complex<double> y, const HarmonicsSet& hs,
                                    const ThresholdSet& th);
std::complex<double> postcompensate_inverse(std::complex<double> y_tilde,
                                            const HarmonicsSet& hs, const ThresholdSet& th);

// ring decision on |y|, postcompensation, nearest phase inside the ring;
// ties (exact sector boundary) go to the lower symbol index
int ts_detect(std::complex<double> y, const RingSystem& rings, const HarmonicsSet& hs,
              const ThresholdSet& th);
int ts_detect(std::complex<double> y, const ApskSpec& spec, const HarmonicsSet& hs,
              const ThresholdSet& th);

// argmax of the conditional density over symbols; ties to the lowest index
int ml_detect(std::complex<double> y, const RingSystem& rings, const HarmonicsSet& hs);
int ml_detect(std::complex<double> y, const ApskSpec& spec, const HarmonicsSet& hs);

// density of the postcompensated observation: pdf_y evaluated at the
// preimage of y_tilde; discontinuous in radius at the thresholds
PdfEval pdf_y_tilde(std::complex<double> y_tilde, std::complex<double> x,
                    const RingSystem& rings, const HarmonicsSet& hs,
                    const ThresholdSet& th, double sigma2);

} // namespace apsk
