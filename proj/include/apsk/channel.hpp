#pragma once

#include <complex>
#include <string>

#include "apsk/rng.hpp"

namespace apsk {

// Physical setup of the zero-dispersion NLPN channel. sigma2 and sigma0_sq
// are derived from the other fields; use channel_params() to build a
// consistent instance.
struct ChannelParams {
    double gamma = 1.2;        // nonlinearity, 1/(W km)
    double L = 0.0;            // fiber length, km
    int N = 100;               // amplifier spans
    double n_sp = 1.41;        // spontaneous-emission factor
    double h = 6.626e-34;      // Planck constant, J s
    double nu = 1.936e14;      // carrier frequency, Hz
    double alpha = 0.0578;     // attenuation, 1/km
    double delta_nu = 42.7e9;  // noise bandwidth, Hz
    double sigma2 = 0.0;       // total additive noise variance, W
    double sigma0_sq = 0.0;    // per-span per-dimension variance, W

    double gamma_l() const { return gamma * L; }
};

// sigma2 = 2 N0 dnu L with N0 = n_sp h nu alpha
double noise_variance(const ChannelParams& p);

// fills in the derived variances
ChannelParams channel_params(double L_km, int N = 100, double gamma = 1.2);

// throws if derived fields are stale or any constant is out of range
void validate(const ChannelParams& p);

struct ChannelSample {
    std::complex<double> y;
    double phi_nl; // realized nonlinear phase, radians
};

// One pass through the discrete channel: N partial noise sums, accumulated
// Kerr phase, final rotation y = (x + Z) e^{-j Phi}.
ChannelSample sample_channel(std::complex<double> x, const ChannelParams& p, Xoshiro256pp& rng);

// E[Phi] = gamma L (|x|^2 + sigma0^2 (N+1))
double mean_nlpn(std::complex<double> x, const ChannelParams& p);

double dbm_to_watt(double dbm);
double watt_to_dbm(double watt);

std::string to_json_string(const ChannelParams& p);

} // namespace apsk
