#include "apsk/channel.hpp"

#include <cmath>
#include <stdexcept>

#include <json.hpp>

namespace apsk {

double noise_variance(const ChannelParams& p) {
    const double n0 = p.n_sp * p.h * p.nu * p.alpha;
    return 2.0 * n0 * p.delta_nu * p.L;
}

ChannelParams channel_params(double L_km, int N, double gamma) {
    if (L_km < 0.0) throw std::invalid_argument("channel_params: negative fiber length");
    if (N < 1) throw std::invalid_argument("channel_params: need at least one span");
    ChannelParams p;
    p.gamma = gamma;
    p.L = L_km;
    p.N = N;
    p.sigma2 = noise_variance(p);
    p.sigma0_sq = p.sigma2 / (2.0 * N);
    return p;
}

void validate(const ChannelParams& p) {
    if (p.N < 1) throw std::invalid_argument("ChannelParams: need at least one span");
    if (!(p.n_sp > 0.0 && p.h > 0.0 && p.nu > 0.0 && p.alpha > 0.0 && p.delta_nu > 0.0))
        throw std::invalid_argument("ChannelParams: physical constants must be positive");
    if (p.L < 0.0 || p.gamma < 0.0)
        throw std::invalid_argument("ChannelParams: length and nonlinearity must be nonnegative");
    const double s2 = noise_variance(p);
    if (std::abs(p.sigma2 - s2) > 1e-12 * std::max(1e-300, s2))
        throw std::invalid_argument("ChannelParams: sigma2 is stale");
    if (std::abs(p.sigma0_sq * 2.0 * p.N - p.sigma2) > 1e-12 * std::max(1e-300, s2))
        throw std::invalid_argument("ChannelParams: sigma0_sq is stale");
}

ChannelSample sample_channel(std::complex<double> x, const ChannelParams& p, Xoshiro256pp& rng) {
    const double s0 = std::sqrt(p.sigma0_sq);
    double wr = x.real(), wi = x.imag();
    double acc = 0.0;
    for (int i = 0; i < p.N; ++i) {
        wr += s0 * rng.normal();
        wi += s0 * rng.normal();
        acc += wr * wr + wi * wi;
    }
    const double phi = p.gamma * p.L / double(p.N) * acc;
    const std::complex<double> rot = std::polar(1.0, -phi);
    return {std::complex<double>(wr, wi) * rot, phi};
}

double mean_nlpn(std::complex<double> x, const ChannelParams& p) {
    return p.gamma_l() * (std::norm(x) + p.sigma0_sq * double(p.N + 1));
}

double dbm_to_watt(double dbm) {
    return std::pow(10.0, (dbm - 30.0) / 10.0);
}

double watt_to_dbm(double watt) {
    return 10.0 * std::log10(watt) + 30.0;
}

std::string to_json_string(const ChannelParams& p) {
    nlohmann::json j;
    j["gamma"] = p.gamma;
    j["L_km"] = p.L;
    j["N"] = p.N;
    j["n_sp"] = p.n_sp;
    j["h"] = p.h;
    j["nu"] = p.nu;
    j["alpha"] = p.alpha;
    j["delta_nu"] = p.delta_nu;
    j["sigma2"] = p.sigma2;
    j["sigma0_sq"] = p.sigma0_sq;
    return j.dump(2);
}

} // namespace apsk
