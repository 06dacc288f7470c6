#include "apsk/constellation.hpp"

#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace apsk {

int ApskSpec::ring_of(int i) const {
    int k = 0, acc = 0;
    while (k < ring_count() && i >= acc + l[k]) acc += l[k++];
    if (k == ring_count()) throw std::out_of_range("ApskSpec::ring_of: bad symbol index");
    return k;
}

int ApskSpec::phase_index_of(int i) const {
    const int k = ring_of(i);
    return i - ring_begin(k);
}

int ApskSpec::ring_begin(int k) const {
    return std::accumulate(l.begin(), l.begin() + k, 0);
}

ApskSpec build_apsk(const RingPartition& l, const std::vector<double>& r,
                    const std::vector<double>& phi, double tolerance) {
    const int K = int(l.size());
    if (K == 0 || r.size() != l.size() || phi.size() != l.size())
        throw std::invalid_argument("build_apsk: l, r, phi must have equal positive length");
    for (int lk : l)
        if (lk < 1) throw std::invalid_argument("build_apsk: ring sizes must be positive");
    for (int k = 0; k + 1 < K; ++k)
        if (r[k + 1] - r[k] <= tolerance)
            throw std::invalid_argument("build_apsk: radii must be strictly increasing");
    ApskSpec spec;
    spec.l = l;
    spec.r = r;
    spec.phi = phi;
    if (l[0] == 1) {
        if (std::abs(r[0]) > tolerance)
            throw std::invalid_argument("build_apsk: a single-point first ring must sit at the origin");
        spec.r[0] = 0.0;
    } else if (r[0] <= tolerance) {
        throw std::invalid_argument("build_apsk: a multi-point ring cannot sit at the origin");
    }
    for (int k = 1; k < K; ++k)
        if (l[k] == 1 && spec.r[k] == 0.0)
            throw std::invalid_argument("build_apsk: only ring 1 may sit at the origin");

    int M = 0;
    double sum = 0.0;
    for (int k = 0; k < K; ++k) {
        M += l[k];
        sum += double(l[k]) * spec.r[k] * spec.r[k];
    }
    spec.P = sum / double(M);
    spec.symbols.reserve(M);
    for (int k = 0; k < K; ++k)
        for (int j = 0; j < l[k]; ++j) {
            const double a = 2.0 * M_PI * j / double(l[k]) + phi[k];
            spec.symbols.push_back(std::polar(spec.r[k], a));
        }
    return spec;
}

std::vector<double> uniform_radii(const RingPartition& l, double P) {
    if (!(P > 0.0)) throw std::invalid_argument("uniform_radii: power must be positive");
    const int K = int(l.size());
    if (K == 0) throw std::invalid_argument("uniform_radii: empty partition");
    const int shift = (l[0] == 1) ? 1 : 0;
    int M = 0;
    double q = 0.0;
    for (int k = 0; k < K; ++k) {
        M += l[k];
        const double idx = double(k + 1 - shift);
        q += double(l[k]) * idx * idx;
    }
    if (q == 0.0) throw std::invalid_argument("uniform_radii: no ring carries power");
    const double delta = std::sqrt(P * double(M) / q);
    std::vector<double> r(K);
    for (int k = 0; k < K; ++k) r[k] = delta * double(k + 1 - shift);
    return r;
}

ApskSpec rescale_power(const ApskSpec& spec, double P_new) {
    if (!(P_new > 0.0)) throw std::invalid_argument("rescale_power: power must be positive");
    const double s = std::sqrt(P_new / spec.P);
    std::vector<double> r = spec.r;
    for (double& v : r) v *= s;
    return build_apsk(spec.l, r, spec.phi, 0.0);
}

namespace {

void compositions(int rest, int parts_left, RingPartition& cur,
                  std::vector<RingPartition>& out) {
    if (rest == 0) {
        out.push_back(cur);
        return;
    }
    if (parts_left == 0) return;
    for (int first = 1; first <= rest; ++first) {
        cur.push_back(first);
        compositions(rest - first, parts_left - 1, cur, out);
        cur.pop_back();
    }
}

} // namespace

std::vector<RingPartition> enumerate_partitions(int M, int max_rings) {
    if (M < 1) throw std::invalid_argument("enumerate_partitions: M must be positive");
    const int cap = (max_rings <= 0) ? M : std::min(M, max_rings);
    std::vector<RingPartition> out;
    RingPartition cur;
    compositions(M, cap, cur, out);
    return out;
}

std::string to_json_string(const ApskSpec& spec) {
    nlohmann::json j;
    j["l"] = spec.l;
    j["r"] = spec.r;
    j["phi"] = spec.phi;
    j["P"] = spec.P;
    return j.dump(2);
}

ApskSpec apsk_from_json_string(const std::string& text) {
    const auto j = nlohmann::json::parse(text);
    const RingPartition l = j.at("l").get<RingPartition>();
    const auto r = j.at("r").get<std::vector<double>>();
    const auto phi = j.at("phi").get<std::vector<double>>();
    ApskSpec spec = build_apsk(l, r, phi);
    const double P = j.at("P").get<double>();
    if (std::abs(P - spec.P) > 1e-9 * std::max(1.0, std::abs(P)))
        throw std::invalid_argument("apsk_from_json_string: stored power disagrees with radii");
    return spec;
}

} // namespace apsk
