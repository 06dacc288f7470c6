#pragma once

#include <complex>
#include <string>
#include <vector>

namespace apsk {

// ring sizes, innermost first
using RingPartition = std::vector<int>;

// An APSK signal set. Symbols are stored ring-major: innermost ring first,
// phase index j = 0..l_k-1 inside each ring at angle 2*pi*j/l_k + phi_k.
// A ring of one point is allowed only at the origin when it is ring 1.
struct ApskSpec {
    RingPartition l;                        // points per ring
    std::vector<double> r;                  // ring radii, sqrt(W), strictly increasing
    std::vector<double> phi;                // per-ring phase offsets, radians
    std::vector<std::complex<double>> symbols;
    double P = 0.0;                         // average power, W

    int ring_count() const { return int(l.size()); }
    int size() const { return int(symbols.size()); }

    // ring index (0-based) of symbol i
    int ring_of(int i) const;
    // index within its ring
    int phase_index_of(int i) const;
    // first symbol index of ring k
    int ring_begin(int k) const;
};

ApskSpec build_apsk(const RingPartition& l, const std::vector<double>& r,
                    const std::vector<double>& phi, double tolerance = 1e-9);

// equally spaced radii meeting the average-power target; spacing starts at
// r_1 = delta, or at r_2 = delta with r_1 = 0 when l_1 = 1
std::vector<double> uniform_radii(const RingPartition& l, double P);

ApskSpec rescale_power(const ApskSpec& spec, double P_new);

// all compositions of M into at most max_rings parts, lexicographic order;
// max_rings <= 0 means no limit
std::vector<RingPartition> enumerate_partitions(int M, int max_rings = 0);

std::string to_json_string(const ApskSpec& spec);
ApskSpec apsk_from_json_string(const std::string& text);

} // namespace apsk
