#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "apsk/detection.hpp"

namespace apsk {

struct TransitionMatrix;

// Binary labeling of M symbols with m = log2 M bits each. rows[i] is the
// codeword of symbol i; bit (m-1) is the leftmost (first) bit.
struct Labeling {
    int m = 0;
    std::vector<std::uint32_t> rows;

    int size() const { return int(rows.size()); }
    // every m-bit word used exactly once
    bool valid() const;
    std::string bit_string(int i) const;
};

// binary reflected Gray code of order m
Labeling brgc(int m);

// ordered direct product: row (i, j) -> a_i concatenated with b_j, outer
// index i major
Labeling direct_product(const Labeling& a, const Labeling& b);

// B_{log2 K} (ring bits) x B_{log2 l} (phase bits) in ring-major symbol
// order; requires equal power-of-two ring sizes and power-of-two K >= 2
Labeling gray_rectangular(const ApskSpec& spec);

// Per-ring phase offsets that line the postcompensated clouds up across
// rings: phi_1 = 0 and
//   phi_i = theta_c(mu_{i-1}, r_{i-1}) - theta_c(mu_{i-1}, r_i) + phi_{i-1}.
std::vector<double> proposed_phase_offsets(const ApskSpec& spec, const ThresholdSet& th,
                                           const HarmonicsSet& hs);

struct LabelingSearchResult {
    Labeling labeling;
    double bep = 0.0;
    long long evaluated = 0; // leaves scored
};

// Minimizes BEP over all assignments of codewords to symbols; M <= 8.
// Fixing symbol 0 at codeword 0 absorbs bit complements, and requiring new
// bit columns to appear in index order quotients out column permutations;
// pass prune = false to search all (M-1)! assignments instead.
LabelingSearchResult exhaustive_labeling_search(const TransitionMatrix& T, bool prune = true);

std::string to_csv(const Labeling& lab);
Labeling labeling_from_csv(const std::string& text);

} // namespace apsk
