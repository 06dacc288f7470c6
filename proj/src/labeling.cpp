#include "apsk/labeling.hpp"

#include <bit>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "apsk/metrics.hpp"

namespace apsk {

bool Labeling::valid() const {
    if (m < 0 || m > 20 || rows.size() != (std::size_t(1) << m)) return false;
    std::vector<bool> seen(rows.size(), false);
    for (std::uint32_t w : rows) {
        if (w >= rows.size() || seen[w]) return false;
        seen[w] = true;
    }
    return true;
}

std::string Labeling::bit_string(int i) const {
    std::string s(m, '0');
    for (int b = 0; b < m; ++b)
        if (rows[i] >> (m - 1 - b) & 1u) s[b] = '1';
    return s;
}

Labeling brgc(int m) {
    if (m < 1 || m > 20) throw std::invalid_argument("brgc: order out of range");
    Labeling g;
    g.m = m;
    g.rows = {0u, 1u};
    // reflect and prepend the next bit column
    for (int k = 2; k <= m; ++k) {
        const std::size_t n = g.rows.size();
        g.rows.resize(2 * n);
        for (std::size_t i = 0; i < n; ++i)
            g.rows[2 * n - 1 - i] = g.rows[i] | (1u << (k - 1));
    }
    return g;
}

Labeling direct_product(const Labeling& a, const Labeling& b) {
    Labeling out;
    out.m = a.m + b.m;
    out.rows.reserve(a.rows.size() * b.rows.size());
    for (std::uint32_t ai : a.rows)
        for (std::uint32_t bj : b.rows) out.rows.push_back(ai << b.m | bj);
    return out;
}

Labeling gray_rectangular(const ApskSpec& spec) {
    const int K = spec.ring_count();
    if (K < 2) throw std::invalid_argument("gray_rectangular: need at least two rings");
    const int l = spec.l[0];
    for (int lk : spec.l)
        if (lk != l) throw std::invalid_argument("gray_rectangular: ring sizes must be equal");
    if ((K & (K - 1)) != 0 || (l & (l - 1)) != 0)
        throw std::invalid_argument("gray_rectangular: ring count and size must be powers of two");
    const Labeling ring_bits = brgc(std::countr_zero(unsigned(K)));
    if (l == 1) return ring_bits;
    return direct_product(ring_bits, brgc(std::countr_zero(unsigned(l))));
}

std::vector<double> proposed_phase_offsets(const ApskSpec& spec, const ThresholdSet& th,
                                           const HarmonicsSet& hs) {
    const int K = spec.ring_count();
    if (K < 2) throw std::invalid_argument("proposed_phase_offsets: need at least two rings");
    if (int(hs.rings.size()) != K)
        throw std::invalid_argument("proposed_phase_offsets: need one harmonics view per ring");
    for (const auto& v : hs.rings)
        if (!v.a) throw std::invalid_argument("proposed_phase_offsets: missing harmonics for a ring");
    std::vector<double> phi(K, 0.0);
    for (int g = 1; g < K; ++g) {
        const double mu = th.mu[g]; // boundary between rings g-1 and g
        phi[g] = correction_angle(mu, hs.rings[g - 1]) - correction_angle(mu, hs.rings[g]) +
                 phi[g - 1];
    }
    return phi;
}

namespace {

struct Search {
    const TransitionMatrix* T;
    int M, m;
    bool prune;
    std::vector<std::uint32_t> rows, best_rows;
    std::vector<bool> used;
    double cost = 0.0, best = 0.0;
    long long leaves = 0;
    std::uint32_t seen_cols = 0;

    void run(int pos) {
        if (pos == M) {
            ++leaves;
            if (best_rows.empty() || cost < best) {
                best = cost;
                best_rows = rows;
            }
            return;
        }
        for (std::uint32_t cw = 0; cw < std::uint32_t(M); ++cw) {
            if (used[cw]) continue;
            const std::uint32_t fresh = cw & ~seen_cols;
            if (prune && fresh) {
                // a codeword may only open the lowest-indexed unseen columns
                std::uint32_t unseen = ~seen_cols & ((1u << m) - 1);
                std::uint32_t required = 0;
                for (int t = std::popcount(fresh); t > 0; --t) {
                    required |= unseen & (0u - unseen);
                    unseen &= unseen - 1;
                }
                if (required != fresh) continue;
            }
            double add = 0.0;
            for (int i = 0; i < pos; ++i)
                add += std::popcount(rows[i] ^ cw) * (T->at(i, pos) + T->at(pos, i));
            const std::uint32_t saved_cols = seen_cols;
            rows[pos] = cw;
            used[cw] = true;
            seen_cols |= cw;
            cost += add;
            run(pos + 1);
            cost -= add;
            seen_cols = saved_cols;
            used[cw] = false;
        }
    }
};

} // namespace

LabelingSearchResult exhaustive_labeling_search(const TransitionMatrix& T, bool prune) {
    const int M = T.M;
    if (M < 2 || M > 8 || (M & (M - 1)) != 0)
        throw std::invalid_argument("exhaustive_labeling_search: M must be 2, 4, or 8");
    Search s;
    s.T = &T;
    s.M = M;
    s.m = std::countr_zero(unsigned(M));
    s.prune = prune;
    s.rows.assign(M, 0);
    s.used.assign(M, false);
    s.used[0] = true; // symbol 0 keeps the all-zero codeword
    s.seen_cols = 0;
    s.run(1);
    LabelingSearchResult res;
    res.labeling.m = s.m;
    res.labeling.rows = s.best_rows;
    res.bep = s.best / (double(s.m) * double(M));
    res.evaluated = s.leaves;
    return res;
}

std::string to_csv(const Labeling& lab) {
    std::string out;
    for (int i = 0; i < lab.size(); ++i) {
        out += std::to_string(i);
        out += ',';
        out += lab.bit_string(i);
        out += '\n';
    }
    return out;
}

Labeling labeling_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<std::pair<int, std::string>> entries;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("labeling_from_csv: missing comma in '" + line + "'");
        entries.emplace_back(std::stoi(line.substr(0, comma)), line.substr(comma + 1));
    }
    if (entries.empty()) throw std::invalid_argument("labeling_from_csv: no rows");
    Labeling lab;
    lab.m = int(entries[0].second.size());
    lab.rows.assign(entries.size(), 0);
    std::vector<bool> filled(entries.size(), false);
    for (const auto& [idx, bits] : entries) {
        if (idx < 0 || idx >= int(entries.size()) || filled[idx])
            throw std::invalid_argument("labeling_from_csv: bad or repeated symbol index");
        if (int(bits.size()) != lab.m)
            throw std::invalid_argument("labeling_from_csv: ragged bit strings");
        std::uint32_t w = 0;
        for (char c : bits) {
            if (c != '0' && c != '1')
                throw std::invalid_argument("labeling_from_csv: bits must be 0/1");
            w = w << 1 | std::uint32_t(c == '1');
        }
        lab.rows[idx] = w;
        filled[idx] = true;
    }
    if (!lab.valid()) throw std::invalid_argument("labeling_from_csv: not a bijective labeling");
    return lab;
}

} // namespace apsk
