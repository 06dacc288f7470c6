#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <complex>
#include <memory>
#include <sstream>
#include <vector>

#include "apsk/channel.hpp"
#include "apsk/constellation.hpp"
#include "apsk/detection.hpp"
#include "apsk/harmonics.hpp"
#include "apsk/labeling.hpp"
#include "apsk/metrics.hpp"
#include "apsk/rng.hpp"
#include "apsk/special.hpp"

using namespace apsk;

namespace {

HarmonicsSet make_set(const std::vector<double>& radii, const ChannelParams& p, int n,
                      std::uint64_t seed) {
    HarmonicsSet hs;
    for (std::size_t k = 0; k < radii.size(); ++k) {
        HarmonicsConfig cfg;
        cfg.n_samples = n;
        auto rec = std::make_shared<const PhaseHarmonics>(
            estimate_harmonics(radii[k], p, cfg, seed + k));
        hs.owned.push_back(rec);
        hs.rings.push_back(HarmonicsView(*rec));
    }
    return hs;
}

double half_gaussian_tail(double x) { return 0.5 * std::erfc(x / std::sqrt(2.0)); }

} // namespace

TEST_CASE("transition matrix rows are distributions with ring-symmetric diagonals") {
    const ChannelParams p = channel_params(7000.0, 100);
    auto spec = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(-5.0)), {0.0, 0.0});
    auto rs = ring_system(spec);
    auto hs = make_set(spec.r, p, 1000000, 311);
    auto th = map_thresholds(rs, p.sigma2);
    auto T = transition_matrix_ts(rs, th, hs);
    REQUIRE(T.M == 8);
    CHECK(T.method == TransitionMatrix::Method::quadrature);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(T.row_sum(i) - 1.0) < 1e-6);
        for (int j = 0; j < 8; ++j) {
            CHECK(T.at(i, j) >= 0.0);
            CHECK(T.at(i, j) <= 1.0);
        }
    }
    for (int i = 1; i < 4; ++i) CHECK(std::abs(T.at(i, i) - T.at(0, 0)) < 1e-8);
    for (int i = 5; i < 8; ++i) CHECK(std::abs(T.at(i, i) - T.at(4, 4)) < 1e-8);
}

TEST_CASE("quadrature matches monte-carlo transitions within 3 binomial errors") {
    const ChannelParams p = channel_params(7000.0, 100);
    auto spec = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(-8.0)), {0.0, 0.0});
    auto rs = ring_system(spec);
    auto hs = make_set(spec.r, p, 4000000, 321);
    auto th = map_thresholds(rs, p.sigma2);
    auto Tq = transition_matrix_ts(rs, th, hs);
    const long long n = 1000000;
    auto Tm = transition_matrix_mc(rs, DetectorKind::two_stage, hs, th, p, n, 17);
    CHECK(Tm.sample_count == n);
    for (int i = 0; i < 8; ++i)
        for (int j = 0; j < 8; ++j) {
            const double pm = Tm.at(i, j), pq = Tq.at(i, j);
            // adjusted proportion keeps the normal test honest in cells with
            // single-digit expected counts
            const double pt = (std::max(pm, pq) * double(n) + 4.5) / (double(n) + 9.0);
            const double se = std::sqrt(pt * (1.0 - pt) / double(n));
            CHECK(std::abs(pm - pq) <= 3.0 * se + 1e-12);
        }
}

TEST_CASE("monte-carlo matrix: exact rows, identity in the noiseless limit") {
    const ChannelParams lin = channel_params(7000.0, 100, 0.0);
    auto spec = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(10.0)), {0.0, 0.0});
    auto rs = ring_system(spec);
    auto hs = make_set(spec.r, lin, 400000, 331);
    auto th = map_thresholds(rs, lin.sigma2);
    auto T = transition_matrix_mc(rs, DetectorKind::two_stage, hs, th, lin, 20000, 23);
    CHECK(T.method == TransitionMatrix::Method::monte_carlo);
    for (int i = 0; i < 8; ++i) {
        CHECK(std::abs(T.row_sum(i) - 1.0) < 1e-14);
        CHECK(T.at(i, i) == 1.0); // ring gap is ~18 noise deviations here
    }
    // thread count must not change the estimate
    auto T4 = transition_matrix_mc(rs, DetectorKind::two_stage, hs, th, lin, 20000, 23, 4);
    CHECK(T.p == T4.p);
}

TEST_CASE("sep of hand-built matrices") {
    TransitionMatrix I;
    I.M = 3;
    I.p = {1, 0, 0, 0, 1, 0, 0, 0, 1};
    CHECK(sep(I) == 0.0);
    TransitionMatrix T;
    T.M = 2;
    T.p = {0.9, 0.1, 0.2, 0.8};
    CHECK(sep(T) == doctest::Approx(0.15).epsilon(1e-14));
}

TEST_CASE("all-singleton constellation reduces to the ring-error average") {
    const ChannelParams p = channel_params(7000.0, 100);
    auto spec = build_apsk({1, 1, 1, 1}, uniform_radii({1, 1, 1, 1}, dbm_to_watt(-5.0)),
                           {0.0, 0.0, 0.0, 0.0});
    auto rs = ring_system(spec);
    auto th = map_thresholds(rs, p.sigma2);
    // only sigma2 is read from the records here: every stage-2 decision is
    // trivial, so one shared record can fill all the view slots
    HarmonicsConfig cfg;
    cfg.n_samples = 400000;
    auto rec = std::make_shared<const PhaseHarmonics>(
        estimate_harmonics(spec.r[1], p, cfg, 341));
    HarmonicsSet hs;
    hs.owned.push_back(rec);
    hs.rings.assign(4, HarmonicsView(*rec));
    double avg = 0.0;
    for (int k = 0; k < 4; ++k) avg += first_stage_error(k, rs, th, p.sigma2);
    avg /= 4.0;
    CHECK(sep_ts_quadrature(rs, th, hs) == doctest::Approx(avg).epsilon(1e-10));
}

TEST_CASE("sep is invariant under ring phase offsets") {
    const ChannelParams p = channel_params(7000.0, 100);
    const auto radii = uniform_radii({4, 4}, dbm_to_watt(-5.0));
    auto a = build_apsk({4, 4}, radii, {0.0, 0.0});
    auto b = build_apsk({4, 4}, radii, {0.4, 1.1});
    auto hs = make_set(radii, p, 1000000, 311); // same records: radii unchanged
    auto tha = map_thresholds(a, p.sigma2);
    auto thb = map_thresholds(b, p.sigma2);
    const double sa = sep_ts_quadrature(ring_system(a), tha, hs);
    const double sb = sep_ts_quadrature(ring_system(b), thb, hs);
    CHECK(std::abs(sa - sb) < 1e-8);
    // the matrix path clamps negative series ripple cell by cell, and the
    // clamped mass depends on where the sector edges fall; only the raw-series
    // path above is exactly invariant
    const double ta = sep(transition_matrix_ts(ring_system(a), tha, hs));
    const double tb = sep(transition_matrix_ts(ring_system(b), thb, hs));
    CHECK(std::abs(ta - tb) < 3e-4);
    CHECK(std::abs(ta - sa) < 3e-4);
}

TEST_CASE("quadrature sep is deterministic and stable under node doubling") {
    const ChannelParams p = channel_params(7000.0, 100);
    for (auto& l : std::vector<std::vector<int>>{{4, 4}, {4, 4, 4, 4}}) {
        std::vector<double> phi(l.size(), 0.0);
        auto spec = build_apsk(l, uniform_radii(l, dbm_to_watt(-5.0)), phi);
        auto rs = ring_system(spec);
        auto hs = make_set(spec.r, p, 400000, 351);
        auto th = map_thresholds(rs, p.sigma2);
        const double s1 = sep_ts_quadrature(rs, th, hs);
        const double s2 = sep_ts_quadrature(rs, th, hs);
        CHECK(s1 == s2);
        QuadratureConfig fine;
        fine.radial_nodes = 128;
        CHECK(std::abs(sep_ts_quadrature(rs, th, hs, fine) - s1) < 1e-7);
        CHECK(sep(transition_matrix_ts(rs, th, hs)) ==
              sep(transition_matrix_ts(rs, th, hs)));
    }
}

TEST_CASE("closed-form sector phase integral agrees with brute-force quadrature") {
    const ChannelParams p = channel_params(7000.0, 100);
    auto spec = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(-5.0)), {0.0, 0.0});
    auto rs = ring_system(spec);
    auto hs = make_set(spec.r, p, 1000000, 311);
    auto th = map_thresholds(rs, p.sigma2);
    const double st = std::sqrt(0.5 * p.sigma2);
    const double trunc = std::max(spec.r[1], th.mu[1]) + 8.0 * st;
    // per-ring correct probability by a dense midpoint rule over the symbol's
    // own annular sector, with the same series integrand
    double correct = 0.0;
    for (int k = 0; k < 2; ++k) {
        const auto& view = hs.rings[k];
        const double lo = th.mu[k], hi = std::min(th.mu[k + 1], trunc);
        const int nr = 1600, na = 512;
        double acc = 0.0;
        for (int i = 0; i < nr; ++i) {
            const double R = lo + (hi - lo) * (i + 0.5) / nr;
            const double tc = correction_angle(R, view);
            double ring = 0.0;
            for (int j = 0; j < na; ++j) {
                const double a = -M_PI / 4.0 + 0.5 * M_PI * (j + 0.5) / na;
                ring += polar_density(view, p.sigma2, R, a + tc);
            }
            acc += ring * (hi - lo) / nr * (0.5 * M_PI / na);
        }
        correct += 4.0 * acc; // four symbols per ring, identical by symmetry
    }
    const double sep_ref = 1.0 - correct / 8.0;
    CHECK(sep_ts_quadrature(rs, th, hs) == doctest::Approx(sep_ref).epsilon(2e-4));
    CHECK(std::abs(sep_ts_quadrature(rs, th, hs) - sep_ref) < 1e-5);
}

TEST_CASE("first_stage_error formula") {
    const ChannelParams p = channel_params(7000.0, 100);

    // single ring: never a radius error
    auto psk = build_apsk({8}, uniform_radii({8}, dbm_to_watt(-5.0)), {0.0});
    auto rsp = ring_system(psk);
    auto thp = map_thresholds(rsp, p.sigma2);
    CHECK(first_stage_error(0, rsp, thp, p.sigma2) == 0.0);
    CHECK_THROWS_AS(first_stage_error(1, rsp, thp, p.sigma2), std::out_of_range);

    // two rings: matches a monte-carlo radius stage and decreases with power
    auto spec = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(-8.0)), {0.0, 0.0});
    auto rs = ring_system(spec);
    auto th = map_thresholds(rs, p.sigma2);
    Xoshiro256pp rng(8);
    for (int k = 0; k < 2; ++k) {
        const int n = 200000;
        int err = 0;
        for (int i = 0; i < n; ++i) {
            const auto y = sample_channel(std::polar(spec.r[k], 0.3), p, rng).y;
            if (th.ring_index(std::abs(y)) != k) ++err;
        }
        const double pe = first_stage_error(k, rs, th, p.sigma2);
        const double se = std::sqrt(pe * (1.0 - pe) / n);
        CHECK(std::abs(double(err) / n - pe) <= 3.0 * se);
    }
    double prev = 1.0;
    for (double P = -10.0; P <= -6.0; P += 1.0) {
        auto s = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(P)), {0.0, 0.0});
        auto r = ring_system(s);
        auto t = map_thresholds(r, p.sigma2);
        const double pe = first_stage_error(0, r, t, p.sigma2);
        CHECK(pe < prev);
        prev = pe;
    }
}

TEST_CASE("bep basics and bounds") {
    TransitionMatrix T;
    T.M = 2;
    T.p = {0.93, 0.07, 0.04, 0.96};
    CHECK(bep(T, brgc(1)) == doctest::Approx(sep(T)).epsilon(1e-14));

    const ChannelParams p = channel_params(7000.0, 100);
    auto spec = build_apsk({4, 4}, uniform_radii({4, 4}, dbm_to_watt(-6.0)), {0.0, 0.0});
    auto rs = ring_system(spec);
    auto hs = make_set(spec.r, p, 400000, 361);
    auto th = map_thresholds(rs, p.sigma2);
    auto Tq = transition_matrix_ts(rs, th, hs);
    const double floor = sep(Tq) / 3.0;
    auto g = gray_rectangular(spec);
    CHECK(bep(Tq, g) >= floor - 1e-15);
    // a few arbitrary relabelings stay above the bound too
    Labeling perm = g;
    std::swap(perm.rows[0], perm.rows[5]);
    std::swap(perm.rows[2], perm.rows[7]);
    CHECK(bep(Tq, perm) >= floor - 1e-15);
    CHECK(bep(Tq, perm) >= bep(Tq, g) - 1e-15); // gray should not lose to a scramble

    // complementing one bit column preserves every pairwise distance
    Labeling comp = g;
    for (auto& row : comp.rows) row ^= 0b010u;
    CHECK(bep(Tq, comp) == doctest::Approx(bep(Tq, g)).epsilon(1e-14));

    CHECK_THROWS(bep(Tq, brgc(2))); // 4-codeword labeling against an 8x8 matrix
}

TEST_CASE("gray labeling on gaussian 4-psk approaches the bep floor") {
    const ChannelParams lin = channel_params(7000.0, 100, 0.0);
    auto spec = build_apsk({4}, uniform_radii({4}, dbm_to_watt(-11.0)), {0.0});
    auto rs = ring_system(spec);
    auto hs = make_set(spec.r, lin, 1000000, 371);
    auto th = map_thresholds(rs, lin.sigma2);
    auto T = transition_matrix_ts(rs, th, hs);
    const double ratio = bep(T, brgc(2)) / (sep(T) / 2.0);
    CHECK(ratio >= 1.0 - 1e-9);
    CHECK(ratio <= 1.1);
}

TEST_CASE("16-qam ring view") {
    const double P = 2.5e-3;
    auto rs = qam16_rings(P);
    REQUIRE(rs.ring_count() == 3);
    const double u = std::sqrt(P / 10.0);
    CHECK(rs.rings[0].radius == doctest::Approx(u * std::sqrt(2.0)).epsilon(1e-12));
    CHECK(rs.rings[1].radius == doctest::Approx(u * std::sqrt(10.0)).epsilon(1e-12));
    CHECK(rs.rings[2].radius == doctest::Approx(u * std::sqrt(18.0)).epsilon(1e-12));
    CHECK(rs.rings[0].phases.size() == 4);
    CHECK(rs.rings[1].phases.size() == 8);
    CHECK(rs.rings[2].phases.size() == 4);
    double power = 0.0;
    for (int i = 0; i < rs.size(); ++i) power += std::norm(rs.symbol(i));
    CHECK(power / 16.0 == doctest::Approx(P).epsilon(1e-12));
    // middle ring holds the (1,3)-type corners: phases not equally spaced
    const auto& ph = rs.rings[1].phases;
    bool uniform = true;
    for (std::size_t j = 1; j < ph.size(); ++j)
        if (std::abs((ph[j] - ph[j - 1]) - 2.0 * M_PI / 8.0) > 1e-9) uniform = false;
    CHECK_FALSE(uniform);
    // every 16-qam lattice point appears exactly once
    for (double a : {1.0, 3.0, -1.0, -3.0})
        for (double b : {1.0, 3.0, -1.0, -3.0}) {
            int hits = 0;
            for (int i = 0; i < rs.size(); ++i)
                if (std::abs(rs.symbol(i) - std::complex<double>(u * a, u * b)) < 1e-12) ++hits;
            CHECK(hits == 1);
        }
}

TEST_CASE("awgn ml references match monte-carlo min-distance") {
    const double sigma2 = 6.2e-6;
    const double st = std::sqrt(0.5 * sigma2);

    // bpsk and qpsk against the closed Gaussian forms
    const double P = 2e-4;
    CHECK(mpsk_awgn_ml_sep(2, P, sigma2) ==
          doctest::Approx(half_gaussian_tail(std::sqrt(P) / st)).epsilon(1e-10));
    const double q = half_gaussian_tail(std::sqrt(P / 2.0) / st);
    CHECK(mpsk_awgn_ml_sep(4, P, sigma2) == doctest::Approx(2.0 * q - q * q).epsilon(1e-10));

    // 16-qam by simulation
    const double Pq = 8e-4;
    auto rs = qam16_rings(Pq);
    Xoshiro256pp rng(4);
    const int n = 1000000;
    int err = 0;
    for (int i = 0; i < n; ++i) {
        const int s = int(rng.uniform() * 16) % 16;
        const std::complex<double> y =
            rs.symbol(s) + std::complex<double>(st * rng.normal(), st * rng.normal());
        int best = 0;
        double bd = 1e300;
        for (int j = 0; j < 16; ++j) {
            const double d = std::norm(y - rs.symbol(j));
            if (d < bd) {
                bd = d;
                best = j;
            }
        }
        if (best != s) ++err;
    }
    const double ref = qam16_awgn_ml_sep(Pq, sigma2);
    const double se = std::sqrt(ref * (1.0 - ref) / n);
    CHECK(std::abs(double(err) / n - ref) <= 3.0 * se);
}

TEST_CASE("wilson interval") {
    auto iv = wilson_interval(50, 100);
    const double z = 1.959964, n = 100.0, ph = 0.5;
    const double c = (ph + z * z / (2 * n)) / (1 + z * z / n);
    const double h = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / (1 + z * z / n);
    CHECK(iv.lo == doctest::Approx(c - h).epsilon(1e-12));
    CHECK(iv.hi == doctest::Approx(c + h).epsilon(1e-12));
    CHECK(wilson_interval(0, 50).lo == 0.0);
    CHECK(wilson_interval(50, 50).hi == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(wilson_interval(0, 50).hi > 0.0);
    CHECK(wilson_interval(0, 50).hi < 0.12);
}

TEST_CASE("transition matrix csv export") {
    TransitionMatrix T;
    T.M = 2;
    T.p = {0.25, 0.75, 0.5, 0.5};
    const auto text = to_csv(T);
    std::istringstream in(text);
    std::string line;
    std::vector<std::vector<double>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> row;
        std::istringstream ls(line);
        std::string cell;
        while (std::getline(ls, cell, ',')) row.push_back(std::stod(cell));
        rows.push_back(row);
    }
    REQUIRE(rows.size() == 2);
    REQUIRE(rows[0].size() == 2);
    CHECK(rows[0][0] == doctest::Approx(0.25).epsilon(1e-15));
    CHECK(rows[1][0] == doctest::Approx(0.5).epsilon(1e-15));
}
