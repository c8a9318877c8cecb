// Acceptance suite: one check per numbered criterion, each printing a single
// PASS/FAIL line with its measured statistic and runtime budget. Run all with
// no arguments or a subset by number: ./acceptance 1 4 9
#include <chrono>
#include <cmath>
#include <complex>
#include <cstdio>
#include <functional>
#include <map>
#include <numbers>
#include <string>
#include <vector>

#include "cca/experiments.hpp"
#include "cca/lsd.hpp"
#include "cca/model.hpp"
#include "cca/sampling.hpp"
#include "cca/spectra.hpp"
#include "support/oracles.hpp"

using namespace cca;
using oracle::cxd;

namespace {

const double kSqrtHalf = std::sqrt(0.5);

std::string sci(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.2e", v);
    return buf;
}

struct Criterion {
    std::string label;
    double budget_seconds;
    std::function<bool(std::string&)> run;
};

ModelConfig random_small_config(oracle::TestRng& rng, int index) {
    const Dist dists[] = {Dist::gaussian, Dist::gamma42, Dist::rademacher, Dist::uniform};
    ModelConfig config;
    config.dims = {7, 11, 40};
    config.dist = dists[index % 4];
    config.seed = 1000 + static_cast<std::uint64_t>(index);
    for (int i = 0; i < 7; ++i) {
        config.lambda.push_back(rng.unit() < 0.3 ? 0.0 : rng.in(0.0, 0.9));
    }
    return config;
}

std::vector<SingularMeasure> figure1_measures() {
    std::vector<double> rank5_desk(125, 0.0);
    std::fill_n(rank5_desk.begin(), 5, kSqrtHalf);
    std::vector<double> rank5_paper(1000, 0.0);
    std::fill_n(rank5_paper.begin(), 5, kSqrtHalf);
    std::vector<double> half(125, 0.0);
    std::fill_n(half.begin(), 62, kSqrtHalf);
    return {
        realize_H(rank5_paper),                  // weight 5/1000 at sqrt(1/2)
        realize_H(rank5_desk),                   // weight 5/125
        realize_H(half),                         // half and half
        SingularMeasure::point_mass(kSqrtHalf),  // full rank
        SingularMeasure::point_mass(0.0),        // null
    };
}

bool c1_multiset_identity(std::string& detail) {
    oracle::TestRng rng(701);
    double worst = 0.0;
    for (int k = 0; k < 100; ++k) {
        const auto config = random_small_config(rng, k);
        const auto s = draw_sample(config, 0);
        const auto scc = canonical_correlations(s);
        const auto block = block_matrix_eigenvalues(s);
        worst = std::max(worst, multiset_distance(block.values, predicted_block_eigenvalues(scc)));
    }
    detail = "max multiset distance " + sci(worst);
    return worst < 1e-8;
}

bool c2_trace_identity(std::string& detail) {
    oracle::TestRng rng(702);
    double worst = 0.0;
    for (int k = 0; k < 10; ++k) {
        const auto config = random_small_config(rng, k);
        const auto s = draw_sample(config, 0);
        const auto scc = canonical_correlations(s);
        const auto block = block_matrix_eigenvalues(s);
        for (int j = 0; j < 20; ++j) {
            const cxd z = rng.upper_half(-1.0, 2.0, 0.05, 1.5);
            const cxd w = (1.0 - z) * (1.0 - z);
            const cxd tr_gb = green_trace(block, z).value * 18.0;
            const cxd tr_gxy = green_trace(scc, w).value * 7.0;
            const cxd tr_gyx = tr_gxy - 4.0 / w;
            worst = std::max(worst, std::abs(tr_gb - (z - 1.0) * (tr_gxy + tr_gyx)) /
                                        std::abs(tr_gb));
        }
    }
    detail = "max relative residual " + sci(worst);
    return worst < 1e-10;
}

bool c3_projection_match(std::string& detail) {
    oracle::TestRng rng(703);
    double worst = 0.0;
    bool zero_counts_ok = true;
    for (int k = 0; k < 40; ++k) {
        const auto config = random_small_config(rng, k);
        const auto report = verify_theorem21(draw_sample(config, 0), cxd(0.4, 0.7));
        worst = std::max(worst, report.projection_multiset_distance);
        zero_counts_ok = zero_counts_ok &&
                         report.projection_zero_count == report.expected_zero_count;
    }
    detail = "max multiset distance " + sci(worst) +
             (zero_counts_ok ? ", zero counts exact" : ", zero count mismatch");
    return worst < 1e-8 && zero_counts_ok;
}

bool c4_asymptote_herglotz(std::string& detail) {
    int solved = 0;
    double worst_asym = 0.0;
    for (const auto& h : figure1_measures()) {
        const auto ctx = make_context(h, RatioParams::limits(0.125, 0.375));
        for (double im : {0.3, 0.1, 0.03, 0.01}) {
            std::optional<cxd> warm;
            for (double x : linspace(-0.1, 1.1, 50)) {
                const cxd m = solve_m(cxd(x, im), ctx, warm);
                if (!(m.imag() > 0.0)) {
                    detail = "lower half-plane value at x = " + sci(x);
                    return false;
                }
                warm = m;
                ++solved;
            }
        }
        for (const cxd z : {cxd(0.0, 1e3), cxd(300.0, 1e3 * std::sqrt(0.91))}) {
            worst_asym = std::max(worst_asym, std::abs(z * solve_m(z, ctx) + 1.0));
        }
    }
    detail = std::to_string(solved) + " grid points per measure Herglotz, max |z m + 1| = " +
             sci(worst_asym) + " at |z| = 1e3";
    return worst_asym < 1e-3;
}

bool c5_consistency_web(std::string& detail) {
    const auto ctx = make_context(make_config(125, 375, 1000, kSqrtHalf, 125, Dist::gamma42, 1),
                                  RatioMode::finite_n);
    double worst_pair = 0.0;
    std::optional<cxd> warm;
    for (double x : linspace(0.02, 0.98, 50)) {
        const cxd z(x, 0.02);
        const cxd m = solve_m(z, ctx, warm);
        warm = m;
        const auto pair = pair_ab(z, m, ctx);
        worst_pair = std::max(worst_pair, std::abs(pair_residual(pair.a, pair.b, ctx)));
    }
    if (worst_pair >= 1e-8) {
        detail = "pair residual " + sci(worst_pair);
        return false;
    }

    double worst_mb = 0.0;
    oracle::TestRng rng(705);
    for (int k = 0; k < 8; ++k) {
        const auto config = random_small_config(rng, k);
        const auto s = draw_sample(config, 0);
        const auto scc = canonical_correlations(s);
        const auto block = block_matrix_eigenvalues(s);
        const auto small_ctx = make_context(config, RatioMode::finite_n);
        for (int j = 0; j < 5; ++j) {
            const cxd z = rng.upper_half(-0.5, 2.0, 0.1, 1.2);
            const auto point = m_from_mb(z, green_trace(block, z).value, small_ctx);
            worst_mb = std::max(worst_mb,
                                std::abs(point.m - green_trace(scc, point.z_scc).value));
        }
    }
    detail = "max pair residual " + sci(worst_pair) + ", max trace roundtrip " +
             sci(worst_mb);
    return worst_mb < 1e-10;
}

bool c6_null_monte_carlo(std::string& detail) {
    const auto base = make_null_config(200, 600, 1600, Dist::gaussian, 1);
    const auto ctx = make_context(base, RatioMode::finite_n);
    const auto cdf = LsdCdf::from_curve(density(ctx, linspace(0.0, 1.0, 501)));
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        auto config = base;
        config.seed = seed;
        const auto pooled = pooled_scc_esd(config, 20, 0);
        worst = std::max(worst, ks_distance(pooled, cdf));
    }
    detail = "max KS over 5 seeds " + sci(worst);
    return worst < 0.05;
}

bool c7_figure1(std::string& detail) {
    // Note on the gap clause: the half-rank configuration's limiting density
    // is bimodal with an interior dip bottoming near 0.5 — not a zero-density
    // gap. Monte Carlo histograms at two scales agree with the solved curve
    // (KS below 0.01), so the f < 1e-3 gap expectation encoded here fails for
    // model reasons, not solver ones. It is kept as written and reported
    // honestly; see tests/test_lsd.cpp for the dip-shape checks that do pass.
    Figure1Options opts;
    opts.replicates = 20;
    opts.seed = 1;
    const auto reports = figure1_suite(0.125, opts);
    double worst = 0.0;
    for (const auto& r : reports) worst = std::max(worst, r.ks);
    const bool gap = reports[1].gap.detected;
    detail = "max KS " + sci(worst) + ", middle-case gap " +
             (gap ? "detected [" + sci(reports[1].gap.lo) + ", " +
                        sci(reports[1].gap.hi) + "]"
                  : "missing");
    return worst < 0.05 && gap;
}

bool c8_universality(std::string& detail) {
    const auto ctx = make_context(make_config(125, 375, 1000, kSqrtHalf, 125, Dist::gaussian, 1),
                                  RatioMode::finite_n);
    const auto cdf = LsdCdf::from_curve(density(ctx, linspace(0.0, 1.0, 501)));
    std::vector<double> ks_values;
    for (Dist d : {Dist::gaussian, Dist::gamma42, Dist::rademacher}) {
        const auto config = make_config(125, 375, 1000, kSqrtHalf, 125, d, 5);
        ks_values.push_back(ks_distance(pooled_scc_esd(config, 20, 0), cdf));
    }
    double worst_gap = 0.0;
    for (std::size_t i = 0; i < ks_values.size(); ++i) {
        for (std::size_t j = i + 1; j < ks_values.size(); ++j) {
            worst_gap = std::max(worst_gap, std::abs(ks_values[i] - ks_values[j]));
        }
    }
    detail = "KS gaussian/gamma42/rademacher = " + sci(ks_values[0]) + "/" +
             sci(ks_values[1]) + "/" + sci(ks_values[2]) +
             ", max pairwise gap " + sci(worst_gap);
    return worst_gap < 0.02;
}

bool c9_m_xi(std::string& detail) {
    const auto null_ctx =
        make_context(SingularMeasure::point_mass(0.0), RatioParams::limits(0.125, 0.375));
    double worst_null = 0.0;
    for (const cxd z : {cxd(0.5, 0.3), cxd(2.0, 0.01), cxd(0.0, 1e3)}) {
        worst_null = std::max(worst_null,
                              std::abs(m_xi_solve(z, null_ctx) + 1.0 / z) * std::abs(z));
    }
    if (worst_null >= 1e-14) {
        detail = "null m_xi deviation " + sci(worst_null);
        return false;
    }

    const auto ctx = make_context(make_config(125, 375, 1000, kSqrtHalf, 125, Dist::gamma42, 1),
                                  RatioMode::finite_n);
    const auto r = resolve_ratios(ctx);
    const double t0 = pushforward_t(kSqrtHalf, ctx);
    oracle::TestRng rng(709);
    double worst_atom = 0.0;
    for (int k = 0; k < 20; ++k) {
        const cxd z = rng.upper_half(0.5, 6.0, 0.02, 1.0);
        const cxd m_oracle = oracle::single_atom_m_xi(z, t0, r.pn);
        if (!(m_oracle.imag() > 0.0)) continue;
        worst_atom = std::max(worst_atom, std::abs(m_xi_solve(z, ctx) - m_oracle));
    }
    detail = "null relative deviation " + sci(worst_null) +
             ", single-atom worst |m - oracle| = " + sci(worst_atom);
    return worst_atom < 1e-10;
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> criteria = {
        {"eigenvalue multiset identity, 100 configs x 4 distributions", 10, c1_multiset_identity},
        {"block/SCC trace identity at 20 probe points per config", 5, c2_trace_identity},
        {"projection-sum spectrum matches B with exact zero counts", 10, c3_projection_match},
        {"solver asymptote |z m + 1| < 1e-3 and Herglotz on 200-point grids", 30,
         c4_asymptote_herglotz},
        {"consistency web: pair equation on 50-point grid, block-trace roundtrip", 60,
         c5_consistency_web},
        {"null-case Monte Carlo KS < 0.05 over 5 seeds", 300, c6_null_monte_carlo},
        {"three-configuration simulation suite KS < 0.05 with middle-case gap", 600, c7_figure1},
        {"distribution universality: pairwise KS gaps < 0.02", 600, c8_universality},
        {"noncentral-parameter transform: null exact, single-atom quadratic", 5, c9_m_xi},
    };

    std::vector<int> selected;
    for (int i = 1; i < argc; ++i) selected.push_back(std::atoi(argv[i]));
    if (selected.empty()) {
        for (std::size_t i = 1; i <= criteria.size(); ++i) selected.push_back(static_cast<int>(i));
    }

    int failures = 0;
    for (int index : selected) {
        if (index < 1 || index > static_cast<int>(criteria.size())) {
            std::printf("[FAIL] C%d: no such criterion\n", index);
            ++failures;
            continue;
        }
        const auto& c = criteria[static_cast<std::size_t>(index - 1)];
        const auto start = std::chrono::steady_clock::now();
        std::string detail;
        bool ok = false;
        try {
            ok = c.run(detail);
        } catch (const std::exception& e) {
            detail = std::string("exception: ") + e.what();
        }
        const double seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const bool in_budget = seconds < c.budget_seconds;
        if (!in_budget) ok = false;
        std::printf("[%s] C%d %s: %s (%.1f s of %.0f s budget)\n", ok ? "PASS" : "FAIL", index,
                    c.label.c_str(), detail.c_str(), seconds, c.budget_seconds);
        std::fflush(stdout);
        if (!ok) ++failures;
    }
    return failures;
}
