#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include <nlohmann/json.hpp>

#include "cca/errors.hpp"
#include "cca/lsd.hpp"
#include "cca/model.hpp"
#include "cca/sampling.hpp"
#include "support/oracles.hpp"

using namespace cca;

namespace {
const double kSqrtHalf = std::sqrt(0.5);
}

TEST_CASE("validate accepts the scaled-down full-rank configuration") {
    const auto config = make_config(100, 300, 800, kSqrtHalf, 100, Dist::gaussian, 1);
    const auto report = validate(config);
    CHECK(report.pass);
    CHECK(report.issues.empty());
}

TEST_CASE("validate rejects p >= q citing the dimension assumption") {
    const auto config = make_null_config(300, 100, 800, Dist::gaussian, 1);
    const auto report = validate(config);
    REQUIRE_FALSE(report.pass);
    CHECK(report.issues.front().assumption == "Assumption 2.1");
}

TEST_CASE("validate rejects p + q >= n") {
    const auto config = make_null_config(400, 500, 800, Dist::gaussian, 1);
    const auto report = validate(config);
    REQUIRE_FALSE(report.pass);
    CHECK(report.issues.front().assumption == "Assumption 2.1");
}

TEST_CASE("validate rejects singular values at or above the delta guard") {
    auto config = make_config(10, 30, 100, 0.9995, 10, Dist::gaussian, 1);
    const auto report = validate(config);
    REQUIRE_FALSE(report.pass);
    CHECK(report.issues.front().assumption == "Assumption 2.3");
}

TEST_CASE("realize_H collapses the all-zero spectrum to a point mass") {
    const double vals[] = {0.0, 0.0, 0.0, 0.0};
    const auto h = realize_H(vals);
    REQUIRE(h.atoms.size() == 1);
    CHECK(h.atoms[0].x == 0.0);
    CHECK(h.atoms[0].w == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("realize_H merges the rank-5 spectrum into two atoms") {
    const int p = 100;
    std::vector<double> vals(p, 0.0);
    for (int i = 0; i < 5; ++i) vals[i] = kSqrtHalf;
    const auto h = realize_H(vals);
    REQUIRE(h.atoms.size() == 2);
    CHECK(h.atoms[0].x == 0.0);
    CHECK(h.atoms[0].w == doctest::Approx(95.0 / p).epsilon(1e-14));
    CHECK(h.atoms[1].x == kSqrtHalf);
    CHECK(h.atoms[1].w == doctest::Approx(5.0 / p).epsilon(1e-14));
}

TEST_CASE("realize_H gives equal weights to the half-rank spectrum") {
    const int p = 100;
    std::vector<double> vals(p, 0.0);
    for (int i = 0; i < p / 2; ++i) vals[i] = kSqrtHalf;
    const auto h = realize_H(vals);
    REQUIRE(h.atoms.size() == 2);
    CHECK(h.atoms[0].w == doctest::Approx(0.5).epsilon(1e-14));
    CHECK(h.atoms[1].w == doctest::Approx(0.5).epsilon(1e-14));
}

TEST_CASE("realize_H rejects values outside [0,1)") {
    const double bad_high[] = {0.5, 1.0};
    const double bad_neg[] = {-0.1, 0.5};
    CHECK_THROWS_AS(realize_H(bad_high), AtomOutOfRange);
    CHECK_THROWS_AS(realize_H(bad_neg), AtomOutOfRange);
}

TEST_CASE("realize_H weights always sum to one") {
    oracle::TestRng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        const int p = 1 + static_cast<int>(rng.in(0, 40));
        std::vector<double> vals;
        for (int i = 0; i < p; ++i) {
            // Mix of repeated and fresh atoms.
            vals.push_back(rng.unit() < 0.4 ? 0.5 : rng.in(0.0, 0.99));
        }
        const auto h = realize_H(vals);
        CHECK(std::abs(h.total_weight() - 1.0) < 1e-12);
        for (std::size_t i = 1; i < h.atoms.size(); ++i) CHECK(h.atoms[i].x > h.atoms[i - 1].x);
    }
}

TEST_CASE("finite-n ratios are exactly p/n and q/n") {
    const auto config = make_null_config(123, 457, 1600, Dist::gaussian, 1);
    const auto ctx = make_context(config, RatioMode::finite_n);
    CHECK(ctx.ratios.c1 == 123.0 / 1600.0);
    CHECK(ctx.ratios.c2 == 457.0 / 1600.0);
}

TEST_CASE("validate passes exactly when downstream constructors accept the config") {
    oracle::TestRng rng(202);
    for (int trial = 0; trial < 60; ++trial) {
        ModelConfig config;
        config.dims.p = 1 + static_cast<int>(rng.in(0, 30));
        config.dims.q = 1 + static_cast<int>(rng.in(0, 40));
        config.dims.n = 10 + static_cast<int>(rng.in(0, 80));
        const int count = rng.unit() < 0.8 ? config.dims.p
                                           : 1 + static_cast<int>(rng.in(0, 30));
        for (int i = 0; i < count; ++i) {
            config.lambda.push_back(rng.unit() < 0.9 ? rng.in(0.0, 0.95) : rng.in(0.95, 1.05));
        }
        config.dist = Dist::gamma42;
        config.seed = trial;
        bool lambda_in_range = true;
        for (double v : config.lambda) lambda_in_range = lambda_in_range && v >= 0.0 && v < 1.0;

        const bool pass = validate(config).pass;
        bool sampler_ok = true;
        try {
            Sampler sampler(config);
            (void)sampler;
        } catch (const Error&) {
            sampler_ok = false;
        }
        bool ctx_ok = true;
        try {
            if (!lambda_in_range) throw InvalidConfig("atoms out of range");
            make_context(config, RatioMode::finite_n);
        } catch (const Error&) {
            ctx_ok = false;
        }
        CHECK(pass == sampler_ok);
        CHECK(pass == ctx_ok);
    }
}

TEST_CASE("config JSON roundtrip preserves every field") {
    auto config = make_config(30, 90, 320, kSqrtHalf, 7, Dist::gamma42, 99, true);
    config.delta_guard = 5e-3;
    const auto j = config_to_json(config);
    CHECK(j.at("schema_version") == 1);
    CHECK(j.at("lambda").at("kind") == "block");
    const auto back = config_from_json(j);
    CHECK(back.hash() == config.hash());

    const auto null_j = config_to_json(make_null_config(10, 20, 50, Dist::rademacher, 3));
    CHECK(null_j.at("lambda").at("kind") == "scaled-identity");
    CHECK(config_from_json(null_j).lambda == std::vector<double>(10, 0.0));
}

TEST_CASE("config JSON parses each lambda kind") {
    nlohmann::json j = {{"schema_version", 1}, {"p", 4},   {"q", 8},
                        {"n", 40},            {"dist", "uniform"}, {"seed", 5}};
    j["lambda"] = {{"kind", "scaled-identity"}, {"value", 0.5}};
    CHECK(config_from_json(j).lambda == std::vector<double>(4, 0.5));

    j["lambda"] = {{"kind", "block"}, {"value", 0.5}, {"rank", 2}};
    CHECK(config_from_json(j).lambda == std::vector<double>{0.5, 0.5, 0.0, 0.0});

    j["lambda"] = {{"kind", "explicit"}, {"values", {0.1, 0.2, 0.3, 0.4}}};
    CHECK(config_from_json(j).lambda == std::vector<double>{0.1, 0.2, 0.3, 0.4});

    j["lambda"] = {{"kind", "explicit"}, {"values", {0.1}}};
    CHECK_THROWS_AS(config_from_json(j), InvalidConfig);

    j["lambda"] = {{"kind", "mystery"}};
    CHECK_THROWS_AS(config_from_json(j), InvalidConfig);
}

TEST_CASE("unknown distribution names are rejected") {
    CHECK_THROWS_AS(dist_from_name("cauchy"), InvalidConfig);
    CHECK(dist_from_name("gamma42-standardized") == Dist::gamma42);
    CHECK(dist_from_name("uniform-standardized") == Dist::uniform);
}
