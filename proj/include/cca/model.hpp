#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace cca {

// Sample dimensions. Throughout: X is p x n, Y is q x n, with p < q and
// p + q < n so both Gram matrices are invertible and the limit ratios satisfy
// c1 + c2 < 1, c1/c2 < 1.
struct Dimensions {
    int p = 0;
    int q = 0;
    int n = 0;

    double p_over_n() const { return static_cast<double>(p) / n; }
    double q_over_n() const { return static_cast<double>(q) / n; }
    double p_over_q() const { return static_cast<double>(p) / q; }
    int n_minus_q() const { return n - q; }
};

enum class RatioMode { finite_n, limit };

// Dimension ratios used by the equation system. In finite_n mode the solver
// uses the exact sample ratios p/n, q/n, n/q, n-q; in limit mode it uses the
// limits c1, c2 alone.
struct RatioParams {
    double c1 = 0.0;
    double c2 = 0.0;
    RatioMode mode = RatioMode::limit;

    static RatioParams finite(const Dimensions& d) {
        return {d.p_over_n(), d.q_over_n(), RatioMode::finite_n};
    }
    static RatioParams limits(double c1, double c2) { return {c1, c2, RatioMode::limit}; }
};

// Discrete probability measure on [0,1) holding the singular values of the
// population cross-correlation factor. Atoms are sorted ascending and unique;
// weights are nonnegative and sum to 1.
struct SingularMeasure {
    struct Atom {
        double x = 0.0;
        double w = 0.0;
    };
    std::vector<Atom> atoms;
    double delta_guard = 1e-3;

    double total_weight() const;
    double max_atom() const;
    bool respects_guard() const { return max_atom() < 1.0 - delta_guard; }

    static SingularMeasure point_mass(double x, double delta_guard = 1e-3);
};

// Uniform-weight measure over the given values; duplicates merge with summed
// weights. Throws AtomOutOfRange for values outside [0,1).
SingularMeasure realize_H(std::span<const double> lambda_values, double delta_guard = 1e-3);

enum class Dist { gaussian, gamma42, rademacher, uniform };

const char* dist_name(Dist d);
Dist dist_from_name(const std::string& name);

// Everything needed to simulate one model: dimensions, the p singular values
// of the canonical diagonal embedding Lambda = [diag(lambda) | 0], the entry
// distribution (standardized to mean 0, variance 1), RNG seed, and an optional
// seeded orthogonal rotation of Lambda's left/right factors.
struct ModelConfig {
    Dimensions dims;
    std::vector<double> lambda;
    Dist dist = Dist::gaussian;
    std::uint64_t seed = 1;
    bool rotate = false;
    double delta_guard = 1e-3;

    std::uint64_t hash() const;
    SingularMeasure realized_H() const { return realize_H(lambda, delta_guard); }
};

// Convenience builders for the standard simulation settings: lambda value v on
// the first `rank` coordinates, 0 on the rest (rank = p gives v * I_p).
ModelConfig make_config(int p, int q, int n, double lambda_value, int rank, Dist dist,
                        std::uint64_t seed, bool rotate = false);
ModelConfig make_null_config(int p, int q, int n, Dist dist, std::uint64_t seed);

struct ValidationIssue {
    std::string assumption;  // e.g. "Assumption 2.1"
    std::string message;
    double value = 0.0;
};

struct ValidationReport {
    bool pass = true;
    std::vector<ValidationIssue> issues;
    std::string summary() const;
};

// Report-only check of the model assumptions: dimension ratios (2.1), entry
// distribution moments (2.2), and the singular spectrum guard (2.3). A passing
// config satisfies every downstream precondition on the model.
ValidationReport validate(const ModelConfig& config);

// Throws InvalidConfig when validate() fails; used by ops that require a
// valid config.
void require_valid(const ModelConfig& config);

// JSON config schema (schema_version 1), documented in docs/config-schema.md.
ModelConfig config_from_json(const nlohmann::json& j);
nlohmann::json config_to_json(const ModelConfig& config);
ModelConfig load_config(const std::string& path);

}  // namespace cca
