#include "cca/model.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "cca/errors.hpp"

namespace cca {

double SingularMeasure::total_weight() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.w;
    return s;
}

double SingularMeasure::max_atom() const {
    double m = 0.0;
    for (const auto& a : atoms) m = std::max(m, a.x);
    return m;
}

SingularMeasure SingularMeasure::point_mass(double x, double delta_guard) {
    SingularMeasure h;
    h.delta_guard = delta_guard;
    h.atoms.push_back({x, 1.0});
    return h;
}

SingularMeasure realize_H(std::span<const double> lambda_values, double delta_guard) {
    if (lambda_values.empty()) throw InvalidConfig("realize_H needs at least one singular value");
    std::vector<double> vals(lambda_values.begin(), lambda_values.end());
    for (double v : vals) {
        if (!(v >= 0.0) || v >= 1.0) {
            throw AtomOutOfRange("singular value " + std::to_string(v) + " outside [0,1)");
        }
    }
    std::sort(vals.begin(), vals.end());
    SingularMeasure h;
    h.delta_guard = delta_guard;
    const double w = 1.0 / static_cast<double>(vals.size());
    for (std::size_t i = 0; i < vals.size();) {
        std::size_t j = i;
        while (j < vals.size() && vals[j] == vals[i]) ++j;
        h.atoms.push_back({vals[i], w * static_cast<double>(j - i)});
        i = j;
    }
    return h;
}

const char* dist_name(Dist d) {
    switch (d) {
        case Dist::gaussian:   return "gaussian";
        case Dist::gamma42:    return "gamma42";
        case Dist::rademacher: return "rademacher";
        case Dist::uniform:    return "uniform";
    }
    return "unknown";
}

Dist dist_from_name(const std::string& name) {
    if (name == "gaussian") return Dist::gaussian;
    if (name == "gamma42" || name == "gamma42-standardized") return Dist::gamma42;
    if (name == "rademacher") return Dist::rademacher;
    if (name == "uniform" || name == "uniform-standardized") return Dist::uniform;
    throw InvalidConfig("unknown distribution '" + name + "'");
}

std::uint64_t ModelConfig::hash() const {
    auto mix = [](std::uint64_t h, std::uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
        return h;
    };
    std::uint64_t h = 0x6363612d68617368ULL;
    h = mix(h, static_cast<std::uint64_t>(dims.p));
    h = mix(h, static_cast<std::uint64_t>(dims.q));
    h = mix(h, static_cast<std::uint64_t>(dims.n));
    h = mix(h, static_cast<std::uint64_t>(dist));
    h = mix(h, seed);
    h = mix(h, rotate ? 1u : 0u);
    h = mix(h, std::bit_cast<std::uint64_t>(delta_guard));
    for (double v : lambda) h = mix(h, std::bit_cast<std::uint64_t>(v));
    return h;
}

ModelConfig make_config(int p, int q, int n, double lambda_value, int rank, Dist dist,
                        std::uint64_t seed, bool rotate) {
    ModelConfig c;
    c.dims = {p, q, n};
    c.lambda.assign(static_cast<std::size_t>(std::max(p, 0)), 0.0);
    for (int i = 0; i < std::min(rank, p); ++i) c.lambda[static_cast<std::size_t>(i)] = lambda_value;
    c.dist = dist;
    c.seed = seed;
    c.rotate = rotate;
    return c;
}

ModelConfig make_null_config(int p, int q, int n, Dist dist, std::uint64_t seed) {
    return make_config(p, q, n, 0.0, 0, dist, seed);
}

std::string ValidationReport::summary() const {
    if (pass) return "all assumptions satisfied";
    std::ostringstream os;
    for (std::size_t i = 0; i < issues.size(); ++i) {
        if (i) os << "; ";
        os << issues[i].assumption << " violated: " << issues[i].message;
    }
    return os.str();
}

ValidationReport validate(const ModelConfig& config) {
    ValidationReport report;
    auto fail = [&](const std::string& assumption, const std::string& msg, double value) {
        report.pass = false;
        report.issues.push_back({assumption, msg, value});
    };

    const auto& d = config.dims;
    if (d.p <= 0 || d.q <= 0 || d.n <= 0) {
        fail("Assumption 2.1", "dimensions must be positive", 0.0);
        return report;
    }
    if (d.p >= d.q) {
        fail("Assumption 2.1", "p/q = " + std::to_string(d.p_over_q()) + " must be < 1",
             d.p_over_q());
    }
    if (d.p + d.q >= d.n) {
        const double r = static_cast<double>(d.p + d.q) / d.n;
        fail("Assumption 2.1", "(p+q)/n = " + std::to_string(r) + " must be < 1", r);
    }

    // All four supported families have mean 0, variance 1, finite fourth
    // moment by construction; anything else is rejected at parse time.
    switch (config.dist) {
        case Dist::gaussian:
        case Dist::gamma42:
        case Dist::rademacher:
        case Dist::uniform:
            break;
        default:
            fail("Assumption 2.2", "unsupported entry distribution", 0.0);
    }

    if (static_cast<int>(config.lambda.size()) != d.p) {
        fail("Assumption 2.3",
             "number of singular values (" + std::to_string(config.lambda.size()) +
                 ") must equal p (" + std::to_string(d.p) + ")",
             static_cast<double>(config.lambda.size()));
    }
    for (double v : config.lambda) {
        if (!(v >= 0.0) || v >= 1.0 - config.delta_guard) {
            fail("Assumption 2.3",
                 "singular value " + std::to_string(v) + " outside [0, 1-delta), delta = " +
                     std::to_string(config.delta_guard),
                 v);
            break;
        }
    }
    return report;
}

void require_valid(const ModelConfig& config) {
    const auto report = validate(config);
    if (!report.pass) throw InvalidConfig(report.summary());
}

namespace {

std::vector<double> lambda_from_json(const nlohmann::json& j, int p) {
    const std::string kind = j.at("kind").get<std::string>();
    if (kind == "scaled-identity") {
        const double v = j.at("value").get<double>();
        return std::vector<double>(static_cast<std::size_t>(p), v);
    }
    if (kind == "block") {
        const double v = j.at("value").get<double>();
        const int rank = j.at("rank").get<int>();
        if (rank < 0 || rank > p) throw InvalidConfig("lambda block rank must be in [0, p]");
        std::vector<double> out(static_cast<std::size_t>(p), 0.0);
        for (int i = 0; i < rank; ++i) out[static_cast<std::size_t>(i)] = v;
        return out;
    }
    if (kind == "explicit") {
        auto vals = j.at("values").get<std::vector<double>>();
        if (static_cast<int>(vals.size()) != p) {
            throw InvalidConfig("lambda values must have length p");
        }
        return vals;
    }
    throw InvalidConfig("unknown lambda kind '" + kind + "'");
}

}  // namespace

ModelConfig config_from_json(const nlohmann::json& j) {
    if (j.contains("schema_version") && j.at("schema_version").get<int>() != 1) {
        throw InvalidConfig("unsupported schema_version");
    }
    ModelConfig c;
    c.dims.p = j.at("p").get<int>();
    c.dims.q = j.at("q").get<int>();
    c.dims.n = j.at("n").get<int>();
    c.lambda = lambda_from_json(j.at("lambda"), c.dims.p);
    c.dist = dist_from_name(j.value("dist", std::string("gaussian")));
    c.seed = j.value("seed", std::uint64_t{1});
    c.rotate = j.value("rotate", false);
    c.delta_guard = j.value("delta_guard", 1e-3);
    return c;
}

nlohmann::json config_to_json(const ModelConfig& config) {
    nlohmann::json j;
    j["schema_version"] = 1;
    j["p"] = config.dims.p;
    j["q"] = config.dims.q;
    j["n"] = config.dims.n;
    // Emit the most compact lambda kind that reproduces the values.
    const auto& l = config.lambda;
    const bool all_equal = !l.empty() && std::all_of(l.begin(), l.end(), [&](double v) {
        return v == l.front();
    });
    std::size_t rank = 0;
    while (rank < l.size() && l[rank] != 0.0) ++rank;
    const bool is_block = rank < l.size() && !l.empty() &&
        std::all_of(l.begin(), l.begin() + static_cast<std::ptrdiff_t>(rank),
                    [&](double v) { return v == l.front(); }) &&
        std::all_of(l.begin() + static_cast<std::ptrdiff_t>(rank), l.end(),
                    [](double v) { return v == 0.0; });
    if (all_equal) {
        j["lambda"] = {{"kind", "scaled-identity"}, {"value", l.front()}};
    } else if (is_block) {
        j["lambda"] = {{"kind", "block"}, {"value", l.front()}, {"rank", rank}};
    } else {
        j["lambda"] = {{"kind", "explicit"}, {"values", l}};
    }
    j["dist"] = dist_name(config.dist);
    j["seed"] = config.seed;
    j["rotate"] = config.rotate;
    j["delta_guard"] = config.delta_guard;
    return j;
}

ModelConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw InvalidConfig("config '" + path + "' is not valid JSON: " + e.what());
    }
    return config_from_json(j);
}

}  // namespace cca
