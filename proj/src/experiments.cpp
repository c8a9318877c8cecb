#include "cca/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "cca/errors.hpp"
#include "cca/io_util.hpp"
#include "cca/spectra.hpp"

namespace cca {

namespace {

int effective_threads(int requested) {
    if (requested > 0) return requested;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 2;
}

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
    const int workers = std::min(effective_threads(threads), std::max(count, 1));
    if (workers <= 1) {
        for (int i = 0; i < count; ++i) body(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(workers));
    for (int w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) body(i);
        });
    }
    for (auto& t : pool) t.join();
}

}  // namespace

double LsdCdf::operator()(double x) const {
    if (xs.empty()) return 0.0;
    if (x <= xs.front()) return x < 0.0 ? 0.0 : cum.front();
    if (x >= xs.back()) return cum.back();
    const auto it = std::upper_bound(xs.begin(), xs.end(), x);
    const std::size_t hi = static_cast<std::size_t>(it - xs.begin());
    const std::size_t lo = hi - 1;
    const double span = xs[hi] - xs[lo];
    const double frac = span > 0.0 ? (x - xs[lo]) / span : 0.0;
    return cum[lo] + frac * (cum[hi] - cum[lo]);
}

LsdCdf LsdCdf::from_curve(const DensityCurve& curve) {
    LsdCdf cdf;
    cdf.xs = curve.xs;
    cdf.cum.assign(curve.xs.size(), 0.0);
    double acc = curve.atom_mass_at_zero;
    cdf.cum[0] = acc;
    for (std::size_t i = 1; i < curve.xs.size(); ++i) {
        acc += 0.5 * (curve.fs[i] + curve.fs[i - 1]) * (curve.xs[i] - curve.xs[i - 1]);
        cdf.cum[i] = acc;
    }
    const double total = cdf.cum.back();
    if (total > 0.0) {
        for (double& c : cdf.cum) c /= total;
    }
    return cdf;
}

double ks_distance(const std::vector<double>& sorted_samples, const LsdCdf& cdf) {
    const std::size_t n = sorted_samples.size();
    if (n == 0) return 1.0;
    double ks = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = cdf(sorted_samples[i]);
        const double lo = static_cast<double>(i) / static_cast<double>(n);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n);
        ks = std::max(ks, std::max(f - lo, hi - f));
    }
    return ks;
}

double w1_distance(const std::vector<double>& sorted_samples, const LsdCdf& cdf) {
    // Union breakpoints of the step CDF and the piecewise-linear CDF.
    std::vector<double> pts;
    pts.reserve(sorted_samples.size() + cdf.xs.size() + 2);
    pts.push_back(0.0);
    pts.insert(pts.end(), sorted_samples.begin(), sorted_samples.end());
    pts.insert(pts.end(), cdf.xs.begin(), cdf.xs.end());
    pts.push_back(1.0);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());

    const double n = static_cast<double>(sorted_samples.size());
    double w1 = 0.0;
    std::size_t count_le = 0;
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
        const double u = pts[i];
        const double v = pts[i + 1];
        while (count_le < sorted_samples.size() && sorted_samples[count_le] <= u) ++count_le;
        const double femp = n > 0 ? static_cast<double>(count_le) / n : 0.0;
        const double du = cdf(u) - femp;
        const double dv = cdf(v) - femp;
        if (du * dv >= 0.0) {
            w1 += 0.5 * (std::abs(du) + std::abs(dv)) * (v - u);
        } else {
            const double xi = u + (v - u) * std::abs(du) / (std::abs(du) + std::abs(dv));
            w1 += 0.5 * std::abs(du) * (xi - u) + 0.5 * std::abs(dv) * (v - xi);
        }
    }
    return w1;
}

Quantiles compute_quantiles(const std::vector<double>& sorted_values) {
    Quantiles q;
    if (sorted_values.empty()) return q;
    auto at = [&](double frac) {
        const double pos = frac * static_cast<double>(sorted_values.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        const std::size_t hi = std::min(lo + 1, sorted_values.size() - 1);
        const double w = pos - static_cast<double>(lo);
        return (1.0 - w) * sorted_values[lo] + w * sorted_values[hi];
    };
    q.min = sorted_values.front();
    q.q25 = at(0.25);
    q.q50 = at(0.50);
    q.q75 = at(0.75);
    q.max = sorted_values.back();
    return q;
}

GapInfo detect_gap(const DensityCurve& curve, double threshold, int min_run) {
    GapInfo gap;
    const auto& fs = curve.fs;
    const auto& xs = curve.xs;
    // Support hull: first and last grid points with appreciable density.
    std::ptrdiff_t lo = -1, hi = -1;
    for (std::size_t i = 0; i < fs.size(); ++i) {
        if (fs[i] >= threshold) {
            if (lo < 0) lo = static_cast<std::ptrdiff_t>(i);
            hi = static_cast<std::ptrdiff_t>(i);
        }
    }
    if (lo < 0 || hi <= lo) return gap;
    int run = 0;
    for (std::ptrdiff_t i = lo; i <= hi; ++i) {
        if (fs[static_cast<std::size_t>(i)] < threshold) {
            ++run;
            if (run >= min_run) {
                gap.detected = true;
                gap.lo = xs[static_cast<std::size_t>(i - run + 1)];
                gap.hi = xs[static_cast<std::size_t>(i)];
            }
        } else {
            if (gap.detected) break;
            run = 0;
        }
    }
    return gap;
}

std::vector<double> pooled_scc_esd(const ModelConfig& config, int replicates, int threads,
                                   int* failures) {
    require_valid(config);
    const Sampler sampler(config);
    const int p = config.dims.p;
    std::vector<std::vector<double>> per_rep(static_cast<std::size_t>(replicates));
    std::vector<char> failed(static_cast<std::size_t>(replicates), 0);
    parallel_for(replicates, threads, [&](int rep) {
        try {
            const auto spec = canonical_correlations(sampler.draw(rep));
            auto& slot = per_rep[static_cast<std::size_t>(rep)];
            slot.reserve(static_cast<std::size_t>(p));
            for (double l : spec.values) slot.push_back(l * l);
        } catch (const std::exception&) {
            failed[static_cast<std::size_t>(rep)] = 1;
        }
    });
    std::vector<double> pooled;
    pooled.reserve(static_cast<std::size_t>(replicates * p));
    int nfail = 0;
    for (int rep = 0; rep < replicates; ++rep) {
        if (failed[static_cast<std::size_t>(rep)]) {
            ++nfail;
            continue;
        }
        const auto& slot = per_rep[static_cast<std::size_t>(rep)];
        pooled.insert(pooled.end(), slot.begin(), slot.end());
    }
    if (failures) *failures = nfail;
    if (pooled.empty()) throw NoConvergence("all replicates failed");
    std::sort(pooled.begin(), pooled.end());
    return pooled;
}

ExperimentArtifacts run_experiment_artifacts(const ExperimentSpec& spec) {
    const auto start = std::chrono::steady_clock::now();
    ExperimentArtifacts art;
    if (spec.replicates < 1) throw InvalidConfig("replicates must be >= 1");

    int failures = 0;
    art.pooled = pooled_scc_esd(spec.config, spec.replicates, spec.threads, &failures);

    const auto ctx = make_context(spec.config, RatioMode::finite_n);
    const auto grid = spec.density_grid.empty() ? linspace(0.0, 1.0, 501) : spec.density_grid;
    art.curve = density(ctx, grid, spec.density_opts);

    const auto cdf = LsdCdf::from_curve(art.curve);
    auto& rep = art.report;
    if (spec.comparison != ComparisonKind::w1) rep.ks = ks_distance(art.pooled, cdf);
    if (spec.comparison != ComparisonKind::ks) rep.w1 = w1_distance(art.pooled, cdf);
    rep.esd_summary = compute_quantiles(art.pooled);
    rep.lsd_mass = art.curve.mass;
    rep.gap = detect_gap(art.curve);
    rep.replicates_done = spec.replicates - failures;
    rep.replicates_failed = failures;
    rep.runtime_ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                         std::chrono::steady_clock::now() - start)
                         .count();
    return art;
}

ComparisonReport run_experiment(const ExperimentSpec& spec) {
    return run_experiment_artifacts(spec).report;
}

std::vector<ModelConfig> figure1_configs(double scale, std::uint64_t seed) {
    if (!(scale > 0.0) || scale > 1.0) throw InvalidConfig("scale must be in (0, 1]");
    const int p = static_cast<int>(std::lround(scale * 1000));
    const int q = static_cast<int>(std::lround(scale * 3000));
    const int n = static_cast<int>(std::lround(scale * 8000));
    const double v = std::sqrt(0.5);
    return {
        make_config(p, q, n, v, 5, Dist::gamma42, seed),
        make_config(p, q, n, v, p / 2, Dist::gamma42, seed + 1),
        make_config(p, q, n, v, p, Dist::gamma42, seed + 2),
    };
}

const char* figure1_case_name(std::size_t index) {
    switch (index) {
        case 0: return "case1_rank5";
        case 1: return "case2_halfrank";
        case 2: return "case3_fullrank";
    }
    return "unknown";
}

void write_histogram_csv(const std::string& path, const std::vector<double>& sorted_values,
                         int bins, double lo, double hi) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    std::vector<int> counts(static_cast<std::size_t>(bins), 0);
    const double width = (hi - lo) / bins;
    for (double v : sorted_values) {
        int b = static_cast<int>((v - lo) / width);
        b = std::clamp(b, 0, bins - 1);
        ++counts[static_cast<std::size_t>(b)];
    }
    const double n = static_cast<double>(sorted_values.size());
    out << "bin_lo,bin_hi,count,density\n";
    for (int b = 0; b < bins; ++b) {
        const double bl = lo + b * width;
        const double bh = bl + width;
        const double dens = n > 0 ? counts[static_cast<std::size_t>(b)] / (n * width) : 0.0;
        out << format_double(bl) << ',' << format_double(bh) << ','
            << counts[static_cast<std::size_t>(b)] << ',' << format_double(dens) << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_report_json(const std::string& path, const ComparisonReport& report,
                       const ModelConfig& config, const std::string& case_name, int replicates) {
    nlohmann::json j;
    j["case"] = case_name;
    j["config"] = config_to_json(config);
    j["replicates"] = replicates;
    j["replicates_done"] = report.replicates_done;
    j["replicates_failed"] = report.replicates_failed;
    j["ks"] = report.ks;
    j["w1"] = report.w1;
    j["lsd_mass"] = report.lsd_mass;
    j["esd_quantiles"] = {{"min", report.esd_summary.min}, {"q25", report.esd_summary.q25},
                          {"q50", report.esd_summary.q50}, {"q75", report.esd_summary.q75},
                          {"max", report.esd_summary.max}};
    j["gap"] = {{"detected", report.gap.detected}, {"lo", report.gap.lo}, {"hi", report.gap.hi}};
    j["runtime_ms"] = report.runtime_ms;
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << j.dump(2) << "\n";
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<ComparisonReport> figure1_suite(double scale, const Figure1Options& opts) {
    const auto configs = figure1_configs(scale, opts.seed);
    std::vector<ComparisonReport> reports;
    reports.reserve(configs.size());
    for (std::size_t i = 0; i < configs.size(); ++i) {
        ExperimentSpec spec;
        spec.config = configs[i];
        spec.replicates = opts.replicates;
        spec.density_grid = linspace(0.0, 1.0, opts.grid_points);
        spec.threads = opts.threads;
        const auto art = run_experiment_artifacts(spec);
        if (!opts.output_dir.empty()) {
            const auto dir = std::filesystem::path(opts.output_dir) / figure1_case_name(i);
            std::filesystem::create_directories(dir);
            write_histogram_csv((dir / "esd.csv").string(), art.pooled, opts.histogram_bins);
            write_density_csv((dir / "lsd.csv").string(), art.curve);
            write_report_json((dir / "report.json").string(), art.report, configs[i],
                              figure1_case_name(i), opts.replicates);
        }
        reports.push_back(art.report);
    }
    return reports;
}

}  // namespace cca
