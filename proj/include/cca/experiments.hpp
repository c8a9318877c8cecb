#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cca/lsd.hpp"
#include "cca/model.hpp"

namespace cca {

enum class ComparisonKind { ks, w1, both };

struct ExperimentSpec {
    ModelConfig config;
    int replicates = 20;
    std::vector<double> density_grid;  // defaults to linspace(0, 1, 501)
    ComparisonKind comparison = ComparisonKind::both;
    DensityOptions density_opts;
    int threads = 0;  // 0 = hardware concurrency
};

struct Quantiles {
    double min = 0.0, q25 = 0.0, q50 = 0.0, q75 = 0.0, max = 0.0;
};

struct GapInfo {
    bool detected = false;
    double lo = 0.0;
    double hi = 0.0;
};

struct ComparisonReport {
    double ks = 0.0;
    double w1 = 0.0;
    Quantiles esd_summary;
    double lsd_mass = 0.0;
    std::int64_t runtime_ms = 0;
    GapInfo gap;
    int replicates_done = 0;
    int replicates_failed = 0;
};

// Piecewise-linear CDF of a density curve (cumulative trapezoid plus the
// detected atom at zero), normalized to total mass one.
struct LsdCdf {
    std::vector<double> xs;
    std::vector<double> cum;  // normalized, cum.back() == 1
    double operator()(double x) const;

    static LsdCdf from_curve(const DensityCurve& curve);
};

// Kolmogorov-Smirnov distance between the empirical CDF of sorted samples and
// a reference CDF.
double ks_distance(const std::vector<double>& sorted_samples, const LsdCdf& cdf);

// 1-Wasserstein distance: integral of |F_emp - F_ref| with exact handling of
// the step/linear crossings.
double w1_distance(const std::vector<double>& sorted_samples, const LsdCdf& cdf);

Quantiles compute_quantiles(const std::vector<double>& sorted_values);

// Interior density gap: a run of >= min_run consecutive grid points with
// f < threshold strictly inside the support hull.
GapInfo detect_gap(const DensityCurve& curve, double threshold = 1e-3, int min_run = 5);

// Squared canonical correlations pooled over replicates, sorted ascending.
// Replicates run in parallel on disjoint seed substreams; pooling order is
// independent of scheduling.
std::vector<double> pooled_scc_esd(const ModelConfig& config, int replicates, int threads = 0,
                                   int* failures = nullptr);

// Full pipeline: pool the ESD over replicates, solve the LSD density for the
// config's H and ratios (finite-n mode), and compare the two.
struct ExperimentArtifacts {
    ComparisonReport report;
    std::vector<double> pooled;  // sorted ascending
    DensityCurve curve;
};
ExperimentArtifacts run_experiment_artifacts(const ExperimentSpec& spec);
ComparisonReport run_experiment(const ExperimentSpec& spec);

// The three simulated configurations (rank 5, rank p/2, full rank, all with
// squared singular value 1/2 and gamma42 entries) at dimensions
// round(scale * (1000, 3000, 8000)). Writes <case>/esd.csv (histogram),
// <case>/lsd.csv and <case>/report.json under output_dir.
struct Figure1Options {
    int replicates = 20;
    int grid_points = 501;
    int histogram_bins = 50;
    std::uint64_t seed = 1;
    int threads = 0;
    std::string output_dir;  // empty = no files written
};
std::vector<ComparisonReport> figure1_suite(double scale, const Figure1Options& opts = {});

// Case configs used by figure1_suite, exposed for tests.
std::vector<ModelConfig> figure1_configs(double scale, std::uint64_t seed);
const char* figure1_case_name(std::size_t index);

void write_histogram_csv(const std::string& path, const std::vector<double>& sorted_values,
                         int bins, double lo = 0.0, double hi = 1.0);
void write_report_json(const std::string& path, const ComparisonReport& report,
                       const ModelConfig& config, const std::string& case_name, int replicates);

}  // namespace cca
