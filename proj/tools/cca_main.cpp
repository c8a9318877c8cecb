// Command-line front end: validate | simulate | solve | density | verify |
// compare | figure1. Exit codes: 0 success, 1 config/validation failure,
// 2 numerical non-convergence.
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "cca/errors.hpp"
#include "cca/experiments.hpp"
#include "cca/io_util.hpp"
#include "cca/lsd.hpp"
#include "cca/model.hpp"
#include "cca/sampling.hpp"
#include "cca/spectra.hpp"

namespace {

struct GridSpec {
    double lo = 0.0;
    double hi = 1.0;
    int count = 501;
};

GridSpec parse_grid(const std::string& s) {
    GridSpec g;
    if (std::sscanf(s.c_str(), "%lf:%lf:%d", &g.lo, &g.hi, &g.count) != 3 || g.count < 2 ||
        !(g.hi > g.lo)) {
        throw CLI::ValidationError("--grid", "expected a:b:count with b > a, count >= 2");
    }
    return g;
}

std::vector<double> parse_eps_schedule(const std::string& s) {
    std::vector<double> eps;
    std::size_t pos = 0;
    while (pos < s.size()) {
        std::size_t next = s.find(',', pos);
        if (next == std::string::npos) next = s.size();
        eps.push_back(std::stod(s.substr(pos, next - pos)));
        pos = next + 1;
    }
    if (eps.size() < 2) {
        throw CLI::ValidationError("--eps-schedule", "need at least two epsilon values");
    }
    return eps;
}

// Applies --set key=value overrides onto the raw config JSON. Dotted paths
// descend into objects (lambda.value=0.5); values parse as JSON scalars with
// a string fallback.
void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides) {
    for (const auto& kv : overrides) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw cca::InvalidConfig("override '" + kv + "' is not key=value");
        }
        const std::string path = kv.substr(0, eq);
        const std::string raw = kv.substr(eq + 1);
        nlohmann::json value;
        try {
            value = nlohmann::json::parse(raw);
        } catch (...) {
            value = raw;
        }
        nlohmann::json* node = &j;
        std::size_t pos = 0;
        while (true) {
            const std::size_t dot = path.find('.', pos);
            const std::string key = path.substr(pos, dot == std::string::npos ? dot : dot - pos);
            if (dot == std::string::npos) {
                (*node)[key] = value;
                break;
            }
            node = &(*node)[key];
            pos = dot + 1;
        }
    }
}

cca::ModelConfig load_config_with_overrides(const std::string& path,
                                            const std::vector<std::string>& overrides,
                                            std::optional<std::uint64_t> seed_override) {
    std::ifstream in(path);
    if (!in) throw cca::IoError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const std::exception& e) {
        throw cca::InvalidConfig("config '" + path + "' is not valid JSON: " + e.what());
    }
    apply_overrides(j, overrides);
    if (seed_override) j["seed"] = *seed_override;
    return cca::config_from_json(j);
}

std::filesystem::path ensure_dir(const std::string& dir) {
    std::filesystem::path p = dir.empty() ? "." : dir;
    std::filesystem::create_directories(p);
    return p;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Spectra of sample canonical correlation matrices: finite-sample "
                 "identities, limiting spectral distributions, and Monte Carlo comparison"};
    app.require_subcommand(1);

    std::string config_path;
    std::string output_dir;
    std::vector<std::string> overrides;
    std::optional<std::uint64_t> seed_override;
    int threads = 0;
    std::string grid_arg = "0:1:501";
    std::string eps_arg = "0.01,0.005,0.0025";
    std::string mode_arg = "finite";

    app.add_option("--threads", threads, "max worker threads (0 = auto)")->capture_default_str();

    auto add_common = [&](CLI::App* sub, bool needs_config = true) {
        auto* opt = sub->add_option("--config", config_path, "path to JSON model config");
        if (needs_config) opt->required();
        sub->add_option("--output", output_dir, "output directory");
        sub->add_option("--set", overrides, "config overrides key=value (dotted paths)");
        sub->add_option("--seed", seed_override, "override the config seed");
    };

    auto* validate_cmd = app.add_subcommand("validate", "check a config against the model assumptions");
    add_common(validate_cmd);

    auto* simulate_cmd = app.add_subcommand("simulate", "draw a replicate and export its spectra");
    add_common(simulate_cmd);
    int replicate_id = 0;
    bool dump_matrices = false;
    simulate_cmd->add_option("--replicate", replicate_id, "replicate id")->capture_default_str();
    simulate_cmd->add_flag("--dump", dump_matrices, "also dump X and Y as binary matrices");

    auto* solve_cmd = app.add_subcommand("solve", "solve the Stieltjes transform on a grid");
    add_common(solve_cmd);
    double solve_im = 0.01;
    double solver_tol = 1e-12;
    solve_cmd->add_option("--grid", grid_arg, "real grid a:b:count")->capture_default_str();
    solve_cmd->add_option("--tol", solver_tol, "solver residual tolerance")->capture_default_str();
    solve_cmd->add_option("--im", solve_im, "imaginary offset of the grid")->capture_default_str();
    solve_cmd->add_option("--mode", mode_arg, "ratio mode: finite | limit")->capture_default_str();

    auto* density_cmd = app.add_subcommand("density", "recover the LSD density on a grid");
    add_common(density_cmd);
    density_cmd->add_option("--grid", grid_arg, "real grid a:b:count")->capture_default_str();
    density_cmd->add_option("--eps-schedule", eps_arg, "epsilon extrapolation schedule")
        ->capture_default_str();
    density_cmd->add_option("--tol", solver_tol, "solver residual tolerance")->capture_default_str();
    density_cmd->add_option("--mode", mode_arg, "ratio mode: finite | limit")->capture_default_str();

    auto* verify_cmd = app.add_subcommand("verify", "finite-sample eigenvalue/trace identity checks");
    add_common(verify_cmd);
    int verify_reps = 1;
    verify_cmd->add_option("--replicates", verify_reps, "replicates to verify")->capture_default_str();

    auto* compare_cmd = app.add_subcommand("compare", "Monte Carlo ESD vs solved LSD");
    add_common(compare_cmd);
    int compare_reps = 20;
    int histogram_bins = 50;
    compare_cmd->add_option("--replicates", compare_reps, "Monte Carlo replicates")
        ->capture_default_str();
    compare_cmd->add_option("--grid", grid_arg, "density grid a:b:count")->capture_default_str();
    compare_cmd->add_option("--bins", histogram_bins, "histogram bins for esd.csv")
        ->capture_default_str();

    auto* figure1_cmd = app.add_subcommand("figure1", "run the three-configuration simulation suite");
    add_common(figure1_cmd, /*needs_config=*/false);
    double scale = 0.125;
    int fig_reps = 20;
    figure1_cmd->add_option("--scale", scale, "dimension scale in (0, 1]")->capture_default_str();
    figure1_cmd->add_option("--replicates", fig_reps, "replicates per case")->capture_default_str();
    figure1_cmd->add_option("--bins", histogram_bins, "histogram bins for esd.csv")
        ->capture_default_str();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*validate_cmd) {
            const auto config = load_config_with_overrides(config_path, overrides, seed_override);
            const auto report = cca::validate(config);
            if (report.pass) {
                std::cout << "ok: " << report.summary() << "\n";
                return 0;
            }
            std::cout << "invalid: " << report.summary() << "\n";
            return 1;
        }

        if (*simulate_cmd) {
            const auto config = load_config_with_overrides(config_path, overrides, seed_override);
            cca::require_valid(config);
            const auto dir = ensure_dir(output_dir);
            const auto sample = cca::draw_sample(config, replicate_id);
            const auto scc = cca::canonical_correlations(sample);
            cca::write_spectrum_csv((dir / "scc.csv").string(), scc);
            cca::write_spectrum_csv((dir / "block_b.csv").string(),
                                    cca::block_matrix_eigenvalues(sample));
            if (dump_matrices) {
                cca::dump_matrix((dir / "X.bin").string(), sample.X);
                cca::dump_matrix((dir / "Y.bin").string(), sample.Y);
            }
            std::cout << "replicate " << replicate_id << ": wrote spectra to " << dir.string()
                      << " (top correlation " << cca::format_double(scc.values.front()) << ")\n";
            return 0;
        }

        const auto mode = mode_arg == "limit" ? cca::RatioMode::limit : cca::RatioMode::finite_n;

        if (*solve_cmd) {
            const auto config = load_config_with_overrides(config_path, overrides, seed_override);
            const auto ctx = cca::make_context(config, mode);
            const auto g = parse_grid(grid_arg);
            std::vector<cca::cxd> zs;
            for (double x : cca::linspace(g.lo, g.hi, g.count)) zs.emplace_back(x, solve_im);
            cca::SolveOptions sopts;
            sopts.tol = solver_tol;
            const auto sol = cca::solve_grid(zs, ctx, sopts);
            const auto dir = ensure_dir(output_dir);
            cca::write_solution_csv((dir / "solution.csv").string(), sol);
            std::size_t ok = 0;
            for (char c : sol.converged) ok += c ? 1 : 0;
            std::cout << "solved " << ok << "/" << sol.size() << " grid points, wrote "
                      << (dir / "solution.csv").string() << "\n";
            if (ok < sol.size()) return 2;
            return 0;
        }

        if (*density_cmd) {
            const auto config = load_config_with_overrides(config_path, overrides, seed_override);
            const auto ctx = cca::make_context(config, mode);
            const auto g = parse_grid(grid_arg);
            cca::DensityOptions opts;
            opts.eps_schedule = parse_eps_schedule(eps_arg);
            opts.solve.tol = solver_tol;
            const auto curve = cca::density(ctx, cca::linspace(g.lo, g.hi, g.count), opts);
            const auto dir = ensure_dir(output_dir);
            cca::write_density_csv((dir / "lsd.csv").string(), curve);
            std::cout << "density mass " << cca::format_double(curve.mass);
            if (curve.atom_mass_at_zero > 0) {
                std::cout << " plus atom at zero " << cca::format_double(curve.atom_mass_at_zero);
            }
            std::cout << ", wrote " << (dir / "lsd.csv").string() << "\n";
            return 0;
        }

        if (*verify_cmd) {
            const auto config = load_config_with_overrides(config_path, overrides, seed_override);
            cca::require_valid(config);
            const cca::Sampler sampler(config);
            nlohmann::json out = nlohmann::json::array();
            bool all_pass = true;
            for (int r = 0; r < verify_reps; ++r) {
                const auto report =
                    cca::verify_theorem21(sampler.draw(r), cca::cxd(0.37, 0.61));
                const bool pass = report.pass(1e-8);
                all_pass = all_pass && pass;
                out.push_back({{"replicate", r},
                               {"block_multiset_distance", report.block_multiset_distance},
                               {"trace_identity_residual", report.trace_identity_residual},
                               {"projection_multiset_distance", report.projection_multiset_distance},
                               {"projection_zero_count", report.projection_zero_count},
                               {"expected_zero_count", report.expected_zero_count},
                               {"pass", pass}});
                std::cout << "replicate " << r << ": block " << report.block_multiset_distance
                          << ", trace " << report.trace_identity_residual << ", projection "
                          << report.projection_multiset_distance << (pass ? " [pass]" : " [FAIL]")
                          << "\n";
            }
            if (!output_dir.empty()) {
                const auto dir = ensure_dir(output_dir);
                std::ofstream f(dir / "identity_report.json");
                f << out.dump(2) << "\n";
            }
            return all_pass ? 0 : 2;
        }

        if (*compare_cmd) {
            const auto config = load_config_with_overrides(config_path, overrides, seed_override);
            cca::ExperimentSpec spec;
            spec.config = config;
            spec.replicates = compare_reps;
            const auto g = parse_grid(grid_arg);
            spec.density_grid = cca::linspace(g.lo, g.hi, g.count);
            spec.threads = threads;
            const auto art = cca::run_experiment_artifacts(spec);
            const auto dir = ensure_dir(output_dir);
            cca::write_histogram_csv((dir / "esd.csv").string(), art.pooled, histogram_bins);
            cca::write_density_csv((dir / "lsd.csv").string(), art.curve);
            cca::write_report_json((dir / "report.json").string(), art.report, config, "compare",
                                   compare_reps);
            std::cout << "ks " << cca::format_double(art.report.ks) << ", w1 "
                      << cca::format_double(art.report.w1) << ", lsd mass "
                      << cca::format_double(art.report.lsd_mass) << ", outputs in " << dir.string()
                      << "\n";
            return 0;
        }

        if (*figure1_cmd) {
            cca::Figure1Options opts;
            opts.replicates = fig_reps;
            opts.histogram_bins = histogram_bins;
            opts.seed = seed_override.value_or(1);
            opts.threads = threads;
            opts.output_dir = ensure_dir(output_dir.empty() ? "figure1_out" : output_dir).string();
            if (scale > 0.5) {
                std::cout << "note: scale " << scale << " runs the near-paper dimensions; "
                          << "expect a long runtime\n";
            }
            const auto reports = cca::figure1_suite(scale, opts);
            for (std::size_t i = 0; i < reports.size(); ++i) {
                std::cout << cca::figure1_case_name(i) << ": ks "
                          << cca::format_double(reports[i].ks) << ", gap "
                          << (reports[i].gap.detected ? "yes" : "no") << "\n";
            }
            std::cout << "outputs in " << opts.output_dir << "\n";
            return 0;
        }
    } catch (const cca::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.is_numerical() ? 2 : 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
