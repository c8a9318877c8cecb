#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cca/model.hpp"

namespace cca {

using cxd = std::complex<double>;

// Inputs of the equation system: dimension ratios, the singular measure H of
// the population cross-correlation factor, and (in finite_n mode) the exact
// sample dimensions.
struct EquationContext {
    RatioParams ratios;
    SingularMeasure H;
    Dimensions dims;
};

EquationContext make_context(const ModelConfig& config, RatioMode mode = RatioMode::finite_n);
EquationContext make_context(SingularMeasure H, RatioParams ratios, Dimensions dims = {});

// Mode-resolved scalars shared by every formula below: exact sample ratios in
// finite_n mode, their limits in limit mode.
struct ResolvedRatios {
    double pn;    // p/n   | c1
    double qn;    // q/n   | c2
    double pq;    // p/q   | c1/c2
    double p_nq;  // p/(n-q)  | c1/(1-c2)
    double nq_q;  // (n-q)/q  | (1-c2)/c2
    double n_q;   // n/q   | 1/c2
};
ResolvedRatios resolve_ratios(const EquationContext& ctx);

// Coefficient functions of the master equation. Both take the candidate
// Stieltjes transform value m at spectral parameter z.
cxd g1(cxd z, cxd m, const EquationContext& ctx);
cxd g2(cxd z, cxd m, const EquationContext& ctx);

// Residual of the master equation:
//   G1 * (n-q over q scaled bracket of m)  -  sum_i w_i [ t(x_i) - G2/G1 ]^{-1},
// with t(x) = (n/q) x^2 / (1 - x^2) over the atoms of H. Zero exactly at the
// Stieltjes transform of the limiting SCC spectral law.
cxd equation_residual(cxd z, cxd m, const EquationContext& ctx);

struct SolveOptions {
    double tol = 1e-12;
    int max_iter = 500;
};

// Solves the master equation for m(z) by damped Newton iteration starting
// from init (default -1/z), accepting only the upper-half-plane branch.
// Throws NoConvergence / WrongBranch.
cxd solve_m(cxd z, const EquationContext& ctx, std::optional<cxd> init = std::nullopt,
            const SolveOptions& opts = {});

struct StieltjesSolution {
    std::vector<cxd> grid;
    std::vector<cxd> m;
    std::vector<double> residual;
    std::vector<char> converged;

    std::size_t size() const { return grid.size(); }
};

// Per-point solve with continuation warm starts along the grid. Failures are
// recorded per point; the grid never aborts.
StieltjesSolution solve_grid(const std::vector<cxd>& grid, const EquationContext& ctx,
                             const SolveOptions& opts = {});

struct DensityCurve {
    std::vector<double> xs;
    std::vector<double> fs;
    std::vector<char> flagged;          // true where the solver failed
    std::vector<double> eps_schedule;
    double mass = 0.0;                  // trapezoid mass of the continuous part
    double atom_mass_at_zero = 0.0;     // detected mass deficit, reported separately
    double min_preclamped = 0.0;        // most negative extrapolated value before clamping
};

struct DensityOptions {
    std::vector<double> eps_schedule = {1e-2, 5e-3, 2.5e-3};
    SolveOptions solve;
};

// Density of the limiting SCC spectral law on the grid xs: evaluates
// (1/pi) Im m(x + i eps) over the eps schedule and extrapolates linearly to
// eps = 0, clamping negative values.
DensityCurve density(const EquationContext& ctx, const std::vector<double>& xs,
                     const DensityOptions& opts = {});

// Variable substitution between the singular-value scale x and the
// noncentrality scale t: t = (n/q) x^2 / (1 - x^2) and its exact inverse.
double pushforward_t(double x, const EquationContext& ctx);
double pullback_x(double t, const EquationContext& ctx);

// Stieltjes transform of the limiting law of the noncentral parameter matrix:
// solves m = sum_i w_i [ t_i (1 - c1 - c1 z m) - z ]^{-1} over the pushforward
// atoms t_i of H.
cxd m_xi_solve(cxd z, const EquationContext& ctx, std::optional<cxd> init = std::nullopt,
               const SolveOptions& opts = {});

// Density over t of the noncentral-parameter law, by the same inversion
// machinery as density(); feeds mF_residual.
DensityCurve xi_density(const EquationContext& ctx, const std::vector<double>& ts,
                        const DensityOptions& opts = {});

// Fractional-linear correspondence between the SCC transform m at z and the
// noncentral Fisher transform mF at zF = z (n-q) / (q (1-z)).
struct FisherPoint {
    cxd zF;
    cxd mF;
};
FisherPoint mF_from_m(cxd z, cxd m, const EquationContext& ctx);
cxd m_from_mF(cxd z, cxd mF, const EquationContext& ctx);

// The (a, b) pair built from M = (1-z)m - 1 that satisfies the
// noncentral-parameter pair equation when m solves the master equation.
struct PairAB {
    cxd a;
    cxd b;
};
PairAB pair_ab(cxd z, cxd m, const EquationContext& ctx);

// Residual of the pair equation b = sum_i w_i [ t_i (1 - p/n - (p/n) a b) - a ]^{-1}.
cxd pair_residual(cxd a, cxd b, const EquationContext& ctx);

// Residual of the noncentral Fisher transform equation at (zF, mF), integrated
// against a density curve over t (trapezoid; mass deficit is treated as an
// atom at t = 0).
cxd mF_residual(cxd zF, cxd mF, const DensityCurve& h_xi, const EquationContext& ctx);

// Maps the Stieltjes transform mb of the block matrix LSD at z to the SCC
// transform at (1-z)^2.
struct SccPoint {
    cxd z_scc;
    cxd m;
};
SccPoint m_from_mb(cxd z, cxd mb, const EquationContext& ctx);

// CSV exports: (re_z, im_z, re_m, im_m, residual, converged) and (x, f, flagged).
void write_solution_csv(const std::string& path, const StieltjesSolution& sol);
void write_density_csv(const std::string& path, const DensityCurve& curve);

// Evenly spaced grid helper for CLI "--grid a:b:count" arguments.
std::vector<double> linspace(double a, double b, int count);

}  // namespace cca
