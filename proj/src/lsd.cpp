#include "cca/lsd.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <future>
#include <limits>
#include <numbers>

#include "cca/errors.hpp"
#include "cca/io_util.hpp"

namespace cca {

namespace {

constexpr double kTinyRel = 1e-14;

double trapezoid(const std::vector<double>& xs, const std::vector<double>& ys) {
    double s = 0.0;
    for (std::size_t i = 1; i < xs.size(); ++i) {
        s += 0.5 * (ys[i] + ys[i - 1]) * (xs[i] - xs[i - 1]);
    }
    return s;
}

bool near_zero(cxd v, double scale) { return std::abs(v) < kTinyRel * scale; }

}  // namespace

EquationContext make_context(const ModelConfig& config, RatioMode mode) {
    require_valid(config);
    RatioParams ratios{config.dims.p_over_n(), config.dims.q_over_n(), mode};
    return make_context(config.realized_H(), ratios, config.dims);
}

EquationContext make_context(SingularMeasure H, RatioParams ratios, Dimensions dims) {
    if (H.atoms.empty()) throw InvalidConfig("H must have at least one atom");
    if (std::abs(H.total_weight() - 1.0) > 1e-9) {
        throw InvalidConfig("H weights must sum to 1");
    }
    if (!H.respects_guard()) {
        throw InvalidConfig("H atom at " + format_double(H.max_atom()) +
                            " violates the 1 - delta guard");
    }
    if (!(ratios.c1 > 0.0) || !(ratios.c2 > 0.0) || ratios.c1 + ratios.c2 >= 1.0 ||
        ratios.c1 >= ratios.c2) {
        throw InvalidConfig("ratios must satisfy 0 < c1 < c2 and c1 + c2 < 1");
    }
    if (ratios.mode == RatioMode::finite_n) {
        if (dims.p <= 0 || dims.q <= 0 || dims.n <= 0 || dims.p >= dims.q ||
            dims.p + dims.q >= dims.n) {
            throw InvalidConfig("finite-n mode requires valid dimensions");
        }
        ratios.c1 = dims.p_over_n();
        ratios.c2 = dims.q_over_n();
    }
    return {ratios, std::move(H), dims};
}

ResolvedRatios resolve_ratios(const EquationContext& ctx) {
    if (ctx.ratios.mode == RatioMode::finite_n) {
        const auto& d = ctx.dims;
        const double p = d.p, q = d.q, n = d.n;
        return {p / n, q / n, p / q, p / (n - q), (n - q) / q, n / q};
    }
    const double c1 = ctx.ratios.c1;
    const double c2 = ctx.ratios.c2;
    return {c1, c2, c1 / c2, c1 / (1.0 - c2), (1.0 - c2) / c2, 1.0 / c2};
}

namespace {

// Shared building blocks of the equation system, all in terms of
// M = (1-z) m - 1.
struct EquationTerms {
    cxd M;
    cxd denom_one;   // 1 + (p/(n-q)) M
    cxd denom_z;     // 1 + (p/(n-q)) z M
    cxd brace;       // z (n-q)/(q (1-z)) [1 + (p/(n-q)) M] - (1 - p/q)
    cxd a;           // G2
    cxd b;
    cxd g1;
};

EquationTerms terms_from_M(cxd z, cxd M, const ResolvedRatios& r) {
    EquationTerms t;
    t.M = M;
    t.denom_one = 1.0 + r.p_nq * t.M;
    t.denom_z = 1.0 + r.p_nq * z * t.M;
    const double scale = 1.0 + std::abs(z) * r.p_nq * std::abs(t.M);
    if (near_zero(t.denom_z, scale)) {
        throw DenominatorVanishes("1 + (p/(n-q)) z [(1-z)m - 1] vanishes");
    }
    if (near_zero(1.0 - z, 1.0 + std::abs(z))) {
        throw DenominatorVanishes("z = 1 is a pole of the variable change");
    }
    if (near_zero(t.denom_one, 1.0 + r.p_nq * std::abs(t.M))) {
        throw DenominatorVanishes("1 + (p/(n-q)) [(1-z)m - 1] vanishes");
    }
    t.brace = z * r.nq_q / (1.0 - z) * t.denom_one - (1.0 - r.pq);
    t.a = t.denom_one / t.denom_z * t.brace;
    t.b = (1.0 - z) * t.M / (r.nq_q * t.denom_one);
    t.g1 = 1.0 - r.pn - r.pn * (1.0 - z) * t.M * t.brace / (r.nq_q * t.denom_z);
    return t;
}

EquationTerms equation_terms(cxd z, cxd m, const ResolvedRatios& r) {
    return terms_from_M(z, (1.0 - z) * m - 1.0, r);
}

}  // namespace

cxd g1(cxd z, cxd m, const EquationContext& ctx) {
    return equation_terms(z, m, resolve_ratios(ctx)).g1;
}

cxd g2(cxd z, cxd m, const EquationContext& ctx) {
    return equation_terms(z, m, resolve_ratios(ctx)).a;
}

double pushforward_t(double x, const EquationContext& ctx) {
    if (!(x >= 0.0) || x >= 1.0) {
        throw AtomOutOfRange("pushforward requires x in [0, 1), got " + format_double(x));
    }
    return resolve_ratios(ctx).n_q * x * x / (1.0 - x * x);
}

double pullback_x(double t, const EquationContext& ctx) {
    if (!(t >= 0.0)) throw AtomOutOfRange("pullback requires t >= 0");
    const double r = resolve_ratios(ctx).n_q;
    return std::sqrt(t / (r + t));
}

namespace {

// Master-equation residual in the divided form b - sum_i w_i / (t_i G1 - G2),
// which shares its zero set with the displayed equation but has no spurious
// root along G1 = 0. The public equation_residual reports the displayed form.
// Takes M = (1-z)m - 1 directly: every term is then a well-conditioned
// product, where forming M from m near the -1/z asymptote cancels to
// |M| ~ 1/|z| and caps the reachable residual.
cxd divided_residual_M(cxd z, cxd M, const ResolvedRatios& r, const SingularMeasure& H) {
    const auto t = terms_from_M(z, M, r);
    cxd sum = 0.0;
    for (std::size_t i = 0; i < H.atoms.size(); ++i) {
        const auto& atom = H.atoms[i];
        const double ti = r.n_q * atom.x * atom.x / (1.0 - atom.x * atom.x);
        const cxd bracket = ti * t.g1 - t.a;
        if (near_zero(bracket, 1.0 + std::abs(ti * t.g1) + std::abs(t.a))) {
            throw BracketSingular("equation bracket vanishes at atom " + std::to_string(i));
        }
        sum += atom.w / bracket;
    }
    return t.b - sum;
}

}  // namespace

cxd equation_residual(cxd z, cxd m, const EquationContext& ctx) {
    const auto r = resolve_ratios(ctx);
    const auto t = equation_terms(z, m, r);
    if (near_zero(t.g1, 1.0)) throw DenominatorVanishes("G1 vanishes");
    cxd rhs = 0.0;
    for (std::size_t i = 0; i < ctx.H.atoms.size(); ++i) {
        const auto& atom = ctx.H.atoms[i];
        const double ti = r.n_q * atom.x * atom.x / (1.0 - atom.x * atom.x);
        const cxd bracket = ti - t.a / t.g1;
        if (near_zero(bracket, 1.0 + std::abs(ti) + std::abs(t.a / t.g1))) {
            throw BracketSingular("equation bracket vanishes at atom " + std::to_string(i));
        }
        rhs += atom.w / bracket;
    }
    return t.g1 * t.b - rhs;
}

namespace {

// Damped Newton iteration on a complex residual function. The derivative is a
// central finite difference with step 1e-7 (1 + |m|); steps are halved until
// the residual magnitude decreases. Returns nullopt when it stalls or runs
// out of iterations. Residual evaluations that throw are treated as rejected
// trial points.
struct NewtonResult {
    cxd m;
    double residual;
};

template <typename F>
std::optional<NewtonResult> damped_newton(F&& f, cxd m0, const SolveOptions& opts) {
    auto eval = [&](cxd m) -> cxd {
        try {
            return f(m);
        } catch (const Error&) {
            return cxd(std::numeric_limits<double>::quiet_NaN(), 0.0);
        }
    };
    auto bad = [](cxd v) { return !std::isfinite(v.real()) || !std::isfinite(v.imag()); };

    cxd m = m0;
    cxd r = eval(m);
    if (bad(r)) return std::nullopt;
    for (int iter = 0; iter < opts.max_iter; ++iter) {
        if (std::abs(r) < opts.tol) return NewtonResult{m, std::abs(r)};
        const double h = 1e-7 * (1.0 + std::abs(m));
        const cxd rp = eval(m + h);
        const cxd rm = eval(m - h);
        if (bad(rp) || bad(rm)) return std::nullopt;
        const cxd deriv = (rp - rm) / (2.0 * h);
        if (std::abs(deriv) < 1e-300) return std::nullopt;
        const cxd step = -r / deriv;
        double alpha = 1.0;
        bool accepted = false;
        for (int k = 0; k < 40; ++k) {
            const cxd m_trial = m + alpha * step;
            const cxd r_trial = eval(m_trial);
            if (!bad(r_trial) && std::abs(r_trial) < std::abs(r)) {
                m = m_trial;
                r = r_trial;
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if (!accepted) return std::nullopt;
    }
    return std::nullopt;
}

// Upper-half-plane branch selection shared by solve_m and m_xi_solve: if
// Newton lands below the real axis (as seen through to_m, which maps the
// iterate coordinate to the transform value), restart once from the
// conjugate-reflected point. Stieltjes transforms of measures map the upper
// half plane to itself. fallback is the asymptotic initializer in iterate
// coordinates, tried once before giving up.
template <typename F, typename ToM, typename Reflect>
cxd solve_branched(F&& f, cxd z, cxd x0, cxd fallback, const SolveOptions& opts, const char* what,
                   ToM&& to_m, Reflect&& reflect) {
    auto res = damped_newton(f, x0, opts);
    if (res && to_m(res->m).imag() <= 0.0) {
        res = damped_newton(f, reflect(res->m), opts);
        if (res && to_m(res->m).imag() <= 0.0) {
            throw WrongBranch(std::string(what) + " found only a lower-half-plane root at z = (" +
                              format_double(z.real()) + ", " + format_double(z.imag()) + ")");
        }
    }
    if (!res) {
        if (std::abs(x0 - fallback) > 1e-12) {
            return solve_branched(f, z, fallback, fallback, opts, what, to_m, reflect);
        }
        throw NoConvergence(std::string(what) + " did not converge at z = (" +
                            format_double(z.real()) + ", " + format_double(z.imag()) + ")");
    }
    return res->m;
}

template <typename F>
cxd solve_herglotz(F&& f, cxd z, cxd m0, const SolveOptions& opts, const char* what) {
    return solve_branched(
        f, z, m0, -1.0 / z, opts, what, [](cxd m) { return m; },
        [](cxd m) { return std::conj(m); });
}

// Points close to the real axis can sit beyond Newton's basin when started
// cold from -1/z. SolveOne must solve one point given an optional warm start;
// this walks down from a safely high imaginary offset, warm-starting each
// rung, and makes the final attempt at z itself.
template <typename SolveOne>
cxd descend_and_solve(SolveOne&& solve_one, cxd z) {
    cxd warm(0.0, 1.0);
    bool have_warm = false;
    for (double im = std::max(0.5, 16.0 * z.imag()); im > z.imag() * 1.0001; im *= 0.5) {
        try {
            warm = solve_one(cxd(z.real(), im), have_warm ? std::optional<cxd>(warm) : std::nullopt);
            have_warm = true;
        } catch (const Error&) {
            have_warm = false;
        }
    }
    return solve_one(z, have_warm ? std::optional<cxd>(warm) : std::nullopt);
}

}  // namespace

cxd solve_m(cxd z, const EquationContext& ctx, std::optional<cxd> init, const SolveOptions& opts) {
    if (!(z.imag() > 0.0)) throw InvalidConfig("solve_m requires Im z > 0");
    const auto r = resolve_ratios(ctx);
    // Newton drives the divided residual a factor below tol so the displayed
    // form G1 * R, with |G1| up to a few, also lands under tol.
    SolveOptions inner = opts;
    inner.tol = opts.tol / 4.0;
    // Iterate in the variable M = (1-z)m - 1. The asymptotic initializer -1/z
    // is a fixed point of the change of variables.
    auto one = [&](cxd zz, std::optional<cxd> start) {
        auto f = [&](cxd u) { return divided_residual_M(zz, u, r, ctx.H); };
        auto to_m = [zz](cxd u) { return (u + 1.0) / (1.0 - zz); };
        auto reflect = [zz, to_m](cxd u) { return (1.0 - zz) * std::conj(to_m(u)) - 1.0; };
        const cxd u0 = start ? (1.0 - zz) * (*start) - 1.0 : -1.0 / zz;
        return to_m(solve_branched(f, zz, u0, -1.0 / zz, inner, "solve_m", to_m, reflect));
    };
    try {
        return one(z, init);
    } catch (const Error&) {
        return descend_and_solve(one, z);
    }
}

StieltjesSolution solve_grid(const std::vector<cxd>& grid, const EquationContext& ctx,
                             const SolveOptions& opts) {
    StieltjesSolution sol;
    sol.grid = grid;
    sol.m.assign(grid.size(), cxd(std::numeric_limits<double>::quiet_NaN(), 0.0));
    sol.residual.assign(grid.size(), std::numeric_limits<double>::infinity());
    sol.converged.assign(grid.size(), 0);
    std::optional<cxd> warm;
    for (std::size_t i = 0; i < grid.size(); ++i) {
        try {
            const cxd m = solve_m(grid[i], ctx, warm, opts);
            sol.m[i] = m;
            sol.residual[i] = std::abs(equation_residual(grid[i], m, ctx));
            sol.converged[i] = 1;
            warm = m;
        } catch (const Error&) {
            warm.reset();
        }
    }
    return sol;
}

namespace {

using PointSolver = std::function<cxd(cxd, std::optional<cxd>)>;

struct EpsSweep {
    std::vector<double> values;  // Im m / pi per grid point
    std::vector<char> ok;
};

// Left-to-right continuation along the horizontal line Im z = eps. A failed
// point falls back to the solver's own cold start (which descends from high
// imaginary offsets) before being flagged.
EpsSweep sweep_eps(const PointSolver& solve, const std::vector<double>& xs, double eps) {
    EpsSweep sweep;
    sweep.values.assign(xs.size(), 0.0);
    sweep.ok.assign(xs.size(), 0);
    std::optional<cxd> warm;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::optional<cxd> m;
        try {
            m = solve(cxd(xs[i], eps), warm);
        } catch (const Error&) {
            m.reset();
        }
        if (m) {
            sweep.values[i] = m->imag() / std::numbers::pi;
            sweep.ok[i] = 1;
            warm = m;
        } else {
            warm.reset();
        }
    }
    return sweep;
}

DensityCurve invert_density(const PointSolver& solve, const std::vector<double>& xs,
                            const DensityOptions& opts) {
    if (opts.eps_schedule.size() < 2) {
        throw InvalidConfig("eps schedule needs at least two values");
    }
    DensityCurve curve;
    curve.xs = xs;
    curve.eps_schedule = opts.eps_schedule;
    curve.fs.assign(xs.size(), 0.0);
    curve.flagged.assign(xs.size(), 0);

    // Independent sweep per eps; they share nothing, so run them as tasks.
    std::vector<std::future<EpsSweep>> futures;
    futures.reserve(opts.eps_schedule.size());
    for (double eps : opts.eps_schedule) {
        futures.push_back(std::async(std::launch::async,
                                     [&, eps] { return sweep_eps(solve, xs, eps); }));
    }
    std::vector<EpsSweep> sweeps;
    sweeps.reserve(futures.size());
    for (auto& fut : futures) sweeps.push_back(fut.get());

    // Linear extrapolation of (eps, value) pairs to eps = 0, least squares
    // over the converged entries.
    double min_pre = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        int count = 0;
        for (std::size_t k = 0; k < sweeps.size(); ++k) {
            if (!sweeps[k].ok[i]) continue;
            const double e = opts.eps_schedule[k];
            const double y = sweeps[k].values[i];
            sx += e;
            sy += y;
            sxx += e * e;
            sxy += e * y;
            ++count;
        }
        if (count < 2) {
            curve.flagged[i] = 1;
            continue;
        }
        const double det = count * sxx - sx * sx;
        const double intercept = (sy * sxx - sx * sxy) / det;
        min_pre = std::min(min_pre, intercept);
        curve.fs[i] = std::max(intercept, 0.0);
    }
    curve.min_preclamped = min_pre;
    curve.mass = trapezoid(curve.xs, curve.fs);
    const double deficit = 1.0 - curve.mass;
    curve.atom_mass_at_zero = deficit > 0.02 ? deficit : 0.0;
    return curve;
}

}  // namespace

DensityCurve density(const EquationContext& ctx, const std::vector<double>& xs,
                     const DensityOptions& opts) {
    for (double x : xs) {
        if (!(x >= 0.0) || x > 1.0) throw InvalidConfig("density grid must lie in [0, 1]");
    }
    PointSolver solve = [&](cxd z, std::optional<cxd> init) {
        return solve_m(z, ctx, init, opts.solve);
    };
    return invert_density(solve, xs, opts);
}

cxd m_xi_solve(cxd z, const EquationContext& ctx, std::optional<cxd> init,
               const SolveOptions& opts) {
    if (!(z.imag() > 0.0)) throw InvalidConfig("m_xi_solve requires Im z > 0");
    const auto r = resolve_ratios(ctx);
    std::vector<std::pair<double, double>> atoms;  // (t_i, w_i)
    atoms.reserve(ctx.H.atoms.size());
    for (const auto& atom : ctx.H.atoms) {
        atoms.emplace_back(r.n_q * atom.x * atom.x / (1.0 - atom.x * atom.x), atom.w);
    }
    auto one = [&](cxd zz, std::optional<cxd> start) {
        auto f = [&](cxd m) {
            cxd sum = 0.0;
            for (const auto& [t, w] : atoms) {
                const cxd bracket = t * (1.0 - r.pn - r.pn * zz * m) - zz;
                if (near_zero(bracket, 1.0 + std::abs(t) + std::abs(zz))) {
                    throw BracketSingular("m_xi bracket vanishes");
                }
                sum += w / bracket;
            }
            return m - sum;
        };
        return solve_herglotz(f, zz, start.value_or(-1.0 / zz), opts, "m_xi_solve");
    };
    try {
        return one(z, init);
    } catch (const Error&) {
        return descend_and_solve(one, z);
    }
}

DensityCurve xi_density(const EquationContext& ctx, const std::vector<double>& ts,
                        const DensityOptions& opts) {
    for (double t : ts) {
        if (!(t >= 0.0)) throw InvalidConfig("xi density grid must lie in [0, inf)");
    }
    PointSolver solve = [&](cxd z, std::optional<cxd> init) {
        return m_xi_solve(z, ctx, init, opts.solve);
    };
    return invert_density(solve, ts, opts);
}

FisherPoint mF_from_m(cxd z, cxd m, const EquationContext& ctx) {
    if (near_zero(1.0 - z, 1.0 + std::abs(z))) {
        throw DenominatorVanishes("mF_from_m undefined at z = 1");
    }
    const auto r = resolve_ratios(ctx);
    const cxd M = (1.0 - z) * m - 1.0;
    return {z * r.nq_q / (1.0 - z), (1.0 - z) * M / r.nq_q};
}

cxd m_from_mF(cxd z, cxd mF, const EquationContext& ctx) {
    if (near_zero(1.0 - z, 1.0 + std::abs(z))) {
        throw DenominatorVanishes("m_from_mF undefined at z = 1");
    }
    const auto r = resolve_ratios(ctx);
    return 1.0 / (1.0 - z) + r.nq_q * mF / ((1.0 - z) * (1.0 - z));
}

PairAB pair_ab(cxd z, cxd m, const EquationContext& ctx) {
    const auto t = equation_terms(z, m, resolve_ratios(ctx));
    return {t.a, t.b};
}

cxd pair_residual(cxd a, cxd b, const EquationContext& ctx) {
    const auto r = resolve_ratios(ctx);
    const cxd coeff = 1.0 - r.pn - r.pn * a * b;
    cxd sum = 0.0;
    for (std::size_t i = 0; i < ctx.H.atoms.size(); ++i) {
        const auto& atom = ctx.H.atoms[i];
        const double ti = r.n_q * atom.x * atom.x / (1.0 - atom.x * atom.x);
        const cxd bracket = ti * coeff - a;
        if (near_zero(bracket, 1.0 + std::abs(ti * coeff) + std::abs(a))) {
            throw BracketSingular("pair bracket vanishes at atom " + std::to_string(i));
        }
        sum += atom.w / bracket;
    }
    return b - sum;
}

cxd mF_residual(cxd zF, cxd mF, const DensityCurve& h_xi, const EquationContext& ctx) {
    const auto r = resolve_ratios(ctx);
    const cxd d1 = 1.0 + (r.pq + r.p_nq * zF) * mF;
    const cxd d2 = 1.0 + r.p_nq * zF * mF;
    if (near_zero(d1, 1.0 + std::abs(zF * mF)) || near_zero(d2, 1.0 + std::abs(zF * mF))) {
        throw DenominatorVanishes("noncentral Fisher equation denominator vanishes");
    }
    auto bracket = [&](double t) { return t / d1 + (1.0 - r.pq) / d2 - zF * d1 / d2; };

    // Continuous part by trapezoid; any missing mass is carried by the atom
    // at t = 0 (rank-deficient noncentral parameter).
    const double atom0 =
        h_xi.atom_mass_at_zero + std::max(0.0, 1.0 - h_xi.mass - h_xi.atom_mass_at_zero);
    cxd integral = atom0 / bracket(0.0);
    std::vector<double> re(h_xi.xs.size()), im(h_xi.xs.size());
    for (std::size_t i = 0; i < h_xi.xs.size(); ++i) {
        const cxd v = h_xi.fs[i] / bracket(h_xi.xs[i]);
        re[i] = v.real();
        im[i] = v.imag();
    }
    integral += cxd(trapezoid(h_xi.xs, re), trapezoid(h_xi.xs, im));
    return mF - integral;
}

SccPoint m_from_mb(cxd z, cxd mb, const EquationContext& ctx) {
    if (near_zero(1.0 - z, 1.0 + std::abs(z))) {
        throw DenominatorVanishes("m_from_mb undefined at z = 1");
    }
    const auto r = resolve_ratios(ctx);
    if (!(r.pn > 0.0)) throw DenominatorVanishes("m_from_mb requires c1 > 0");
    const cxd m = ((r.pn + r.qn) * mb + (r.pn - r.qn) / (1.0 - z)) / (2.0 * r.pn * (z - 1.0));
    return {(1.0 - z) * (1.0 - z), m};
}

void write_solution_csv(const std::string& path, const StieltjesSolution& sol) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "re_z,im_z,re_m,im_m,residual,converged\n";
    for (std::size_t i = 0; i < sol.size(); ++i) {
        out << format_double(sol.grid[i].real()) << ',' << format_double(sol.grid[i].imag()) << ','
            << format_double(sol.m[i].real()) << ',' << format_double(sol.m[i].imag()) << ','
            << format_double(sol.residual[i]) << ',' << int(sol.converged[i]) << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

void write_density_csv(const std::string& path, const DensityCurve& curve) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot open '" + path + "' for writing");
    out << "x,f,flagged\n";
    for (std::size_t i = 0; i < curve.xs.size(); ++i) {
        out << format_double(curve.xs[i]) << ',' << format_double(curve.fs[i]) << ','
            << int(curve.flagged[i]) << "\n";
    }
    if (!out) throw IoError("write failed for '" + path + "'");
}

std::vector<double> linspace(double a, double b, int count) {
    if (count < 2) return {a};
    std::vector<double> xs(static_cast<std::size_t>(count));
    for (int i = 0; i < count; ++i) {
        xs[static_cast<std::size_t>(i)] = a + (b - a) * i / (count - 1);
    }
    return xs;
}

}  // namespace cca
