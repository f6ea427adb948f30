#pragma once

// Ordinary least squares inverse problem on top of the numerical solver.

#include "advinv/analytic.hpp"
#include "advinv/core.hpp"
#include "advinv/datagen.hpp"
#include "advinv/optimize.hpp"
#include "advinv/order.hpp"
#include "advinv/parallel.hpp"
#include "advinv/schemes.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

namespace advinv {

struct CostBreakdown {
    double A = 0, B = 0, C = 0, D = 0, E = 0, F = 0;
    double J = 0;

    [[nodiscard]] double sum() const noexcept { return A + B + C + D + E + F; }
};

struct FitResult {
    ParameterVector theta_hat;
    double cost = std::numeric_limits<double>::infinity();
    SchemeKind scheme = SchemeKind::Upwind;
    double h = 0.0;
    SolverConfig config;
    std::optional<Provenance> provenance;
    OptimizerTrace trace;
};

/// Mean squared misfit (1/MN) sum (y - u)^2.
inline double ols_cost(const Matrix& Y, const Matrix& U)
{
    require_same_shape(Y, U, "ols_cost");
    double s = 0.0;
    for (std::size_t k = 0; k < Y.size(); ++k) {
        const double d = Y.values()[k] - U.values()[k];
        s += d * d;
    }
    return s / static_cast<double>(Y.size());
}

/// U(h, theta) on the data grid, or nullopt where the parameters are inadmissible, a fixed
/// step ratio violates the CFL condition, or the solver diverges.
inline std::optional<Matrix> try_model(const ParameterVector& theta, const SolverConfig& config, InitialCondition ic,
                                       const DataGrid& grid)
{
    if (!theta.valid()) return std::nullopt;
    if (config.lambda && courant_number(theta, config.h, *config.lambda) > 1.0) return std::nullopt;
    try {
        return numerical_solution_matrix(theta, config, ic, grid);
    } catch (const DivergenceError&) {
        return std::nullopt;
    }
}

/// J(h, theta), with rejected points mapped to +inf.
inline double numerical_cost(const Dataset& data, const ParameterVector& theta, const SolverConfig& config,
                             InitialCondition ic)
{
    const auto U = try_model(theta, config, ic, data.grid);
    return U ? ols_cost(data.Y, *U) : std::numeric_limits<double>::infinity();
}

/// Courant number at the coarse-search optimum when the step ratio is frozen for polishing.
inline constexpr double kPolishCourant = 0.64;
inline constexpr double kPolishStep = 0.05;

struct SolverFit {
    Minimum minimum;
    /// Solver settings the reported cost was evaluated with.
    SolverConfig config;
};

/// Minimizes cost(theta, config) in two passes. With k chosen from theta on every solve the
/// step count jumps with theta and leaves kinks in the cost surface, so the multistart search
/// is followed by a single-start polish with k / h frozen at its optimum.
template <class Cost>
SolverFit minimize_over_solver(Cost&& cost, const SolverConfig& base, const OptimizerOptions& opts,
                               std::span<const ParameterVector> extra_starts = {})
{
    SolverFit out;
    out.config = base;
    out.minimum = minimize([&](const ParameterVector& th) { return cost(th, base); }, opts, extra_starts);
    if (base.lambda || !std::isfinite(out.minimum.cost)) return out;

    SolverConfig fixed = base;
    fixed.lambda = kPolishCourant / courant_number(out.minimum.theta, base.h, 1.0);
    OptimizerOptions polish = opts;
    polish.starts = {out.minimum.theta};
    polish.initial_step = kPolishStep;
    auto m = minimize([&](const ParameterVector& th) { return cost(th, fixed); }, polish);
    if (!std::isfinite(m.cost)) return out;
    m.trace.evaluations += out.minimum.trace.evaluations;
    m.trace.iterations += out.minimum.trace.iterations;
    m.trace.restarts += out.minimum.trace.restarts + 1;
    out.minimum = m;
    out.config = fixed;
    return out;
}

/// OLS fit with the solver settings in `config`. Without a fixed lambda the step ratio is
/// chosen per solve and then frozen for the final polish (see minimize_over_solver).
inline FitResult fit_ols(const Dataset& data, const SolverConfig& config, InitialCondition ic,
                         const OptimizerOptions& opts = {})
{
    if (!(config.h > 0.0)) throw ConfigError("step size h must be positive");
    detail::node_count(config.h); // reject non-dividing h before optimizing

    const auto r = minimize_over_solver(
        [&](const ParameterVector& th, const SolverConfig& c) { return numerical_cost(data, th, c, ic); }, config,
        opts);
    FitResult fit;
    fit.theta_hat = r.minimum.theta;
    fit.cost = r.minimum.cost;
    fit.scheme = config.scheme;
    fit.h = config.h;
    fit.config = r.config;
    fit.provenance = data.provenance;
    fit.trace = r.minimum.trace;
    return fit;
}

inline FitResult fit_ols(const Dataset& data, SchemeKind scheme, double h, InitialCondition ic,
                         const OptimizerOptions& opts = {})
{
    SolverConfig config;
    config.h = h;
    config.scheme = scheme;
    return fit_ols(data, config, ic, opts);
}

/// The six-term split of J(h, theta) for synthetic data:
///   y - u = eps + (u0(theta0) - u0(theta)) + (u0(theta) - u(h, theta)).
inline CostBreakdown decompose_cost(const Dataset& data, const ParameterVector& theta, const ParameterVector& theta0,
                                    const SolverConfig& config, InitialCondition ic)
{
    if (!data.provenance) throw ContractError("decompose_cost: dataset has no synthetic provenance");
    const Matrix U0_true = analytic_solution_matrix(theta0, data.grid, ic);
    const Matrix U0 = analytic_solution_matrix(theta, data.grid, ic);
    const Matrix U = numerical_solution_matrix(theta, config, ic, data.grid);
    require_same_shape(data.Y, U, "decompose_cost");

    CostBreakdown c;
    for (std::size_t k = 0; k < U.size(); ++k) {
        const double eps = data.Y.values()[k] - U0_true.values()[k];
        const double model = U0_true.values()[k] - U0.values()[k];
        const double numerical = U0.values()[k] - U.values()[k];
        c.A += eps * eps;
        c.B += model * model;
        c.C += numerical * numerical;
        c.D += 2.0 * eps * model;
        c.E += 2.0 * eps * numerical;
        c.F += 2.0 * numerical * model;
    }
    const double mn = static_cast<double>(U.size());
    for (double* v : {&c.A, &c.B, &c.C, &c.D, &c.E, &c.F}) *v /= mn;
    c.J = ols_cost(data.Y, U);
    return c;
}

inline CostBreakdown decompose_cost(const Dataset& data, const ParameterVector& theta, const ParameterVector& theta0,
                                    SchemeKind scheme, double h, InitialCondition ic)
{
    SolverConfig config;
    config.h = h;
    config.scheme = scheme;
    return decompose_cost(data, theta, theta0, config, ic);
}

struct ConvergenceStudy {
    SchemeKind scheme = SchemeKind::Upwind;
    std::vector<double> hs;
    std::vector<FitResult> fits;
    std::vector<double> costs;
    /// ||theta_hat(h) - theta0||_2
    std::vector<double> errors;
    /// L1 error of U(h, theta0) against U0(theta0) on the data grid.
    std::vector<double> solution_errors;

    std::optional<OrderFit> p;
    OrderFit p_J;
    std::optional<OrderFit> p_theta;
    /// Set when fewer than three ladder points lie above the noise plateau; p_J is then 0.
    bool plateau = false;
};

/// Relative height above eta^2 below which a cost counts as converged to the noise floor.
inline constexpr double kPlateauFactor = 1.5;
/// R^2 values this close to the best are treated as tied; ties go to the longer prefix.
inline constexpr double kPlateauR2Tie = 0.02;

/// Chooses the ladder prefix used for p_J. Points whose cost has already dropped to the noise
/// floor are excluded, then among the coarsest contiguous prefixes of at least three points
/// the one with the best R^2 is kept.
inline OrderFit fit_cost_order(std::span<const double> hs, std::span<const double> costs, double eta,
                               bool& plateau)
{
    std::size_t usable = 0;
    while (usable < hs.size() && std::isfinite(costs[usable]) && costs[usable] > 0.0 &&
           !(eta > 0.0 && costs[usable] <= kPlateauFactor * eta * eta))
        ++usable;
    plateau = usable < 3;
    if (plateau) {
        OrderFit flat;
        return flat;
    }

    std::optional<OrderFit> best;
    std::vector<OrderFit> candidates;
    for (std::size_t len = 3; len <= usable; ++len) {
        std::vector<std::size_t> idx(len);
        std::iota(idx.begin(), idx.end(), std::size_t{0});
        candidates.push_back(estimate_order(hs, costs, idx));
    }
    double top = -std::numeric_limits<double>::infinity();
    for (const auto& c : candidates) top = std::max(top, c.r2);
    for (const auto& c : candidates)
        if (c.r2 >= top - kPlateauR2Tie) best = c; // later candidates are longer
    return *best;
}

/// Fits theta_hat(h) on every ladder level and estimates the orders p, p_J and p_theta.
/// `base` supplies the scheme and step-ratio policy; its h is replaced by each ladder value.
inline ConvergenceStudy cost_order_study(const Dataset& data, const SolverConfig& base, InitialCondition ic,
                                         std::span<const double> hs, const OptimizerOptions& opts = {},
                                         std::size_t jobs = 1)
{
    if (hs.size() < 3) throw ConfigError("cost_order_study: ladder needs at least 3 step sizes");
    for (std::size_t k = 1; k < hs.size(); ++k)
        if (!(hs[k] < hs[k - 1])) throw ConfigError("cost_order_study: step sizes must be strictly decreasing");

    ConvergenceStudy st;
    st.scheme = base.scheme;
    st.hs.assign(hs.begin(), hs.end());
    st.fits.resize(hs.size());
    parallel_for(hs.size(), jobs, [&](std::size_t k) {
        SolverConfig c = base;
        c.h = hs[k];
        st.fits[k] = fit_ols(data, c, ic, opts);
    });
    for (const auto& f : st.fits) st.costs.push_back(f.cost);

    const double eta = data.provenance ? data.provenance->eta : 0.0;
    st.p_J = fit_cost_order(st.hs, st.costs, eta, st.plateau);

    if (data.provenance) {
        const auto theta0 = data.provenance->theta0;
        const Matrix U0 = analytic_solution_matrix(theta0, data.grid, ic);
        for (std::size_t k = 0; k < hs.size(); ++k) {
            st.errors.push_back(distance(st.fits[k].theta_hat, theta0));
            SolverConfig c = base;
            c.h = hs[k];
            st.solution_errors.push_back(l1_error(numerical_solution_matrix(theta0, c, ic, data.grid), U0));
        }
        try {
            st.p = estimate_order(st.hs, st.solution_errors);
        } catch (const EstimationError&) {
        }
        try {
            st.p_theta = estimate_order(st.hs, st.errors);
        } catch (const EstimationError&) {
        }
    }
    return st;
}

inline ConvergenceStudy cost_order_study(const Dataset& data, SchemeKind scheme, InitialCondition ic,
                                         std::span<const double> hs, const OptimizerOptions& opts = {},
                                         std::size_t jobs = 1)
{
    SolverConfig base;
    base.scheme = scheme;
    return cost_order_study(data, base, ic, hs, opts, jobs);
}

} // namespace advinv
