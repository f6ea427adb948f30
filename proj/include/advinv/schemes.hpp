#pragma once

// Explicit conservative solvers for u_t + (g(x) u)_x = 0 on x in [0, 1].
//
// Nodes x_j = j h, j = 0..n, carry cell averages over [x_j - h/2, x_j + h/2]; the node at the
// inflow point x = 0 owns the half cell [0, h/2]. Interface fluxes are written in wave form
// on the nodal fluxes f_j = g(x_j) u_j:
//
//     F_{j+1/2} = f_j + 1/2 (1 - nu_{j+1/2}) W_{j+1/2},   nu = k g(x_{j+1/2}) / h
//
// with W = 0 (upwind), f_{j+1} - f_j (Lax-Wendroff), f_j - f_{j-1} (Beam-Warming) or the
// Van Leer limited blend of the two (flux-limited upwind). Using nodal fluxes rather than
// nodal values keeps the second-order schemes second order for variable g.
//
// Boundaries: g(0) = 0 so nothing enters at x = 0; the half-cell edge x = h/2 uses the donor
// flux g(h/2) u_0. At x = 1 the nodal flux is extrapolated as a constant into the ghost cell.

#include "advinv/analytic.hpp"
#include "advinv/core.hpp"
#include "advinv/grid.hpp"
#include "advinv/interpolation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace advinv {

enum class SchemeKind { Upwind, LaxWendroff, BeamWarming, UpwindFluxLimited };

inline constexpr SchemeKind kAllSchemes[] = {SchemeKind::Upwind, SchemeKind::LaxWendroff, SchemeKind::BeamWarming,
                                             SchemeKind::UpwindFluxLimited};

inline std::string to_string(SchemeKind s)
{
    switch (s) {
    case SchemeKind::Upwind: return "upwind";
    case SchemeKind::LaxWendroff: return "lw";
    case SchemeKind::BeamWarming: return "bw";
    case SchemeKind::UpwindFluxLimited: return "upwind-fl";
    }
    return "?";
}

inline SchemeKind parse_scheme(const std::string& s)
{
    if (s == "upwind") return SchemeKind::Upwind;
    if (s == "lw" || s == "lax-wendroff") return SchemeKind::LaxWendroff;
    if (s == "bw" || s == "beam-warming") return SchemeKind::BeamWarming;
    if (s == "upwind-fl" || s == "fl") return SchemeKind::UpwindFluxLimited;
    throw ConfigError("unknown scheme '" + s + "' (expected upwind, lw, bw or upwind-fl)");
}

/// The seven-level step-size ladder h_i = 1/(10 * 2^(i-1)), coarsest first.
inline std::vector<double> default_h_ladder()
{
    std::vector<double> hs;
    for (int i = 0; i < 7; ++i) hs.push_back(1.0 / (10.0 * std::pow(2.0, i)));
    return hs;
}

struct SolverConfig {
    double h = 0.1;
    SchemeKind scheme = SchemeKind::Upwind;
    /// Fixed Courant ratio k/h. When empty, k is chosen per solve so the largest Courant
    /// number on the grid equals `courant`.
    std::optional<double> lambda;
    double courant = 0.8;
};

struct SolutionGrid {
    std::vector<double> x;
    std::vector<double> times;
    std::vector<std::vector<double>> slices;
    /// Mass that has left through x = 1 by each output time.
    std::vector<double> outflow;
    ParameterVector theta;
    SchemeKind scheme = SchemeKind::Upwind;
    double h = 0.0;
    double k = 0.0;
    std::size_t steps = 0;

    /// Discrete mass with the half cell at x = 0 weighted by h/2.
    [[nodiscard]] double mass(std::size_t slice) const
    {
        const auto& u = slices.at(slice);
        double m = 0.5 * h * u[0];
        for (std::size_t j = 1; j < u.size(); ++j) m += h * u[j];
        return m;
    }
};

namespace detail {

inline std::size_t node_count(double h)
{
    if (!(h > 0.0) || !std::isfinite(h)) throw ConfigError("step size must be positive, got " + std::to_string(h));
    const double cells = std::round(1.0 / h);
    if (cells < 1.0 || std::abs(cells * h - 1.0) > 1e-9)
        throw ConfigError("step size " + std::to_string(h) + " does not divide [0, 1] into whole cells");
    return static_cast<std::size_t>(cells);
}

template <SchemeKind S>
inline double wave(double left, double right) noexcept
{
    if constexpr (S == SchemeKind::Upwind) {
        return 0.0;
    } else if constexpr (S == SchemeKind::LaxWendroff) {
        return right;
    } else if constexpr (S == SchemeKind::BeamWarming) {
        return left;
    } else {
        // Van Leer: phi(r) right with r = left/right, phi(r) = (r + |r|)/(1 + |r|).
        const double prod = left * right;
        return prod > 0.0 ? 2.0 * prod / (left + right) : 0.0;
    }
}

struct Stencil {
    std::vector<double> g_node;  // g(x_j), j = 0..n
    std::vector<double> g_edge;  // g(x_{j+1/2}), j = 0..n (last entry g(1))
    double g_half_cell = 0.0;    // g(h/2)
};

inline Stencil make_stencil(const ParameterVector& theta, std::size_t n, double h)
{
    Stencil s;
    s.g_node.resize(n + 1);
    s.g_edge.resize(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        s.g_node[j] = advection_speed(static_cast<double>(j) / static_cast<double>(n), theta);
        s.g_edge[j] = j < n ? advection_speed((static_cast<double>(j) + 0.5) * h, theta) : s.g_node[n];
    }
    s.g_half_cell = s.g_edge[0];
    return s;
}

/// Largest per-unit-Courant speed: interior nodes and edges, plus the half cell whose width is h/2.
inline double max_signal_speed(const Stencil& s)
{
    double m = 2.0 * s.g_half_cell;
    for (double g : s.g_node) m = std::max(m, g);
    for (double g : s.g_edge) m = std::max(m, g);
    return m;
}

template <SchemeKind S>
class Marcher {
public:
    Marcher(const Stencil& stencil, std::vector<double>& u, double h)
        : st_(stencil), u_(u), h_(h), f_(u.size() + 1), flux_(u.size())
    {
    }

    /// Advances by dt; returns the flux through x = 1 during the step. Returns NaN on blow-up.
    double step(double dt)
    {
        const std::size_t n = u_.size() - 1;
        const double c = dt / h_;
        for (std::size_t j = 0; j <= n; ++j) f_[j] = st_.g_node[j] * u_[j];
        f_[n + 1] = f_[n];

        flux_[0] = st_.g_half_cell * u_[0];
        for (std::size_t j = 1; j <= n; ++j) {
            const double nu = c * st_.g_edge[j];
            const double w = wave<S>(f_[j] - f_[j - 1], f_[j + 1] - f_[j]);
            flux_[j] = f_[j] + 0.5 * (1.0 - nu) * w;
        }

        double check = 0.0;
        u_[0] -= 2.0 * c * flux_[0];
        check += u_[0];
        for (std::size_t j = 1; j <= n; ++j) {
            u_[j] -= c * (flux_[j] - flux_[j - 1]);
            check += u_[j];
        }
        if (!std::isfinite(check)) return std::numeric_limits<double>::quiet_NaN();
        return flux_[n];
    }

private:
    const Stencil& st_;
    std::vector<double>& u_;
    double h_;
    std::vector<double> f_;
    std::vector<double> flux_;
};

template <SchemeKind S>
inline void march(SolutionGrid& out, const Stencil& stencil, std::vector<double> u, std::span<const double> output_times)
{
    Marcher<S> marcher(stencil, u, out.h);
    double t = 0.0;
    double outflow = 0.0;
    std::size_t step_index = 0;
    for (double target : output_times) {
        while (t < target) {
            const double remaining = target - t;
            double dt = out.k;
            if (remaining <= out.k * (1.0 + 1e-10)) {
                dt = remaining;
                t = target;
            } else {
                t += dt;
            }
            const double q = marcher.step(dt);
            ++step_index;
            if (std::isnan(q))
                throw DivergenceError("scheme " + to_string(S) + " produced a non-finite value at step " +
                                      std::to_string(step_index));
            outflow += dt * q;
        }
        out.slices.push_back(u);
        out.outflow.push_back(outflow);
    }
    out.steps = step_index;
}

} // namespace detail

/// Largest Courant number k g / h over the grid for a fixed ratio lambda = k / h.
inline double courant_number(const ParameterVector& theta, double h, double lambda)
{
    const std::size_t n = detail::node_count(h);
    return lambda * detail::max_signal_speed(detail::make_stencil(theta, n, h));
}

/// Time step the solver would use for theta and config (after the CFL check).
inline double solver_time_step(const ParameterVector& theta, const SolverConfig& config)
{
    const std::size_t n = detail::node_count(config.h);
    const auto stencil = detail::make_stencil(theta, n, config.h);
    const double speed = detail::max_signal_speed(stencil);
    if (config.lambda) {
        if (!(*config.lambda > 0.0)) throw ConfigError("lambda must be positive");
        if (speed * *config.lambda > 1.0)
            throw ConfigError("CFL condition violated: max speed * lambda = " + std::to_string(speed * *config.lambda));
        return *config.lambda * config.h;
    }
    if (!(config.courant > 0.0) || config.courant > 1.0) throw ConfigError("courant target must lie in (0, 1]");
    return speed > 0.0 ? config.courant * config.h / speed : std::numeric_limits<double>::infinity();
}

inline SolutionGrid solve(const ParameterVector& theta, const SolverConfig& config, InitialCondition ic,
                          std::span<const double> output_times)
{
    if (!theta.valid())
        throw ConfigError("parameters must be positive and finite (alpha=" + std::to_string(theta.alpha) +
                          ", beta=" + std::to_string(theta.beta) + ")");
    for (std::size_t i = 0; i < output_times.size(); ++i) {
        if (output_times[i] < 0.0 || output_times[i] > kFinalTime)
            throw ContractError("output times must lie in [0, 10]");
        if (i > 0 && output_times[i] < output_times[i - 1]) throw ContractError("output times must be sorted");
    }

    const std::size_t n = detail::node_count(config.h);
    const auto stencil = detail::make_stencil(theta, n, config.h);

    SolutionGrid out;
    out.theta = theta;
    out.scheme = config.scheme;
    out.h = config.h;
    out.k = solver_time_step(theta, config);
    out.times.assign(output_times.begin(), output_times.end());
    out.x.resize(n + 1);
    std::vector<double> u(n + 1);
    for (std::size_t j = 0; j <= n; ++j) {
        out.x[j] = static_cast<double>(j) / static_cast<double>(n);
        u[j] = evaluate_ic(out.x[j], ic);
    }

    switch (config.scheme) {
    case SchemeKind::Upwind: detail::march<SchemeKind::Upwind>(out, stencil, std::move(u), output_times); break;
    case SchemeKind::LaxWendroff: detail::march<SchemeKind::LaxWendroff>(out, stencil, std::move(u), output_times); break;
    case SchemeKind::BeamWarming: detail::march<SchemeKind::BeamWarming>(out, stencil, std::move(u), output_times); break;
    case SchemeKind::UpwindFluxLimited:
        detail::march<SchemeKind::UpwindFluxLimited>(out, stencil, std::move(u), output_times);
        break;
    }
    return out;
}

/// Interpolates every stored slice that matches a data time onto the data positions.
inline Matrix sample_to_data_grid(const SolutionGrid& solution, const DataGrid& grid)
{
    Matrix U(grid.M(), grid.N());
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < grid.M(); ++i) {
        const double t = grid.times[i];
        while (cursor < solution.times.size() && solution.times[cursor] < t - 1e-12) ++cursor;
        if (cursor == solution.times.size() || std::abs(solution.times[cursor] - t) > 1e-12)
            throw ContractError("sample_to_data_grid: no stored slice at t = " + std::to_string(t));
        const std::span<const double> slice(solution.slices[cursor]);
        for (std::size_t j = 0; j < grid.N(); ++j) U(i, j) = monotone_cubic(slice, grid.positions[j]);
    }
    return U;
}

/// U(h, theta): solve at the data times and sample onto the data grid.
inline Matrix numerical_solution_matrix(const ParameterVector& theta, const SolverConfig& config, InitialCondition ic,
                                        const DataGrid& grid)
{
    return sample_to_data_grid(solve(theta, config, ic, grid.times), grid);
}

/// Sum of absolute entrywise differences.
inline double l1_error(const Matrix& sampled, const Matrix& reference)
{
    require_same_shape(sampled, reference, "l1_error");
    double e = 0.0;
    for (std::size_t k = 0; k < sampled.size(); ++k) e += std::abs(sampled.values()[k] - reference.values()[k]);
    return e;
}

} // namespace advinv
