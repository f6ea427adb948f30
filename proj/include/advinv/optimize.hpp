#pragma once

// Derivative-free bounded minimization over the parameter box: Nelder-Mead with vertices
// clipped into the box, run from a fixed list of starting points.

#include "advinv/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>
#include <span>
#include <vector>

namespace advinv {

struct OptimizerOptions {
    std::vector<ParameterVector> starts = {{0.5, 0.5}, {1.5, 0.5}, {0.5, 1.5}, {1.5, 1.5}, {1.0, 1.0}};
    double initial_step = 0.2;
    double xtol = 1e-8;
    double ftol = 1e-12;
    std::size_t max_evals = 2000;
    ParameterBox box{};
};

struct OptimizerTrace {
    std::size_t evaluations = 0;
    std::size_t iterations = 0;
    std::size_t restarts = 0;
    bool converged = false;
};

struct Minimum {
    ParameterVector theta;
    double cost = std::numeric_limits<double>::infinity();
    OptimizerTrace trace;
};

namespace detail {

struct Vertex {
    std::array<double, 2> x;
    double f;
};

inline std::array<double, 2> clip(std::array<double, 2> x, const ParameterBox& box) noexcept
{
    for (double& v : x) v = std::clamp(v, box.lo, box.hi);
    return x;
}

template <class F>
Minimum nelder_mead(F&& f, const ParameterVector& start, const OptimizerOptions& opt)
{
    Minimum out;
    auto eval = [&](std::array<double, 2> x) {
        ++out.trace.evaluations;
        const double v = f(ParameterVector::from_array(x));
        return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
    };

    std::array<Vertex, 3> s;
    const auto x0 = clip(start.as_array(), opt.box);
    s[0] = {x0, eval(x0)};
    for (std::size_t k = 0; k < 2; ++k) {
        auto x = x0;
        // step inward if the start sits on the upper bound
        x[k] += x[k] + opt.initial_step <= opt.box.hi ? opt.initial_step : -opt.initial_step;
        s[k + 1] = {x, eval(x)};
    }

    auto by_cost = [](const Vertex& a, const Vertex& b) { return a.f < b.f; };
    while (out.trace.evaluations < opt.max_evals) {
        std::sort(s.begin(), s.end(), by_cost);
        ++out.trace.iterations;

        double size = 0.0;
        for (std::size_t k = 1; k < 3; ++k)
            for (std::size_t c = 0; c < 2; ++c) size = std::max(size, std::abs(s[k].x[c] - s[0].x[c]));
        const double spread = s[2].f - s[0].f;
        if (size <= opt.xtol || (std::isfinite(spread) && spread <= opt.ftol && size <= 1e3 * opt.xtol)) {
            out.trace.converged = true;
            break;
        }

        std::array<double, 2> centroid{};
        for (std::size_t c = 0; c < 2; ++c) centroid[c] = 0.5 * (s[0].x[c] + s[1].x[c]);
        auto along = [&](double coef) {
            std::array<double, 2> x;
            for (std::size_t c = 0; c < 2; ++c) x[c] = centroid[c] + coef * (s[2].x[c] - centroid[c]);
            return clip(x, opt.box);
        };

        const auto xr = along(-1.0);
        const double fr = eval(xr);
        if (fr < s[0].f) {
            const auto xe = along(-2.0);
            const double fe = eval(xe);
            s[2] = fe < fr ? Vertex{xe, fe} : Vertex{xr, fr};
            continue;
        }
        if (fr < s[1].f) {
            s[2] = {xr, fr};
            continue;
        }
        const bool outside = fr < s[2].f;
        const auto xc = along(outside ? -0.5 : 0.5);
        const double fc = eval(xc);
        if (fc < (outside ? fr : s[2].f)) {
            s[2] = {xc, fc};
            continue;
        }
        for (std::size_t k = 1; k < 3; ++k) {
            for (std::size_t c = 0; c < 2; ++c) s[k].x[c] = s[0].x[c] + 0.5 * (s[k].x[c] - s[0].x[c]);
            s[k].f = eval(s[k].x);
        }
    }
    const auto best = std::min_element(s.begin(), s.end(), by_cost);
    out.theta = ParameterVector::from_array(best->x);
    out.cost = best->f;
    return out;
}

} // namespace detail

/// Best-of-starts minimum of f over the box. f may return +inf (or NaN) to reject a point.
/// Ties between starts keep the earliest.
template <class F>
Minimum minimize(F&& f, const OptimizerOptions& opt, std::span<const ParameterVector> extra_starts = {})
{
    std::vector<ParameterVector> starts = opt.starts;
    starts.insert(starts.end(), extra_starts.begin(), extra_starts.end());
    if (starts.empty()) throw ConfigError("optimizer needs at least one starting point");

    Minimum best;
    OptimizerTrace total;
    bool first = true;
    for (const auto& x0 : starts) {
        Minimum m = detail::nelder_mead(f, x0, opt);
        total.evaluations += m.trace.evaluations;
        total.iterations += m.trace.iterations;
        if (first || m.cost < best.cost) {
            best = m;
            first = false;
        }
    }
    total.restarts = starts.size() - 1;
    total.converged = best.trace.converged && std::isfinite(best.cost);
    best.trace = total;
    return best;
}

} // namespace advinv
