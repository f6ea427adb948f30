#pragma once

// Closed-form solution of u_t + (g(x) u)_x = 0 with g(x) = alpha x^(1/beta),
// obtained by the method of characteristics.

#include "advinv/core.hpp"
#include "advinv/grid.hpp"

#include <cmath>
#include <optional>

namespace advinv {

/// Width of the band around beta = 1 where the exponential limit of the characteristic is used.
inline constexpr double kUnitBetaBand = 1e-6;

inline constexpr double kStepHeight = 5.0;
inline constexpr double kFrontPosition = 0.2;
inline constexpr double kGaussianWidthSq = 0.005;

inline double advection_speed(double x, const ParameterVector& theta)
{
    if (x < 0.0) throw DomainError("advection_speed: negative position " + std::to_string(x));
    return theta.alpha * std::pow(x, 1.0 / theta.beta);
}

inline double evaluate_ic(double x, InitialCondition ic) noexcept
{
    if (ic == InitialCondition::Discontinuous) return x <= kFrontPosition ? kStepHeight : 0.0;
    const double d = x - kFrontPosition;
    return std::exp(-d * d / kGaussianWidthSq);
}

/// Position at signed time t of the characteristic through x at time 0, i.e. the solution of
/// d/dt s = g(s), s(0) = x. Returns nullopt when the characteristic leaves the domain: it
/// blows up forward in time (beta < 1) or, backward in time, reaches the inflow point x = 0
/// before time t (beta > 1).
inline std::optional<double> characteristic(double t, double x, const ParameterVector& theta)
{
    if (x < 0.0) throw DomainError("characteristic: negative position " + std::to_string(x));
    if (t == 0.0) return x;
    const double alpha = theta.alpha;
    const double beta = theta.beta;
    if (std::abs(beta - 1.0) < kUnitBetaBand) return x * std::exp(alpha * t);

    const double c = 1.0 - 1.0 / beta;
    if (x == 0.0) {
        if (c < 0.0) return 0.0; // flat speed at the origin: the origin is a fixed point
        const double base = alpha * c * t;
        if (base < 0.0) return std::nullopt;
        return std::pow(base, 1.0 / c);
    }
    // [alpha c t + x^c]^(1/c) = x (1 + z)^(1/c), z = alpha c t x^(-c); log1p keeps c -> 0 accurate.
    const double z = alpha * c * t * std::pow(x, -c);
    const double base = 1.0 + z;
    if (base < 0.0 || (base == 0.0 && c < 0.0)) return std::nullopt;
    const double s = x * std::exp(std::log1p(z) / c);
    if (!std::isfinite(s)) return std::nullopt;
    return s;
}

/// u0(t, x; theta). At x = 0 and t > 0 the value is the limit x -> 0+ of the closed form.
inline double analytic_solution(double t, double x, const ParameterVector& theta, InitialCondition ic)
{
    if (x < 0.0) throw DomainError("analytic_solution: negative position " + std::to_string(x));
    if (t == 0.0) return evaluate_ic(x, ic);
    if (x == 0.0) {
        if (std::abs(theta.beta - 1.0) < kUnitBetaBand) return std::exp(-theta.alpha * t) * evaluate_ic(0.0, ic);
        return theta.beta < 1.0 ? evaluate_ic(0.0, ic) : 0.0;
    }
    const auto foot = characteristic(-t, x, theta);
    if (!foot) return 0.0;
    // g(foot)/g(x) = (foot/x)^(1/beta)
    const double ratio = std::pow(*foot / x, 1.0 / theta.beta);
    return ratio * evaluate_ic(*foot, ic);
}

inline Matrix analytic_solution_matrix(const ParameterVector& theta, const DataGrid& grid, InitialCondition ic)
{
    Matrix u(grid.M(), grid.N());
    for (std::size_t i = 0; i < grid.M(); ++i)
        for (std::size_t j = 0; j < grid.N(); ++j)
            u(i, j) = analytic_solution(grid.times[i], grid.positions[j], theta, ic);
    return u;
}

} // namespace advinv
