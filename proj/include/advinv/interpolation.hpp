#pragma once

// Monotonicity-preserving piecewise cubic Hermite interpolation on a uniform grid over [0, 1].
//
// Node slopes start from second-order (three-point) differences and are then filtered in the
// manner of Hyman: where the data are monotone the slope is clipped to [0, 3 min|delta|] with
// the sign of the data, which keeps each interval monotone. Within two nodes of a strict local
// extremum the centered slope is kept so smooth peaks retain third-order accuracy.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>

namespace advinv {

namespace detail {

// Slope at node i in "per node index" units.
inline double filtered_slope(std::span<const double> u, std::size_t i) noexcept
{
    const std::size_t last = u.size() - 1;
    if (last == 1) return u[1] - u[0];

    if (i == 0 || i == last) {
        const double d0 = i == 0 ? u[1] - u[0] : u[last] - u[last - 1];
        const double d1 = i == 0 ? u[2] - u[1] : u[last - 1] - u[last - 2];
        double m = 0.5 * (3.0 * d0 - d1);
        if (d0 == 0.0 || m * d0 <= 0.0) return 0.0;
        if (d0 * d1 < 0.0 && std::abs(m) > 3.0 * std::abs(d0)) m = 3.0 * d0;
        return m;
    }

    const double left = u[i] - u[i - 1];
    const double right = u[i + 1] - u[i];
    const double centered = 0.5 * (left + right);
    const double prod = left * right;
    if (prod < 0.0) return centered; // strict extremum
    if (prod == 0.0) return 0.0;     // touches a flat interval
    // an extremum one node further out: clipping here would flatten a smooth peak
    if (i >= 2 && (u[i - 1] - u[i - 2]) * left < 0.0) return centered;
    if (i + 2 <= last && (u[i + 2] - u[i + 1]) * right < 0.0) return centered;
    const double cap = 3.0 * std::min(std::abs(left), std::abs(right));
    return std::copysign(std::min(std::abs(centered), cap), left);
}

} // namespace detail

/// Evaluates the interpolant of nodal values u (nodes k/(u.size()-1)) at x in [0, 1].
inline double monotone_cubic(std::span<const double> u, double x) noexcept
{
    const std::size_t n = u.size() - 1;
    if (n == 0) return u[0];
    const double pos = std::clamp(x, 0.0, 1.0) * static_cast<double>(n);
    const double nearest = std::round(pos);
    if (std::abs(pos - nearest) < 1e-9) return u[static_cast<std::size_t>(nearest)];

    const std::size_t i = std::min(static_cast<std::size_t>(pos), n - 1);
    const double s = pos - static_cast<double>(i);
    const double m0 = detail::filtered_slope(u, i);
    const double m1 = detail::filtered_slope(u, i + 1);
    const double s2 = s * s;
    const double s3 = s2 * s;
    const double h00 = 2.0 * s3 - 3.0 * s2 + 1.0;
    const double h10 = s3 - 2.0 * s2 + s;
    const double h01 = -2.0 * s3 + 3.0 * s2;
    const double h11 = s3 - s2;
    return h00 * u[i] + h10 * m0 + h01 * u[i + 1] + h11 * m1;
}

} // namespace advinv
