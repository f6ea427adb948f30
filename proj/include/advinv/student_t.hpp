#pragma once

#include "advinv/core.hpp"

#include <cmath>
#include <limits>

namespace advinv {

namespace detail {

// Continued fraction for the regularized incomplete beta function (modified Lentz).
inline double beta_continued_fraction(double a, double b, double x)
{
    constexpr double tiny = 1e-300;
    constexpr double eps = 1e-15;
    double c = 1.0;
    double d = 1.0 - (a + b) * x / (a + 1.0);
    if (std::abs(d) < tiny) d = tiny;
    d = 1.0 / d;
    double f = d;
    for (int m = 1; m <= 10000; ++m) {
        const double m2 = 2.0 * m;
        double num = m * (b - m) * x / ((a + m2 - 1.0) * (a + m2));
        for (int half = 0; half < 2; ++half) {
            d = 1.0 + num * d;
            if (std::abs(d) < tiny) d = tiny;
            c = 1.0 + num / c;
            if (std::abs(c) < tiny) c = tiny;
            d = 1.0 / d;
            const double delta = c * d;
            f *= delta;
            if (half == 1 && std::abs(delta - 1.0) < eps) return f;
            num = -(a + m) * (a + b + m) * x / ((a + m2) * (a + m2 + 1.0));
        }
    }
    return f;
}

} // namespace detail

/// I_x(a, b)
inline double regularized_incomplete_beta(double a, double b, double x)
{
    if (!(a > 0.0) || !(b > 0.0)) throw DomainError("incomplete beta needs a, b > 0");
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double log_front =
        std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(log_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * detail::beta_continued_fraction(a, b, x) / a;
    return 1.0 - front * detail::beta_continued_fraction(b, a, 1.0 - x) / b;
}

inline double student_t_cdf(double t, double dof)
{
    if (!(dof > 0.0)) throw DomainError("student t needs positive degrees of freedom");
    const double tail = 0.5 * regularized_incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
    return t >= 0.0 ? 1.0 - tail : tail;
}

/// Inverse CDF by bracketed bisection to 1e-10.
inline double student_t_quantile(double p, double dof)
{
    if (!(p > 0.0 && p < 1.0)) throw DomainError("quantile level must lie in (0, 1)");
    if (!(dof > 0.0)) throw DomainError("student t needs positive degrees of freedom");
    if (p == 0.5) return 0.0;
    double lo = 0.0;
    double hi = 1.0;
    const double target = p > 0.5 ? p : 1.0 - p;
    while (student_t_cdf(hi, dof) < target) {
        lo = hi;
        hi *= 2.0;
        if (hi > 1e12) throw DomainError("student t quantile out of range");
    }
    while (hi - lo > 1e-10) {
        const double mid = 0.5 * (lo + hi);
        (student_t_cdf(mid, dof) < target ? lo : hi) = mid;
    }
    const double q = 0.5 * (lo + hi);
    return p > 0.5 ? q : -q;
}

} // namespace advinv
