#pragma once

// Residual analysis, the first-order autocorrelation model for diffusive schemes, and
// sensitivity-based confidence intervals and regions.

#include "advinv/analytic.hpp"
#include "advinv/core.hpp"
#include "advinv/estimation.hpp"
#include "advinv/student_t.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

namespace advinv {

/// r_ij = u_ij - y_ij
inline Matrix residuals(const Matrix& Y, const Matrix& U)
{
    require_same_shape(Y, U, "residuals");
    Matrix r(Y.rows(), Y.cols());
    for (std::size_t k = 0; k < Y.size(); ++k) r.values()[k] = U.values()[k] - Y.values()[k];
    return r;
}

struct FrontLocation {
    /// Zero-based column of the first data point at or past the front, kept in [1, N-2].
    std::size_t column = 1;
    double position = kFrontPosition;
    /// The transported front has left the domain.
    bool beyond = false;
};

/// Column of the jump from the step initial condition, carried along the characteristic.
inline FrontLocation locate_front(double t, const ParameterVector& theta, const DataGrid& grid)
{
    validate_grid(grid);
    if (grid.N() < 3) throw ContractError("locate_front: need at least 3 spatial points");
    FrontLocation f;
    const auto x = characteristic(t, kFrontPosition, theta);
    const std::size_t last = grid.N() - 2;
    if (!x || *x > 1.0) {
        f.position = x ? *x : std::numeric_limits<double>::infinity();
        f.column = last;
        f.beyond = true;
        return f;
    }
    f.position = *x;
    const auto it = std::lower_bound(grid.positions.begin(), grid.positions.end(), *x - 1e-12);
    const auto j = static_cast<std::size_t>(it - grid.positions.begin());
    f.column = std::clamp<std::size_t>(j, 1, last);
    return f;
}

/// Per time slice: front column and lag-1 coefficients of the segments left of it ("-") and
/// from it onwards ("+").
struct AutocorrModel {
    std::vector<FrontLocation> fronts;
    std::vector<double> gamma_minus;
    std::vector<double> gamma_plus;

    [[nodiscard]] std::size_t slices() const noexcept { return fronts.size(); }
};

inline constexpr double kGammaBound = 0.99;

inline std::vector<FrontLocation> locate_fronts(const ParameterVector& theta, const DataGrid& grid)
{
    std::vector<FrontLocation> out;
    for (double t : grid.times) out.push_back(locate_front(t, theta, grid));
    return out;
}

inline AutocorrModel estimate_gammas(const Matrix& r, std::vector<FrontLocation> fronts)
{
    if (fronts.size() != r.rows()) throw ContractError("estimate_gammas: one front per time slice required");
    auto ratio = [&](std::size_t i, std::size_t from, std::size_t to) {
        // sum_{j in [from, to)} r_j r_{j+1} / sum r_j^2
        double num = 0.0, den = 0.0;
        for (std::size_t j = from; j < to; ++j) {
            num += r(i, j) * r(i, j + 1);
            den += r(i, j) * r(i, j);
        }
        if (den == 0.0) return 0.0;
        return std::clamp(num / den, -kGammaBound, kGammaBound);
    };
    AutocorrModel m;
    for (std::size_t i = 0; i < r.rows(); ++i) {
        const std::size_t d = fronts[i].column;
        if (d == 0 || d >= r.cols()) throw ContractError("estimate_gammas: front column out of range");
        m.gamma_minus.push_back(ratio(i, 0, d));
        m.gamma_plus.push_back(ratio(i, d, r.cols() - 1));
    }
    m.fronts = std::move(fronts);
    return m;
}

/// A model with every coefficient zero, i.e. R = I.
inline AutocorrModel identity_model(const DataGrid& grid)
{
    AutocorrModel m;
    m.fronts.assign(grid.M(), FrontLocation{});
    m.gamma_minus.assign(grid.M(), 0.0);
    m.gamma_plus.assign(grid.M(), 0.0);
    return m;
}

/// R r in row-major (i, j) order, applying each bidiagonal block directly.
inline std::vector<double> whiten(const Matrix& r, const AutocorrModel& model)
{
    if (model.slices() != r.rows()) throw ContractError("whiten: model and residual shapes differ");
    std::vector<double> out(r.size());
    for (std::size_t i = 0; i < r.rows(); ++i) {
        const std::size_t d = model.fronts[i].column;
        auto segment = [&](std::size_t from, std::size_t to, double g) {
            if (from >= to) return;
            out[i * r.cols() + from] = std::sqrt(1.0 - g * g) * r(i, from);
            for (std::size_t j = from + 1; j < to; ++j) out[i * r.cols() + j] = r(i, j) - g * r(i, j - 1);
        };
        segment(0, d, model.gamma_minus[i]);
        segment(d, r.cols(), model.gamma_plus[i]);
    }
    return out;
}

/// (1/MN) |R r|^2
inline double autocorrelative_cost(const Matrix& r, const AutocorrModel& model)
{
    const auto w = whiten(r, model);
    double s = 0.0;
    for (double v : w) s += v * v;
    return s / static_cast<double>(r.size());
}

struct AutocorrelativeFit {
    FitResult ols;
    FitResult autocorrelative;
    AutocorrModel model;
    /// The scheme is not one of the diffusive ones the model is meant for.
    bool non_diffusive_warning = false;
};

/// Two-stage routine: OLS fit, lag-1 coefficients from its residuals, then minimization of the
/// whitened cost with the coefficients and fronts held fixed.
inline AutocorrelativeFit fit_autocorrelative(const Dataset& data, const SolverConfig& config, InitialCondition ic,
                                              const OptimizerOptions& opts = {})
{
    AutocorrelativeFit out;
    out.non_diffusive_warning = config.scheme != SchemeKind::Upwind;
    out.ols = fit_ols(data, config, ic, opts);

    const auto U = try_model(out.ols.theta_hat, out.ols.config, ic, data.grid);
    if (!U) throw EstimationError("fit_autocorrelative: OLS estimate is not solvable");
    out.model = estimate_gammas(residuals(data.Y, *U), locate_fronts(out.ols.theta_hat, data.grid));

    const std::array<ParameterVector, 1> extra{out.ols.theta_hat};
    const auto r = minimize_over_solver(
        [&](const ParameterVector& th, const SolverConfig& c) {
            const auto Ut = try_model(th, c, ic, data.grid);
            return Ut ? autocorrelative_cost(residuals(data.Y, *Ut), out.model)
                      : std::numeric_limits<double>::infinity();
        },
        config, opts, extra);
    out.autocorrelative = out.ols;
    out.autocorrelative.theta_hat = r.minimum.theta;
    out.autocorrelative.cost = r.minimum.cost;
    out.autocorrelative.config = r.config;
    out.autocorrelative.trace = r.minimum.trace;
    return out;
}

inline AutocorrelativeFit fit_autocorrelative(const Dataset& data, SchemeKind scheme, double h, InitialCondition ic,
                                              const OptimizerOptions& opts = {})
{
    SolverConfig config;
    config.h = h;
    config.scheme = scheme;
    return fit_autocorrelative(data, config, ic, opts);
}

struct Sensitivities {
    /// MN x 2, rows in (i, j) order, columns (d/d alpha, d/d beta).
    Matrix jacobian;
    /// A component was too close to the box edge for a central difference.
    bool one_sided = false;
};

/// Finite-difference Jacobian of a model theta -> M x N matrix. Steps are 1e-5 max(|theta_k|, 1).
template <class Model>
Sensitivities finite_difference_sensitivities(Model&& model, const ParameterVector& theta, const ParameterBox& box = {})
{
    const std::array<double, 2> x = theta.as_array();
    Sensitivities s;
    Matrix base;
    bool have_base = false;
    for (std::size_t k = 0; k < 2; ++k) {
        const double delta = 1e-5 * std::max(std::abs(x[k]), 1.0);
        const bool fwd_ok = x[k] + delta <= box.hi;
        // the lower edge of the box is not a valid parameter value
        const bool bwd_ok = x[k] - delta > box.lo;
        if (!fwd_ok && !bwd_ok) throw DomainError("sensitivities: parameter box narrower than the difference step");
        auto shifted = [&](double step) {
            auto y = x;
            y[k] += step;
            return model(ParameterVector::from_array(y));
        };
        Matrix plus, minus;
        double span_width = 0.0;
        if (fwd_ok && bwd_ok) {
            plus = shifted(delta);
            minus = shifted(-delta);
            span_width = 2.0 * delta;
        } else {
            s.one_sided = true;
            if (!have_base) {
                base = model(theta);
                have_base = true;
            }
            if (fwd_ok) {
                plus = shifted(delta);
                minus = base;
            } else {
                plus = base;
                minus = shifted(-delta);
            }
            span_width = delta;
        }
        require_same_shape(plus, minus, "sensitivities");
        if (k == 0) s.jacobian = Matrix(plus.size(), 2);
        for (std::size_t q = 0; q < plus.size(); ++q)
            s.jacobian(q, k) = (plus.values()[q] - minus.values()[q]) / span_width;
    }
    return s;
}

/// Sensitivities of U(h, theta). Pass the configuration a fit was evaluated with so the
/// differences see the same time step.
inline Sensitivities sensitivities(const ParameterVector& theta, const SolverConfig& config, const DataGrid& grid,
                                   InitialCondition ic)
{
    return finite_difference_sensitivities(
        [&](const ParameterVector& th) { return numerical_solution_matrix(th, config, ic, grid); }, theta);
}

inline Sensitivities sensitivities(const ParameterVector& theta, SchemeKind scheme, double h, const DataGrid& grid,
                                   InitialCondition ic)
{
    SolverConfig config;
    config.h = h;
    config.scheme = scheme;
    return sensitivities(theta, config, grid, ic);
}

struct Ellipse {
    ParameterVector center;
    /// Semi-axis lengths, major first.
    std::array<double, 2> semi_axes{};
    /// Angle of the major axis from the alpha axis, radians.
    double angle = 0.0;
    /// Squared Mahalanobis radius, the chi-square(2) quantile at the report level.
    double radius_sq = 0.0;
};

struct ConfidenceReport {
    ParameterVector theta_hat;
    double level = 0.95;
    std::size_t dof = 0;
    double t_quantile = 0.0;
    double eta2_hat = 0.0;
    /// [(Q grad U)^T (Q grad U)]^-1, row-major 2x2.
    std::array<double, 4> H{};
    /// eta2_hat * H
    std::array<double, 4> covariance{};
    std::array<double, 2> standard_errors{};
    std::array<double, 2> half_widths{};
    std::array<double, 2> lower{};
    std::array<double, 2> upper{};
    Ellipse ellipse;
    /// The normal matrix was singular; widths are infinite.
    bool rank_deficient = false;

    /// theta lies inside the confidence ellipse.
    [[nodiscard]] bool region_contains(const ParameterVector& theta) const
    {
        if (rank_deficient) return true;
        const double da = theta.alpha - theta_hat.alpha;
        const double db = theta.beta - theta_hat.beta;
        const double det = covariance[0] * covariance[3] - covariance[1] * covariance[2];
        if (!(det > 0.0)) return da == 0.0 && db == 0.0;
        const double q = (covariance[3] * da * da - 2.0 * covariance[1] * da * db + covariance[0] * db * db) / det;
        return q <= ellipse.radius_sq;
    }

    [[nodiscard]] bool interval_contains(std::size_t k, double value) const
    {
        return value >= lower[k] && value <= upper[k];
    }

    /// Points on the ellipse boundary, for plotting.
    [[nodiscard]] std::vector<ParameterVector> ellipse_points(std::size_t count = 200) const
    {
        std::vector<ParameterVector> pts;
        const double c = std::cos(ellipse.angle), s = std::sin(ellipse.angle);
        for (std::size_t k = 0; k <= count; ++k) {
            const double phi = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(count);
            const double a = ellipse.semi_axes[0] * std::cos(phi);
            const double b = ellipse.semi_axes[1] * std::sin(phi);
            pts.push_back({ellipse.center.alpha + c * a - s * b, ellipse.center.beta + s * a + c * b});
        }
        return pts;
    }
};

/// Confidence intervals and region at theta_hat. `whitening` selects Q: nullptr for the
/// identity (OLS), otherwise the autocorrelation model R.
inline ConfidenceReport confidence_report(const ParameterVector& theta_hat, const Matrix& r, const Sensitivities& sens,
                                          const AutocorrModel* whitening = nullptr, double level = 0.95)
{
    if (!(level > 0.0 && level < 1.0)) throw ConfigError("confidence level must lie in (0, 1)");
    const std::size_t mn = r.size();
    if (mn <= 2) throw ContractError("confidence_report: need more than 2 observations");
    if (sens.jacobian.rows() != mn || sens.jacobian.cols() != 2)
        throw ContractError("confidence_report: sensitivity matrix must be MN x 2");

    std::vector<double> qr, q0, q1;
    if (whitening) {
        Matrix c0(r.rows(), r.cols()), c1(r.rows(), r.cols());
        for (std::size_t k = 0; k < mn; ++k) {
            c0.values()[k] = sens.jacobian(k, 0);
            c1.values()[k] = sens.jacobian(k, 1);
        }
        qr = whiten(r, *whitening);
        q0 = whiten(c0, *whitening);
        q1 = whiten(c1, *whitening);
    } else {
        qr.assign(r.values().begin(), r.values().end());
        for (std::size_t k = 0; k < mn; ++k) {
            q0.push_back(sens.jacobian(k, 0));
            q1.push_back(sens.jacobian(k, 1));
        }
    }

    ConfidenceReport rep;
    rep.theta_hat = theta_hat;
    rep.level = level;
    rep.dof = mn - 2;
    rep.t_quantile = student_t_quantile(1.0 - 0.5 * (1.0 - level), static_cast<double>(rep.dof));
    double rr = 0.0, a = 0.0, b = 0.0, d = 0.0;
    for (std::size_t k = 0; k < mn; ++k) {
        rr += qr[k] * qr[k];
        a += q0[k] * q0[k];
        b += q0[k] * q1[k];
        d += q1[k] * q1[k];
    }
    rep.eta2_hat = rr / static_cast<double>(rep.dof);
    rep.ellipse.center = theta_hat;
    rep.ellipse.radius_sq = -2.0 * std::log1p(-level);

    const double det = a * d - b * b;
    const double scale = std::max(a * d, b * b);
    if (!(det > 1e-14 * scale) || !(scale > 0.0) || !std::isfinite(det)) {
        rep.rank_deficient = true;
        const double inf = std::numeric_limits<double>::infinity();
        rep.H = {inf, inf, inf, inf};
        rep.covariance = rep.H;
        rep.standard_errors = {inf, inf};
        rep.half_widths = {inf, inf};
        rep.lower = {-inf, -inf};
        rep.upper = {inf, inf};
        rep.ellipse.semi_axes = {inf, inf};
        return rep;
    }
    rep.H = {d / det, -b / det, -b / det, a / det};
    for (std::size_t k = 0; k < 4; ++k) rep.covariance[k] = rep.eta2_hat * rep.H[k];
    const std::array<double, 2> x = theta_hat.as_array();
    for (std::size_t k = 0; k < 2; ++k) {
        rep.standard_errors[k] = std::sqrt(rep.covariance[3 * k]);
        rep.half_widths[k] = rep.standard_errors[k] * rep.t_quantile;
        rep.lower[k] = x[k] - rep.half_widths[k];
        rep.upper[k] = x[k] + rep.half_widths[k];
    }

    // eigen-decomposition of the symmetric 2x2 covariance
    const double p = rep.covariance[0], q = rep.covariance[1], s = rep.covariance[3];
    const double mean = 0.5 * (p + s);
    const double rad = std::hypot(0.5 * (p - s), q);
    const double l1 = mean + rad;
    const double l2 = std::max(mean - rad, 0.0);
    rep.ellipse.semi_axes = {std::sqrt(rep.ellipse.radius_sq * l1), std::sqrt(rep.ellipse.radius_sq * l2)};
    rep.ellipse.angle = 0.5 * std::atan2(2.0 * q, p - s);
    return rep;
}

} // namespace advinv
