#include "advinv/uncertainty.hpp"

#include <boost/math/differentiation/autodiff.hpp>
#include <boost/math/distributions/students_t.hpp>
#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace advinv;

namespace {

const auto kStep = InitialCondition::Discontinuous;
const auto kSmooth = InitialCondition::Continuous;

Matrix analytic_model_at(const ParameterVector& th, const DataGrid& g, InitialCondition ic)
{
    return analytic_solution_matrix(th, g, ic);
}

// Gaussian-profile closed form written against generic scalars, for forward-mode derivatives.
template <class A, class B>
auto smooth_solution(double t, double x, const A& alpha, const B& beta)
{
    using std::exp;
    using std::log;
    const auto c = 1.0 - 1.0 / beta;
    const auto foot = exp(log(exp(c * std::log(x)) - alpha * c * t) / c);
    const auto d = foot - 0.2;
    return exp((log(foot) - std::log(x)) / beta) * exp(-d * d / 0.005);
}

} // namespace

TEST(Residuals, AreModelMinusData)
{
    Matrix Y(1, 2), U(1, 2);
    Y(0, 0) = 1.0;
    Y(0, 1) = 2.0;
    U(0, 0) = 1.5;
    U(0, 1) = 1.0;
    const auto r = residuals(Y, U);
    EXPECT_EQ(r(0, 0), 0.5);
    EXPECT_EQ(r(0, 1), -1.0);
    EXPECT_THROW(residuals(Y, Matrix(2, 1)), ContractError);
}

TEST(Fronts, Examples)
{
    const auto g = make_grid(6, 11);
    const ParameterVector th{0.3, 0.5};
    const auto f0 = locate_front(0.0, th, g);
    EXPECT_EQ(f0.column, 2u);
    EXPECT_FALSE(f0.beyond);
    const auto f2 = locate_front(2.0, th, g);
    EXPECT_NEAR(f2.position, 0.2272727272727273, 1e-12);
    EXPECT_EQ(f2.column, 3u);
    std::size_t prev = 0;
    for (double t = 0.0; t <= 10.0; t += 0.25) {
        const auto f = locate_front(t, th, g);
        EXPECT_GE(f.column, prev);
        EXPECT_GE(f.column, 1u);
        EXPECT_LE(f.column, 9u);
        prev = f.column;
    }
    // beta = 2 carries the front out of the domain in finite time
    const auto gone = locate_front(10.0, {1.0, 2.0}, g);
    EXPECT_TRUE(gone.beyond);
    EXPECT_EQ(gone.column, 9u);
}

TEST(Gammas, WhiteNoiseGivesSmallCoefficients)
{
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 1.0);
    const auto g = make_grid(6, 51);
    double sum = 0.0;
    std::size_t count = 0;
    for (int rep = 0; rep < 200; ++rep) {
        Matrix r(6, 51);
        for (double& v : r.values()) v = n(rng);
        const auto m = estimate_gammas(r, locate_fronts({0.3, 0.5}, g));
        for (std::size_t i = 0; i < 6; ++i) {
            sum += m.gamma_minus[i] + m.gamma_plus[i];
            count += 2;
        }
    }
    EXPECT_NEAR(sum / count, 0.0, 0.05);
}

TEST(Gammas, RecoversAutoregressiveCoefficient)
{
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n(0.0, 1.0);
    const std::size_t len = 10000;
    Matrix r(1, len);
    r(0, 0) = n(rng) / std::sqrt(1.0 - 0.49);
    for (std::size_t j = 1; j < len; ++j) r(0, j) = 0.7 * r(0, j - 1) + n(rng);
    FrontLocation f;
    f.column = len / 2;
    const auto m = estimate_gammas(r, {f});
    EXPECT_NEAR(m.gamma_minus[0], 0.7, 0.02);
    EXPECT_NEAR(m.gamma_plus[0], 0.7, 0.02);
}

TEST(Gammas, DegenerateInputs)
{
    const auto g = make_grid(6, 11);
    const auto m = estimate_gammas(Matrix(6, 11, 0.0), locate_fronts({0.3, 0.5}, g));
    for (std::size_t i = 0; i < 6; ++i) {
        EXPECT_EQ(m.gamma_minus[i], 0.0);
        EXPECT_EQ(m.gamma_plus[i], 0.0);
    }
    // a constant residual gives a unit ratio, which is clamped
    Matrix c(1, 11, 1.0);
    FrontLocation f;
    f.column = 5;
    const auto k = estimate_gammas(c, {f});
    EXPECT_EQ(k.gamma_plus[0], kGammaBound);
    EXPECT_THROW(estimate_gammas(c, {}), ContractError);
}

TEST(Whitening, ZeroCoefficientsAreIdentity)
{
    const auto g = make_grid(6, 11);
    std::mt19937_64 rng(1);
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix r(6, 11);
    for (double& v : r.values()) v = n(rng);
    const auto w = whiten(r, identity_model(g));
    for (std::size_t k = 0; k < r.size(); ++k) EXPECT_EQ(w[k], r.values()[k]);
    EXPECT_NEAR(autocorrelative_cost(r, identity_model(g)), ols_cost(Matrix(6, 11, 0.0), r), 1e-15);
}

TEST(Whitening, InvertsByForwardSubstitution)
{
    std::mt19937_64 rng(2);
    std::normal_distribution<double> n(0.0, 1.0);
    std::uniform_real_distribution<double> u(-0.9, 0.9);
    const auto g = make_grid(6, 30);
    Matrix r(6, 30);
    for (double& v : r.values()) v = n(rng);
    auto m = identity_model(g);
    m.fronts = locate_fronts({0.3, 0.5}, g);
    for (std::size_t i = 0; i < 6; ++i) {
        m.gamma_minus[i] = u(rng);
        m.gamma_plus[i] = u(rng);
    }
    const auto w = whiten(r, m);
    for (std::size_t i = 0; i < 6; ++i) {
        const std::size_t d = m.fronts[i].column;
        for (std::size_t j = 0; j < 30; ++j) {
            const bool left = j < d;
            const double gam = left ? m.gamma_minus[i] : m.gamma_plus[i];
            const std::size_t start = left ? 0 : d;
            const double back = j == start ? w[i * 30 + j] / std::sqrt(1.0 - gam * gam)
                                           : w[i * 30 + j] + gam * r(i, j - 1);
            EXPECT_NEAR(back, r(i, j), 1e-12);
        }
    }
}

TEST(Sensitivities, MatchForwardModeDerivatives)
{
    using namespace boost::math::differentiation;
    const auto g = make_grid(6, 11);
    const ParameterVector th{0.3, 0.4};
    const auto s = finite_difference_sensitivities([&](const ParameterVector& p) { return analytic_model_at(p, g, kSmooth); }, th);
    ASSERT_EQ(s.jacobian.rows(), 66u);
    EXPECT_FALSE(s.one_sided);
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < g.M(); ++i)
        for (std::size_t j = 1; j < g.N(); ++j) {
            const auto vars = make_ftuple<double, 1, 1>(th.alpha, th.beta);
            const auto u = smooth_solution(g.times[i], g.positions[j], std::get<0>(vars), std::get<1>(vars));
            const double da = u.derivative(1, 0);
            const double db = u.derivative(0, 1);
            const std::size_t row = i * g.N() + j;
            worst = std::max({worst, std::abs(s.jacobian(row, 0) - da), std::abs(s.jacobian(row, 1) - db)});
            scale = std::max({scale, std::abs(da), std::abs(db)});
        }
    EXPECT_GT(scale, 0.1);
    EXPECT_LT(worst, 1e-4 * scale);
}

TEST(Sensitivities, NumericalModelConvergesUnderRefinement)
{
    const auto g = make_grid(6, 11);
    const ParameterVector th{0.3, 0.4};
    const auto exact = finite_difference_sensitivities([&](const ParameterVector& p) { return analytic_model_at(p, g, kSmooth); }, th);
    auto gap = [&](double h) {
        SolverConfig cfg;
        cfg.h = h;
        cfg.scheme = SchemeKind::UpwindFluxLimited;
        cfg.lambda = 0.5 / courant_number(th, h, 1.0);
        const auto s = sensitivities(th, cfg, g, kSmooth);
        double e = 0.0;
        for (std::size_t k = 0; k < s.jacobian.size(); ++k)
            e = std::max(e, std::abs(s.jacobian.values()[k] - exact.jacobian.values()[k]));
        return e;
    };
    EXPECT_LT(gap(1.0 / 320), 0.5 * gap(1.0 / 80));
}

TEST(Sensitivities, ZeroModelAndBoxEdge)
{
    const auto zero = finite_difference_sensitivities([](const ParameterVector&) { return Matrix(2, 3, 1.0); }, {0.3, 0.5});
    for (double v : zero.jacobian.values()) EXPECT_EQ(v, 0.0);
    const auto edge = finite_difference_sensitivities(
        [](const ParameterVector& p) { Matrix m(1, 1); m(0, 0) = 2.0 * p.alpha + p.beta * p.beta; return m; }, {10.0, 1e-6});
    EXPECT_TRUE(edge.one_sided);
    EXPECT_NEAR(edge.jacobian(0, 0), 2.0, 1e-6);
    EXPECT_NEAR(edge.jacobian(0, 1), 2e-6, 1e-4);
}

TEST(StudentT, QuantilesMatchReference)
{
    for (double dof : {1.0, 3.0, 9.0, 64.0, 400.0})
        for (double p : {0.6, 0.9, 0.975, 0.995}) {
            const boost::math::students_t dist(dof);
            EXPECT_NEAR(student_t_quantile(p, dof), boost::math::quantile(dist, p), 1e-8) << dof << " " << p;
            EXPECT_NEAR(student_t_cdf(boost::math::quantile(dist, p), dof), p, 1e-10);
        }
    EXPECT_NEAR(student_t_quantile(0.975, 64), 1.9977, 1e-4);
    EXPECT_NEAR(student_t_quantile(0.5, 10), 0.0, 1e-9);
    EXPECT_THROW(student_t_quantile(1.0, 10), DomainError);
    EXPECT_THROW(student_t_quantile(0.5, 0), DomainError);
}

TEST(Confidence, ZeroResidualsGiveZeroWidths)
{
    const auto g = make_grid(6, 11);
    const ParameterVector th{0.3, 0.4};
    const auto s = finite_difference_sensitivities([&](const ParameterVector& p) { return analytic_model_at(p, g, kSmooth); }, th);
    const auto rep = confidence_report(th, Matrix(6, 11, 0.0), s);
    EXPECT_EQ(rep.dof, 64u);
    EXPECT_EQ(rep.half_widths[0], 0.0);
    EXPECT_EQ(rep.half_widths[1], 0.0);
    EXPECT_TRUE(rep.region_contains(th));
    EXPECT_FALSE(rep.region_contains({0.3001, 0.4}));
}

TEST(Confidence, ScalingAndSymmetry)
{
    const auto g = make_grid(6, 11);
    const ParameterVector th{0.3, 0.4};
    const auto s = finite_difference_sensitivities([&](const ParameterVector& p) { return analytic_model_at(p, g, kSmooth); }, th);
    std::mt19937_64 rng(4);
    std::normal_distribution<double> n(0.0, 0.05);
    Matrix r(6, 11);
    for (double& v : r.values()) v = n(rng);
    Matrix r2 = r;
    for (double& v : r2.values()) v *= 2.0;
    const auto a = confidence_report(th, r, s);
    const auto b = confidence_report(th, r2, s);
    for (std::size_t k = 0; k < 2; ++k) {
        EXPECT_NEAR(b.half_widths[k], 2.0 * a.half_widths[k], 1e-12 * b.half_widths[k]);
        const double mid = 0.5 * (a.lower[k] + a.upper[k]);
        EXPECT_NEAR(mid, th.as_array()[k], 1e-14);
    }
    EXPECT_NEAR(a.eta2_hat, ols_cost(Matrix(6, 11, 0.0), r) * 66.0 / 64.0, 1e-15);
    EXPECT_NEAR(a.ellipse.radius_sq, 5.991464547107979, 1e-12);
    EXPECT_GE(a.ellipse.semi_axes[0], a.ellipse.semi_axes[1]);
    for (const auto& p : a.ellipse_points(16)) {
        const double da = p.alpha - th.alpha, db = p.beta - th.beta;
        const auto& C = a.covariance;
        const double det = C[0] * C[3] - C[1] * C[2];
        EXPECT_NEAR((C[3] * da * da - 2 * C[1] * da * db + C[0] * db * db) / det, a.ellipse.radius_sq, 1e-8);
    }
    const auto same = confidence_report(th, r, s, nullptr);
    const auto ident = identity_model(g);
    const auto viaR = confidence_report(th, r, s, &ident);
    for (std::size_t k = 0; k < 2; ++k) EXPECT_NEAR(viaR.half_widths[k], same.half_widths[k], 1e-15);
}

TEST(Confidence, NoiseEstimateForCorrectModel)
{
    const auto g = make_grid(6, 11);
    const ParameterVector th{0.3, 0.4};
    const auto s = finite_difference_sensitivities([&](const ParameterVector& p) { return analytic_model_at(p, g, kSmooth); }, th);
    const double eta = 0.1;
    int inside = 0;
    for (std::uint64_t seed = 1; seed <= 50; ++seed) {
        const auto d = generate(th, g, eta, seed, kSmooth);
        const auto rep = confidence_report(th, residuals(d.Y, analytic_model_at(th, g, kSmooth)), s);
        inside += rep.eta2_hat >= 0.6 * eta * eta && rep.eta2_hat <= 1.4 * eta * eta;
    }
    EXPECT_GE(inside, 45);
}

TEST(Confidence, RankDeficientSensitivities)
{
    Sensitivities s;
    s.jacobian = Matrix(10, 2, 1.0);
    const auto rep = confidence_report({1.0, 1.0}, Matrix(2, 5, 0.1), s);
    EXPECT_TRUE(rep.rank_deficient);
    EXPECT_TRUE(std::isinf(rep.half_widths[0]));
    EXPECT_TRUE(rep.region_contains({5.0, 5.0}));
    EXPECT_THROW(confidence_report({1.0, 1.0}, Matrix(2, 5), s, nullptr, 1.0), ConfigError);
    EXPECT_THROW(confidence_report({1.0, 1.0}, Matrix(3, 5), s), ContractError);
}

TEST(AutocorrelativeFit, ProducesModelAndFlags)
{
    const auto d = generate({0.3, 0.5}, make_grid(6, 11), 0.1, 7, kStep);
    const auto fit = fit_autocorrelative(d, SchemeKind::Upwind, 1.0 / 80, kStep);
    EXPECT_FALSE(fit.non_diffusive_warning);
    EXPECT_EQ(fit.model.slices(), 6u);
    EXPECT_LE(distance(fit.autocorrelative.theta_hat, {0.3, 0.5}), 0.1);
    EXPECT_TRUE(fit.autocorrelative.config.lambda.has_value());
    const auto lw = fit_autocorrelative(d, SchemeKind::LaxWendroff, 0.1, kStep);
    EXPECT_TRUE(lw.non_diffusive_warning);
}
