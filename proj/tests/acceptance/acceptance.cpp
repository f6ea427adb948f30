// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include "advinv/advinv.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <numeric>
#include <random>
#include <string>
#include <thread>
#include <vector>

using namespace advinv;

namespace {

const auto kStep = InitialCondition::Discontinuous;
const auto kSmooth = InitialCondition::Continuous;

std::size_t jobs()
{
    return std::max(1u, std::thread::hardware_concurrency());
}

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args)
{
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

Outcome decomposition_identity()
{
    std::mt19937_64 rng(20240601);
    std::uniform_real_distribution<double> a(0.05, 2.0), b(0.2, 2.0), e(0.0, 1.0);
    std::uniform_int_distribution<int> level(0, 6), scheme(0, 3), ic(0, 1);
    const auto hs = default_h_ladder();
    double worst = 0.0;
    for (int n = 0; n < 200; ++n) {
        const auto c = ic(rng) ? kSmooth : kStep;
        const ParameterVector th{a(rng), b(rng)};
        const double h = hs[level(rng)];
        const auto d = generate(default_theta0(c), make_grid(6, 11), e(rng), rng(), c);
        SolverConfig cfg;
        cfg.h = h;
        cfg.scheme = kAllSchemes[scheme(rng)];
        const auto k = decompose_cost(d, th, default_theta0(c), cfg, c);
        worst = std::max(worst, std::abs(k.sum() - k.J) / std::max(1.0, k.J));
    }
    return {worst <= 1e-10, fmt("max |A+..+F - J| / max(1, J) = %.3g over 200 triples", worst)};
}

std::vector<double> solution_orders(const ParameterVector& th0, InitialCondition ic)
{
    const auto g = make_grid(6, 51);
    const auto U0 = analytic_solution_matrix(th0, g, ic);
    const auto hs = default_h_ladder();
    std::vector<double> p(4);
    parallel_for(4, jobs(), [&](std::size_t s) {
        std::vector<double> E;
        for (double h : hs) {
            SolverConfig cfg;
            cfg.h = h;
            cfg.scheme = kAllSchemes[s];
            E.push_back(l1_error(numerical_solution_matrix(th0, cfg, ic, g), U0));
        }
        p[s] = estimate_order(hs, E).slope;
    });
    return p;
}

Outcome continuous_orders()
{
    const auto p = solution_orders({0.3, 0.4}, kSmooth);
    const bool ok = p[0] >= 0.85 && p[0] <= 1.15 && p[1] >= 1.7 && p[1] <= 2.3 && p[2] >= 1.7 && p[2] <= 2.3 &&
                    std::abs(p[3] - 0.9183) <= 0.15;
    return {ok, fmt("p upwind %.4f, lw %.4f, bw %.4f, upwind-fl %.4f", p[0], p[1], p[2], p[3])};
}

Outcome discontinuous_orders()
{
    const auto p = solution_orders({0.3, 0.5}, kStep);
    const double ref[] = {0.5839, 0.4737, 0.7876, 0.9570};
    bool ok = true;
    for (int s = 0; s < 4; ++s) ok = ok && std::abs(p[s] - ref[s]) <= 0.15;
    return {ok, fmt("p upwind %.4f, lw %.4f, bw %.4f, upwind-fl %.4f", p[0], p[1], p[2], p[3])};
}

Outcome cost_plateau()
{
    bool ok = true;
    std::string detail;
    for (double eta : {0.1, 0.2}) {
        const auto d = generate({0.3, 0.5}, make_grid(6, 11), eta, 1, kStep);
        const auto st = cost_order_study(d, SchemeKind::UpwindFluxLimited, kStep, default_h_ladder(), {}, jobs());
        const double e2 = eta * eta;
        const double last = st.costs.back() / e2;
        bool mono = true;
        for (std::size_t k = 1; k < st.costs.size(); ++k) mono = mono && st.costs[k] <= 1.1 * st.costs[k - 1];
        ok = ok && last >= 0.6 && last <= 1.4 && mono;
        detail += fmt("eta^2=%.2g: J(h7)/eta^2 %.3f, nonincreasing %s; ", e2, last, mono ? "yes" : "no");
    }
    return {ok, detail + "scheme upwind-fl"};
}

Outcome cost_order_ratio()
{
    const auto d = generate({0.3, 0.5}, make_grid(6, 11), 0.0, 1, kStep);
    double ratio[2];
    const SchemeKind schemes[] = {SchemeKind::Upwind, SchemeKind::LaxWendroff};
    for (int s = 0; s < 2; ++s) {
        const auto st = cost_order_study(d, schemes[s], kStep, default_h_ladder(), {}, jobs());
        ratio[s] = st.p ? st.p_J.slope / st.p->slope : NAN;
    }
    const bool ok = ratio[0] >= 0.7 && ratio[0] <= 1.4 && ratio[1] >= 1.6 && ratio[1] <= 2.4;
    return {ok, fmt("p_J/p upwind %.3f, lw %.3f", ratio[0], ratio[1])};
}

double mean_lag1(const std::vector<double>& v, std::size_t M, std::size_t N)
{
    double total = 0.0;
    for (std::size_t i = 0; i < M; ++i) {
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < N; ++j) {
            den += v[i * N + j] * v[i * N + j];
            if (j + 1 < N) num += v[i * N + j] * v[i * N + j + 1];
        }
        total += den > 0.0 ? std::abs(num / den) : 0.0;
    }
    return total / static_cast<double>(M);
}

Outcome whitening_efficacy()
{
    const auto d = generate({0.3, 0.5}, make_grid(6, 11), 0.1, 1, kStep);
    const auto fit = fit_autocorrelative(d, SchemeKind::Upwind, 1.0 / 160, kStep);
    const auto U = numerical_solution_matrix(fit.autocorrelative.theta_hat, fit.autocorrelative.config, kStep, d.grid);
    const auto r = residuals(d.Y, U);
    const double raw = mean_lag1({r.values().begin(), r.values().end()}, 6, 11);
    const double white = mean_lag1(whiten(r, fit.model), 6, 11);
    return {white < 0.25 && white < raw, fmt("mean |lag-1| raw %.3f, whitened %.3f", raw, white)};
}

Outcome estimator_improvement()
{
    const ParameterVector th0{0.3, 0.5};
    const double hs[] = {1.0 / 40, 1.0 / 80, 1.0 / 160};
    std::vector<int> wins(60, 0);
    parallel_for(60, jobs(), [&](std::size_t cell) {
        const auto d = generate(th0, make_grid(6, 11), 0.1, cell / 3 + 1, kStep);
        const auto fit = fit_autocorrelative(d, SchemeKind::Upwind, hs[cell % 3], kStep);
        wins[cell] = distance(fit.autocorrelative.theta_hat, th0) < distance(fit.ols.theta_hat, th0);
    });
    const int total = std::accumulate(wins.begin(), wins.end(), 0);
    return {total >= 33, fmt("theta_auto closer in %d of 60 cells (need 33)", total)};
}

std::pair<int, int> coverage(std::size_t N, bool with_auto)
{
    const ParameterVector th0{0.3, 0.5};
    std::vector<int> ols(100, 0), aut(100, 0);
    parallel_for(100, jobs(), [&](std::size_t rep) {
        const auto d = generate(th0, make_grid(6, N), 0.1, rep + 1, kStep);
        auto covers = [&](const FitResult& f, const AutocorrModel* m) {
            const auto U = numerical_solution_matrix(f.theta_hat, f.config, kStep, d.grid);
            const auto s = sensitivities(f.theta_hat, f.config, d.grid, kStep);
            return confidence_report(f.theta_hat, residuals(d.Y, U), s, m).region_contains(th0) ? 1 : 0;
        };
        if (with_auto) {
            const auto fit = fit_autocorrelative(d, SchemeKind::Upwind, 1.0 / 160, kStep);
            ols[rep] = covers(fit.ols, nullptr);
            aut[rep] = covers(fit.autocorrelative, &fit.model);
        } else {
            ols[rep] = covers(fit_ols(d, SchemeKind::Upwind, 1.0 / 160, kStep), nullptr);
        }
    });
    return {std::accumulate(ols.begin(), ols.end(), 0), std::accumulate(aut.begin(), aut.end(), 0)};
}

Outcome confidence_behaviour()
{
    const auto [ols11, auto11] = coverage(11, true);
    const auto [ols30, unused] = coverage(30, false);
    (void)unused;
    return {auto11 >= ols11 && ols30 < 50,
            fmt("N=11 coverage auto %d%%, ols %d%%; N=30 ols %d%%", auto11, ols11, ols30)};
}

Outcome oracle_equivalence()
{
    const auto g = make_grid(6, 51);
    double err[2];
    const InitialCondition ics[] = {kStep, kSmooth};
    parallel_for(2, jobs(), [&](std::size_t k) {
        SolverConfig cfg;
        cfg.h = 1.0 / 5120;
        cfg.scheme = SchemeKind::UpwindFluxLimited;
        const auto th0 = default_theta0(ics[k]);
        err[k] = l1_error(numerical_solution_matrix(th0, cfg, ics[k], g), analytic_solution_matrix(th0, g, ics[k]));
    });
    return {err[0] <= 2e-2 && err[1] <= 1e-3, fmt("L1 step %.3g (<= 2e-2), gaussian %.3g (<= 1e-3)", err[0], err[1])};
}

} // namespace

int main()
{
    const std::pair<const char*, std::function<Outcome()>> criteria[] = {
        {"decomposition identity", decomposition_identity},
        {"continuous-solution orders", continuous_orders},
        {"discontinuous-solution orders", discontinuous_orders},
        {"cost plateau", cost_plateau},
        {"p_J ratio signature", cost_order_ratio},
        {"whitening efficacy", whitening_efficacy},
        {"estimator improvement", estimator_improvement},
        {"confidence region behaviour", confidence_behaviour},
        {"oracle equivalence", oracle_equivalence},
    };
    int failed = 0;
    int index = 0;
    for (const auto& [name, run] : criteria) {
        ++index;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s %d %s: %s [%.1fs]\n", o.pass ? "PASS" : "FAIL", index, name, o.detail.c_str(), secs);
        std::fflush(stdout);
        failed += !o.pass;
    }
    return failed ? 1 : 0;
}
