// Generate a noisy step-profile dataset, fit it with the upwind scheme and print 95% intervals
// from both the OLS and the autocorrelative model.

#include "advinv/advinv.hpp"

#include <cstdio>

int main()
{
    using namespace advinv;
    const auto ic = InitialCondition::Discontinuous;
    const ParameterVector theta0{0.3, 0.5};
    const Dataset data = generate(theta0, make_grid(6, 11), 0.1, 7, ic);

    const auto fit = fit_autocorrelative(data, SchemeKind::Upwind, 1.0 / 160, ic);
    for (const bool autocorr : {false, true}) {
        const FitResult& f = autocorr ? fit.autocorrelative : fit.ols;
        const Matrix U = numerical_solution_matrix(f.theta_hat, f.config, ic, data.grid);
        const auto rep = confidence_report(f.theta_hat, residuals(data.Y, U), sensitivities(f.theta_hat, f.config, data.grid, ic),
                                           autocorr ? &fit.model : nullptr);
        std::printf("%-16s alpha %.4f [%.4f, %.4f]  beta %.4f [%.4f, %.4f]  region holds theta0: %s\n",
                    autocorr ? "autocorrelative" : "ols", f.theta_hat.alpha, rep.lower[0], rep.upper[0], f.theta_hat.beta,
                    rep.lower[1], rep.upper[1], rep.region_contains(theta0) ? "yes" : "no");
    }
}
