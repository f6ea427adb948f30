#pragma once

#include "advinv/core.hpp"

#include <cmath>
#include <numeric>
#include <span>
#include <vector>

namespace advinv {

struct OrderFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    std::vector<std::size_t> subset;
};

/// Least-squares slope of ln(values) against ln(hs) over the selected indices
/// (all indices when `subset` is empty).
inline OrderFit estimate_order(std::span<const double> hs, std::span<const double> values,
                               std::span<const std::size_t> subset = {})
{
    if (hs.size() != values.size()) throw EstimationError("estimate_order: hs and values differ in length");
    std::vector<std::size_t> idx(subset.begin(), subset.end());
    if (idx.empty()) {
        idx.resize(hs.size());
        std::iota(idx.begin(), idx.end(), std::size_t{0});
    }
    if (idx.size() < 3) throw EstimationError("estimate_order: need at least 3 points");

    std::vector<double> lx, ly;
    for (std::size_t k : idx) {
        if (k >= hs.size()) throw EstimationError("estimate_order: subset index out of range");
        if (!(hs[k] > 0.0) || !(values[k] > 0.0) || !std::isfinite(values[k]))
            throw EstimationError("estimate_order: step sizes and values must be positive");
        lx.push_back(std::log(hs[k]));
        ly.push_back(std::log(values[k]));
    }
    const double n = static_cast<double>(lx.size());
    const double mx = std::accumulate(lx.begin(), lx.end(), 0.0) / n;
    const double my = std::accumulate(ly.begin(), ly.end(), 0.0) / n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        sxx += (lx[k] - mx) * (lx[k] - mx);
        sxy += (lx[k] - mx) * (ly[k] - my);
        syy += (ly[k] - my) * (ly[k] - my);
    }
    if (!(sxx > 0.0)) throw EstimationError("estimate_order: step sizes must not all coincide");

    OrderFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = my - fit.slope * mx;
    double ss_res = 0.0;
    for (std::size_t k = 0; k < lx.size(); ++k) {
        const double r = ly[k] - (fit.intercept + fit.slope * lx[k]);
        ss_res += r * r;
    }
    // A perfectly flat series is fitted exactly.
    fit.r2 = syy > 0.0 ? 1.0 - ss_res / syy : 1.0;
    fit.subset = std::move(idx);
    return fit;
}

} // namespace advinv
