#pragma once

#include "advinv/core.hpp"

#include <string>
#include <vector>

namespace advinv {

inline constexpr double kFinalTime = 10.0;

/// Observation grid T^M x X^N with inclusive endpoints.
struct DataGrid {
    std::vector<double> times;
    std::vector<double> positions;

    [[nodiscard]] std::size_t M() const noexcept { return times.size(); }
    [[nodiscard]] std::size_t N() const noexcept { return positions.size(); }
};

/// times t_i = 10 (i-1)/(M-1), positions x_j = (j-1)/(N-1).
inline DataGrid make_grid(std::size_t M, std::size_t N)
{
    if (M < 2 || N < 2)
        throw ConfigError("make_grid: need M >= 2 and N >= 2 (got M=" + std::to_string(M) + ", N=" + std::to_string(N) + ")");
    DataGrid g;
    g.times.resize(M);
    g.positions.resize(N);
    for (std::size_t i = 0; i < M; ++i)
        g.times[i] = kFinalTime * static_cast<double>(i) / static_cast<double>(M - 1);
    for (std::size_t j = 0; j < N; ++j)
        g.positions[j] = static_cast<double>(j) / static_cast<double>(N - 1);
    return g;
}

/// Checks the DataGrid invariants for grids read from disk.
inline void validate_grid(const DataGrid& g)
{
    auto increasing = [](const std::vector<double>& v) {
        for (std::size_t k = 1; k < v.size(); ++k)
            if (!(v[k] > v[k - 1])) return false;
        return true;
    };
    if (g.M() < 2 || g.N() < 2) throw ContractError("data grid needs at least 2 times and 2 positions");
    if (!increasing(g.times) || !increasing(g.positions)) throw ContractError("data grid must be strictly increasing");
    if (g.times.front() < 0.0 || g.times.back() > kFinalTime) throw ContractError("data times must lie in [0, 10]");
    if (g.positions.front() < 0.0 || g.positions.back() > 1.0) throw ContractError("data positions must lie in [0, 1]");
}

} // namespace advinv
