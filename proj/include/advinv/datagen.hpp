#pragma once

// Synthetic observations y_ij = u0(t_i, x_j; theta0) + eps_ij, eps_ij ~ N(0, eta^2) i.i.d.

#include "advinv/analytic.hpp"
#include "advinv/core.hpp"
#include "advinv/grid.hpp"

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <utility>
#include <vector>

namespace advinv {

struct Provenance {
    ParameterVector theta0;
    double eta = 0.0;
    std::uint64_t seed = 0;
    InitialCondition ic = InitialCondition::Discontinuous;
};

struct Dataset {
    DataGrid grid;
    Matrix Y;
    /// Present for synthetic data; required by the cost decomposition.
    std::optional<Provenance> provenance;
};

/// Counter-based standard normal draws: each (seed, i, j) maps to one value independent of
/// the order in which entries are generated.
class KeyedNormal {
public:
    explicit KeyedNormal(std::uint64_t seed) noexcept : seed_(seed) {}

    [[nodiscard]] double operator()(std::uint64_t i, std::uint64_t j) const noexcept
    {
        const std::uint64_t key = mix(seed_ ^ mix(0x632be59bd9b4e019ULL + i) ^ mix(0xa0761d6478bd642fULL ^ (j << 1)));
        const double u1 = to_unit(mix(key));
        const double u2 = to_unit(mix(key + 0x9e3779b97f4a7c15ULL));
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // splitmix64 finalizer
    static constexpr std::uint64_t mix(std::uint64_t z) noexcept
    {
        z += 0x9e3779b97f4a7c15ULL;
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

private:
    // (0, 1]
    static constexpr double to_unit(std::uint64_t z) noexcept
    {
        return static_cast<double>((z >> 11) + 1) * 0x1.0p-53;
    }

    std::uint64_t seed_;
};

inline Dataset generate(const ParameterVector& theta0, const DataGrid& grid, double eta, std::uint64_t seed,
                        InitialCondition ic)
{
    if (!(eta >= 0.0) || !std::isfinite(eta)) throw ConfigError("noise level eta must be finite and >= 0");
    Dataset d;
    d.grid = grid;
    d.Y = analytic_solution_matrix(theta0, grid, ic);
    if (eta > 0.0) {
        const KeyedNormal normal(seed);
        for (std::size_t i = 0; i < grid.M(); ++i)
            for (std::size_t j = 0; j < grid.N(); ++j) d.Y(i, j) += eta * normal(i, j);
    }
    d.provenance = Provenance{theta0, eta, seed, ic};
    return d;
}

/// The (N, eta) data-set sweep studied for each initial condition.
inline std::vector<std::pair<std::size_t, double>> sweep_configs(InitialCondition ic)
{
    const std::vector<std::size_t> Ns = ic == InitialCondition::Discontinuous ? std::vector<std::size_t>{11, 30, 51}
                                                                              : std::vector<std::size_t>{11, 31, 51};
    const std::vector<double> etas = ic == InitialCondition::Discontinuous
                                         ? std::vector<double>{0.0, 1e-1, 1.5e-1, 2e-1, 3e-1, 5e-1, 1.0}
                                         : std::vector<double>{0.0, 1e-4, 5e-4, 1e-3, 1e-2, 5e-2, 1e-1, 2e-1};
    std::vector<std::pair<std::size_t, double>> out;
    for (std::size_t N : Ns)
        for (double eta : etas) out.emplace_back(N, eta);
    return out;
}

} // namespace advinv
