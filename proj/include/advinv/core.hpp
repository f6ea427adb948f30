#pragma once

// Shared vocabulary types: errors, parameter vectors, dense row-major matrices.

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace advinv {

// Error hierarchy. The CLI maps each family onto a stable exit code.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
    using Error::Error;
};
struct DomainError : Error {
    using Error::Error;
};
struct ContractError : Error {
    using Error::Error;
};
struct DivergenceError : Error {
    using Error::Error;
};
struct EstimationError : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

/// Advection-rate parameters: g(x) = alpha * x^(1/beta).
struct ParameterVector {
    double alpha = 0.0;
    double beta = 0.0;

    [[nodiscard]] bool valid() const noexcept
    {
        return std::isfinite(alpha) && std::isfinite(beta) && alpha > 0.0 && beta > 0.0;
    }
    [[nodiscard]] std::array<double, 2> as_array() const noexcept { return {alpha, beta}; }
    static ParameterVector from_array(const std::array<double, 2>& a) noexcept { return {a[0], a[1]}; }

    friend bool operator==(const ParameterVector&, const ParameterVector&) = default;
};

inline double distance(const ParameterVector& a, const ParameterVector& b) noexcept
{
    return std::hypot(a.alpha - b.alpha, a.beta - b.beta);
}

/// Admissible parameter box used by every optimizer in the library.
struct ParameterBox {
    double lo = 0.0;
    double hi = 10.0;

    [[nodiscard]] bool contains(const ParameterVector& p) const noexcept
    {
        return p.alpha >= lo && p.alpha <= hi && p.beta >= lo && p.beta <= hi;
    }
};

enum class InitialCondition { Discontinuous, Continuous };

inline std::string to_string(InitialCondition ic)
{
    return ic == InitialCondition::Discontinuous ? "d" : "c";
}

inline InitialCondition parse_initial_condition(const std::string& s)
{
    if (s == "d" || s == "discontinuous") return InitialCondition::Discontinuous;
    if (s == "c" || s == "continuous") return InitialCondition::Continuous;
    throw ConfigError("unknown initial condition '" + s + "' (expected d or c)");
}

/// Canonical true parameters for each initial condition.
inline ParameterVector default_theta0(InitialCondition ic) noexcept
{
    return ic == InitialCondition::Discontinuous ? ParameterVector{0.3, 0.5} : ParameterVector{0.3, 0.4};
}

/// Dense row-major matrix; rows index time, columns index space throughout the library.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0) : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] std::size_t size() const noexcept { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) noexcept { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const noexcept { return data_[i * cols_ + j]; }

    [[nodiscard]] std::vector<double>& values() noexcept { return data_; }
    [[nodiscard]] const std::vector<double>& values() const noexcept { return data_; }

    [[nodiscard]] bool same_shape(const Matrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline void require_same_shape(const Matrix& a, const Matrix& b, const char* what)
{
    if (!a.same_shape(b))
        throw ContractError(std::string(what) + ": shape mismatch (" + std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                            std::to_string(b.cols()) + ")");
}

} // namespace advinv
