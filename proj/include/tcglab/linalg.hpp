#pragma once

#include <Eigen/Dense>

#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

namespace tcglab
{
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Index  = Eigen::Index;

/// Raised when floating-point arithmetic loses the structure an algorithm relies on
/// (non-finite values, a vanishing pivot, a recurrence that fails its own checks).
class NumericalBreakdown : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Raised when a CG iteration is requested that is not well defined, i.e. the operator
/// restricted to the Krylov space is not positive definite.
class NotWellDefined : public std::domain_error
{
public:
    using std::domain_error::domain_error;
};

/// A symmetric linear map on R^dim, given by an apply procedure, a dense matrix, or both.
class SymmetricOperator
{
public:
    using ApplyFn = std::function< Vector(const Vector&) >;

    explicit SymmetricOperator(Matrix dense);
    SymmetricOperator(Index dim, ApplyFn apply, std::optional< Matrix > dense = std::nullopt);

    static SymmetricOperator diagonal(const Vector& diag);

    [[nodiscard]] Index dim() const noexcept { return dim_; }
    [[nodiscard]] Vector apply(const Vector& x) const;
    [[nodiscard]] bool has_dense() const noexcept { return dense_.has_value(); }
    /// Throws std::logic_error when no dense realization is attached.
    [[nodiscard]] const Matrix& dense() const;

    /// max over random unit pairs of |<u, Av> - <v, Au>|.
    [[nodiscard]] double symmetry_defect(std::mt19937_64& rng, int trials = 8) const;
    /// max abs difference between apply() and the dense realization on random vectors; 0 when
    /// only one of the two is present.
    [[nodiscard]] double dense_apply_mismatch(std::mt19937_64& rng, int trials = 4) const;

private:
    Index                   dim_;
    ApplyFn                 apply_;
    std::optional< Matrix > dense_;
};

[[nodiscard]] inline double max_abs(const Matrix& m)
{
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

[[nodiscard]] Vector random_unit_vector(Index dim, std::mt19937_64& rng);
} // namespace tcglab
