#pragma once

#include "tcglab/linalg.hpp"

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

namespace tcglab
{
struct EigenDecomposition
{
    Vector eigenvalues; // nonincreasing
    Matrix vectors;     // column i pairs with eigenvalues[i]

    [[nodiscard]] double reconstruction_error(const Matrix& a) const;
    [[nodiscard]] double orthogonality_error() const;
};

/// Throws std::invalid_argument when there is no dense realization, dim > 2000, or the matrix
/// fails the symmetry check.
EigenDecomposition symmetric_eigendecompose(const SymmetricOperator& a);

/// Atoms (lambda_i, b_i) of the discrete semi-inner product <p, q> = sum p(lambda_i) q(lambda_i) b_i^2.
/// Atoms closer than merge_tolerance * spectral radius are merged (weights combine in root-sum-square);
/// atoms with |b_i| <= negligible_weight stay in the list but are flagged.
class SpectralMeasure
{
public:
    static constexpr double default_merge_tolerance = 1e-9;

    SpectralMeasure() = default;
    SpectralMeasure(std::vector< double > eigenvalues, std::vector< double > weights, double negligible_weight = 0.0,
                    double merge_tolerance = default_merge_tolerance);

    [[nodiscard]] std::size_t size() const noexcept { return lambda_.size(); }
    [[nodiscard]] bool empty() const noexcept { return lambda_.empty(); }
    [[nodiscard]] const std::vector< double >& eigenvalues() const noexcept { return lambda_; }
    [[nodiscard]] const std::vector< double >& weights() const noexcept { return weight_; }
    [[nodiscard]] double lambda(std::size_t i) const { return lambda_.at(i); }
    [[nodiscard]] double weight(std::size_t i) const { return weight_.at(i); }
    [[nodiscard]] bool flagged(std::size_t i) const { return flagged_.at(i); }
    [[nodiscard]] double negligible_weight() const noexcept { return negligible_weight_; }

    [[nodiscard]] double lambda_max() const;
    [[nodiscard]] double lambda_min() const;
    [[nodiscard]] double spectral_radius() const;
    /// sum of b_i^2
    [[nodiscard]] double total_weight_sq() const;
    /// <p, q> for values of p and q sampled at the atoms.
    [[nodiscard]] double inner(const std::vector< double >& p_at_atoms, const std::vector< double >& q_at_atoms) const;

    [[nodiscard]] Vector eigenvalue_vector() const;
    [[nodiscard]] Vector weight_vector() const;

private:
    std::vector< double > lambda_;
    std::vector< double > weight_;
    std::vector< bool >   flagged_;
    double                negligible_weight_ = 0.0;
};

/// head = well-conditioned part (A, b) of size d, tail = the small-eigenvalue part.
class SplitSpectralMeasure
{
public:
    /// Throws std::invalid_argument unless min head eigenvalue > 0 and > every tail eigenvalue.
    SplitSpectralMeasure(SpectralMeasure head, SpectralMeasure tail);

    [[nodiscard]] const SpectralMeasure& head() const noexcept { return head_; }
    [[nodiscard]] const SpectralMeasure& tail() const noexcept { return tail_; }
    [[nodiscard]] std::size_t d() const noexcept { return head_.size(); }
    [[nodiscard]] double lambda_d() const { return head_.lambda_min(); }
    [[nodiscard]] double lambda_1() const { return head_.lambda_max(); }
    /// Head atoms followed by tail atoms, no merging across the gap.
    [[nodiscard]] SpectralMeasure full() const;
    /// max |lambda_j| over the tail (0 for an empty tail)
    [[nodiscard]] double tail_epsilon() const;
    /// Frobenius norm squared of B = diag(tail weights)
    [[nodiscard]] double tail_weight_sq() const { return tail_.total_weight_sq(); }

private:
    SpectralMeasure head_;
    SpectralMeasure tail_;
};

/// Weights are norms of the projections of b on the eigenspaces. Atoms whose weight is below
/// 1e-13 * ||b|| are flagged.
SpectralMeasure measure_from_operator(const SymmetricOperator& a, const Vector& b);

/// Number of atoms with |weight| > weight_tol.
int grade(const SpectralMeasure& measure, double weight_tol);

/// Head: 10 eigenvalues evenly spaced on [0.95, 1.05], equal weights with head norm 1.
/// Tail: one atom at 0 with weight 1e-3.
SplitSpectralMeasure clustered_split();

// CSV with header `lambda,weight` (optionally `lambda,weight,part`, part in {head, tail}).
void write_measure_csv(std::ostream& out, const SpectralMeasure& measure);
void write_split_csv(std::ostream& out, const SplitSpectralMeasure& split);
/// Returns a SplitSpectralMeasure when a `part` column is present, else a SpectralMeasure.
std::variant< SpectralMeasure, SplitSpectralMeasure > read_measure_csv(std::istream& in);
std::variant< SpectralMeasure, SplitSpectralMeasure > read_measure_csv_file(const std::string& path);
} // namespace tcglab
