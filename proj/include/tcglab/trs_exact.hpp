#pragma once

#include "tcglab/linalg.hpp"

namespace tcglab
{
/// Global minimizer of m(s) = -<b, s> + 1/2 <s, A s> subject to ||s|| <= Delta.
struct TrsSolution
{
    Vector step;
    double multiplier  = 0.0; // lambda >= 0 with (A + lambda I) step = b
    bool   on_boundary = false;
    bool   hard_case   = false;
    int    newton_iterations = 0;
};

struct TrsKkt
{
    double stationarity = 0.0;  // ||(A + lambda I) s - b|| / ||b||  (absolute when b = 0)
    double min_eig      = 0.0;  // lambda_min(A + lambda I)
    double complementarity = 0.0; // lambda (Delta - ||s||) / Delta
    double norm_excess     = 0.0; // ||s|| - Delta
    [[nodiscard]] bool ok() const noexcept
    {
        return stationarity <= 1e-8 && min_eig >= -1e-8 && complementarity <= 1e-8 && norm_excess <= 1e-10;
    }
};

/// Eigendecomposition plus a safeguarded Newton iteration on 1/||s(lambda)|| - 1/Delta; the hard case
/// is completed with an eigenvector of the smallest eigenvalue. Dense A with dim <= 500.
TrsSolution solve_trs_exact(const SymmetricOperator& a, const Vector& b, double delta);

TrsKkt trs_kkt(const SymmetricOperator& a, const Vector& b, double delta, const TrsSolution& sol);
} // namespace tcglab
