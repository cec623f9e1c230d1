#pragma once

#include "tcglab/spectral.hpp"

#include <functional>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace tcglab
{
/// A smooth objective with analytic derivatives and optional knowledge of its solution set S.
struct ProblemDefinition
{
    std::string                                      name;
    Index                                            dim = 0;
    std::function< double(const Vector&) >           f;
    std::function< Vector(const Vector&) >           grad;
    std::function< SymmetricOperator(const Vector&) > hess;

    /// Maps parameters (size solution_param_dim) to a point of S.
    std::function< Vector(const Vector&) > solution_point;
    Index                                  solution_param_dim = 0;
    std::optional< double >                pl_constant;
    /// Set when the problem is unbounded below along some direction (diagonal quadratics only).
    bool unbounded_direction = false;

    [[nodiscard]] bool has_solution_set() const noexcept { return static_cast< bool >(solution_point); }
};

/// f(x, y) = 1/2 ||y - sin(x)||^2 on R^{2n}, z = (x, y); S = {y = sin x}, globally 1-PL.
ProblemDefinition problem_sine_lsq(int n);

/// f(x, y) = 3/16 (1 + 64/3 x^2) y^2 on R^2; S = {y = 0}.
ProblemDefinition problem_remark_counterexample();
/// c(eps) = (sqrt(1 - eps) / 8, sqrt(eps))
Vector remark_path(double eps);

/// f(x) = 1/2 x^T diag(lambda) x - b^T x with b = weights.
ProblemDefinition problem_diagonal_quadratic(const SpectralMeasure& measure);

/// Problem from a CLI name: `sine-lsq:n=100`, `remark2d`, `diag:file=measure.csv`.
ProblemDefinition problem_by_name(const std::string& spec);

struct DerivativeCheck
{
    double grad_rel_error = 0.0; // max over points of ||fd - grad|| / max(1, ||grad||)
    double hess_rel_error = 0.0; // max over points of ||fd(grad) v - H v|| / max(1, ||H v||)
};

/// Central differences at `points` random points drawn uniformly in [-scale, scale]^dim.
DerivativeCheck check_derivatives(const ProblemDefinition& p, std::mt19937_64& rng, int points = 20,
                                  double scale = 2.0);

/// Finite-difference Hessian from gradient differences (symmetrized, dense).
Matrix finite_difference_hessian(const ProblemDefinition& p, const Vector& x, double h = 1e-6);

struct GradientAlignment
{
    double residual  = 0.0; // ||(I - P) grad f(x)||
    double grad_norm = 0.0;
    double gap_ratio = 0.0; // lambda_d / max_{i > d} |lambda_i|
};

/// P is the spectral projector on the top-d eigenvectors of the Hessian at x.
/// Throws std::invalid_argument when the gap ratio is below 2.
GradientAlignment gradient_alignment(const ProblemDefinition& p, const Vector& x, int d);

struct NegativeCurvatureWitness
{
    Vector x;
    double distance   = 0.0; // distance of the start point on S
    double min_eig    = 0.0;
};

struct NegativeCurvatureSearch
{
    bool                                   found = false;
    std::vector< NegativeCurvatureWitness > witnesses;
    std::vector< bool >                    found_at_distance; // one flag per distance
};

/// From random points p on S, moves along random normal directions (range of the Hessian at p), with
/// both signs, by each of the distances, and records points where lambda_min(Hessian) < 0.
NegativeCurvatureSearch hessian_has_negative_eigenvalue_near_S(const ProblemDefinition& p, int trials,
                                                              std::mt19937_64& rng,
                                                              std::vector< double > distances = {1e-1, 1e-2, 1e-3});
} // namespace tcglab
