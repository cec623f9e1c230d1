#pragma once

#include "tcglab/linalg.hpp"

#include <iosfwd>
#include <limits>
#include <vector>

namespace tcglab
{
enum class TcgMode
{
    truncated,
    plain
};

enum class TcgTermination
{
    zero_b,
    negative_curvature_boundary,
    radius_boundary,
    residual_small,
    max_iterations,
    breakdown
};

const char* to_string(TcgTermination t);

struct TcgParams
{
    double  kappa          = 0.1;
    double  theta          = 0.5;
    int     max_iterations = -1; // -1: dim
    TcgMode mode           = TcgMode::truncated;
    /// Plain mode only: stop once ||r_n|| <= plain_residual_tol * ||b|| (0 disables the test).
    double plain_residual_tol = 1e-14;

    /// Throws std::invalid_argument unless kappa > 0 and 0 < theta <= 1.
    void validate() const;
    /// theta = 1 is allowed by the algorithm but voids the superlinear rate.
    [[nodiscard]] bool theta_warning() const noexcept { return theta == 1.0; }
};

struct TcgIterate
{
    int    n = 0;
    Vector v;
    Vector r;
    double v_norm    = 0.0;
    double r_norm    = 0.0;
    double curvature = std::numeric_limits< double >::quiet_NaN(); // <u_{n-1}, A u_{n-1}>
    double alpha     = std::numeric_limits< double >::quiet_NaN(); // step length used (t on the boundary)
    double beta      = std::numeric_limits< double >::quiet_NaN();
    /// All curvatures up to and including this iteration were positive.
    bool well_defined = true;
};

struct TcgTrace
{
    std::vector< TcgIterate > iterates; // iterates[0] is v_0 = 0, r_0 = b
    TcgTermination            termination = TcgTermination::max_iterations;
    Vector                    output;
    double                    delta = 0.0;
    TcgMode                   mode  = TcgMode::truncated;
    bool                      breakdown     = false;
    int                       breakdown_at  = -1;
    bool                      theta_warning = false;

    [[nodiscard]] int iterations() const noexcept { return static_cast< int >(iterates.size()) - 1; }
    [[nodiscard]] bool on_boundary() const noexcept
    {
        return termination == TcgTermination::negative_curvature_boundary ||
               termination == TcgTermination::radius_boundary;
    }
    /// ||v_n|| nondecreasing over the recorded iterates (relative slack 1e-12).
    [[nodiscard]] bool norms_monotone() const;
    /// max_n ||r_n - (b - A v_n)|| over recorded iterates.
    [[nodiscard]] double residual_consistency(const SymmetricOperator& a, const Vector& b) const;
};

/// Truncated CG (truncated mode) or plain CG with tracing. In plain mode delta is ignored and the
/// iteration continues through nonpositive curvature, marking later iterates as not well defined.
TcgTrace tcg(const SymmetricOperator& a, const Vector& b, double delta, const TcgParams& params);

/// Plain CG for up to max_iterations steps (no residual stopping test).
TcgTrace plain_cg(const SymmetricOperator& a, const Vector& b, int max_iterations);

/// Quadratic model m(s) = -<b, s> + 1/2 <s, A s>.
double model_value(const SymmetricOperator& a, const Vector& b, const Vector& s);

/// (m(0) - m(s)) / (||b|| min(Delta, ||b||^3 / |<b, A b>|)) with s = trace.output. Uses the Delta branch
/// when <b, A b> = 0.
double cauchy_decrease_ratio(const TcgTrace& trace, const SymmetricOperator& a, const Vector& b);
double cauchy_decrease_ratio(const SymmetricOperator& a, const Vector& b, const Vector& s, double delta);

void write_trace_csv(std::ostream& out, const TcgTrace& trace);
} // namespace tcglab
