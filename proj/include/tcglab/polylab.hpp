#pragma once

#include "tcglab/spectral.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <vector>

namespace tcglab
{
/// Three-term recurrence of the Lanczos polynomials of a SpectralMeasure.
///
/// Monic:        pi_{k+1}(x) = (x - alpha_k) pi_k(x) - beta_k^2 pi_{k-1}(x)
/// Orthonormal:  beta_{k+1} p_{k+1}(x) = (x - alpha_k) p_k(x) - beta_k p_{k-1}(x),  p_0 = 1 / ||pi_0||
class JacobiRecurrence
{
public:
    /// An empty recurrence; only useful as a placeholder before assignment.
    JacobiRecurrence() = default;

    [[nodiscard]] const SpectralMeasure& measure() const noexcept { return data_->measure; }
    [[nodiscard]] int grade() const noexcept { return data_->grade; }
    /// alpha_k, k = 0..grade-1
    [[nodiscard]] double alpha(int k) const { return data_->alpha.at(static_cast< std::size_t >(k)); }
    /// beta_k, k = 1..grade (beta_grade is the numerically zero closing coefficient)
    [[nodiscard]] double beta(int k) const { return data_->beta.at(static_cast< std::size_t >(k)); }
    /// ||pi_n||^2, n = 0..grade
    [[nodiscard]] double norm_sq(int n) const { return data_->norm_sq.at(static_cast< std::size_t >(n)); }
    /// The threshold under which ||pi_grade||^2 counts as zero.
    [[nodiscard]] double zero_threshold() const noexcept { return data_->zero_threshold; }

    /// pi_n(x) through the monic recurrence, 0 <= n <= grade.
    [[nodiscard]] double eval_monic(int n, double x) const;
    /// p_0(x) .. p_n(x) through the orthonormal recurrence, 0 <= n <= grade - 1.
    [[nodiscard]] std::vector< double > eval_orthonormal(int n, double x) const;
    /// Leading n x n Jacobi matrix.
    [[nodiscard]] Matrix jacobi_matrix(int n) const;

private:
    struct Data
    {
        SpectralMeasure       measure;
        int                   grade = 0;
        std::vector< double > alpha;   // size grade
        std::vector< double > beta;    // size grade + 1, beta[0] unused
        std::vector< double > norm_sq; // size grade + 1
        double                zero_threshold = 0.0;
    };
    explicit JacobiRecurrence(std::shared_ptr< const Data > data) : data_(std::move(data)) {}
    friend JacobiRecurrence stieltjes(const SpectralMeasure& measure);

    std::shared_ptr< const Data > data_;
};

/// Discrete Stieltjes procedure (Lanczos on diag(lambda) with start vector b / ||b||, fully
/// reorthogonalized). Flagged and zero-weight atoms do not count towards the grade.
/// Throws std::invalid_argument when no atom carries positive weight.
JacobiRecurrence stieltjes(const SpectralMeasure& measure);

/// Eigenvalues of the leading n x n Jacobi matrix (roots of pi_n), increasing; 1 <= n <= grade.
std::vector< double > ritz_values(const JacobiRecurrence& rec, int n);

double eval_pi(const JacobiRecurrence& rec, int n, double x);
/// Throws NotWellDefined unless every Ritz value at order n is positive.
double eval_varsigma(const JacobiRecurrence& rec, int n, double x);
/// phi of degree m = n - 1, with varsigma_n(x) = 1 - x phi_{n-1}(x).
double eval_phi(const JacobiRecurrence& rec, int m, double x);

enum class PolyKind
{
    pi,
    varsigma,
    phi,
    zeta,
    xi
};

const char* to_string(PolyKind kind);

/// A polynomial of the laboratory, evaluated through the recurrence (never via monomial coefficients).
class PolyHandle
{
public:
    [[nodiscard]] PolyKind kind() const noexcept { return kind_; }
    [[nodiscard]] int degree() const noexcept { return degree_; }
    /// Normalization point for zeta / xi, NaN otherwise.
    [[nodiscard]] double shift() const noexcept { return lambda_; }
    [[nodiscard]] double operator()(double x) const;
    /// Squared norm in the semi-inner product of the recurrence's measure.
    [[nodiscard]] double norm_sq() const;
    /// Real roots, increasing. Not available for phi (throws std::invalid_argument).
    [[nodiscard]] std::vector< double > roots() const;
    [[nodiscard]] const JacobiRecurrence& recurrence() const noexcept { return rec_; }

private:
    PolyHandle(JacobiRecurrence rec, PolyKind kind, int degree) : rec_(std::move(rec)), kind_(kind), degree_(degree) {}
    [[nodiscard]] double kernel(double x) const;

    friend PolyHandle pi_poly(const JacobiRecurrence&, int);
    friend PolyHandle varsigma_poly(const JacobiRecurrence&, int);
    friend PolyHandle phi_poly(const JacobiRecurrence&, int);
    friend PolyHandle zeta(const JacobiRecurrence&, int, double);
    friend PolyHandle xi(const JacobiRecurrence&, int, double);

    JacobiRecurrence      rec_;
    PolyKind              kind_;
    int                   degree_;
    double                lambda_ = std::numeric_limits< double >::quiet_NaN();
    double                scale_  = 1.0; // value multiplier (1/pi_n(0) or 1/K(lambda, lambda) etc.)
    std::vector< double > ritz_;         // pi / varsigma / phi
    std::vector< double > p_lambda_;     // zeta / xi: orthonormal values at lambda
    double                k_ll_ = 0.0;   // zeta / xi: K_n(lambda, lambda)
};

PolyHandle pi_poly(const JacobiRecurrence& rec, int n);
PolyHandle varsigma_poly(const JacobiRecurrence& rec, int n);
/// phi of degree m (built from the Ritz values at order m + 1).
PolyHandle phi_poly(const JacobiRecurrence& rec, int m);
/// Minimal-norm degree-n polynomial with value 1 at lambda, 0 <= n <= grade - 1:
/// zeta_n(x) = K_n(lambda, x) / K_n(lambda, lambda), K_n(lambda, x) = sum_{i <= n} p_i(lambda) p_i(x).
PolyHandle zeta(const JacobiRecurrence& rec, int n, double lambda);
/// xi_n = zeta_n / zeta_n(0). Throws NumericalBreakdown ("xi undefined") when zeta_n(0) vanishes.
PolyHandle xi(const JacobiRecurrence& rec, int n, double lambda);

/// sum_i varsigma_n(lambda_i)^2 b_i^2 / lambda_i over a measure with positive support.
double cg_objective(const JacobiRecurrence& rec, int n);

/// The perturbation system at iteration n, tail entries indexed in the tail's own order.
struct SigmaSystem
{
    int                       n = 0;
    Vector                    B;        // diagonal of B (tail weights)
    Matrix                    C;        // C_ij = xi^j_{n-1}(lambda_i)
    Vector                    D;        // D_jj = ||xi^j_{n-1}||^2 / xi^j_{n-1}(lambda_j)
    Vector                    D_kernel; // 1 / K_{n-1}(lambda_j, 0), equal to D in exact arithmetic
    Vector                    w;        // varsigma_n(lambda_j)
    Vector                    sigma;
    double                    s        = 0.0; // 1^T sigma
    double                    sigma_l1 = 0.0;
    double                    delta    = 0.0;
    double                    tau      = 0.0;
    double                    c        = 0.0; // parameter used for eta / omega
    double                    eta      = 0.0;
    double                    omega    = 0.0;
    double                    linear_residual = 0.0; // ||(D + B^2 C) sigma - B^2 w||
    double                    rhs_norm        = 0.0; // ||B^2 w||
    double                    pi_n_at_zero    = 0.0;
    JacobiRecurrence          head_rec;
    std::vector< PolyHandle > xi; // xi^j_{n-1}
};

/// 1 <= n <= grade(head). When c is omitted, c = cg_objective(head, n).
/// Throws NumericalBreakdown when D + B^2 C is numerically singular.
SigmaSystem sigma_system(const SplitSpectralMeasure& split, int n, std::optional< double > c = std::nullopt);

/// Max over sample points of |pi~_n - (pi_n - pi_n(0) sum_j sigma_j xi^j_{n-1})| / max |pi_n|, with the
/// right-hand side (sigma included) rebuilt in long double.
/// Sample points: every atom of the full measure plus 16 seeded uniform points in [lambda_min - 1, lambda_max + 1].
double verify_rho_identity(const SplitSpectralMeasure& split, int n, std::uint64_t seed = 20240611);

struct RootDisplacement
{
    double lhs = 0.0;            // max_z min_i |1 - z / gamma_i| over roots z of pi~_n
    double rhs = 0.0;            // ||sigma||_1
    double min_root_tilde = 0.0; // smallest root of pi~_n
    double gamma_n        = 0.0; // smallest root of pi_n
    bool   bound_holds       = false; // lhs <= rhs + 1e-9
    bool   lower_bound_holds = true;  // when rhs < 1: min root >= (1 - rhs) gamma_n - 1e-9 gamma_n
};

RootDisplacement root_displacement_bound(const SplitSpectralMeasure& split, int n);

struct IterateComparison
{
    int                   n         = 0;
    double                sigma_l1  = 0.0;
    double                head_diff = 0.0; // ||v~_{1:d} - v||
    double                head_bound = 0.0;
    bool                  head_ok    = false;
    std::vector< double > tail_abs;    // |v~_i|
    std::vector< double > tail_bounds;
    bool                  tail_bounds_ok = false;
    double                v_norm       = 0.0;
    double                tilde_v_norm = 0.0;
    double                r_norm       = 0.0;
    double                tilde_r_norm = 0.0;
};

/// Requires ||sigma||_1 < 1 at iteration n (throws std::invalid_argument otherwise). Runs plain CG on the
/// dense diagonal realizations; throws NotWellDefined if iteration n on the full problem is not well defined.
IterateComparison iterate_comparison(const SplitSpectralMeasure& split, int n);

struct DeltaTau
{
    double delta = 0.0, tau = 0.0, delta_bound = 0.0, tau_bound = 0.0;
};

DeltaTau delta_tau(const SplitSpectralMeasure& split, int n);

struct PsdContraction
{
    double max_X = 0.0, max_S = 0.0;
};

/// X = (I + S M)^{-1} S for symmetric positive semidefinite S and M.
PsdContraction psd_contraction_check(const Matrix& S, const Matrix& M);

/// Smallest n in 1..grade(head) with cg_objective(head, n) <= c; c in (0, ||b||^2 / lambda_d].
int select_iteration_for_c(const SplitSpectralMeasure& split, double c);

struct CBoundsCheck
{
    double c = 0.0;
    int    n = 0;
    double varsigma_norm_sq = 0.0, lambda1_c = 0.0;
    double min_xi_norm_sq = 0.0, lambdad_c = 0.0;
    double sigma_l1 = 0.0, eta = 0.0, omega = 0.0;
    bool   existence_ok = false; // ||varsigma_n||^2 <= lambda_1 c, ||xi^j||^2 >= lambda_d c, ||sigma||_1 <= omega
    bool   bounds_checked = false; // omega < 1
    double v_norm = 0.0, v_bound = 0.0;
    double r_norm_sq = 0.0, r_bound = 0.0;
    bool   bounds_ok = false;
};

/// Selects n for c and checks the existence inequalities, then (when omega < 1) the iterate and residual
/// bounds against a plain CG run on the dense diagonal realization of the full measure.
CBoundsCheck c_bounds_check(const SplitSpectralMeasure& split, double c);

struct RandomSplitOptions
{
    int    min_head = 2, max_head = 10;
    int    min_tail = 1, max_tail = 3;
    double head_low = 0.5, head_high = 2.0;
    double tail_eig_max    = 1e-3;
    double tail_weight_min = 1e-4, tail_weight_max = 1e-2;
};

SplitSpectralMeasure random_split(std::mt19937_64& rng, const RandomSplitOptions& options = {});

struct SigmaDiagnosticsRow
{
    int    n = 0;
    double sigma_l1 = 0.0, s = 0.0, delta = 0.0, tau = 0.0, eta = 0.0, omega = 0.0;
    double min_root_tilde = 0.0, min_root_head = 0.0;
};

SigmaDiagnosticsRow sigma_diagnostics(const SplitSpectralMeasure& split, int n);
void write_sigma_diagnostics_csv(std::ostream& out, const std::vector< SigmaDiagnosticsRow >& rows);
} // namespace tcglab
