#pragma once

#include "tcglab/problems.hpp"
#include "tcglab/tcg.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace tcglab
{
enum class SolverKind
{
    tcg,
    exact,
    cauchy
};

enum class HessianMode
{
    exact,
    finite_difference
};

const char* to_string(SolverKind s);
SolverKind  solver_from_string(const std::string& s);

struct TrConfig
{
    double                  rho_prime = 0.1;
    double                  Delta_bar = 10.0;
    std::optional< double > Delta_0; // defaults to Delta_bar / 8
    int                     max_outer = 100;
    double                  grad_tol  = 1e-9;
    SolverKind              solver    = SolverKind::tcg;
    TcgParams               tcg;
    HessianMode             hessian = HessianMode::exact;
    double                  fd_step = 1e-6;

    [[nodiscard]] double initial_radius() const { return Delta_0.value_or(Delta_bar / 8.0); }
    /// Throws std::invalid_argument unless 0 < rho_prime < 1/4 and 0 < Delta_0 <= Delta_bar.
    void validate() const;
};

struct TrIteration
{
    int    k = 0;
    Vector x;
    double delta     = 0.0;
    double grad_norm = 0.0;
    double f         = 0.0;
    bool   has_step  = false; // false on the terminal record
    Vector step;
    double step_norm      = 0.0;
    double model_decrease = 0.0; // m_k(0) - m_k(s_k)
    double f_trial        = 0.0;
    double rho            = 0.0;
    bool   accepted       = false;
    bool   boundary_step  = false;
    std::string solver_termination;
    int    solver_iterations = 0;
    double cauchy_ratio      = 0.0;
    double model_grad_norm   = 0.0; // ||grad f(x_k) + H_k s_k||
    bool   tcg_norms_monotone = true;
    bool   within_radius      = true; // ||s_k|| <= Delta_k + 1e-12 Delta_k
    double hess_norm          = 0.0;  // spectral norm of H_k
    double beta_H             = 0.0;  // ||H_k - hess f(x_k)|| / ||grad f(x_k)|| (finite-difference mode)
};

enum class TrStatus
{
    converged,
    max_outer,
    nonfinite,
    solver_breakdown
};

const char* to_string(TrStatus s);

struct TrRunRecord
{
    std::vector< TrIteration > iterations; // one per outer iteration plus a terminal record
    TrStatus                   status = TrStatus::max_outer;
    int                        failed_iteration = -1;
    std::string                message;
    Vector                     x_final;
    double                     f_final         = 0.0;
    double                     grad_norm_final = 0.0;
    double                     rho_prime       = 0.1;
    double                     grad_tol        = 0.0;
    double                     theta           = 0.5;

    [[nodiscard]] int outer_iterations() const;
    [[nodiscard]] int boundary_step_count() const;
};

/// Trust-region loop: model with H_k, ratio rho_k, radius update in {Delta/4, Delta, min(2 Delta, Delta_bar)}.
TrRunRecord tr_minimize(const ProblemDefinition& problem, const Vector& x0, const TrConfig& config);

struct ConditionReport
{
    double                  c0_min = 0.0;
    std::vector< double >   c1_estimates; // ||s_k|| / ||grad f(x_k)||
    std::vector< double >   c2_estimates; // ||grad m_k(s_k)|| / ||grad f(x_k)||^{1+theta}
    double                  c1_max_tail = 0.0;
    double                  c2_max_tail = 0.0;
    std::vector< double >   strong_decrease_margins; // tail accepted steps: decrease - bound
    double                  strong_decrease_constant = 0.0;
    bool                    strong_decrease_holds    = true;
    double                  lambda_sharp             = 0.0;
    std::optional< double > order_estimate;
    int                     order_points = 0;

    [[nodiscard]] std::string to_json() const;
};

/// OLS slope of log g_{k+1} against log g_k over the last tail_fraction of consecutive pairs with
/// g_k > floor. Fewer than 4 pairs gives nullopt.
std::optional< double > estimate_order(std::span< const double > g, double floor, double tail_fraction = 0.5,
                                       int* points_used = nullptr);

ConditionReport evaluate_conditions(const TrRunRecord& record, const ProblemDefinition& problem, double theta,
                                    double tail_fraction = 0.5);

struct CaptureTrial
{
    bool   captured = false; // stayed within radius_stay and converged
    bool   converged = false;
    double max_distance = 0.0;
    bool   first_step_boundary = false;
    int    boundary_steps = 0;
    int    outer_iterations = 0;
    double first_step_ratio = 0.0; // ||s_0|| / ||grad f(x_0)||
    double c1_max_tail = 0.0;
    double final_grad_norm = 0.0;
    double min_cauchy_ratio = std::numeric_limits< double >::infinity();
    bool   step_contracts_ok = true; // tCG norms monotone and ||s_k|| <= Delta_k on every step
};

struct CaptureReport
{
    double                      rate = 0.0;
    double                      boundary_first_step_fraction = 0.0;
    double                      c1_max_tail = 0.0;
    std::vector< CaptureTrial > trials;
};

/// Trials start at center + radius_start * (random unit direction); a trial is captured when every iterate
/// stays within radius_stay of center and the run converges.
CaptureReport capture_experiment(const ProblemDefinition& problem, const Vector& center, double radius_start,
                                 double radius_stay, int trials, const TrConfig& config, std::uint64_t seed);

void write_run_csv(std::ostream& out, const TrRunRecord& record);
} // namespace tcglab
