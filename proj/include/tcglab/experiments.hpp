#pragma once

#include "tcglab/polylab.hpp"
#include "tcglab/tcg.hpp"
#include "tcglab/tr_driver.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <vector>

namespace tcglab
{
struct ExperimentSpec
{
    std::string                          name;
    std::map< std::string, std::string > params;
    std::uint64_t                        seed = 20240611;
    std::filesystem::path                out_dir = ".";
};

struct ExperimentResult
{
    int                      exit_code = 0;
    std::string              summary_json;
    std::vector< std::string > files; // relative to out_dir
};

const std::vector< std::string >& experiment_names();

/// Dispatches on spec.name. Unknown commands and parameter keys throw std::invalid_argument before any
/// output is written.
ExperimentResult run_experiment(const ExperimentSpec& spec);

// Computational cores of the commands, usable without file output.

struct CgDynamicsRow
{
    int    n = 0;
    double tilde_v_norm = 0.0, tilde_r_norm = 0.0;
    bool   tilde_well_defined = true;
    bool   has_head = false; // n <= head iterations
    double v_norm = 0.0, r_norm = 0.0;
};

struct CgDynamics
{
    std::vector< CgDynamicsRow >        rows;
    std::vector< std::vector< double > > ritz_tilde; // ritz_tilde[n-1]: roots of pi~_n
    double                              max_tilde_v = 0.0, max_v = 0.0;
    int                                 early_stop_n = -1; // first n <= 10 with r~ <= 2e-3 and v~ <= 2 v
    TcgTrace                            tcg_trace;         // tCG on the full problem
    double                              tcg_output_norm = 0.0;
    double                              v_ref           = 0.0; // ||A^{-1} b|| on the head
};

/// Plain CG on (A~, b~) = full measure and (A, b) = head, for n = 1..max_n, plus a tCG run on (A~, b~).
CgDynamics cg_dynamics(const SplitSpectralMeasure& split, int max_n, double delta, const TcgParams& params);

struct SigmaCheckRow
{
    std::string instance;
    int         n = 0;
    double      identity_residual = 0.0;
    double      sigma_l1 = 0.0;
    double      displacement_lhs = 0.0, displacement_rhs = 0.0;
    bool        displacement_ok = false;
    std::string iterate_status; // ok, fail, skipped (||sigma||_1 >= 1) or not_well_defined
    bool        ok = false;
};

/// All contracts for n = 1..grade(head): identity residual <= 1e-7, root displacement, iterate bounds.
std::vector< SigmaCheckRow > sigma_check(const SplitSpectralMeasure& split, const std::string& label);

struct RemarkRow
{
    double eps = 0.0;
    double r1_ratio = 0.0;   // ||r_1|| / eps
    double grad_ratio = 0.0; // ||grad f||^2 / eps
    double v2_ratio = 0.0;   // eps ||v_2||
    bool   well_defined = false;
    double deviation = 0.0; // max relative distance of the three columns from (1, 1/4, 1/6)
};

/// Two plain CG steps on (hess f(c(eps)), -grad f(c(eps))).
std::vector< RemarkRow > remark_asymptotics(const std::vector< double >& eps_grid);

/// Components uniform in [-scale, scale] from the seed.
Vector uniform_start(Index dim, std::uint64_t seed, double scale = 2.0);
} // namespace tcglab
