#include "tcglab/tr_driver.hpp"

#include "tcglab/csv.hpp"
#include "tcglab/trs_exact.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <ostream>
#include <random>
#include <sstream>

namespace tcglab
{
namespace
{
double spectral_norm(const Matrix& h)
{
    Eigen::SelfAdjointEigenSolver< Matrix > solver(h, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalBreakdown("spectral norm: eigensolver did not converge");
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

struct StepResult
{
    Vector      step;
    bool        boundary = false;
    std::string termination;
    int         iterations = 0;
    bool        norms_monotone = true;
    bool        breakdown      = false;
};

// Minimizer of the model along -g inside the ball.
StepResult cauchy_step(const SymmetricOperator& h, const Vector& g, double delta)
{
    StepResult   out;
    const double gn  = g.norm();
    const double ghg = g.dot(h.apply(g));
    double       t   = delta / gn;
    if (ghg > 0.0)
        t = std::min(t, gn * gn / ghg);
    out.boundary    = t * gn >= delta * (1.0 - 1e-12);
    out.step        = -t * g;
    out.termination = out.boundary ? "cauchy_boundary" : "cauchy_interior";
    out.iterations  = 1;
    return out;
}

StepResult solve_subproblem(const SymmetricOperator& h, const Vector& g, double delta, const TrConfig& cfg)
{
    switch (cfg.solver)
    {
    case SolverKind::tcg:
    {
        const TcgTrace tr = tcg(h, -g, delta, cfg.tcg);
        StepResult     out;
        out.step           = tr.output;
        out.boundary       = tr.on_boundary();
        out.termination    = to_string(tr.termination);
        out.iterations     = tr.iterations();
        out.norms_monotone = tr.norms_monotone();
        out.breakdown      = tr.breakdown;
        return out;
    }
    case SolverKind::exact:
    {
        const TrsSolution sol = solve_trs_exact(h, -g, delta);
        StepResult        out;
        out.step        = sol.step;
        out.boundary    = sol.on_boundary;
        out.termination = sol.hard_case ? "exact_hard_case" : (sol.on_boundary ? "exact_boundary" : "exact_interior");
        out.iterations  = sol.newton_iterations;
        return out;
    }
    case SolverKind::cauchy:
        return cauchy_step(h, g, delta);
    }
    throw std::logic_error("unknown solver");
}

bool finite(const Vector& v)
{
    return v.allFinite();
}
} // namespace

const char* to_string(SolverKind s)
{
    switch (s)
    {
    case SolverKind::tcg:
        return "tcg";
    case SolverKind::exact:
        return "exact";
    case SolverKind::cauchy:
        return "cauchy";
    }
    return "unknown";
}

SolverKind solver_from_string(const std::string& s)
{
    if (s == "tcg")
        return SolverKind::tcg;
    if (s == "exact")
        return SolverKind::exact;
    if (s == "cauchy")
        return SolverKind::cauchy;
    throw std::invalid_argument("unknown solver '" + s + "' (expected tcg, exact or cauchy)");
}

const char* to_string(TrStatus s)
{
    switch (s)
    {
    case TrStatus::converged:
        return "converged";
    case TrStatus::max_outer:
        return "max_outer";
    case TrStatus::nonfinite:
        return "nonfinite";
    case TrStatus::solver_breakdown:
        return "solver_breakdown";
    }
    return "unknown";
}

void TrConfig::validate() const
{
    if (!(rho_prime > 0.0 && rho_prime < 0.25))
        throw std::invalid_argument("TrConfig: rho_prime must lie in (0, 1/4)");
    if (!(Delta_bar > 0.0))
        throw std::invalid_argument("TrConfig: Delta_bar must be > 0");
    const double d0 = initial_radius();
    if (!(d0 > 0.0 && d0 <= Delta_bar))
        throw std::invalid_argument("TrConfig: Delta_0 must lie in (0, Delta_bar]");
    if (max_outer < 0)
        throw std::invalid_argument("TrConfig: max_outer must be >= 0");
    if (!(grad_tol >= 0.0))
        throw std::invalid_argument("TrConfig: grad_tol must be >= 0");
    if (!(fd_step > 0.0))
        throw std::invalid_argument("TrConfig: fd_step must be > 0");
    if (solver == SolverKind::tcg)
        tcg.validate();
}

int TrRunRecord::outer_iterations() const
{
    return static_cast< int >(std::count_if(iterations.begin(), iterations.end(),
                                             [](const TrIteration& it) { return it.has_step; }));
}

int TrRunRecord::boundary_step_count() const
{
    return static_cast< int >(std::count_if(iterations.begin(), iterations.end(),
                                             [](const TrIteration& it) { return it.has_step && it.boundary_step; }));
}

TrRunRecord tr_minimize(const ProblemDefinition& problem, const Vector& x0, const TrConfig& config)
{
    config.validate();
    if (x0.size() != problem.dim)
        throw std::invalid_argument("tr_minimize: x0 has the wrong dimension");

    TrRunRecord rec;
    rec.rho_prime = config.rho_prime;
    rec.grad_tol  = config.grad_tol;
    rec.theta     = config.tcg.theta;

    Vector x     = x0;
    double delta = config.initial_radius();
    double f     = problem.f(x);
    Vector g     = problem.grad(x);

    auto finish = [&](TrStatus status, int k) {
        TrIteration last;
        last.k         = k;
        last.x         = x;
        last.delta     = delta;
        last.f         = f;
        last.grad_norm = g.norm();
        rec.iterations.push_back(std::move(last));
        rec.status          = status;
        rec.x_final         = x;
        rec.f_final         = f;
        rec.grad_norm_final = g.norm();
    };

    for (int k = 0;; ++k)
    {
        if (!std::isfinite(f) || !finite(g))
        {
            rec.failed_iteration = k;
            rec.message          = "non-finite objective or gradient";
            finish(TrStatus::nonfinite, k);
            return rec;
        }
        const double gn = g.norm();
        if (gn <= config.grad_tol)
        {
            finish(TrStatus::converged, k);
            return rec;
        }
        if (k >= config.max_outer)
        {
            finish(TrStatus::max_outer, k);
            return rec;
        }

        TrIteration it;
        it.k         = k;
        it.x         = x;
        it.delta     = delta;
        it.f         = f;
        it.grad_norm = gn;

        const SymmetricOperator exact_h = problem.hess(x);
        SymmetricOperator       h       = exact_h;
        if (config.hessian == HessianMode::finite_difference)
        {
            h         = SymmetricOperator(finite_difference_hessian(problem, x, config.fd_step));
            it.beta_H = spectral_norm(h.dense() - exact_h.dense()) / gn;
        }
        it.hess_norm = spectral_norm(h.dense());

        StepResult step;
        try
        {
            step = solve_subproblem(h, g, delta, config);
        }
        catch (const NumericalBreakdown& e)
        {
            rec.failed_iteration = k;
            rec.message          = e.what();
            finish(TrStatus::solver_breakdown, k);
            return rec;
        }
        if (step.breakdown)
        {
            rec.failed_iteration = k;
            rec.message          = "subproblem solver breakdown";
            finish(TrStatus::solver_breakdown, k);
            return rec;
        }

        const Vector hs       = h.apply(step.step);
        it.has_step           = true;
        it.step               = step.step;
        it.step_norm          = step.step.norm();
        it.model_decrease     = -(g.dot(step.step) + 0.5 * step.step.dot(hs));
        it.solver_termination = step.termination;
        it.solver_iterations  = step.iterations;
        it.tcg_norms_monotone = step.norms_monotone;
        it.within_radius      = it.step_norm <= delta * (1.0 + 1e-12);
        it.boundary_step      = step.boundary || std::abs(it.step_norm - delta) <= 1e-10 * delta;
        it.model_grad_norm    = (g + hs).norm();
        it.cauchy_ratio       = cauchy_decrease_ratio(h, -g, step.step, delta);

        const Vector xt = x + step.step;
        it.f_trial      = problem.f(xt);
        if (!std::isfinite(it.f_trial))
        {
            rec.iterations.push_back(it);
            rec.failed_iteration = k;
            rec.message          = "non-finite objective at trial point";
            finish(TrStatus::nonfinite, k + 1);
            return rec;
        }
        it.rho      = std::abs(it.model_decrease) <= 1e-15 * std::abs(f) ? 1.0 : (f - it.f_trial) / it.model_decrease;
        it.accepted = it.rho > config.rho_prime;

        if (it.rho < 0.25)
            delta = delta / 4.0;
        else if (it.rho > 0.75 && it.boundary_step)
            delta = std::min(2.0 * delta, config.Delta_bar);

        if (it.accepted)
        {
            x = xt;
            f = it.f_trial;
            g = problem.grad(x);
        }
        rec.iterations.push_back(std::move(it));
    }
}

std::optional< double > estimate_order(std::span< const double > g, double floor, double tail_fraction,
                                       int* points_used)
{
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("estimate_order: tail_fraction must lie in (0, 1]");
    std::vector< std::pair< double, double > > pts;
    for (std::size_t k = 0; k + 1 < g.size(); ++k)
        if (g[k] > floor && g[k + 1] > 0.0 && std::isfinite(g[k]) && std::isfinite(g[k + 1]))
            pts.emplace_back(std::log(g[k]), std::log(g[k + 1]));
    const auto keep = static_cast< std::size_t >(std::ceil(tail_fraction * static_cast< double >(pts.size())));
    pts.erase(pts.begin(), pts.end() - static_cast< std::ptrdiff_t >(keep));
    if (points_used)
        *points_used = static_cast< int >(pts.size());
    if (pts.size() < 4)
        return std::nullopt;

    double mx = 0.0, my = 0.0;
    for (const auto& [a, b] : pts)
    {
        mx += a;
        my += b;
    }
    mx /= static_cast< double >(pts.size());
    my /= static_cast< double >(pts.size());
    double sxy = 0.0, sxx = 0.0;
    for (const auto& [a, b] : pts)
    {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
    }
    if (sxx == 0.0)
        return std::nullopt;
    return sxy / sxx;
}

ConditionReport evaluate_conditions(const TrRunRecord& record, const ProblemDefinition& problem, double theta,
                                    double tail_fraction)
{
    if (!(tail_fraction > 0.0 && tail_fraction <= 1.0))
        throw std::invalid_argument("evaluate_conditions: tail_fraction must lie in (0, 1]");
    ConditionReport rep;
    rep.c0_min = std::numeric_limits< double >::infinity();

    std::vector< const TrIteration* > steps;
    for (const auto& it : record.iterations)
        if (it.has_step && it.grad_norm > record.grad_tol)
            steps.push_back(&it);

    for (const TrIteration* it : steps)
    {
        const SymmetricOperator h = problem.hess(it->x);
        const Vector            g = problem.grad(it->x);
        rep.c0_min = std::min(rep.c0_min, cauchy_decrease_ratio(h, -g, it->step, it->delta));
        rep.c1_estimates.push_back(it->step_norm / it->grad_norm);
        rep.c2_estimates.push_back((g + h.apply(it->step)).norm() / std::pow(it->grad_norm, 1.0 + theta));
        rep.lambda_sharp = std::max(rep.lambda_sharp, it->hess_norm);
    }
    if (steps.empty())
        rep.c0_min = 0.0;
    rep.lambda_sharp += 1e-6;

    const auto tail_count = static_cast< std::size_t >(std::ceil(tail_fraction * static_cast< double >(steps.size())));
    const std::size_t first = steps.size() - tail_count;
    for (std::size_t i = first; i < steps.size(); ++i)
    {
        rep.c1_max_tail = std::max(rep.c1_max_tail, rep.c1_estimates[i]);
        rep.c2_max_tail = std::max(rep.c2_max_tail, rep.c2_estimates[i]);
    }

    const double c0 = 0.5, cr = 1.0;
    const double c1 = rep.c1_max_tail;
    rep.strong_decrease_constant =
        c0 * record.rho_prime / cr * (c1 > 0.0 ? std::min(1.0, 1.0 / (c1 * rep.lambda_sharp)) : 1.0);
    for (std::size_t i = first; i < steps.size(); ++i)
    {
        const TrIteration& it = *steps[i];
        if (!it.accepted)
            continue;
        const double decrease = it.f - it.f_trial;
        const double bound    = rep.strong_decrease_constant * it.grad_norm * it.step_norm;
        const double margin   = decrease - bound;
        rep.strong_decrease_margins.push_back(margin);
        if (margin < -1e-14 * std::max(1.0, std::abs(it.f)))
            rep.strong_decrease_holds = false;
    }

    // Gradient norms at the distinct iterates (x changes only on accepted steps).
    std::vector< double > g;
    if (!record.iterations.empty())
        g.push_back(record.iterations.front().grad_norm);
    for (std::size_t i = 0; i + 1 < record.iterations.size(); ++i)
        if (record.iterations[i].has_step && record.iterations[i].accepted)
            g.push_back(record.iterations[i + 1].grad_norm);
    rep.order_estimate = estimate_order(g, 100.0 * record.grad_tol, tail_fraction, &rep.order_points);
    return rep;
}

std::string ConditionReport::to_json() const
{
    nlohmann::ordered_json j;
    j["c0_min"]      = c0_min;
    j["c1_max_tail"] = c1_max_tail;
    j["c2_max_tail"] = c2_max_tail;
    if (order_estimate)
        j["order_estimate"] = *order_estimate;
    else
        j["order_estimate"] = nullptr;
    j["order_points"]             = order_points;
    j["lambda_sharp"]             = lambda_sharp;
    j["strong_decrease_constant"] = strong_decrease_constant;
    j["strong_decrease_holds"]    = strong_decrease_holds;
    j["c1_estimates"]             = c1_estimates;
    j["c2_estimates"]             = c2_estimates;
    return j.dump(2);
}

CaptureReport capture_experiment(const ProblemDefinition& problem, const Vector& center, double radius_start,
                                 double radius_stay, int trials, const TrConfig& config, std::uint64_t seed)
{
    if (trials < 1)
        throw std::invalid_argument("capture_experiment: trials must be >= 1");
    if (center.size() != problem.dim)
        throw std::invalid_argument("capture_experiment: center has the wrong dimension");
    std::mt19937_64 rng(seed);
    CaptureReport   rep;
    int             captured = 0, first_boundary = 0;
    for (int t = 0; t < trials; ++t)
    {
        const Vector      x0  = center + radius_start * random_unit_vector(problem.dim, rng);
        const TrRunRecord run = tr_minimize(problem, x0, config);
        CaptureTrial      tr;
        tr.converged        = run.status == TrStatus::converged;
        tr.outer_iterations = run.outer_iterations();
        tr.boundary_steps   = run.boundary_step_count();
        tr.final_grad_norm  = run.grad_norm_final;
        for (const auto& it : run.iterations)
        {
            tr.max_distance = std::max(tr.max_distance, (it.x - center).norm());
            if (!it.has_step)
                continue;
            tr.min_cauchy_ratio  = std::min(tr.min_cauchy_ratio, it.cauchy_ratio);
            tr.step_contracts_ok = tr.step_contracts_ok && it.tcg_norms_monotone && it.within_radius;
        }
        if (!run.iterations.empty() && run.iterations.front().has_step)
        {
            const auto& first       = run.iterations.front();
            tr.first_step_boundary = first.boundary_step;
            tr.first_step_ratio    = first.step_norm / first.grad_norm;
        }
        tr.c1_max_tail = evaluate_conditions(run, problem, config.tcg.theta).c1_max_tail;
        tr.captured    = tr.converged && tr.max_distance <= radius_stay;
        captured += tr.captured ? 1 : 0;
        first_boundary += tr.first_step_boundary ? 1 : 0;
        rep.c1_max_tail = std::max(rep.c1_max_tail, tr.c1_max_tail);
        rep.trials.push_back(tr);
    }
    rep.rate                         = static_cast< double >(captured) / trials;
    rep.boundary_first_step_fraction = static_cast< double >(first_boundary) / trials;
    return rep;
}

void write_run_csv(std::ostream& out, const TrRunRecord& record)
{
    csv::Writer w(out);
    w.header({"k", "grad_norm", "f", "delta", "rho", "step_norm", "accepted", "termination"});
    for (const auto& it : record.iterations)
    {
        w.field(it.k).field(it.grad_norm).field(it.f).field(it.delta);
        if (it.has_step)
            w.field(it.rho).field(it.step_norm).field(it.accepted).field(it.solver_termination);
        else
            w.field("").field("").field("").field(to_string(record.status));
        w.end_row();
    }
}
} // namespace tcglab
