#include "tcglab/tcg.hpp"

#include "tcglab/csv.hpp"

#include <cmath>
#include <ostream>

namespace tcglab
{
const char* to_string(TcgTermination t)
{
    switch (t)
    {
    case TcgTermination::zero_b:
        return "zero_b";
    case TcgTermination::negative_curvature_boundary:
        return "negative_curvature_boundary";
    case TcgTermination::radius_boundary:
        return "radius_boundary";
    case TcgTermination::residual_small:
        return "residual_small";
    case TcgTermination::max_iterations:
        return "max_iterations";
    case TcgTermination::breakdown:
        return "breakdown";
    }
    return "unknown";
}

void TcgParams::validate() const
{
    if (!(kappa > 0.0))
        throw std::invalid_argument("TcgParams: kappa must be > 0");
    if (!(theta > 0.0 && theta <= 1.0))
        throw std::invalid_argument("TcgParams: theta must lie in (0, 1]");
    if (!(plain_residual_tol >= 0.0))
        throw std::invalid_argument("TcgParams: plain_residual_tol must be >= 0");
}

bool TcgTrace::norms_monotone() const
{
    for (std::size_t i = 1; i < iterates.size(); ++i)
        if (iterates[i].v_norm < iterates[i - 1].v_norm * (1.0 - 1e-12))
            return false;
    return true;
}

double TcgTrace::residual_consistency(const SymmetricOperator& a, const Vector& b) const
{
    double worst = 0.0;
    for (const auto& it : iterates)
        worst = std::max(worst, (it.r - (b - a.apply(it.v))).norm());
    return worst;
}

namespace
{
// Nonnegative root of ||v + t u||^2 = delta^2 given ||v|| <= delta.
double boundary_step(const Vector& v, const Vector& u, double delta)
{
    const double a    = u.squaredNorm();
    const double bb   = 2.0 * v.dot(u);
    const double c    = v.squaredNorm() - delta * delta;
    const double disc = std::max(0.0, bb * bb - 4.0 * a * c);
    const double sq   = std::sqrt(disc);
    if (bb >= 0.0)
    {
        const double q = -0.5 * (bb + sq);
        return q == 0.0 ? 0.0 : c / q;
    }
    return -0.5 * (bb - sq) / a;
}

bool finite(const Vector& x)
{
    return x.allFinite();
}
} // namespace

TcgTrace tcg(const SymmetricOperator& a, const Vector& b, double delta, const TcgParams& params)
{
    params.validate();
    if (b.size() != a.dim())
        throw std::invalid_argument("tcg: b has the wrong dimension");
    const bool truncated = params.mode == TcgMode::truncated;
    if (truncated && !(delta > 0.0))
        throw std::invalid_argument("tcg: Delta must be > 0");

    TcgTrace trace;
    trace.delta         = delta;
    trace.mode          = params.mode;
    trace.theta_warning = params.theta_warning();
    const int max_it    = params.max_iterations < 0 ? static_cast< int >(a.dim()) : params.max_iterations;

    Vector v = Vector::Zero(b.size());
    Vector r = b;
    Vector u = b;
    {
        TcgIterate first;
        first.v      = v;
        first.r      = r;
        first.r_norm = r.norm();
        trace.iterates.push_back(std::move(first));
    }
    const double r0 = b.norm();
    if (!std::isfinite(r0))
    {
        trace.breakdown    = true;
        trace.breakdown_at = 0;
        trace.termination  = TcgTermination::breakdown;
        trace.output       = v;
        return trace;
    }
    if (r0 == 0.0)
    {
        trace.termination = TcgTermination::zero_b;
        trace.output      = v;
        return trace;
    }
    const double residual_target = r0 * std::min(std::pow(r0, params.theta), params.kappa);
    double       r_sq            = r0 * r0;
    bool         well_defined    = true;

    for (int n = 1; n <= max_it; ++n)
    {
        const Vector au        = a.apply(u);
        const double curvature = u.dot(au);
        if (!std::isfinite(curvature) || (!truncated && curvature == 0.0))
        {
            trace.breakdown    = true;
            trace.breakdown_at = n;
            trace.termination  = TcgTermination::breakdown;
            trace.output       = v;
            return trace;
        }

        TcgIterate it;
        it.n         = n;
        it.curvature = curvature;

        // Curvature is tested before alpha is formed, so a zero denominator never divides.
        if (truncated)
        {
            bool         to_boundary = curvature <= 0.0;
            const double alpha       = to_boundary ? 0.0 : r_sq / curvature;
            Vector       v_plus;
            if (!to_boundary)
            {
                v_plus      = v + alpha * u;
                to_boundary = v_plus.norm() >= delta;
            }
            if (to_boundary)
            {
                const double t    = boundary_step(v, u, delta);
                it.v              = v + t * u;
                it.r              = r - t * au;
                it.alpha          = t;
                it.v_norm         = it.v.norm();
                it.r_norm         = it.r.norm();
                it.well_defined   = well_defined && curvature > 0.0;
                trace.termination = curvature <= 0.0 ? TcgTermination::negative_curvature_boundary
                                                     : TcgTermination::radius_boundary;
                trace.output      = it.v;
                trace.iterates.push_back(std::move(it));
                return trace;
            }
            v = std::move(v_plus);
            r -= alpha * au;
            it.alpha = alpha;
        }
        else
        {
            well_defined      = well_defined && curvature > 0.0;
            const double alpha = r_sq / curvature;
            v += alpha * u;
            r -= alpha * au;
            it.alpha = alpha;
        }

        if (!finite(v) || !finite(r))
        {
            trace.breakdown    = true;
            trace.breakdown_at = n;
            trace.termination  = TcgTermination::breakdown;
            trace.output       = trace.iterates.back().v;
            return trace;
        }

        const double r_norm = r.norm();
        it.v                = v;
        it.r                = r;
        it.v_norm           = v.norm();
        it.r_norm           = r_norm;
        it.well_defined     = well_defined;

        const bool stop = truncated ? r_norm <= residual_target
                                    : params.plain_residual_tol > 0.0 && r_norm <= params.plain_residual_tol * r0;
        if (stop)
        {
            trace.termination = TcgTermination::residual_small;
            trace.output      = v;
            trace.iterates.push_back(std::move(it));
            return trace;
        }

        const double r_sq_new = r_norm * r_norm;
        const double beta     = r_sq_new / r_sq;
        it.beta               = beta;
        u                     = r + beta * u;
        r_sq                  = r_sq_new;
        trace.iterates.push_back(std::move(it));
    }
    trace.termination = TcgTermination::max_iterations;
    trace.output      = v;
    return trace;
}

TcgTrace plain_cg(const SymmetricOperator& a, const Vector& b, int max_iterations)
{
    TcgParams p;
    p.mode               = TcgMode::plain;
    p.max_iterations     = max_iterations;
    p.plain_residual_tol = 0.0;
    return tcg(a, b, 0.0, p);
}

double model_value(const SymmetricOperator& a, const Vector& b, const Vector& s)
{
    return -b.dot(s) + 0.5 * s.dot(a.apply(s));
}

double cauchy_decrease_ratio(const SymmetricOperator& a, const Vector& b, const Vector& s, double delta)
{
    const double bn = b.norm();
    if (bn == 0.0)
        throw std::invalid_argument("cauchy_decrease_ratio: requires ||b|| > 0");
    const double decrease = -model_value(a, b, s);
    const double bab      = b.dot(a.apply(b));
    const double radius   = bab == 0.0 ? delta : std::min(delta, bn * bn * bn / std::abs(bab));
    return decrease / (bn * radius);
}

double cauchy_decrease_ratio(const TcgTrace& trace, const SymmetricOperator& a, const Vector& b)
{
    return cauchy_decrease_ratio(a, b, trace.output, trace.delta);
}

void write_trace_csv(std::ostream& out, const TcgTrace& trace)
{
    csv::Writer w(out);
    w.header({"n", "v_norm", "r_norm", "curvature", "alpha", "beta", "termination"});
    for (std::size_t i = 0; i < trace.iterates.size(); ++i)
    {
        const auto& it = trace.iterates[i];
        w.field(it.n).field(it.v_norm).field(it.r_norm).field(it.curvature).field(it.alpha).field(it.beta);
        w.field(i + 1 == trace.iterates.size() ? to_string(trace.termination) : "");
        w.end_row();
    }
}
} // namespace tcglab
