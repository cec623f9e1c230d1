#include "tcglab/trs_exact.hpp"

#include "tcglab/spectral.hpp"

#include <cmath>

namespace tcglab
{
namespace
{
struct Secular
{
    const Vector& lambda; // eigenvalues, nonincreasing
    const Vector& g;      // coefficients of b in the eigenbasis

    [[nodiscard]] double norm_sq(double mu) const
    {
        return (g.array() / (lambda.array() + mu)).square().sum();
    }
    // d/dmu of ||s(mu)||^2 is -2 sum g^2 / (lambda + mu)^3.
    [[nodiscard]] double cube_sum(double mu) const
    {
        return (g.array().square() / (lambda.array() + mu).cube()).sum();
    }
};
} // namespace

TrsSolution solve_trs_exact(const SymmetricOperator& a, const Vector& b, double delta)
{
    if (!(delta > 0.0))
        throw std::invalid_argument("solve_trs_exact: Delta must be > 0");
    if (b.size() != a.dim())
        throw std::invalid_argument("solve_trs_exact: b has the wrong dimension");
    if (a.dim() > 500)
        throw std::invalid_argument("solve_trs_exact: dim > 500 is out of scope");

    const auto    eig    = symmetric_eigendecompose(a);
    const Vector& lambda = eig.eigenvalues;
    const Matrix& q      = eig.vectors;
    const Index   n      = lambda.size();
    const double  lmin   = lambda[n - 1];
    const double  scale  = std::max(1.0, lambda.cwiseAbs().maxCoeff());
    const double  bnorm  = b.norm();

    TrsSolution sol;
    if (bnorm == 0.0)
    {
        if (lmin >= 0.0)
        {
            sol.step = Vector::Zero(n);
            return sol;
        }
        sol.step        = delta * q.col(n - 1);
        sol.multiplier  = -lmin;
        sol.on_boundary = true;
        sol.hard_case   = true;
        return sol;
    }

    const Vector g = q.transpose() * b;
    // Eigenspace of the smallest eigenvalue.
    Index first_min = n - 1;
    while (first_min > 0 && lambda[first_min - 1] - lmin <= 1e-12 * scale)
        --first_min;
    const double g_min = g.tail(n - first_min).norm();

    if (lmin > 0.0)
    {
        const Vector s0 = q * (g.array() / lambda.array()).matrix();
        if (s0.norm() <= delta)
        {
            sol.step = s0;
            return sol;
        }
    }

    if (lmin <= 0.0 && g_min <= 1e-10 * bnorm)
    {
        // Candidate hard case: solve on the complement of the bottom eigenspace at mu = -lmin.
        const double mu = -lmin;
        Vector       c  = Vector::Zero(n);
        for (Index i = 0; i < first_min; ++i)
            c[i] = g[i] / (lambda[i] + mu);
        const double perp = c.norm();
        if (perp <= delta)
        {
            sol.multiplier = mu;
            if (mu == 0.0)
            {
                sol.step = q * c;
                return sol;
            }
            const double t  = std::sqrt(std::max(0.0, delta * delta - perp * perp));
            c[n - 1]        = t;
            sol.step        = q * c;
            sol.on_boundary = true;
            sol.hard_case   = true;
            return sol;
        }
    }

    // Newton on phi(mu) = 1/||s(mu)|| - 1/Delta from the left, where phi is concave and increasing.
    const Secular sec{lambda, g};
    double        lo = std::max(0.0, -lmin);
    double        hi = bnorm / delta - lmin;
    double        mu = lmin > 0.0 ? 0.0 : lo + std::max(g_min / delta, 1e-15 * scale);
    mu               = std::min(mu, hi);
    for (int it = 0; it < 200; ++it)
    {
        sol.newton_iterations = it + 1;
        const double ns       = std::sqrt(sec.norm_sq(mu));
        const double phi      = 1.0 / ns - 1.0 / delta;
        if (std::abs(ns - delta) <= 1e-12 * delta)
            break;
        if (phi < 0.0)
            lo = std::max(lo, mu);
        else
            hi = std::min(hi, mu);
        const double dphi = sec.cube_sum(mu) / (ns * ns * ns);
        double       next = mu - phi / dphi;
        if (!std::isfinite(next) || next <= lo || next >= hi)
            next = 0.5 * (lo + hi);
        if (next == mu)
            break;
        mu = next;
    }
    sol.multiplier  = mu;
    sol.step        = q * (g.array() / (lambda.array() + mu)).matrix();
    sol.on_boundary = true;
    return sol;
}

TrsKkt trs_kkt(const SymmetricOperator& a, const Vector& b, double delta, const TrsSolution& sol)
{
    TrsKkt       k;
    const double bn    = b.norm();
    const Vector resid = a.apply(sol.step) + sol.multiplier * sol.step - b;
    k.stationarity     = bn > 0.0 ? resid.norm() / bn : resid.norm();
    const auto eig     = symmetric_eigendecompose(a);
    k.min_eig          = eig.eigenvalues[eig.eigenvalues.size() - 1] + sol.multiplier;
    k.complementarity  = sol.multiplier * (delta - sol.step.norm()) / delta;
    k.complementarity  = std::abs(k.complementarity);
    k.norm_excess      = sol.step.norm() - delta;
    return k;
}
} // namespace tcglab
