#include "tcglab/polylab.hpp"

#include "tcglab/csv.hpp"
#include "tcglab/tcg.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>

namespace tcglab
{
namespace
{
struct ActiveAtoms
{
    std::vector< double > lambda, weight;
};

// Atoms that carry weight: nonzero and not flagged as negligible.
ActiveAtoms active_atoms(const SpectralMeasure& m)
{
    ActiveAtoms out;
    for (std::size_t i = 0; i < m.size(); ++i)
        if (m.weight(i) != 0.0 && !m.flagged(i))
        {
            out.lambda.push_back(m.lambda(i));
            out.weight.push_back(m.weight(i));
        }
    return out;
}

void check_degree(const char* where, int n, int lo, int hi)
{
    if (n < lo || n > hi)
    {
        std::ostringstream msg;
        msg << where << ": degree " << n << " outside [" << lo << ", " << hi << "]";
        throw std::invalid_argument(msg.str());
    }
}

std::vector< double > tridiagonal_eigenvalues(const Vector& diag, const Vector& sub)
{
    if (diag.size() == 0)
        return {};
    Eigen::SelfAdjointEigenSolver< Matrix > solver;
    solver.computeFromTridiagonal(diag, sub, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success)
        throw NumericalBreakdown("tridiagonal eigensolver did not converge");
    const Vector& ev = solver.eigenvalues();
    return {ev.data(), ev.data() + ev.size()};
}

double ritz_tolerance(const JacobiRecurrence& rec)
{
    return 1e-14 * std::max(1.0, rec.measure().spectral_radius());
}

// ((1 - x/l)^n - 1) / x in absolute value, with the limit n / l at x = 0.
double tail_growth_factor(double x, double l, int n)
{
    if (x == 0.0)
        return static_cast< double >(n) / l;
    return std::abs(std::expm1(static_cast< double >(n) * std::log1p(-x / l)) / x);
}

Matrix diagonal_of(const SpectralMeasure& head, const SpectralMeasure& tail, Vector& b)
{
    const auto d = static_cast< Index >(head.size()), t = static_cast< Index >(tail.size());
    Vector     l(d + t);
    b.resize(d + t);
    for (Index i = 0; i < d; ++i)
    {
        l[i] = head.lambda(static_cast< std::size_t >(i));
        b[i] = head.weight(static_cast< std::size_t >(i));
    }
    for (Index i = 0; i < t; ++i)
    {
        l[d + i] = tail.lambda(static_cast< std::size_t >(i));
        b[d + i] = tail.weight(static_cast< std::size_t >(i));
    }
    return l.asDiagonal();
}

using ExtVector = Eigen::Matrix< long double, Eigen::Dynamic, 1 >;
using ExtMatrix = Eigen::Matrix< long double, Eigen::Dynamic, Eigen::Dynamic >;

long double monic_ext(const JacobiRecurrence& rec, int n, long double x)
{
    long double prev = 0.0L, cur = 1.0L;
    for (int k = 0; k < n; ++k)
    {
        const long double b    = k == 0 ? 0.0L : rec.beta(k);
        const long double next = (x - rec.alpha(k)) * cur - b * b * prev;
        prev                   = cur;
        cur                    = next;
    }
    return cur;
}

ExtVector orthonormal_ext(const JacobiRecurrence& rec, int n, long double x)
{
    ExtVector p(n + 1);
    p[0] = 1.0L / std::sqrt(static_cast< long double >(rec.norm_sq(0)));
    for (int k = 0; k < n; ++k)
    {
        const long double prev = k == 0 ? 0.0L : rec.beta(k) * p[k - 1];
        p[k + 1]               = ((x - rec.alpha(k)) * p[k] - prev) / rec.beta(k + 1);
    }
    return p;
}
} // namespace

JacobiRecurrence stieltjes(const SpectralMeasure& measure)
{
    const ActiveAtoms atoms = active_atoms(measure);
    const auto        m     = static_cast< Index >(atoms.lambda.size());
    if (m == 0)
        throw std::invalid_argument("stieltjes: no atom carries positive weight");

    const Vector lambda = Eigen::Map< const Vector >(atoms.lambda.data(), m);
    const Vector w      = Eigen::Map< const Vector >(atoms.weight.data(), m).cwiseAbs();
    const double radius = std::max(1.0, lambda.cwiseAbs().maxCoeff());

    auto data     = std::make_shared< JacobiRecurrence::Data >();
    data->measure = measure;
    data->grade   = static_cast< int >(m);
    data->alpha.resize(static_cast< std::size_t >(m));
    data->beta.assign(static_cast< std::size_t >(m) + 1, 0.0);
    data->norm_sq.resize(static_cast< std::size_t >(m) + 1);
    data->norm_sq[0] = w.squaredNorm();

    Matrix q(m, m);
    q.col(0) = w / w.norm();
    for (Index k = 0; k < m; ++k)
    {
        Vector       z     = lambda.cwiseProduct(q.col(k));
        const double alpha = q.col(k).dot(z);
        z -= alpha * q.col(k);
        if (k > 0)
            z -= data->beta[static_cast< std::size_t >(k)] * q.col(k - 1);
        for (int pass = 0; pass < 2; ++pass)
            z -= q.leftCols(k + 1) * (q.leftCols(k + 1).transpose() * z);
        const double beta = z.norm();

        data->alpha[static_cast< std::size_t >(k)]    = alpha;
        data->beta[static_cast< std::size_t >(k) + 1] = beta;
        data->norm_sq[static_cast< std::size_t >(k) + 1] =
            data->norm_sq[static_cast< std::size_t >(k)] * beta * beta;
        if (k + 1 < m)
        {
            if (!(beta > 1e-14 * radius))
                throw NumericalBreakdown("stieltjes: recurrence broke down before the grade (atoms too close)");
            q.col(k + 1) = z / beta;
        }
    }
    data->zero_threshold = 1e-16 * data->norm_sq[0] * std::pow(radius, 2.0 * static_cast< double >(m));
    if (!(data->norm_sq[static_cast< std::size_t >(m)] <= data->zero_threshold))
        throw NumericalBreakdown("stieltjes: ||pi_grade||^2 is not numerically zero");
    return JacobiRecurrence(std::move(data));
}

double JacobiRecurrence::eval_monic(int n, double x) const
{
    check_degree("eval_pi", n, 0, grade());
    double prev = 0.0, cur = 1.0;
    for (int k = 0; k < n; ++k)
    {
        const double b    = k == 0 ? 0.0 : beta(k);
        const double next = (x - alpha(k)) * cur - b * b * prev;
        prev              = cur;
        cur               = next;
    }
    return cur;
}

std::vector< double > JacobiRecurrence::eval_orthonormal(int n, double x) const
{
    check_degree("eval_orthonormal", n, 0, grade() - 1);
    std::vector< double > p(static_cast< std::size_t >(n) + 1);
    p[0] = 1.0 / std::sqrt(norm_sq(0));
    for (int k = 0; k < n; ++k)
    {
        const double prev                      = k == 0 ? 0.0 : beta(k) * p[static_cast< std::size_t >(k) - 1];
        p[static_cast< std::size_t >(k) + 1] = ((x - alpha(k)) * p[static_cast< std::size_t >(k)] - prev) / beta(k + 1);
    }
    return p;
}

Matrix JacobiRecurrence::jacobi_matrix(int n) const
{
    check_degree("jacobi_matrix", n, 0, grade());
    Matrix j = Matrix::Zero(n, n);
    for (int k = 0; k < n; ++k)
    {
        j(k, k) = alpha(k);
        if (k + 1 < n)
            j(k, k + 1) = j(k + 1, k) = beta(k + 1);
    }
    return j;
}

std::vector< double > ritz_values(const JacobiRecurrence& rec, int n)
{
    check_degree("ritz_values", n, 1, rec.grade());
    Vector diag(n), sub(std::max(0, n - 1));
    for (int k = 0; k < n; ++k)
        diag[k] = rec.alpha(k);
    for (int k = 0; k + 1 < n; ++k)
        sub[k] = rec.beta(k + 1);
    return tridiagonal_eigenvalues(diag, sub);
}

double eval_pi(const JacobiRecurrence& rec, int n, double x)
{
    return rec.eval_monic(n, x);
}

double eval_varsigma(const JacobiRecurrence& rec, int n, double x)
{
    return varsigma_poly(rec, n)(x);
}

double eval_phi(const JacobiRecurrence& rec, int m, double x)
{
    return phi_poly(rec, m)(x);
}

const char* to_string(PolyKind kind)
{
    switch (kind)
    {
    case PolyKind::pi:
        return "pi";
    case PolyKind::varsigma:
        return "varsigma";
    case PolyKind::phi:
        return "phi";
    case PolyKind::zeta:
        return "zeta";
    case PolyKind::xi:
        return "xi";
    }
    return "unknown";
}

PolyHandle pi_poly(const JacobiRecurrence& rec, int n)
{
    check_degree("pi", n, 0, rec.grade());
    PolyHandle h(rec, PolyKind::pi, n);
    if (n > 0)
        h.ritz_ = ritz_values(rec, n);
    return h;
}

PolyHandle varsigma_poly(const JacobiRecurrence& rec, int n)
{
    check_degree("varsigma", n, 0, rec.grade());
    PolyHandle h(rec, PolyKind::varsigma, n);
    if (n > 0)
    {
        h.ritz_ = ritz_values(rec, n);
        if (!(h.ritz_.front() > ritz_tolerance(rec)))
        {
            std::ostringstream msg;
            msg << "iteration " << n << " not well defined: smallest Ritz value " << h.ritz_.front()
                << " is not positive";
            throw NotWellDefined(msg.str());
        }
        h.scale_ = 1.0 / rec.eval_monic(n, 0.0);
    }
    return h;
}

PolyHandle phi_poly(const JacobiRecurrence& rec, int m)
{
    check_degree("phi", m, 0, rec.grade() - 1);
    const PolyHandle s = varsigma_poly(rec, m + 1);
    PolyHandle       h(rec, PolyKind::phi, m);
    h.ritz_ = s.ritz_;
    return h;
}

PolyHandle zeta(const JacobiRecurrence& rec, int n, double lambda)
{
    check_degree("zeta", n, 0, rec.grade() - 1);
    PolyHandle h(rec, PolyKind::zeta, n);
    h.lambda_   = lambda;
    h.p_lambda_ = rec.eval_orthonormal(n, lambda);
    double k    = 0.0;
    for (double p : h.p_lambda_)
        k += p * p;
    if (!(k > 0.0) || !std::isfinite(k))
        throw NumericalBreakdown("zeta: K_n(lambda, lambda) is not positive");
    h.k_ll_  = k;
    h.scale_ = 1.0 / k;
    return h;
}

PolyHandle xi(const JacobiRecurrence& rec, int n, double lambda)
{
    PolyHandle   h   = zeta(rec, n, lambda);
    const double k0  = h.kernel(0.0);
    const double z0  = k0 / h.k_ll_;
    if (!(std::abs(z0) > 1e-14) || !std::isfinite(z0))
    {
        std::ostringstream msg;
        msg << "xi undefined: zeta_" << n << "(0) = " << z0 << " for lambda = " << lambda;
        throw NumericalBreakdown(msg.str());
    }
    h.kind_  = PolyKind::xi;
    h.scale_ = 1.0 / k0;
    return h;
}

double PolyHandle::kernel(double x) const
{
    const auto p = rec_.eval_orthonormal(degree_, x);
    double     k = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i)
        k += p_lambda_[i] * p[i];
    return k;
}

double PolyHandle::operator()(double x) const
{
    switch (kind_)
    {
    case PolyKind::pi:
        return rec_.eval_monic(degree_, x);
    case PolyKind::varsigma:
        return degree_ == 0 ? 1.0 : rec_.eval_monic(degree_, x) * scale_;
    case PolyKind::phi:
    {
        // 1 - prod_i (1 - x/g_i) telescopes to sum_k (x/g_k) prod_{i<k} (1 - x/g_i).
        double sum = 0.0, prod = 1.0;
        for (double g : ritz_)
        {
            sum += prod / g;
            prod *= 1.0 - x / g;
        }
        return sum;
    }
    case PolyKind::zeta:
    case PolyKind::xi:
        return kernel(x) * scale_;
    }
    return std::numeric_limits< double >::quiet_NaN();
}

double PolyHandle::norm_sq() const
{
    switch (kind_)
    {
    case PolyKind::pi:
        return rec_.norm_sq(degree_);
    case PolyKind::varsigma:
        return rec_.norm_sq(degree_) * scale_ * scale_;
    case PolyKind::phi:
    {
        const auto& m = rec_.measure();
        double      s = 0.0;
        for (std::size_t i = 0; i < m.size(); ++i)
            if (m.weight(i) != 0.0 && !m.flagged(i))
            {
                const double v = (*this)(m.lambda(i)) * m.weight(i);
                s += v * v;
            }
        return s;
    }
    case PolyKind::zeta:
        return 1.0 / k_ll_;
    case PolyKind::xi:
        return k_ll_ * scale_ * scale_;
    }
    return std::numeric_limits< double >::quiet_NaN();
}

std::vector< double > PolyHandle::roots() const
{
    switch (kind_)
    {
    case PolyKind::pi:
    case PolyKind::varsigma:
        return ritz_;
    case PolyKind::phi:
        throw std::invalid_argument("PolyHandle::roots: not available for phi");
    case PolyKind::zeta:
    case PolyKind::xi:
    {
        // Radau-modified Jacobi matrix: its spectrum is {lambda} plus the roots of K_n(lambda, .).
        const int n = degree_;
        if (n == 0)
            return {};
        const double pn = p_lambda_[static_cast< std::size_t >(n)];
        if (pn == 0.0)
            throw NumericalBreakdown("zeta roots: p_n(lambda) = 0");
        Vector diag(n + 1), sub(n);
        for (int k = 0; k < n; ++k)
        {
            diag[k] = rec_.alpha(k);
            sub[k]  = rec_.beta(k + 1);
        }
        diag[n]   = lambda_ - rec_.beta(n) * p_lambda_[static_cast< std::size_t >(n) - 1] / pn;
        auto ev   = tridiagonal_eigenvalues(diag, sub);
        auto near = std::min_element(ev.begin(), ev.end(), [this](double a, double b) {
            return std::abs(a - lambda_) < std::abs(b - lambda_);
        });
        ev.erase(near);
        return ev;
    }
    }
    return {};
}

double cg_objective(const JacobiRecurrence& rec, int n)
{
    const PolyHandle s = varsigma_poly(rec, n);
    const auto&      m = rec.measure();
    double           total = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
    {
        if (m.weight(i) == 0.0 || m.flagged(i))
            continue;
        if (!(m.lambda(i) > 0.0))
            throw std::invalid_argument("cg_objective: measure support must be positive");
        const double v = s(m.lambda(i));
        total += v * v * m.weight(i) * m.weight(i) / m.lambda(i);
    }
    return total;
}

SigmaSystem sigma_system(const SplitSpectralMeasure& split, int n, std::optional< double > c)
{
    SigmaSystem sys;
    sys.n        = n;
    sys.head_rec = stieltjes(split.head());
    check_degree("sigma_system", n, 1, sys.head_rec.grade());

    const auto&      tail = split.tail();
    const auto       t    = static_cast< Index >(tail.size());
    const PolyHandle vs   = varsigma_poly(sys.head_rec, n);
    sys.pi_n_at_zero      = sys.head_rec.eval_monic(n, 0.0);

    sys.B        = tail.weight_vector();
    sys.C.resize(t, t);
    sys.D.resize(t);
    sys.D_kernel.resize(t);
    sys.w.resize(t);
    for (Index j = 0; j < t; ++j)
    {
        const double lj = tail.lambda(static_cast< std::size_t >(j));
        sys.xi.push_back(xi(sys.head_rec, n - 1, lj));
        const PolyHandle& x = sys.xi.back();
        for (Index i = 0; i < t; ++i)
            sys.C(i, j) = x(tail.lambda(static_cast< std::size_t >(i)));
        sys.D[j]             = x.norm_sq() / x(lj);
        const PolyHandle z   = zeta(sys.head_rec, n - 1, lj);
        sys.D_kernel[j]      = z.norm_sq() / z(0.0);
        sys.w[j]             = vs(lj);
    }

    const Vector b2  = sys.B.cwiseAbs2();
    const Vector rhs = b2.cwiseProduct(sys.w);
    sys.rhs_norm     = rhs.norm();
    if (t == 0 || rhs.isZero(0.0))
        sys.sigma = Vector::Zero(t);
    else
    {
        const Matrix m = Matrix(sys.D.asDiagonal()) + b2.asDiagonal() * sys.C;
        Eigen::FullPivLU< Matrix > lu(m);
        if (!lu.isInvertible())
            throw NumericalBreakdown("sigma_system: D + B^2 C is numerically singular");
        // Solved and checked in long double; the system can be badly conditioned when tail atoms nearly coincide.
        const ExtMatrix me = m.cast< long double >();
        const ExtVector re = rhs.cast< long double >();
        const ExtVector se = me.fullPivLu().solve(re);
        sys.sigma           = se.cast< double >();
        sys.linear_residual = static_cast< double >((me * sys.sigma.cast< long double >() - re).norm());
        if (!sys.sigma.allFinite())
            throw NumericalBreakdown("sigma_system: non-finite solution");
    }

    sys.s        = sys.sigma.sum();
    sys.sigma_l1 = sys.sigma.lpNorm< 1 >();
    sys.delta    = t == 0 ? 0.0 : (sys.C.array() - 1.0).abs().maxCoeff();
    sys.tau      = t == 0 ? 0.0 : (sys.w.array() - 1.0).abs().maxCoeff();

    sys.c              = c.value_or(cg_objective(sys.head_rec, n));
    const double bf2   = b2.sum();
    const double ld_c  = split.lambda_d() * sys.c;
    if (bf2 == 0.0)
    {
        sys.eta   = sys.tau;
        sys.omega = 0.0;
    }
    else
    {
        const double ratio = ld_c > 0.0 ? bf2 / ld_c : std::numeric_limits< double >::infinity();
        sys.eta   = sys.tau + (1.0 + sys.tau) * (1.0 + sys.delta) * (1.0 + sys.delta) * ratio;
        sys.omega = (1.0 + sys.eta) * (1.0 + sys.delta) * ratio;
    }
    return sys;
}

double verify_rho_identity(const SplitSpectralMeasure& split, int n, std::uint64_t seed)
{
    const SigmaSystem      sys  = sigma_system(split, n);
    const SpectralMeasure  full = split.full();
    const JacobiRecurrence frec = stieltjes(full);
    check_degree("verify_rho_identity", n, 1, frec.grade());

    // The right-hand side is rebuilt in extended precision: for nearly coincident tail atoms sigma
    // grows large with cancelling entries and double rounding of sigma alone exceeds the check.
    const JacobiRecurrence& h    = sys.head_rec;
    const auto&             tail = split.tail();
    const auto              t    = static_cast< Index >(tail.size());
    ExtMatrix               m(t, t);
    ExtVector               rhs(t);
    std::vector< ExtVector > p_tail;
    std::vector< long double > k0(static_cast< std::size_t >(t));
    const long double        pi0 = monic_ext(h, n, 0.0L);
    for (Index j = 0; j < t; ++j)
        p_tail.push_back(orthonormal_ext(h, n - 1, tail.lambda(static_cast< std::size_t >(j))));
    const ExtVector p_zero = orthonormal_ext(h, n - 1, 0.0L);
    for (Index j = 0; j < t; ++j)
    {
        k0[static_cast< std::size_t >(j)] = p_tail[static_cast< std::size_t >(j)].dot(p_zero);
        const long double bj = tail.weight(static_cast< std::size_t >(j));
        for (Index i = 0; i < t; ++i)
        {
            const long double bi = tail.weight(static_cast< std::size_t >(i));
            m(i, j) = bi * bi * p_tail[static_cast< std::size_t >(j)].dot(p_tail[static_cast< std::size_t >(i)]) /
                      k0[static_cast< std::size_t >(j)];
        }
        m(j, j) += 1.0L / k0[static_cast< std::size_t >(j)];
        rhs[j] = bj * bj * monic_ext(h, n, tail.lambda(static_cast< std::size_t >(j))) / pi0;
    }
    ExtVector sigma = ExtVector::Zero(t);
    if (t > 0 && rhs.cwiseAbs().maxCoeff() > 0.0L)
        sigma = Eigen::FullPivLU< ExtMatrix >(m).solve(rhs);

    std::vector< double > points = full.eigenvalues();
    std::mt19937_64       rng(seed);
    std::uniform_real_distribution< double > unif(full.lambda_min() - 1.0, full.lambda_max() + 1.0);
    for (int i = 0; i < 16; ++i)
        points.push_back(unif(rng));

    double worst = 0.0, scale = 0.0;
    for (double x : points)
    {
        const long double pi_n = monic_ext(h, n, x);
        const ExtVector   px   = orthonormal_ext(h, n - 1, x);
        long double       corr = 0.0L;
        for (Index j = 0; j < t; ++j)
            corr += sigma[j] * p_tail[static_cast< std::size_t >(j)].dot(px) / k0[static_cast< std::size_t >(j)];
        const long double rhs_x = pi_n - pi0 * corr;
        worst = std::max(worst, static_cast< double >(std::abs(static_cast< long double >(frec.eval_monic(n, x)) - rhs_x)));
        scale = std::max(scale, static_cast< double >(std::abs(pi_n)));
    }
    return scale > 0.0 ? worst / scale : worst;
}

RootDisplacement root_displacement_bound(const SplitSpectralMeasure& split, int n)
{
    const SigmaSystem      sys  = sigma_system(split, n);
    const JacobiRecurrence frec = stieltjes(split.full());
    const auto             z    = ritz_values(frec, n);
    const auto             g    = ritz_values(sys.head_rec, n);

    RootDisplacement out;
    for (double zi : z)
    {
        double best = std::numeric_limits< double >::infinity();
        for (double gi : g)
            best = std::min(best, std::abs(1.0 - zi / gi));
        out.lhs = std::max(out.lhs, best);
    }
    out.rhs            = sys.sigma_l1;
    out.min_root_tilde = z.front();
    out.gamma_n        = g.front();
    out.bound_holds    = out.lhs <= out.rhs + 1e-9;
    if (out.rhs < 1.0)
        out.lower_bound_holds = out.min_root_tilde >= (1.0 - out.rhs) * out.gamma_n - 1e-9 * out.gamma_n;
    return out;
}

IterateComparison iterate_comparison(const SplitSpectralMeasure& split, int n)
{
    const SigmaSystem sys = sigma_system(split, n);
    if (!(sys.sigma_l1 < 1.0))
        throw std::invalid_argument("iterate_comparison: requires ||sigma||_1 < 1");

    const SpectralMeasure empty;
    Vector                b, bt;
    const Matrix          a  = diagonal_of(split.head(), empty, b);
    const Matrix          at = diagonal_of(split.head(), split.tail(), bt);
    const TcgTrace        h  = plain_cg(SymmetricOperator(a), b, n);
    const TcgTrace        f  = plain_cg(SymmetricOperator(at), bt, n);
    if (h.iterations() < n)
        throw NumericalBreakdown("iterate_comparison: CG on the head stopped before iteration n");
    if (f.iterations() < n || !f.iterates[static_cast< std::size_t >(n)].well_defined)
    {
        std::ostringstream msg;
        msg << "iterate_comparison: iteration " << n
            << " of CG on the full problem is not well defined although ||sigma||_1 = " << sys.sigma_l1 << " < 1";
        throw NotWellDefined(msg.str());
    }

    const Vector& v  = h.iterates[static_cast< std::size_t >(n)].v;
    const Vector& vt = f.iterates[static_cast< std::size_t >(n)].v;
    const auto    d  = static_cast< Index >(split.d());

    IterateComparison out;
    out.n            = n;
    out.sigma_l1     = sys.sigma_l1;
    out.head_diff    = (vt.head(d) - v).norm();
    out.head_bound   = sys.sigma_l1 / (1.0 - sys.sigma_l1) * v.norm();
    out.head_ok      = out.head_diff <= out.head_bound + 1e-9;
    out.v_norm       = v.norm();
    out.tilde_v_norm = vt.norm();
    out.r_norm       = h.iterates[static_cast< std::size_t >(n)].r_norm;
    out.tilde_r_norm = f.iterates[static_cast< std::size_t >(n)].r_norm;
    out.tail_bounds_ok = true;
    const double ld    = split.lambda_d();
    for (std::size_t i = 0; i < split.tail().size(); ++i)
    {
        const double li    = split.tail().lambda(i);
        const double bound = std::abs(split.tail().weight(i)) / (1.0 - sys.sigma_l1) * tail_growth_factor(li, ld, n);
        const double value = std::abs(vt[d + static_cast< Index >(i)]);
        out.tail_abs.push_back(value);
        out.tail_bounds.push_back(bound);
        out.tail_bounds_ok = out.tail_bounds_ok && value <= bound + 1e-9;
    }
    return out;
}

DeltaTau delta_tau(const SplitSpectralMeasure& split, int n)
{
    const SigmaSystem sys   = sigma_system(split, n);
    const double      ell   = sys.head_rec.grade();
    const double      ratio = split.tail_epsilon() / split.lambda_d();
    DeltaTau          out;
    out.delta       = sys.delta;
    out.tau         = sys.tau;
    out.delta_bound = std::expm1((ell - 1.0) * std::log1p(ratio));
    out.tau_bound   = std::expm1(ell * std::log1p(ratio));
    return out;
}

PsdContraction psd_contraction_check(const Matrix& S, const Matrix& M)
{
    if (S.rows() != S.cols() || M.rows() != M.cols() || S.rows() != M.rows())
        throw std::invalid_argument("psd_contraction_check: S and M must be square of equal size");
    for (const Matrix* x : {&S, &M})
    {
        if (max_abs(*x - x->transpose()) > 1e-12 * std::max(1.0, max_abs(*x)))
            throw std::invalid_argument("psd_contraction_check: input is not symmetric");
        if (x->size() > 0)
        {
            Eigen::SelfAdjointEigenSolver< Matrix > es(*x, Eigen::EigenvaluesOnly);
            if (es.eigenvalues().minCoeff() < -1e-10)
                throw std::invalid_argument("psd_contraction_check: input is not positive semidefinite");
        }
    }
    const Matrix               lhs = Matrix::Identity(S.rows(), S.cols()) + S * M;
    Eigen::FullPivLU< Matrix > lu(lhs);
    if (!lu.isInvertible())
        throw NumericalBreakdown("psd_contraction_check: I + S M is singular");
    const Matrix X = lu.solve(S);
    return {max_abs(X), max_abs(S)};
}

int select_iteration_for_c(const SplitSpectralMeasure& split, double c)
{
    const double upper = split.head().total_weight_sq() / split.lambda_d();
    if (!(c > 0.0) || c > upper * (1.0 + 1e-12))
        throw std::invalid_argument("select_iteration_for_c: c must lie in (0, ||b||^2 / lambda_d]");
    const JacobiRecurrence rec = stieltjes(split.head());
    for (int n = 1; n <= rec.grade(); ++n)
        if (cg_objective(rec, n) <= c)
            return n;
    // The objective vanishes at the grade in exact arithmetic; rounding can leave a tiny positive value.
    return rec.grade();
}

CBoundsCheck c_bounds_check(const SplitSpectralMeasure& split, double c)
{
    CBoundsCheck out;
    out.c                 = c;
    out.n                 = select_iteration_for_c(split, c);
    const SigmaSystem sys = sigma_system(split, out.n, c);

    out.varsigma_norm_sq = varsigma_poly(sys.head_rec, out.n).norm_sq();
    out.lambda1_c        = split.lambda_1() * c;
    out.lambdad_c        = split.lambda_d() * c;
    out.min_xi_norm_sq   = std::numeric_limits< double >::infinity();
    for (const auto& x : sys.xi)
        out.min_xi_norm_sq = std::min(out.min_xi_norm_sq, x.norm_sq());
    out.sigma_l1 = sys.sigma_l1;
    out.eta      = sys.eta;
    out.omega    = sys.omega;
    out.existence_ok = out.varsigma_norm_sq <= out.lambda1_c * (1.0 + 1e-12) + 1e-15 &&
                       out.min_xi_norm_sq >= out.lambdad_c - 1e-12 &&
                       out.sigma_l1 <= out.omega * (1.0 + 1e-12) + 1e-15;
    if (!(out.omega < 1.0))
        return out;

    out.bounds_checked = true;
    Vector                bt;
    const Matrix          at = diagonal_of(split.head(), split.tail(), bt);
    const TcgTrace        f  = plain_cg(SymmetricOperator(at), bt, out.n);
    if (f.iterations() < out.n || !f.iterates[static_cast< std::size_t >(out.n)].well_defined)
        return out; // bounds_ok stays false: the iteration should be well defined here
    const auto&  it   = f.iterates[static_cast< std::size_t >(out.n)];
    const double bf2  = split.tail_weight_sq();
    const double one  = 1.0 - out.omega;
    out.v_norm        = it.v_norm;
    out.v_bound       = bt.norm() / (one * split.lambda_d());
    out.r_norm_sq     = it.r_norm * it.r_norm;
    out.r_bound       = (out.lambda1_c + (1.0 + sys.eta) * (1.0 + sys.delta) * out.omega * bf2 +
                   (1.0 + sys.tau) * (1.0 + sys.tau) * bf2) /
                  (one * one);
    out.bounds_ok = out.v_norm <= out.v_bound + 1e-9 && out.r_norm_sq <= out.r_bound + 1e-9;
    return out;
}

SplitSpectralMeasure random_split(std::mt19937_64& rng, const RandomSplitOptions& o)
{
    std::uniform_int_distribution< int >     head_size(o.min_head, o.max_head);
    std::uniform_int_distribution< int >     tail_size(o.min_tail, o.max_tail);
    std::uniform_real_distribution< double > head_eig(o.head_low, o.head_high);
    std::uniform_real_distribution< double > head_w(0.2, 1.0);
    std::uniform_real_distribution< double > tail_eig(-o.tail_eig_max, o.tail_eig_max);
    std::uniform_real_distribution< double > tail_w(o.tail_weight_min, o.tail_weight_max);
    std::bernoulli_distribution              coin(0.5);

    // Rejection sampling keeps atoms well separated so the recurrence reaches the full grade.
    auto draw = [&](int count, auto& eig, double min_gap) {
        std::vector< double > l;
        while (static_cast< int >(l.size()) < count)
        {
            const double x  = eig(rng);
            bool         ok = true;
            for (double y : l)
                ok = ok && std::abs(x - y) >= min_gap;
            if (ok)
                l.push_back(x);
        }
        return l;
    };
    const int  d  = head_size(rng);
    const int  t  = tail_size(rng);
    const auto hl = draw(d, head_eig, 1e-2 * (o.head_high - o.head_low) / o.max_head);
    const auto tl = draw(t, tail_eig, 1e-2 * o.tail_eig_max);
    std::vector< double > hw(static_cast< std::size_t >(d)), tw(static_cast< std::size_t >(t));
    for (auto& w : hw)
        w = (coin(rng) ? 1.0 : -1.0) * head_w(rng);
    for (auto& w : tw)
        w = (coin(rng) ? 1.0 : -1.0) * tail_w(rng);
    return SplitSpectralMeasure(SpectralMeasure(hl, hw), SpectralMeasure(tl, tw));
}

SigmaDiagnosticsRow sigma_diagnostics(const SplitSpectralMeasure& split, int n)
{
    const SigmaSystem      sys  = sigma_system(split, n);
    const JacobiRecurrence frec = stieltjes(split.full());
    SigmaDiagnosticsRow    row;
    row.n              = n;
    row.sigma_l1       = sys.sigma_l1;
    row.s              = sys.s;
    row.delta          = sys.delta;
    row.tau            = sys.tau;
    row.eta            = sys.eta;
    row.omega          = sys.omega;
    row.min_root_tilde = n <= frec.grade() ? ritz_values(frec, n).front() : std::nan("");
    row.min_root_head  = ritz_values(sys.head_rec, n).front();
    return row;
}

void write_sigma_diagnostics_csv(std::ostream& out, const std::vector< SigmaDiagnosticsRow >& rows)
{
    csv::Writer w(out);
    w.header({"n", "sigma_l1", "s", "delta", "tau", "eta", "omega", "min_root_tilde", "min_root_head"});
    for (const auto& r : rows)
    {
        w.field(r.n).field(r.sigma_l1).field(r.s).field(r.delta).field(r.tau).field(r.eta).field(r.omega);
        w.field(r.min_root_tilde).field(r.min_root_head);
        w.end_row();
    }
}
} // namespace tcglab
