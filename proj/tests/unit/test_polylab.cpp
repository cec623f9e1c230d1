#include "tcglab/polylab.hpp"
#include "tcglab/tcg.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <sstream>

using namespace tcglab;

namespace
{
SpectralMeasure random_positive_measure(std::mt19937_64& rng, int size, double lo = 0.5, double hi = 2.0)
{
    std::uniform_real_distribution< double > eig(lo, hi), w(0.2, 1.0);
    std::bernoulli_distribution              coin(0.5);
    std::vector< double >                    l, b;
    while (static_cast< int >(l.size()) < size)
    {
        const double x  = eig(rng);
        bool         ok = true;
        for (double y : l)
            ok = ok && std::abs(x - y) > 1e-2 * (hi - lo) / size;
        if (ok)
        {
            l.push_back(x);
            b.push_back((coin(rng) ? 1.0 : -1.0) * w(rng));
        }
    }
    return SpectralMeasure(l, b);
}

// Jittered grid: neighbouring atoms stay at least half the mean gap apart. Clustered atoms make the forward
// recurrence lose digits at high degree, which is a property of the evaluation, not of the coefficients.
SpectralMeasure spread_measure(std::mt19937_64& rng, int size, double lo, double hi)
{
    std::uniform_real_distribution< double > jitter(0.0, 0.5), w(0.2, 1.0);
    std::bernoulli_distribution              coin(0.5);
    std::vector< double >                    l, b;
    for (int k = 0; k < size; ++k)
    {
        l.push_back(lo + (hi - lo) * (k + jitter(rng)) / size);
        b.push_back((coin(rng) ? 1.0 : -1.0) * w(rng));
    }
    return SpectralMeasure(l, b);
}

std::vector< double > values_at_atoms(const SpectralMeasure& m, const PolyHandle& p)
{
    std::vector< double > v;
    for (double l : m.eigenvalues())
        v.push_back(p(l));
    return v;
}

double measure_norm(const SpectralMeasure& m, const std::function< double(double) >& p)
{
    double s = 0.0;
    for (std::size_t i = 0; i < m.size(); ++i)
        s += p(m.lambda(i)) * p(m.lambda(i)) * m.weight(i) * m.weight(i);
    return std::sqrt(s);
}
} // namespace

TEST_CASE("stieltjes: single atom")
{
    const auto rec = stieltjes(SpectralMeasure({1.0}, {1.0}));
    CHECK(rec.grade() == 1);
    CHECK(eval_pi(rec, 1, 3.0) == doctest::Approx(2.0));
    CHECK(rec.norm_sq(1) <= rec.zero_threshold());
    CHECK(ritz_values(rec, 1) == std::vector< double >{1.0});
}

TEST_CASE("stieltjes: two atoms {2, 0}")
{
    const auto rec = stieltjes(SpectralMeasure({2.0, 0.0}, {1.0, 1.0}));
    CHECK(rec.grade() == 2);
    for (double x : {-1.0, 0.3, 2.5})
    {
        CHECK(eval_pi(rec, 1, x) == doctest::Approx(x - 1.0));
        CHECK(eval_pi(rec, 2, x) == doctest::Approx(x * x - 2.0 * x));
    }
    const auto r1 = ritz_values(rec, 1);
    const auto r2 = ritz_values(rec, 2);
    CHECK(r1[0] == doctest::Approx(1.0));
    CHECK(std::abs(r2[0]) <= 1e-14);
    CHECK(r2[1] == doctest::Approx(2.0));
    CHECK_THROWS_AS(ritz_values(rec, 3), std::invalid_argument);
    CHECK_THROWS_AS(ritz_values(rec, 0), std::invalid_argument);
}

TEST_CASE("stieltjes: rejects weightless measures, skips flagged atoms")
{
    CHECK_THROWS_AS(stieltjes(SpectralMeasure({1.0, 2.0}, {0.0, 0.0})), std::invalid_argument);
    const auto rec = stieltjes(SpectralMeasure({3.0, 1.0}, {1.0, 1e-20}, 1e-15));
    CHECK(rec.grade() == 1);
}

TEST_CASE("stieltjes: clustered measure")
{
    const auto rec = stieltjes(clustered_split().full());
    CHECK(rec.grade() == 11);
    for (int n = 0; n <= 10; ++n)
        CHECK(rec.norm_sq(n) > 0.0);
    CHECK(rec.norm_sq(11) <= rec.zero_threshold());
}

TEST_CASE("orthogonality and characterization on random measures")
{
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 30; ++trial)
    {
        std::uniform_int_distribution< int > size(2, 20);
        const auto m   = spread_measure(rng, size(rng), -1.0, 3.0);
        const auto rec = stieltjes(m);
        REQUIRE(rec.grade() == static_cast< int >(m.size()));
        std::vector< std::vector< double > > pis;
        for (int n = 0; n < rec.grade(); ++n)
            pis.push_back(values_at_atoms(m, pi_poly(rec, n)));
        for (int i = 0; i < rec.grade(); ++i)
        {
            CHECK(m.inner(pis[i], pis[i]) == doctest::Approx(rec.norm_sq(i)).epsilon(1e-9));
            for (int j = 0; j < i; ++j)
                CHECK(std::abs(m.inner(pis[i], pis[j])) <= 1e-9 * std::sqrt(rec.norm_sq(i) * rec.norm_sq(j)));
        }

        // <p, pi_n> = 0 for p of degree n - 1 interpolating random values at the Ritz points of order n.
        std::uniform_int_distribution< int > order(2, rec.grade() - 1 > 1 ? rec.grade() - 1 : 2);
        const int                            n = std::min(order(rng), rec.grade() - 1);
        if (n < 2)
            continue;
        const auto                               nodes = ritz_values(rec, n - 1 + 1);
        std::uniform_real_distribution< double > val(-1.0, 1.0);
        std::vector< double >                    y(nodes.size());
        for (auto& v : y)
            v = val(rng);
        auto lagrange = [&](double x) {
            double s = 0.0;
            for (std::size_t i = 0; i < nodes.size(); ++i)
            {
                double li = 1.0;
                for (std::size_t j = 0; j < nodes.size(); ++j)
                    if (j != i)
                        li *= (x - nodes[j]) / (nodes[i] - nodes[j]);
                s += y[i] * li;
            }
            return s;
        };
        // Degree n - 1 interpolant through n nodes, tested against pi_n.
        std::vector< double > pv, piv;
        for (double l : m.eigenvalues())
        {
            pv.push_back(lagrange(l));
            piv.push_back(eval_pi(rec, n, l));
        }
        CHECK(std::abs(m.inner(pv, piv)) <= 1e-9 * std::sqrt(m.inner(pv, pv) * m.inner(piv, piv)));
    }
}

TEST_CASE("ritz values are sorted and lie in the support hull")
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto m   = random_positive_measure(rng, 12, -2.0, 5.0);
        const auto rec = stieltjes(m);
        for (int n = 1; n <= rec.grade(); ++n)
        {
            const auto r = ritz_values(rec, n);
            REQUIRE(static_cast< int >(r.size()) == n);
            for (int i = 0; i + 1 < n; ++i)
                CHECK(r[i] < r[i + 1]);
            CHECK(r.front() >= m.lambda_min() - 1e-12);
            CHECK(r.back() <= m.lambda_max() + 1e-12);
        }
    }
}

TEST_CASE("varsigma and phi: closed forms")
{
    const auto rec = stieltjes(SpectralMeasure({3.0, 1.0}, {1.0, 1.0}));
    CHECK(eval_pi(rec, 0, 7.0) == 1.0);
    CHECK(eval_varsigma(rec, 0, 7.0) == 1.0);
    for (double x : {-1.0, 0.0, 0.5, 2.0})
    {
        CHECK(eval_pi(rec, 1, x) == doctest::Approx(x - 2.0));
        CHECK(eval_varsigma(rec, 1, x) == doctest::Approx(1.0 - x / 2.0));
        CHECK(eval_phi(rec, 0, x) == doctest::Approx(0.5));
    }
    CHECK_THROWS_AS((void)phi_poly(rec, 0).roots(), std::invalid_argument);
}

TEST_CASE("varsigma: not well defined when a Ritz value vanishes")
{
    const auto rec = stieltjes(SpectralMeasure({1.0, -1.0}, {1.0, 1.0}));
    CHECK_THROWS_AS(eval_varsigma(rec, 1, 0.5), NotWellDefined);
    CHECK_NOTHROW(eval_pi(rec, 1, 0.5));
}

TEST_CASE("varsigma(0) = 1, phi = (1 - varsigma)/x, phi(0) = sum 1/gamma")
{
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto m   = random_positive_measure(rng, 9);
        const auto rec = stieltjes(m);
        for (int n = 1; n <= rec.grade(); ++n)
        {
            const auto vs  = varsigma_poly(rec, n);
            const auto phi = phi_poly(rec, n - 1);
            CHECK(std::abs(vs(0.0) - 1.0) <= 1e-10);
            for (double x : {-0.7, 0.3, 1.1, 2.4})
                CHECK(phi(x) == doctest::Approx((1.0 - vs(x)) / x).epsilon(1e-8));
            double s = 0.0;
            for (double g : ritz_values(rec, n))
                s += 1.0 / g;
            CHECK(phi(0.0) == doctest::Approx(s).epsilon(1e-12));
        }
    }
}

TEST_CASE("phi_{n-1}(A) b equals the CG iterate and ||varsigma_n|| the residual norm")
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto   m   = random_positive_measure(rng, 10);
        const auto   rec = stieltjes(m);
        const Vector lam = m.eigenvalue_vector();
        const Vector b   = m.weight_vector();
        const auto   tr  = plain_cg(SymmetricOperator::diagonal(lam), b, rec.grade());
        for (int n = 1; n <= tr.iterations() && n < rec.grade(); ++n)
        {
            const auto phi = phi_poly(rec, n - 1);
            Vector     v(lam.size());
            for (Index i = 0; i < lam.size(); ++i)
                v[i] = phi(lam[i]) * b[i];
            const Vector& vn = tr.iterates[static_cast< std::size_t >(n)].v;
            CHECK((v - vn).norm() <= 1e-8 * vn.norm());
            const double rn = tr.iterates[static_cast< std::size_t >(n)].r_norm;
            CHECK(std::sqrt(varsigma_poly(rec, n).norm_sq()) == doctest::Approx(rn).epsilon(1e-8));
        }
    }
}

TEST_CASE("varsigma_n minimizes the CG objective")
{
    std::mt19937_64 rng(6);
    for (int trial = 0; trial < 10; ++trial)
    {
        const auto m   = random_positive_measure(rng, 8);
        const auto rec = stieltjes(m);
        for (int n = 1; n < rec.grade(); ++n)
        {
            const double                             best = cg_objective(rec, n);
            std::uniform_real_distribution< double > root(0.3, 2.5);
            for (int k = 0; k < 50; ++k)
            {
                std::vector< double > roots(static_cast< std::size_t >(n));
                for (auto& r : roots)
                    r = root(rng);
                double obj = 0.0;
                for (std::size_t i = 0; i < m.size(); ++i)
                {
                    double q = 1.0;
                    for (double r : roots)
                        q *= 1.0 - m.lambda(i) / r;
                    obj += q * q * m.weight(i) * m.weight(i) / m.lambda(i);
                }
                CHECK(best <= obj + 1e-12);
            }
        }
    }
}

TEST_CASE("zeta and xi: closed forms")
{
    const auto rec = stieltjes(SpectralMeasure({3.0, 1.0}, {1.0, 1.0}));
    const auto z0  = zeta(rec, 0, 0.3);
    CHECK(z0(5.0) == doctest::Approx(1.0));
    CHECK(z0.norm_sq() == doctest::Approx(2.0));
    CHECK(xi(rec, 0, 0.3)(-4.0) == doctest::Approx(1.0));

    const auto z1 = zeta(rec, 1, 0.0);
    for (double x : {-1.0, 0.0, 1.0, 2.5, 3.0})
        CHECK(z1(x) == doctest::Approx(1.0 - 2.0 * x / 5.0));
    const auto r = z1.roots();
    REQUIRE(r.size() == 1);
    CHECK(r[0] == doctest::Approx(2.5));
    const auto x1 = xi(rec, 1, 0.0);
    CHECK(x1(1.0) == doctest::Approx(0.6));
    CHECK(x1.kind() == PolyKind::xi);
    CHECK(std::string(to_string(x1.kind())) == "xi");
}

TEST_CASE("zeta matches the constrained least-squares oracle")
{
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto m   = random_positive_measure(rng, 8);
        const auto rec = stieltjes(m);
        for (double lambda : {-0.01, 0.2, 0.4})
            for (int n = 0; n <= 6; ++n)
            {
                const auto z  = zeta(rec, n, lambda);
                const auto or_ = oracle::constrained_ls(m.eigenvalues(), m.weights(), n, lambda);
                CHECK(std::abs(z(lambda) - 1.0) <= 1e-10);
                for (double x : {-0.5, 0.0, 0.6, 1.0, 1.7, 2.2})
                    CHECK(std::abs(z(x) - or_(x)) <= 1e-8 * std::max(1.0, std::abs(or_(x))));
                const double oracle_norm = measure_norm(m, [&](double x) { return or_(x); });
                CHECK(std::sqrt(z.norm_sq()) == doctest::Approx(oracle_norm).epsilon(1e-8));
            }
    }
}

TEST_CASE("zeta roots match the Christoffel-measure oracle and interlace")
{
    std::mt19937_64 rng(8);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto m   = random_positive_measure(rng, 7);
        const auto rec = stieltjes(m);
        for (double lambda : {-0.3, 0.0, 0.45})
            for (int n = 1; n < rec.grade(); ++n)
            {
                const auto r  = zeta(rec, n, lambda).roots();
                const auto o  = oracle::christoffel_roots(m.eigenvalues(), m.weights(), n, lambda);
                const auto pi = ritz_values(rec, n + 1);
                REQUIRE(r.size() == o.size());
                for (std::size_t i = 0; i < r.size(); ++i)
                {
                    CHECK(std::abs(r[i] - o[i]) <= 1e-9);
                    CHECK(pi[i] < r[i]);
                    CHECK(r[i] < pi[i + 1]);
                }
            }
    }
}

TEST_CASE("xi: normalized at zero and bounded at the smallest head eigenvalue")
{
    std::mt19937_64 rng(9);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto   m    = random_positive_measure(rng, 8);
        const auto   rec  = stieltjes(m);
        const double lmin = m.lambda_min();
        for (int n = 0; n < rec.grade(); ++n)
            for (double lambda : {-1e-3, 0.0, 1e-3})
            {
                const auto x = xi(rec, n, lambda);
                CHECK(std::abs(x(0.0) - 1.0) <= 1e-10);
                CHECK(x(lmin) >= -1e-12);
                CHECK(x(lmin) <= 1.0 + 1e-12);
            }
    }
}

TEST_CASE("sigma system: trivial tails")
{
    const auto head = SpectralMeasure({2.0, 1.5, 1.0}, {0.5, 0.6, 0.7});
    const SplitSpectralMeasure empty(head, SpectralMeasure());
    for (int n = 1; n <= 3; ++n)
    {
        const auto sys = sigma_system(empty, n);
        CHECK(sys.sigma.size() == 0);
        CHECK(verify_rho_identity(empty, n) <= 1e-15);
        CHECK(root_displacement_bound(empty, n).lhs <= 1e-12);
        CHECK(iterate_comparison(empty, n).head_diff <= 1e-12);
    }
    const SplitSpectralMeasure zero_w(head, SpectralMeasure({0.0, -0.5}, {0.0, 0.0}));
    const auto                 sys = sigma_system(zero_w, 2);
    CHECK(sys.sigma.isZero(0.0));
    CHECK(sys.omega == 0.0);
}

TEST_CASE("sigma system: invariants on random splits")
{
    std::mt19937_64 rng(10);
    for (int trial = 0; trial < 30; ++trial)
    {
        const auto split = random_split(rng);
        const int  ell   = stieltjes(split.head()).grade();
        for (int n = 1; n <= ell; ++n)
        {
            const auto sys = sigma_system(split, n);
            // Near the head grade D vanishes and sigma grows to ~1e8; rounding sigma to double alone leaves
            // a residual of order eps ||M|| ||sigma||, so that floor is added to the relative bound.
            const Matrix m     = Matrix(sys.D.asDiagonal()) + sys.B.cwiseAbs2().asDiagonal() * sys.C;
            const double floor = 4.0 * std::numeric_limits< double >::epsilon() * m.norm() * sys.sigma.norm();
            CHECK(sys.linear_residual <= 1e-10 * sys.rhs_norm + floor);
            // delta and tau recomputed along the same path.
            double      delta = 0.0, tau = 0.0;
            const auto  vs    = varsigma_poly(sys.head_rec, n);
            const auto& tail  = split.tail();
            for (std::size_t j = 0; j < tail.size(); ++j)
            {
                tau = std::max(tau, std::abs(vs(tail.lambda(j)) - 1.0));
                for (std::size_t i = 0; i < tail.size(); ++i)
                    delta = std::max(delta, std::abs(sys.xi[j](tail.lambda(i)) - 1.0));
            }
            CHECK(sys.delta == delta);
            CHECK(sys.tau == tau);
            for (Index j = 0; j < sys.D.size(); ++j)
                CHECK(sys.D[j] == doctest::Approx(sys.D_kernel[j]).epsilon(1e-8));

            // sigma_j against beta_j = B_j^2 / D_j.
            const double dinv = sys.D.cwiseInverse().cwiseAbs().maxCoeff();
            const double bf2  = split.tail_weight_sq();
            for (Index j = 0; j < sys.sigma.size(); ++j)
            {
                const double beta = sys.B[j] * sys.B[j] / sys.D[j];
                const double rel  = sys.tau + (1.0 + sys.tau) * (1.0 + sys.delta) * dinv * bf2;
                CHECK(std::abs(sys.sigma[j] - beta) <= rel * std::abs(beta) + 1e-12);
            }

            const auto dt = delta_tau(split, n);
            CHECK(dt.delta <= dt.delta_bound + 1e-12);
            CHECK(dt.tau <= dt.tau_bound + 1e-12);
        }
    }
}

TEST_CASE("difference polynomials have nonincreasing norms; envelope bound")
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 20; ++trial)
    {
        const auto  split = random_split(rng);
        const auto& head  = split.head();
        const auto  rec   = stieltjes(head);
        const Vector lam  = head.eigenvalue_vector();
        const Vector b    = head.weight_vector();
        const auto   tr   = plain_cg(SymmetricOperator::diagonal(lam), b, rec.grade());
        for (int n = 1; n <= rec.grade(); ++n)
        {
            const auto vs = varsigma_poly(rec, n);
            for (std::size_t j = 0; j < split.tail().size(); ++j)
            {
                const double lj   = split.tail().lambda(j);
                double       prev = std::numeric_limits< double >::infinity();
                for (int k = 0; k < n; ++k)
                {
                    const auto   x    = xi(rec, k, lj);
                    const double norm = measure_norm(head, [&](double t) { return (vs(t) - x(t)) / t; });
                    CHECK(norm <= prev * (1.0 + 1e-10) + 1e-14);
                    if (k == 0)
                        CHECK(norm == doctest::Approx(tr.iterates[static_cast< std::size_t >(n)].v_norm).epsilon(1e-8));
                    prev = norm;
                }
                const auto x = xi(rec, n - 1, lj);
                for (int g = 0; g < 100; ++g)
                {
                    const double t = -1.0 + (split.lambda_d() + 1.0) * g / 99.0;
                    CHECK(std::abs(vs(t) - x(t)) <= std::abs(vs(t) - 1.0) + 1e-12 * std::max(1.0, std::abs(vs(t))));
                }
            }
        }
    }
}

TEST_CASE("clustered split: identity, displacement, iterate bounds")
{
    const auto split = clustered_split();
    for (int n = 1; n <= 10; ++n)
        CHECK(verify_rho_identity(split, n) <= 1e-8);
    const auto rd = root_displacement_bound(split, 3);
    CHECK(rd.bound_holds);
    CHECK(rd.lhs <= rd.rhs);
    const auto ic = iterate_comparison(split, 4);
    CHECK(ic.head_ok);
    CHECK(ic.tail_bounds_ok);
    const auto dt = delta_tau(split, 5);
    CHECK(dt.delta == 0.0);
    CHECK(dt.tau <= 1e-15);
    CHECK(dt.delta_bound == 0.0);
}

TEST_CASE("iterate comparison rejects ||sigma||_1 >= 1")
{
    const auto split = clustered_split();
    CHECK(sigma_system(split, 9).sigma_l1 >= 1.0 - 1e-12);
    CHECK_THROWS_AS(iterate_comparison(split, 10), std::invalid_argument);
}

TEST_CASE("psd contraction")
{
    const Matrix s  = Matrix::Identity(3, 3);
    const auto   m0 = psd_contraction_check(s, Matrix::Zero(3, 3));
    CHECK(m0.max_X == doctest::Approx(m0.max_S));
    const auto m1 = psd_contraction_check(s, s);
    CHECK(m1.max_X == doctest::Approx(0.5));

    std::mt19937_64                    rng(12);
    std::normal_distribution< double > normal;
    for (int t = 0; t < 100; ++t)
    {
        Matrix g(6, 6), h(6, 6);
        for (Index i = 0; i < 6; ++i)
            for (Index j = 0; j < 6; ++j)
            {
                g(i, j) = normal(rng);
                h(i, j) = normal(rng);
            }
        const auto r = psd_contraction_check(g * g.transpose(), h * h.transpose());
        CHECK(r.max_X <= r.max_S + 1e-10);
    }
    Matrix neg = -Matrix::Identity(2, 2);
    CHECK_THROWS_AS(psd_contraction_check(neg, Matrix::Identity(2, 2)), std::invalid_argument);
}

TEST_CASE("c-existence on random splits")
{
    std::mt19937_64 rng(13);
    for (int trial = 0; trial < 30; ++trial)
    {
        const auto   split = random_split(rng);
        const double top   = split.head().total_weight_sq() / split.lambda_d();
        for (int j = 1; j <= 3; ++j)
        {
            const auto chk = c_bounds_check(split, top * std::pow(10.0, -j));
            CHECK(chk.existence_ok);
            if (chk.bounds_checked)
                CHECK(chk.bounds_ok);
        }
        CHECK_THROWS_AS(select_iteration_for_c(split, 2.0 * top), std::invalid_argument);
    }
}

TEST_CASE("sigma diagnostics CSV")
{
    std::vector< SigmaDiagnosticsRow > rows{sigma_diagnostics(clustered_split(), 2)};
    std::ostringstream                 out;
    write_sigma_diagnostics_csv(out, rows);
    CHECK(out.str().rfind("n,sigma_l1,s,delta,tau,eta,omega,min_root_tilde,min_root_head\n2,", 0) == 0);
}
