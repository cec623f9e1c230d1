#include "tcglab/polylab.hpp"
#include "tcglab/tcg.hpp"

#include <doctest.h>

#include <sstream>

using namespace tcglab;

namespace
{
Matrix random_symmetric(Index n, std::mt19937_64& rng, double shift)
{
    std::normal_distribution< double > normal;
    Matrix                             m(n, n);
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j)
            m(i, j) = normal(rng);
    return 0.5 * (m + m.transpose()) + shift * Matrix::Identity(n, n);
}

Vector e(Index dim, Index i)
{
    return Vector::Unit(dim, i);
}
} // namespace

TEST_CASE("tcg: zero right-hand side")
{
    const auto tr = tcg(SymmetricOperator(Matrix::Identity(3, 3)), Vector::Zero(3), 1.0, {});
    CHECK(tr.termination == TcgTermination::zero_b);
    CHECK(tr.output.isZero(0.0));
    CHECK(tr.iterations() == 0);
}

TEST_CASE("tcg: identity solved in one step")
{
    const auto tr = tcg(SymmetricOperator(Matrix::Identity(5, 5)), e(5, 0), 10.0, {});
    CHECK(tr.termination == TcgTermination::residual_small);
    REQUIRE(tr.iterations() == 1);
    CHECK(tr.iterates[1].v.isApprox(e(5, 0)));
    CHECK(tr.iterates[1].r_norm == 0.0);
    CHECK(tr.output.isApprox(e(5, 0)));
}

TEST_CASE("tcg: negative curvature goes to the boundary")
{
    Vector d(2);
    d << 1.0, -1.0;
    const SymmetricOperator a = SymmetricOperator::diagonal(d);
    const Vector            b = e(2, 1);
    const auto              tr = tcg(a, b, 2.0, {});
    CHECK(tr.termination == TcgTermination::negative_curvature_boundary);
    CHECK(tr.on_boundary());
    CHECK(tr.output[0] == 0.0);
    CHECK(tr.output[1] == doctest::Approx(2.0));
    CHECK(tr.iterates.back().curvature == doctest::Approx(-1.0));
    CHECK(cauchy_decrease_ratio(tr, a, b) >= 0.5 - 1e-10);
}

TEST_CASE("tcg: radius truncation")
{
    const auto tr = tcg(SymmetricOperator(Matrix::Identity(2, 2)), e(2, 0), 0.5, {});
    CHECK(tr.termination == TcgTermination::radius_boundary);
    CHECK(tr.output.isApprox(0.5 * e(2, 0)));
}

TEST_CASE("tcg: parameter validation and theta warning")
{
    TcgParams p;
    p.kappa = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.kappa = 0.1;
    p.theta = 1.5;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.theta = 1.0;
    CHECK_NOTHROW(p.validate());
    CHECK(p.theta_warning());
    const auto tr = tcg(SymmetricOperator(Matrix::Identity(2, 2)), e(2, 0), 1.0, p);
    CHECK(tr.theta_warning);
    CHECK_THROWS_AS(tcg(SymmetricOperator(Matrix::Identity(2, 2)), e(2, 0), 0.0, {}), std::invalid_argument);
    CHECK_THROWS_AS(tcg(SymmetricOperator(Matrix::Identity(2, 2)), Vector::Ones(3), 1.0, {}), std::invalid_argument);
}

TEST_CASE("cauchy ratio: closed form")
{
    const SymmetricOperator a(Matrix::Identity(3, 3));
    const auto              tr = tcg(a, e(3, 0), 10.0, {});
    CHECK(cauchy_decrease_ratio(tr, a, e(3, 0)) == doctest::Approx(0.5));
    CHECK_THROWS_AS(cauchy_decrease_ratio(a, Vector::Zero(3), Vector::Zero(3), 1.0), std::invalid_argument);
    Vector d(2);
    d << 1.0, -1.0;
    Vector b(2);
    b << 1.0, 1.0;
    // <b, A b> = 0: the Delta branch.
    const auto sa = SymmetricOperator::diagonal(d);
    CHECK(cauchy_decrease_ratio(sa, b, Vector::Zero(2), 1.0) == 0.0);
}

TEST_CASE("tcg: invariants on random instances")
{
    std::mt19937_64                          rng(21);
    std::uniform_real_distribution< double > shift(-2.0, 6.0), radius(0.1, 20.0);
    std::normal_distribution< double >       normal;
    for (int trial = 0; trial < 100; ++trial)
    {
        const Index             n = 12;
        const Matrix            m = random_symmetric(n, rng, shift(rng));
        const SymmetricOperator a(m);
        const Vector            b     = random_unit_vector(n, rng) * (0.1 + 3.0 * std::abs(normal(rng)));
        const double            delta = radius(rng);

        const auto tr = tcg(a, b, delta, {});
        CHECK(tr.norms_monotone());
        CHECK(tr.output.norm() <= delta + 1e-12);
        CHECK(tr.residual_consistency(a, b) <= 1e-8 * b.norm());
        CHECK(cauchy_decrease_ratio(tr, a, b) >= 0.5 - 1e-10);

        TcgParams plain;
        plain.mode               = TcgMode::plain;
        plain.plain_residual_tol = 0.0;
        const auto pt            = tcg(a, b, delta, plain);
        for (std::size_t i = 1; i < pt.iterates.size(); ++i)
        {
            if (!pt.iterates[i].well_defined || pt.iterates[i].r_norm <= 1e-10 * b.norm())
                break;
            for (std::size_t j = 0; j < i; ++j)
            {
                const auto& ri = pt.iterates[i];
                const auto& rj = pt.iterates[j];
                CHECK(std::abs(ri.r.dot(rj.r)) <= 1e-8 * ri.r_norm * rj.r_norm);
            }
        }

        if (tr.termination == TcgTermination::residual_small)
        {
            REQUIRE(pt.iterations() >= tr.iterations());
            CHECK((pt.iterates[static_cast< std::size_t >(tr.iterations())].v - tr.output).norm() <=
                  1e-12 * std::max(1.0, tr.output.norm()));
        }
    }
}

TEST_CASE("plain CG minimizes the model over the Krylov space")
{
    std::mt19937_64                    rng(22);
    std::normal_distribution< double > normal;
    for (int trial = 0; trial < 20; ++trial)
    {
        const Index             n = 8;
        const SymmetricOperator a(random_symmetric(n, rng, trial % 2 == 0 ? 5.0 : 1.0));
        const Vector            b  = random_unit_vector(n, rng);
        const auto              tr = plain_cg(a, b, static_cast< int >(n));
        for (int k = 1; k <= tr.iterations(); ++k)
        {
            const auto& it = tr.iterates[static_cast< std::size_t >(k)];
            if (!it.well_defined)
                break;
            const double best = model_value(a, b, it.v);
            for (int s = 0; s < 100; ++s)
            {
                Vector y = Vector::Zero(n);
                for (int j = 0; j < k; ++j)
                    y += normal(rng) * tr.iterates[static_cast< std::size_t >(j)].r;
                y = it.v + 0.5 * normal(rng) * y / std::max(y.norm(), 1e-300);
                CHECK(best <= model_value(a, b, y) + 1e-10);
            }
        }
    }
}

TEST_CASE("plain CG on positive definite operators converges by the grade")
{
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 20; ++trial)
    {
        const Index             n = 15;
        const SymmetricOperator a(random_symmetric(n, rng, 8.0));
        const Vector            b   = random_unit_vector(n, rng);
        const int               ell = grade(measure_from_operator(a, b), 1e-13);
        const auto              tr  = plain_cg(a, b, ell);
        double                  best = b.norm();
        for (const auto& it : tr.iterates)
            best = std::min(best, it.r_norm);
        CHECK(best <= 1e-10 * b.norm());
    }
}

TEST_CASE("plain mode continues through negative curvature")
{
    Vector d(3);
    d << 2.0, -1.0, 1.0;
    TcgParams p;
    p.mode = TcgMode::plain;
    const auto tr = tcg(SymmetricOperator::diagonal(d), Vector::Ones(3), 1.0, p);
    CHECK(tr.termination != TcgTermination::negative_curvature_boundary);
    CHECK(tr.iterations() >= 1);
}

TEST_CASE("residual norms equal the varsigma norms of the measure")
{
    std::mt19937_64                          rng(24);
    std::uniform_real_distribution< double > eig(0.5, 4.0), w(0.1, 1.0);
    for (int trial = 0; trial < 20; ++trial)
    {
        std::vector< double > l, b;
        for (int i = 0; i < 9; ++i)
        {
            l.push_back(eig(rng));
            b.push_back(w(rng));
        }
        const SpectralMeasure m(l, b);
        const auto            rec = stieltjes(m);
        const auto tr = plain_cg(SymmetricOperator::diagonal(m.eigenvalue_vector()), m.weight_vector(), rec.grade());
        for (int n = 1; n < rec.grade(); ++n)
        {
            const double r = tr.iterates[static_cast< std::size_t >(n)].r_norm;
            CHECK(std::sqrt(varsigma_poly(rec, n).norm_sq()) == doctest::Approx(r).epsilon(1e-8));
        }
    }
}

TEST_CASE("trace CSV")
{
    const auto         tr = tcg(SymmetricOperator(Matrix::Identity(2, 2)), e(2, 0), 10.0, {});
    std::ostringstream out;
    write_trace_csv(out, tr);
    const std::string s = out.str();
    CHECK(s.rfind("n,v_norm,r_norm,curvature,alpha,beta,termination\n", 0) == 0);
    CHECK(s.find("residual_small") != std::string::npos);
    CHECK(std::string(to_string(TcgTermination::radius_boundary)) == "radius_boundary");
}
