#include "tcglab/problems.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace tcglab
{
ProblemDefinition problem_sine_lsq(int n)
{
    if (n < 1)
        throw std::invalid_argument("problem_sine_lsq: n must be >= 1");
    ProblemDefinition p;
    p.name = "sine-lsq:n=" + std::to_string(n);
    p.dim  = 2 * n;
    p.f    = [n](const Vector& z) {
        const Vector r = z.tail(n) - z.head(n).array().sin().matrix();
        return 0.5 * r.squaredNorm();
    };
    p.grad = [n](const Vector& z) {
        const Vector r = z.tail(n) - z.head(n).array().sin().matrix();
        Vector       g(2 * n);
        g.head(n) = -(z.head(n).array().cos() * r.array()).matrix();
        g.tail(n) = r;
        return g;
    };
    p.hess = [n](const Vector& z) {
        const auto   x = z.head(n).array();
        const Vector r = z.tail(n) - x.sin().matrix();
        const Vector c = x.cos();
        Matrix       h = Matrix::Zero(2 * n, 2 * n);
        for (Index i = 0; i < n; ++i)
        {
            h(i, i)         = std::sin(x[i]) * r[i] + c[i] * c[i];
            h(i, n + i)     = -c[i];
            h(n + i, i)     = -c[i];
            h(n + i, n + i) = 1.0;
        }
        return SymmetricOperator(std::move(h));
    };
    p.solution_point = [n](const Vector& t) {
        if (t.size() != n)
            throw std::invalid_argument("sine-lsq: solution parameters must have size n");
        Vector z(2 * n);
        z.head(n) = t;
        z.tail(n) = t.array().sin();
        return z;
    };
    p.solution_param_dim = n;
    p.pl_constant        = 1.0;
    return p;
}

Vector remark_path(double eps)
{
    if (!(eps >= 0.0 && eps <= 1.0))
        throw std::invalid_argument("remark_path: eps must lie in [0, 1]");
    Vector c(2);
    c << std::sqrt(1.0 - eps) / 8.0, std::sqrt(eps);
    return c;
}

ProblemDefinition problem_remark_counterexample()
{
    ProblemDefinition p;
    p.name = "remark2d";
    p.dim  = 2;
    p.f    = [](const Vector& z) {
        const double x = z[0], y = z[1];
        return 3.0 / 16.0 * y * y + 4.0 * x * x * y * y;
    };
    p.grad = [](const Vector& z) {
        const double x = z[0], y = z[1];
        Vector       g(2);
        g << 8.0 * x * y * y, 3.0 / 8.0 * y + 8.0 * x * x * y;
        return g;
    };
    p.hess = [](const Vector& z) {
        const double x = z[0], y = z[1];
        Matrix       h(2, 2);
        h << 8.0 * y * y, 16.0 * x * y, 16.0 * x * y, 3.0 / 8.0 + 8.0 * x * x;
        return SymmetricOperator(std::move(h));
    };
    p.solution_point = [](const Vector& t) {
        if (t.size() != 1)
            throw std::invalid_argument("remark2d: solution parameters must have size 1");
        Vector z(2);
        z << t[0], 0.0;
        return z;
    };
    p.solution_param_dim = 1;
    p.pl_constant        = 3.0 / 8.0;
    return p;
}

ProblemDefinition problem_diagonal_quadratic(const SpectralMeasure& measure)
{
    if (measure.empty())
        throw std::invalid_argument("problem_diagonal_quadratic: empty measure");
    const Vector      lambda = measure.eigenvalue_vector();
    const Vector      b      = measure.weight_vector();
    ProblemDefinition p;
    p.name = "diag";
    p.dim  = lambda.size();
    p.f    = [lambda, b](const Vector& x) { return 0.5 * x.dot(lambda.cwiseProduct(x)) - b.dot(x); };
    p.grad = [lambda, b](const Vector& x) -> Vector { return lambda.cwiseProduct(x) - b; };
    p.hess = [lambda](const Vector&) { return SymmetricOperator::diagonal(lambda); };

    std::vector< Index > free;
    bool                 bounded = true;
    for (Index i = 0; i < lambda.size(); ++i)
    {
        if (lambda[i] <= 0.0)
            p.unbounded_direction = true;
        if (lambda[i] == 0.0 && b[i] == 0.0)
            free.push_back(i);
        else if (lambda[i] <= 0.0)
            bounded = false;
    }
    if (bounded)
    {
        p.solution_param_dim = static_cast< Index >(free.size());
        p.solution_point     = [lambda, b, free](const Vector& t) {
            if (t.size() != static_cast< Index >(free.size()))
                throw std::invalid_argument("diag: wrong number of solution parameters");
            Vector x(lambda.size());
            for (Index i = 0; i < lambda.size(); ++i)
                x[i] = lambda[i] > 0.0 ? b[i] / lambda[i] : 0.0;
            for (std::size_t k = 0; k < free.size(); ++k)
                x[free[k]] = t[static_cast< Index >(k)];
            return x;
        };
    }
    return p;
}

ProblemDefinition problem_by_name(const std::string& spec)
{
    const auto                            colon = spec.find(':');
    const std::string                     name  = spec.substr(0, colon);
    std::map< std::string, std::string > opts;
    if (colon != std::string::npos)
    {
        std::stringstream ss(spec.substr(colon + 1));
        std::string       item;
        while (std::getline(ss, item, ','))
        {
            const auto eq = item.find('=');
            if (eq == std::string::npos)
                throw std::invalid_argument("problem option without '=': " + item);
            opts[item.substr(0, eq)] = item.substr(eq + 1);
        }
    }
    auto take = [&](const std::string& key) -> std::optional< std::string > {
        auto it = opts.find(key);
        if (it == opts.end())
            return std::nullopt;
        std::string v = it->second;
        opts.erase(it);
        return v;
    };
    auto reject_rest = [&] {
        if (!opts.empty())
            throw std::invalid_argument("unknown option '" + opts.begin()->first + "' for problem " + name);
    };

    if (name == "sine-lsq")
    {
        const int n = std::stoi(take("n").value_or("100"));
        reject_rest();
        return problem_sine_lsq(n);
    }
    if (name == "remark2d")
    {
        reject_rest();
        return problem_remark_counterexample();
    }
    if (name == "diag")
    {
        const auto file = take("file");
        reject_rest();
        if (!file)
            throw std::invalid_argument("diag problem needs file=<measure.csv>");
        const auto m = read_measure_csv_file(*file);
        if (const auto* split = std::get_if< SplitSpectralMeasure >(&m))
            return problem_diagonal_quadratic(split->full());
        return problem_diagonal_quadratic(std::get< SpectralMeasure >(m));
    }
    throw std::invalid_argument("unknown problem: " + name);
}

DerivativeCheck check_derivatives(const ProblemDefinition& p, std::mt19937_64& rng, int points, double scale)
{
    std::uniform_real_distribution< double > unif(-scale, scale);
    DerivativeCheck                          out;
    const double                             h = 1e-6;
    for (int k = 0; k < points; ++k)
    {
        Vector x(p.dim);
        for (Index i = 0; i < p.dim; ++i)
            x[i] = unif(rng);
        const Vector g = p.grad(x);
        Vector       fd(p.dim);
        for (Index i = 0; i < p.dim; ++i)
        {
            Vector xp = x, xm = x;
            xp[i] += h;
            xm[i] -= h;
            fd[i] = (p.f(xp) - p.f(xm)) / (2.0 * h);
        }
        out.grad_rel_error = std::max(out.grad_rel_error, (fd - g).norm() / std::max(1.0, g.norm()));

        const Vector v   = random_unit_vector(p.dim, rng);
        const Vector hv  = p.hess(x).apply(v);
        const Vector fdh = (p.grad(x + h * v) - p.grad(x - h * v)) / (2.0 * h);
        out.hess_rel_error = std::max(out.hess_rel_error, (fdh - hv).norm() / std::max(1.0, hv.norm()));
    }
    return out;
}

Matrix finite_difference_hessian(const ProblemDefinition& p, const Vector& x, double h)
{
    Matrix m(p.dim, p.dim);
    for (Index i = 0; i < p.dim; ++i)
    {
        Vector xp = x, xm = x;
        xp[i] += h;
        xm[i] -= h;
        m.col(i) = (p.grad(xp) - p.grad(xm)) / (2.0 * h);
    }
    return 0.5 * (m + m.transpose());
}

GradientAlignment gradient_alignment(const ProblemDefinition& p, const Vector& x, int d)
{
    if (d < 1 || d >= p.dim)
        throw std::invalid_argument("gradient_alignment: d must lie in [1, dim - 1]");
    const auto   eig = symmetric_eigendecompose(p.hess(x));
    const double ld  = eig.eigenvalues[d - 1];
    const double rest = eig.eigenvalues.tail(p.dim - d).cwiseAbs().maxCoeff();
    GradientAlignment out;
    out.gap_ratio = rest == 0.0 ? std::numeric_limits< double >::infinity() : ld / rest;
    if (!(out.gap_ratio >= 2.0))
    {
        std::ostringstream msg;
        msg << "gradient_alignment: no spectral gap after the top " << d << " eigenvalues (lambda_d = " << ld
            << ", max |lambda_i| beyond = " << rest << ", ratio " << out.gap_ratio << " < 2)";
        throw std::invalid_argument(msg.str());
    }
    const Vector g    = p.grad(x);
    const Matrix top  = eig.vectors.leftCols(d);
    out.residual      = (g - top * (top.transpose() * g)).norm();
    out.grad_norm     = g.norm();
    return out;
}

NegativeCurvatureSearch hessian_has_negative_eigenvalue_near_S(const ProblemDefinition& p, int trials,
                                                              std::mt19937_64& rng, std::vector< double > distances)
{
    if (!p.has_solution_set())
        throw std::invalid_argument("negative-eigenvalue search needs a solution-set parametrization");
    NegativeCurvatureSearch                  out;
    std::uniform_real_distribution< double > unif(-2.0, 2.0);
    std::normal_distribution< double >       normal;
    out.found_at_distance.assign(distances.size(), false);
    for (int t = 0; t < trials; ++t)
    {
        Vector params(p.solution_param_dim);
        for (Index i = 0; i < params.size(); ++i)
            params[i] = unif(rng);
        const Vector pt  = p.solution_point(params);
        const auto   eig = symmetric_eigendecompose(p.hess(pt));
        const double top = eig.eigenvalues.cwiseAbs().maxCoeff();
        Vector       dir = Vector::Zero(p.dim);
        for (Index i = 0; i < p.dim; ++i)
            if (std::abs(eig.eigenvalues[i]) > 1e-8 * top)
                dir += normal(rng) * eig.vectors.col(i);
        if (dir.norm() == 0.0)
            continue;
        dir.normalize();
        for (std::size_t k = 0; k < distances.size(); ++k)
            for (double sign : {1.0, -1.0})
            {
                const Vector x    = pt + sign * distances[k] * dir;
                const auto   e    = symmetric_eigendecompose(p.hess(x));
                const double emin = e.eigenvalues[p.dim - 1];
                if (emin < 0.0)
                {
                    out.found                = true;
                    out.found_at_distance[k] = true;
                    out.witnesses.push_back({x, distances[k], emin});
                }
            }
    }
    return out;
}
} // namespace tcglab
