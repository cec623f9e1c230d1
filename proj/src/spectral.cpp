#include "tcglab/spectral.hpp"

#include "tcglab/csv.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

namespace tcglab
{
SymmetricOperator::SymmetricOperator(Matrix dense) : dim_(dense.rows())
{
    if (dense.rows() != dense.cols() || dense.rows() == 0)
        throw std::invalid_argument("SymmetricOperator: dense realization must be square and nonempty");
    dense_ = std::move(dense);
}

SymmetricOperator::SymmetricOperator(Index dim, ApplyFn apply, std::optional< Matrix > dense)
    : dim_(dim), apply_(std::move(apply)), dense_(std::move(dense))
{
    if (dim <= 0)
        throw std::invalid_argument("SymmetricOperator: dim must be positive");
    if (dense_ && (dense_->rows() != dim || dense_->cols() != dim))
        throw std::invalid_argument("SymmetricOperator: dense realization has the wrong shape");
    if (!apply_ && !dense_)
        throw std::invalid_argument("SymmetricOperator: need an apply procedure or a dense matrix");
}

SymmetricOperator SymmetricOperator::diagonal(const Vector& diag)
{
    return SymmetricOperator(Matrix(diag.asDiagonal()));
}

Vector SymmetricOperator::apply(const Vector& x) const
{
    if (x.size() != dim_)
        throw std::invalid_argument("SymmetricOperator::apply: dimension mismatch");
    if (apply_)
        return apply_(x);
    return (*dense_) * x;
}

const Matrix& SymmetricOperator::dense() const
{
    if (!dense_)
        throw std::logic_error("SymmetricOperator: no dense realization");
    return *dense_;
}

double SymmetricOperator::symmetry_defect(std::mt19937_64& rng, int trials) const
{
    double worst = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        const Vector u = random_unit_vector(dim_, rng);
        const Vector v = random_unit_vector(dim_, rng);
        worst          = std::max(worst, std::abs(u.dot(apply(v)) - v.dot(apply(u))));
    }
    return worst;
}

double SymmetricOperator::dense_apply_mismatch(std::mt19937_64& rng, int trials) const
{
    if (!dense_ || !apply_)
        return 0.0;
    double worst = 0.0;
    for (int t = 0; t < trials; ++t)
    {
        const Vector x = random_unit_vector(dim_, rng);
        worst          = std::max(worst, max_abs(apply_(x) - (*dense_) * x));
    }
    return worst;
}

Vector random_unit_vector(Index dim, std::mt19937_64& rng)
{
    std::normal_distribution< double > normal;
    Vector                             v(dim);
    do
    {
        for (Index i = 0; i < dim; ++i)
            v[i] = normal(rng);
    } while (v.norm() == 0.0);
    return v / v.norm();
}

double EigenDecomposition::reconstruction_error(const Matrix& a) const
{
    return max_abs(vectors * eigenvalues.asDiagonal() * vectors.transpose() - a);
}

double EigenDecomposition::orthogonality_error() const
{
    return max_abs(vectors.transpose() * vectors - Matrix::Identity(vectors.cols(), vectors.cols()));
}

EigenDecomposition symmetric_eigendecompose(const SymmetricOperator& a)
{
    if (!a.has_dense())
        throw std::invalid_argument("symmetric_eigendecompose: dense realization required");
    if (a.dim() > 2000)
        throw std::invalid_argument("symmetric_eigendecompose: dim > 2000 is out of scope");
    const Matrix& m      = a.dense();
    const double  scale  = max_abs(m);
    const double  defect = max_abs(m - m.transpose());
    if (defect > 1e-12 * scale)
    {
        std::ostringstream msg;
        msg << "symmetric_eigendecompose: matrix is not symmetric (max |A - A^T| = " << defect
            << ", max |A| = " << scale << ")";
        throw std::invalid_argument(msg.str());
    }
    Eigen::SelfAdjointEigenSolver< Matrix > solver(0.5 * (m + m.transpose()));
    if (solver.info() != Eigen::Success)
        throw NumericalBreakdown("symmetric_eigendecompose: eigensolver did not converge");
    // Eigen sorts increasing; reverse to nonincreasing.
    EigenDecomposition out;
    out.eigenvalues = solver.eigenvalues().reverse();
    out.vectors     = solver.eigenvectors().rowwise().reverse();
    return out;
}

SpectralMeasure::SpectralMeasure(std::vector< double > eigenvalues, std::vector< double > weights,
                                 double negligible_weight, double merge_tolerance)
    : negligible_weight_(negligible_weight)
{
    if (eigenvalues.size() != weights.size())
        throw std::invalid_argument("SpectralMeasure: eigenvalue and weight lists differ in length");
    for (std::size_t i = 0; i < eigenvalues.size(); ++i)
        if (!std::isfinite(eigenvalues[i]) || !std::isfinite(weights[i]))
            throw std::invalid_argument("SpectralMeasure: non-finite atom");
    if (negligible_weight < 0.0)
        throw std::invalid_argument("SpectralMeasure: negligible_weight must be >= 0");

    std::vector< std::size_t > order(eigenvalues.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t i, std::size_t j) { return eigenvalues[i] > eigenvalues[j]; });

    double radius = 0.0;
    for (double l : eigenvalues)
        radius = std::max(radius, std::abs(l));
    const double tol = merge_tolerance * radius;

    std::size_t k = 0;
    while (k < order.size())
    {
        // Group a chain of atoms each within tol of the group's first atom.
        const double first = eigenvalues[order[k]];
        double       wsq = 0.0, wl = 0.0, lsum = 0.0;
        double       sign  = 0.0;
        std::size_t  count = 0;
        for (; k < order.size() && first - eigenvalues[order[k]] <= tol; ++k, ++count)
        {
            const double w = weights[order[k]];
            wsq += w * w;
            wl += w * w * eigenvalues[order[k]];
            lsum += eigenvalues[order[k]];
            if (sign == 0.0 && w != 0.0)
                sign = w > 0 ? 1.0 : -1.0;
        }
        if (count == 1)
        {
            lambda_.push_back(first);
            weight_.push_back(weights[order[k - 1]]);
        }
        else
        {
            lambda_.push_back(wsq > 0.0 ? wl / wsq : lsum / static_cast< double >(count));
            weight_.push_back((sign == 0.0 ? 1.0 : sign) * std::sqrt(wsq));
        }
        flagged_.push_back(std::abs(weight_.back()) <= negligible_weight_);
    }
}

double SpectralMeasure::lambda_max() const
{
    if (lambda_.empty())
        throw std::logic_error("SpectralMeasure: empty measure");
    return lambda_.front();
}

double SpectralMeasure::lambda_min() const
{
    if (lambda_.empty())
        throw std::logic_error("SpectralMeasure: empty measure");
    return lambda_.back();
}

double SpectralMeasure::spectral_radius() const
{
    return lambda_.empty() ? 0.0 : std::max(std::abs(lambda_.front()), std::abs(lambda_.back()));
}

double SpectralMeasure::total_weight_sq() const
{
    double s = 0.0;
    for (double w : weight_)
        s += w * w;
    return s;
}

double SpectralMeasure::inner(const std::vector< double >& p, const std::vector< double >& q) const
{
    if (p.size() != size() || q.size() != size())
        throw std::invalid_argument("SpectralMeasure::inner: sample count mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        s += p[i] * q[i] * weight_[i] * weight_[i];
    return s;
}

Vector SpectralMeasure::eigenvalue_vector() const
{
    return Eigen::Map< const Vector >(lambda_.data(), static_cast< Index >(lambda_.size()));
}

Vector SpectralMeasure::weight_vector() const
{
    return Eigen::Map< const Vector >(weight_.data(), static_cast< Index >(weight_.size()));
}

SplitSpectralMeasure::SplitSpectralMeasure(SpectralMeasure head, SpectralMeasure tail)
    : head_(std::move(head)), tail_(std::move(tail))
{
    if (head_.empty())
        throw std::invalid_argument("SplitSpectralMeasure: head must be nonempty");
    if (!(head_.lambda_min() > 0.0))
        throw std::invalid_argument("SplitSpectralMeasure: smallest head eigenvalue must be positive");
    if (!tail_.empty() && !(head_.lambda_min() > tail_.lambda_max()))
        throw std::invalid_argument("SplitSpectralMeasure: smallest head eigenvalue must exceed every tail eigenvalue");
}

SpectralMeasure SplitSpectralMeasure::full() const
{
    std::vector< double > l = head_.eigenvalues(), w = head_.weights();
    l.insert(l.end(), tail_.eigenvalues().begin(), tail_.eigenvalues().end());
    w.insert(w.end(), tail_.weights().begin(), tail_.weights().end());
    return SpectralMeasure(std::move(l), std::move(w), std::max(head_.negligible_weight(), tail_.negligible_weight()),
                           0.0);
}

double SplitSpectralMeasure::tail_epsilon() const
{
    return tail_.spectral_radius();
}

SpectralMeasure measure_from_operator(const SymmetricOperator& a, const Vector& b)
{
    if (b.size() != a.dim())
        throw std::invalid_argument("measure_from_operator: b has the wrong dimension");
    const auto   eig    = symmetric_eigendecompose(a);
    const Vector coeffs = eig.vectors.transpose() * b;
    const double radius = eig.eigenvalues.cwiseAbs().maxCoeff();
    const double tol    = SpectralMeasure::default_merge_tolerance * radius;

    // Group eigenvalues first so that the weight is the norm of the full eigenspace projection.
    std::vector< double > lambdas, weights;
    Index                 i = 0;
    while (i < eig.eigenvalues.size())
    {
        const double first = eig.eigenvalues[i];
        double       wsq = 0.0, lsum = 0.0;
        Index        count = 0;
        for (; i < eig.eigenvalues.size() && first - eig.eigenvalues[i] <= tol; ++i, ++count)
        {
            wsq += coeffs[i] * coeffs[i];
            lsum += eig.eigenvalues[i];
        }
        lambdas.push_back(lsum / static_cast< double >(count));
        weights.push_back(std::sqrt(wsq));
    }
    return SpectralMeasure(std::move(lambdas), std::move(weights), 1e-13 * b.norm());
}

int grade(const SpectralMeasure& measure, double weight_tol)
{
    int count = 0;
    for (double w : measure.weights())
        count += std::abs(w) > weight_tol ? 1 : 0;
    return count;
}

SplitSpectralMeasure clustered_split()
{
    constexpr int         d = 10;
    std::vector< double > l(d), w(d, 1.0 / std::sqrt(static_cast< double >(d)));
    for (int i = 0; i < d; ++i)
        l[i] = 0.95 + 0.1 * static_cast< double >(i) / (d - 1);
    return SplitSpectralMeasure(SpectralMeasure(l, w), SpectralMeasure({0.0}, {1e-3}));
}

void write_measure_csv(std::ostream& out, const SpectralMeasure& measure)
{
    csv::Writer w(out);
    w.header({"lambda", "weight"});
    for (std::size_t i = 0; i < measure.size(); ++i)
    {
        w.field(measure.lambda(i)).field(measure.weight(i));
        w.end_row();
    }
}

void write_split_csv(std::ostream& out, const SplitSpectralMeasure& split)
{
    csv::Writer w(out);
    w.header({"lambda", "weight", "part"});
    for (const auto* part : {&split.head(), &split.tail()})
        for (std::size_t i = 0; i < part->size(); ++i)
        {
            w.field(part->lambda(i)).field(part->weight(i)).field(part == &split.head() ? "head" : "tail");
            w.end_row();
        }
}

std::variant< SpectralMeasure, SplitSpectralMeasure > read_measure_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line))
        throw std::invalid_argument("measure CSV: missing header");
    const auto header = csv::split_line(line);
    const bool has_part = header.size() == 3 && header[2] == "part";
    if (header.size() < 2 || header[0] != "lambda" || header[1] != "weight" || (header.size() == 3 && !has_part) ||
        header.size() > 3)
        throw std::invalid_argument("measure CSV: header must be lambda,weight[,part]");

    std::vector< double > hl, hw, tl, tw;
    int                   row = 1;
    while (std::getline(in, line))
    {
        ++row;
        if (line.find_first_not_of(" \t\r") == std::string::npos)
            continue;
        const auto fields = csv::split_line(line);
        if (fields.size() != header.size())
            throw std::invalid_argument("measure CSV: wrong field count on row " + std::to_string(row));
        const double l = csv::parse_double(fields[0]);
        const double w = csv::parse_double(fields[1]);
        if (!has_part || fields[2] == "head")
        {
            hl.push_back(l);
            hw.push_back(w);
        }
        else if (fields[2] == "tail")
        {
            tl.push_back(l);
            tw.push_back(w);
        }
        else
            throw std::invalid_argument("measure CSV: part must be head or tail on row " + std::to_string(row));
    }
    if (!has_part)
        return SpectralMeasure(std::move(hl), std::move(hw));
    return SplitSpectralMeasure(SpectralMeasure(std::move(hl), std::move(hw)),
                                SpectralMeasure(std::move(tl), std::move(tw)));
}

std::variant< SpectralMeasure, SplitSpectralMeasure > read_measure_csv_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw std::invalid_argument("cannot open measure file: " + path);
    return read_measure_csv(in);
}
} // namespace tcglab
