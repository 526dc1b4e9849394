#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace stwm
{

//! Dense row-major matrix of doubles.
class Matrix
{
  public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill)
    {
    }

    static Matrix identity(std::size_t n)
    {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i)
            m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const
    {
        return {data_.data() + i * cols_, cols_};
    }

    std::span<const double> data() const noexcept { return data_; }

    double max_abs() const
    {
        double m = 0.0;
        for (double v : data_)
            m = std::max(m, std::abs(v));
        return m;
    }

    double trace() const
    {
        double t = 0.0;
        for (std::size_t i = 0; i < std::min(rows_, cols_); ++i)
            t += (*this)(i, i);
        return t;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

  private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

//! a * b^T for lower-triangular reconstruction checks.
inline Matrix multiply_transpose(const Matrix& a, const Matrix& b)
{
    if (a.cols() != b.cols())
        throw std::invalid_argument("multiply_transpose: shape mismatch");
    Matrix c(a.rows(), b.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < b.rows(); ++j)
        {
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols(); ++k)
                s += a(i, k) * b(j, k);
            c(i, j) = s;
        }
    return c;
}

//! Covariance matrix of one mode over a time grid.
struct GramMatrix
{
    Matrix values;
    double jitter_applied = 0.0;
};

//! Lower factor L with L L^T = G + jitter * I on the nonzero rows of G.
struct CholeskyFactor
{
    Matrix lower;
    double jitter = 0.0;
};

class NotPositiveSemidefinite : public std::runtime_error
{
  public:
    using std::runtime_error::runtime_error;
};

namespace detail
{

inline bool try_cholesky(const Matrix& g, std::span<const std::size_t> active,
                         double jitter, Matrix& lower)
{
    const std::size_t n = g.rows();
    lower = Matrix(n, n);
    for (std::size_t a = 0; a < active.size(); ++a)
    {
        const std::size_t i = active[a];
        for (std::size_t b = 0; b <= a; ++b)
        {
            const std::size_t j = active[b];
            double s = g(i, j) + (i == j ? jitter : 0.0);
            for (std::size_t c = 0; c < b; ++c)
                s -= lower(i, active[c]) * lower(j, active[c]);
            if (i == j)
            {
                if (!(s > 0.0) || !std::isfinite(s))
                    return false;
                lower(i, i) = std::sqrt(s);
            }
            else
            {
                lower(i, j) = s / lower(j, j);
            }
        }
    }
    return true;
}

}  // namespace detail

/*!
 * Cholesky factorization of a symmetric positive semidefinite matrix.
 *
 * Rows (and columns) of G that are identically zero stay zero in L. The rest
 * is factored with jitter 0 first, then 1e-14 tr(G)/n * 10^k for k = 0..8,
 * accepting the first attempt whose reconstruction error is within
 * 1e-10 (1 + max|G|). Throws NotPositiveSemidefinite if every attempt fails.
 */
inline CholeskyFactor cholesky_psd(const Matrix& g)
{
    const std::size_t n = g.rows();
    if (g.cols() != n)
        throw std::invalid_argument("cholesky_psd: matrix must be square");
    const double scale = g.max_abs();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j)
            if (std::abs(g(i, j) - g(j, i)) > 1e-12 * (1.0 + scale))
                throw std::invalid_argument("cholesky_psd: matrix is not symmetric");

    std::vector<std::size_t> active;
    for (std::size_t i = 0; i < n; ++i)
    {
        const auto r = g.row(i);
        if (std::any_of(r.begin(), r.end(), [](double v) { return v != 0.0; }))
            active.push_back(i);
    }

    const double base = n > 0 ? 1e-14 * std::abs(g.trace()) / static_cast<double>(n) : 0.0;
    const double bound = 1e-10 * (1.0 + scale);
    Matrix lower;
    for (int k = -1; k <= 8; ++k)
    {
        const double jitter = k < 0 ? 0.0 : base * std::pow(10.0, k);
        if (k >= 0 && jitter == 0.0)
            break;
        if (!detail::try_cholesky(g, active, jitter, lower))
            continue;
        double err = 0.0;
        for (std::size_t a = 0; a < active.size(); ++a)
            for (std::size_t b = 0; b <= a; ++b)
            {
                const std::size_t i = active[a];
                const std::size_t j = active[b];
                double s = 0.0;
                for (std::size_t c = 0; c <= b; ++c)
                    s += lower(i, active[c]) * lower(j, active[c]);
                err = std::max(err, std::abs(s - g(i, j) - (i == j ? jitter : 0.0)));
            }
        if (err <= bound)
            return {std::move(lower), jitter};
    }
    throw NotPositiveSemidefinite(
        "cholesky_psd: matrix is not positive semidefinite within jitter limit");
}

//! Pairwise summation; fixed reduction tree, so results are bit-stable.
inline double pairwise_sum(std::span<const double> v)
{
    if (v.size() <= 8)
    {
        double s = 0.0;
        for (double x : v)
            s += x;
        return s;
    }
    const std::size_t half = v.size() / 2;
    return pairwise_sum(v.first(half)) + pairwise_sum(v.subspan(half));
}

}  // namespace stwm
