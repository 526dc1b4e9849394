#pragma once

// Eigenpairs of L = kappa^2 - Laplacian with homogeneous Dirichlet conditions
// on an interval (0, l) or a rectangle (0, l1) x (0, l2), and the model that
// couples two such operators (L and L~, same eigenfunctions) with the
// exponents alpha, beta, gamma.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "stwm/kernel.hpp"
#include "stwm/linalg.hpp"

namespace stwm
{

//! Spatial coordinate; the second component is ignored when d = 1.
using Point = std::array<double, 2>;

//! Integer multi-index of a Dirichlet mode; second entry is 0 when d = 1.
using MultiIndex = std::array<int, 2>;

inline constexpr std::size_t max_basis_size = 10'000'000;

class EigenBasis
{
  public:
    EigenBasis() = default;

    int dim() const noexcept { return dim_; }
    const std::vector<double>& extents() const noexcept { return extents_; }
    double kappa2() const noexcept { return kappa2_; }
    std::size_t size() const noexcept { return eigenvalues_.size(); }

    //! Eigenvalues in ascending order (0-based storage).
    const std::vector<double>& eigenvalues() const noexcept { return eigenvalues_; }
    const std::vector<MultiIndex>& indices() const noexcept { return indices_; }

    //! lambda_j for the 1-based mode number j.
    double lambda(std::size_t j) const
    {
        check_mode(j);
        return eigenvalues_[j - 1];
    }

    //! e_j(x) for the 1-based mode number j.
    double eval(std::size_t j, const Point& x) const
    {
        check_mode(j);
        const auto& idx = indices_[j - 1];
        double v = factor(idx[0], extents_[0], x[0]);
        if (dim_ == 2)
            v *= factor(idx[1], extents_[1], x[1]);
        return v;
    }

    bool contains(const Point& x) const
    {
        for (int i = 0; i < dim_; ++i)
            if (!(x[i] > 0.0 && x[i] < extents_[i]))
                return false;
        return true;
    }

    //! sup_x e_j(x)^2 over all j: prod (2 / l_i).
    double sup_square() const
    {
        double s = 1.0;
        for (double l : extents_)
            s *= 2.0 / l;
        return s;
    }

    //! Limit of lambda_j / j^{2/d}: (pi/l)^2 in 1D, 4 pi / area in 2D.
    double weyl_constant() const
    {
        if (dim_ == 1)
            return std::pow(std::numbers::pi / extents_[0], 2);
        return 4.0 * std::numbers::pi / (extents_[0] * extents_[1]);
    }

    //! Same eigenfunctions, shifted by a different constant kappa^2.
    EigenBasis with_kappa2(double kappa2) const
    {
        if (!(kappa2 >= 0.0))
            throw std::invalid_argument("kappa2 must be nonnegative");
        EigenBasis b = *this;
        for (std::size_t i = 0; i < b.indices_.size(); ++i)
            b.eigenvalues_[i] = raw_eigenvalue(kappa2, b.indices_[i]);
        b.kappa2_ = kappa2;
        return b;
    }

    friend EigenBasis build_basis(int d, std::vector<double> extents, double kappa2,
                                  std::size_t count);

  private:
    static double factor(int k, double l, double x)
    {
        return std::sqrt(2.0 / l) * std::sin(k * std::numbers::pi * x / l);
    }

    double raw_eigenvalue(double kappa2, const MultiIndex& idx) const
    {
        double v = kappa2;
        for (int i = 0; i < dim_; ++i)
        {
            const double f = idx[i] * std::numbers::pi / extents_[i];
            v += f * f;
        }
        return v;
    }

    void check_mode(std::size_t j) const
    {
        if (j < 1 || j > eigenvalues_.size())
            throw std::out_of_range("mode index " + std::to_string(j)
                                    + " outside [1, " + std::to_string(size()) + "]");
    }

    int dim_ = 0;
    std::vector<double> extents_;
    double kappa2_ = 0.0;
    std::vector<double> eigenvalues_;
    std::vector<MultiIndex> indices_;
};

/*!
 * Build the J smallest eigenpairs of kappa^2 - Laplacian (Dirichlet).
 *
 * In 2D the multi-indices of [1, M1] x [1, M2] are enumerated, starting from
 * M = ceil(sqrt J) + 8 per axis scaled by the aspect ratio, sorted by
 * (eigenvalue, index) and truncated. The box is enlarged until no excluded
 * index can have an eigenvalue at or below the J-th one.
 */
inline EigenBasis build_basis(int d, std::vector<double> extents, double kappa2,
                              std::size_t count)
{
    if (d != 1 && d != 2)
        throw std::invalid_argument("d: unsupported dimension " + std::to_string(d));
    if (extents.size() != static_cast<std::size_t>(d))
        throw std::invalid_argument("extents: expected " + std::to_string(d) + " entries");
    for (double l : extents)
        if (!(l > 0.0) || !std::isfinite(l))
            throw std::invalid_argument("extents: lengths must be positive");
    if (!(kappa2 >= 0.0) || !std::isfinite(kappa2))
        throw std::invalid_argument("kappa2: must be nonnegative");
    if (count < 1)
        throw std::invalid_argument("J: must be at least 1");
    if (count > max_basis_size)
        throw std::invalid_argument("J: exceeds cap of 10^7 modes");

    EigenBasis b;
    b.dim_ = d;
    b.extents_ = std::move(extents);
    b.kappa2_ = kappa2;

    if (d == 1)
    {
        b.eigenvalues_.resize(count);
        b.indices_.resize(count);
        for (std::size_t j = 0; j < count; ++j)
        {
            b.indices_[j] = {static_cast<int>(j + 1), 0};
            b.eigenvalues_[j] = b.raw_eigenvalue(kappa2, b.indices_[j]);
        }
        return b;
    }

    const double base = std::ceil(std::sqrt(static_cast<double>(count))) + 8.0;
    const double aspect = std::sqrt(b.extents_[0] / b.extents_[1]);
    std::array<int, 2> box = {static_cast<int>(std::ceil(base * std::max(1.0, aspect))),
                              static_cast<int>(std::ceil(base * std::max(1.0, 1.0 / aspect)))};

    struct Entry
    {
        double value;
        MultiIndex idx;
    };
    std::vector<Entry> entries;
    for (;;)
    {
        entries.clear();
        entries.reserve(static_cast<std::size_t>(box[0]) * box[1]);
        for (int i = 1; i <= box[0]; ++i)
            for (int k = 1; k <= box[1]; ++k)
                entries.push_back({b.raw_eigenvalue(kappa2, {i, k}), {i, k}});
        const std::size_t keep = std::min(count, entries.size());
        auto less = [](const Entry& x, const Entry& y) {
            if (x.value != y.value)
                return x.value < y.value;
            return x.idx < y.idx;
        };
        std::partial_sort(entries.begin(), entries.begin() + keep, entries.end(), less);
        entries.resize(keep);
        const double last = entries.back().value;
        const bool axis0_ok = b.raw_eigenvalue(kappa2, {box[0] + 1, 1}) > last;
        const bool axis1_ok = b.raw_eigenvalue(kappa2, {1, box[1] + 1}) > last;
        if (keep == count && axis0_ok && axis1_ok)
            break;
        if (!axis0_ok || keep < count)
            box[0] *= 2;
        if (!axis1_ok || keep < count)
            box[1] *= 2;
    }
    b.eigenvalues_.reserve(count);
    b.indices_.reserve(count);
    for (const auto& e : entries)
    {
        b.eigenvalues_.push_back(e.value);
        b.indices_.push_back(e.idx);
    }
    return b;
}

struct WeylRatio
{
    double min_ratio;
    double max_ratio;
};

//! Extrema of lambda_j / j^{2/d} over j in [J/2, J].
inline WeylRatio weyl_ratio(const EigenBasis& basis)
{
    const std::size_t n = basis.size();
    const double p = 2.0 / basis.dim();
    WeylRatio r{std::numeric_limits<double>::infinity(), 0.0};
    for (std::size_t j = std::max<std::size_t>(1, n / 2); j <= n; ++j)
    {
        const double v = basis.lambda(j) / std::pow(static_cast<double>(j), p);
        r.min_ratio = std::min(r.min_ratio, v);
        r.max_ratio = std::max(r.max_ratio, v);
    }
    return r;
}

/*!
 * Constant C with lambda_j^e <= C j^{2e/d} for j beyond the truncation,
 * using the measured Weyl ratios widened to include the asymptotic constant.
 */
inline double weyl_majorant(const EigenBasis& basis, double exponent)
{
    const auto r = weyl_ratio(basis);
    const double c = basis.weyl_constant();
    const double lo = std::min(r.min_ratio, c);
    const double hi = std::max(r.max_ratio, c);
    return std::pow(exponent >= 0.0 ? hi : lo, exponent);
}

//! e_j(x_m) for every point and mode: a (points x J) matrix.
inline Matrix evaluate_basis(const EigenBasis& basis, const std::vector<Point>& points)
{
    Matrix out(points.size(), basis.size());
    for (std::size_t m = 0; m < points.size(); ++m)
    {
        if (!basis.contains(points[m]))
            throw std::out_of_range("evaluate_basis: point " + std::to_string(m)
                                    + " lies outside the open domain");
        for (std::size_t j = 1; j <= basis.size(); ++j)
            out(m, j - 1) = basis.eval(j, points[m]);
    }
    return out;
}

//! Plain parameters of a model, as read from a configuration document.
struct ModelConfig
{
    int d = 1;
    std::vector<double> extents{std::numbers::pi};
    double kappa2 = 0.0;
    double kappa2_tilde = 0.0;
    std::size_t count = 1;
    double alpha = 0.0;
    double beta = 1.0;
    double gamma = 1.0;
    double horizon = 1.0;
};

/*!
 * A = L^beta and Q = L~^{-alpha} diagonal in a shared Dirichlet basis, with
 * fractional order gamma and time horizon T.
 */
class SpectralModel
{
  public:
    explicit SpectralModel(const ModelConfig& cfg)
        : basis_(build_basis(cfg.d, cfg.extents, cfg.kappa2, cfg.count)),
          basis_tilde_(basis_.with_kappa2(cfg.kappa2_tilde)),
          alpha_(cfg.alpha),
          beta_(cfg.beta),
          gamma_(cfg.gamma),
          horizon_(cfg.horizon)
    {
        if (!(alpha_ >= 0.0) || !std::isfinite(alpha_))
            throw std::invalid_argument("alpha: must be nonnegative");
        if (!(beta_ >= 0.0) || !std::isfinite(beta_))
            throw std::invalid_argument("beta: must be nonnegative");
        if (!(gamma_ > 0.0) || !std::isfinite(gamma_))
            throw std::invalid_argument("gamma: must be positive");
        if (!(horizon_ > 0.0) || !std::isfinite(horizon_))
            throw std::invalid_argument("T: must be positive");
    }

    const EigenBasis& basis() const noexcept { return basis_; }
    const EigenBasis& basis_tilde() const noexcept { return basis_tilde_; }
    int dim() const noexcept { return basis_.dim(); }
    std::size_t size() const noexcept { return basis_.size(); }
    double alpha() const noexcept { return alpha_; }
    double beta() const noexcept { return beta_; }
    double gamma() const noexcept { return gamma_; }
    double horizon() const noexcept { return horizon_; }

    //! Sampling and covariance evaluation need gamma > 1/2.
    void require_finite_variance() const
    {
        if (!(gamma_ > 0.5))
            throw std::domain_error("gamma <= 1/2: the solution has infinite variance");
    }

  private:
    EigenBasis basis_;
    EigenBasis basis_tilde_;
    double alpha_;
    double beta_;
    double gamma_;
    double horizon_;
};

//! Mode kernel of the 1-based mode j: mu = lambda_j^beta, w = lambda~_j^{-alpha}.
inline ModeKernel mode_params(const SpectralModel& model, std::size_t j)
{
    const double lam = model.basis().lambda(j);
    const double lam_tilde = model.basis_tilde().lambda(j);
    return {std::pow(lam, model.beta()), std::pow(lam_tilde, -model.alpha()),
            model.gamma()};
}

}  // namespace stwm
