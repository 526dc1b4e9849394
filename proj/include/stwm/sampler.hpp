#pragma once

// Exact Gaussian sampling of mode processes on time grids (Cholesky factor of
// the true Gram matrix), assembly of fields from mode paths, and the
// factorization construction Z_gamma = B_delta Z_{gamma - delta}.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "stwm/kernel.hpp"
#include "stwm/linalg.hpp"
#include "stwm/quadrature.hpp"
#include "stwm/rng.hpp"
#include "stwm/spectral.hpp"
#include "stwm/specfun.hpp"

namespace stwm
{

//! Strictly increasing, finite, nonnegative time points.
class TimeGrid
{
  public:
    TimeGrid() = default;

    explicit TimeGrid(std::vector<double> points) : points_(std::move(points))
    {
        if (points_.empty())
            throw std::invalid_argument("TimeGrid: at least one point required");
        for (std::size_t i = 0; i < points_.size(); ++i)
        {
            if (!std::isfinite(points_[i]))
                throw std::invalid_argument("TimeGrid: points must be finite");
            if (i == 0 && points_[0] < 0.0)
                throw std::invalid_argument("TimeGrid: points must be nonnegative");
            if (i > 0 && !(points_[i] > points_[i - 1]))
                throw std::invalid_argument("TimeGrid: points must be strictly increasing");
        }
    }

    //! steps + 1 equispaced points from start to end.
    static TimeGrid uniform(double start, double end, std::size_t steps)
    {
        if (steps == 0)
            return TimeGrid({start});
        std::vector<double> p(steps + 1);
        for (std::size_t i = 0; i <= steps; ++i)
            p[i] = start + (end - start) * static_cast<double>(i) / static_cast<double>(steps);
        p.back() = end;
        return TimeGrid(std::move(p));
    }

    std::size_t size() const noexcept { return points_.size(); }
    double operator[](std::size_t i) const { return points_[i]; }
    double front() const { return points_.front(); }
    double back() const { return points_.back(); }
    const std::vector<double>& points() const noexcept { return points_; }

    //! Common step if the grid is uniform to relative tolerance tol, else 0.
    double uniform_step(double tol = 1e-9) const
    {
        if (points_.size() < 2)
            return 0.0;
        const double h = (points_.back() - points_.front())
                         / static_cast<double>(points_.size() - 1);
        for (std::size_t i = 1; i < points_.size(); ++i)
            if (std::abs(points_[i] - points_[i - 1] - h) > tol * h)
                return 0.0;
        return h;
    }

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

  private:
    std::vector<double> points_;
};

struct SamplerOptions
{
    unsigned threads = 1;
    QuadratureConfig quadrature{};
    std::uint64_t first_path = 0;
};

//! Sampled mode paths, stored as [(path * n_modes + mode) * n_times + time].
struct ModePaths
{
    TimeGrid grid;
    std::size_t n_paths = 0;
    std::size_t n_modes = 0;
    SeedSpec seed{};
    std::uint64_t first_path = 0;
    std::vector<double> values;

    std::size_t n_times() const { return grid.size(); }

    double& at(std::size_t path, std::size_t mode, std::size_t time)
    {
        return values[(path * n_modes + mode) * n_times() + time];
    }
    double at(std::size_t path, std::size_t mode, std::size_t time) const
    {
        return values[(path * n_modes + mode) * n_times() + time];
    }
};

//! Field values X(t, x), stored as [(path * n_times + time) * n_points + point].
struct FieldSample
{
    TimeGrid times;
    int dim = 1;
    std::vector<Point> points;
    std::size_t n_paths = 0;
    std::vector<double> values;
    SeedSpec seed{};
    std::uint64_t first_path = 0;

    double at(std::size_t path, std::size_t time, std::size_t point) const
    {
        return values[(path * times.size() + time) * points.size() + point];
    }
};

namespace detail
{

// Runs body(begin, end) over contiguous chunks of [0, n). Each index is
// processed independently, so the split never affects the result.
inline void parallel_for(std::size_t n, unsigned threads,
                         const std::function<void(std::size_t, std::size_t)>& body)
{
    const std::size_t workers = std::max<std::size_t>(1, std::min<std::size_t>(threads, n));
    if (workers <= 1)
    {
        body(0, n);
        return;
    }
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (std::size_t w = 0; w < workers; ++w)
    {
        const std::size_t begin = w * chunk;
        const std::size_t end = std::min(n, begin + chunk);
        pool.emplace_back([&, w, begin, end] {
            try
            {
                if (begin < end)
                    body(begin, end);
            }
            catch (...)
            {
                errors[w] = std::current_exception();
            }
        });
    }
    for (auto& t : pool)
        t.join();
    for (auto& e : errors)
        if (e)
            std::rethrow_exception(e);
}

struct ActiveFactor
{
    Matrix lower;
    std::vector<std::size_t> active;
};

inline ActiveFactor make_active_factor(const Matrix& g)
{
    ActiveFactor f{cholesky_psd(g).lower, {}};
    for (std::size_t i = 0; i < f.lower.rows(); ++i)
        if (f.lower(i, i) != 0.0)
            f.active.push_back(i);
    return f;
}

// out[i] = sum_c L(i, active[c]) xi_c over the active rows; inactive rows are +0.
inline void correlate(const ActiveFactor& f, RandomStream& rs, std::span<double> out,
                      std::vector<double>& xi)
{
    xi.resize(f.active.size());
    for (auto& x : xi)
        x = rs.normal();
    std::fill(out.begin(), out.end(), 0.0);
    for (std::size_t a = 0; a < f.active.size(); ++a)
    {
        const std::size_t i = f.active[a];
        double s = 0.0;
        for (std::size_t c = 0; c <= a; ++c)
            s += f.lower(i, f.active[c]) * xi[c];
        out[i] = s;
    }
}

}  // namespace detail

//! Gram matrix G[i][j] = q(t_i, t_j) of one mode over a grid.
inline GramMatrix gram(const ModeKernel& k, const TimeGrid& grid,
                       const QuadratureConfig& cfg = {})
{
    detail::require_finite_variance(k, "gram");
    const std::size_t n = grid.size();
    GramMatrix g{Matrix(n, n), 0.0};
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j)
        {
            const double v = mode_cov(k, grid[i], grid[j], cfg);
            g.values(i, j) = v;
            g.values(j, i) = v;
        }
    return g;
}

/*!
 * Draw n_paths independent realizations of every mode on the grid.
 *
 * Each (path, mode) series is N(0, gram(mode, grid)), generated from its own
 * counter-based stream keyed by (seed, first_path + path, mode). Rows of the
 * Gram matrix at t = 0 are zero, so those values are exactly 0.
 */
inline ModePaths sample_modes(const SpectralModel& model, const TimeGrid& grid,
                              std::size_t n_paths, SeedSpec seed,
                              const SamplerOptions& opts = {})
{
    model.require_finite_variance();
    if (grid.back() > model.horizon())
        throw std::invalid_argument("sample_modes: grid extends beyond the horizon T");
    const std::size_t n_modes = model.size();
    const std::size_t n_times = grid.size();

    std::vector<detail::ActiveFactor> factors(n_modes);
    detail::parallel_for(n_modes, opts.threads, [&](std::size_t b, std::size_t e) {
        for (std::size_t j = b; j < e; ++j)
            factors[j] = detail::make_active_factor(
                gram(mode_params(model, j + 1), grid, opts.quadrature).values);
    });

    ModePaths out{grid, n_paths, n_modes, seed, opts.first_path,
                  std::vector<double>(n_paths * n_modes * n_times, 0.0)};
    detail::parallel_for(n_paths, opts.threads, [&](std::size_t b, std::size_t e) {
        std::vector<double> xi;
        for (std::size_t p = b; p < e; ++p)
            for (std::size_t j = 0; j < n_modes; ++j)
            {
                RandomStream rs(seed, opts.first_path + p, j);
                std::span<double> dst(out.values.data() + (p * n_modes + j) * n_times,
                                      n_times);
                detail::correlate(factors[j], rs, dst, xi);
            }
    });
    return out;
}

//! X(t, x) = sum_j Z_j(t) e_j(x) for every path, time and point.
inline FieldSample assemble_field(const ModePaths& paths, const EigenBasis& basis,
                                  const std::vector<Point>& points)
{
    if (paths.n_modes != basis.size())
        throw std::invalid_argument("assemble_field: mode count " + std::to_string(paths.n_modes)
                                    + " does not match basis size "
                                    + std::to_string(basis.size()));
    const Matrix e = evaluate_basis(basis, points);
    const std::size_t nt = paths.n_times();
    const std::size_t np = points.size();
    FieldSample f{paths.grid, basis.dim(), points, paths.n_paths,
                  std::vector<double>(paths.n_paths * nt * np, 0.0), paths.seed,
                  paths.first_path};
    for (std::size_t p = 0; p < paths.n_paths; ++p)
        for (std::size_t i = 0; i < nt; ++i)
            for (std::size_t m = 0; m < np; ++m)
            {
                double s = 0.0;
                for (std::size_t j = 0; j < paths.n_modes; ++j)
                    s += paths.at(p, j, i) * e(m, j);
                f.values[(p * nt + i) * np + m] = s;
            }
    return f;
}

// ---------------------------------------------------------------------------
// Factorization construction
// ---------------------------------------------------------------------------

//! B(a, b) = int_0^1 u^{a-1} (1 - u)^{b-1} du by quadrature.
inline double beta_integral(double a, double b, const QuadratureConfig& cfg = {})
{
    if (!(a > 0.0) || !(b > 0.0))
        throw std::domain_error("beta_integral: arguments must be positive");
    // [0, 1/2]: v = u^a absorbs u^{a-1} when a < 1.
    double left = 0.0;
    if (a < 1.0)
    {
        auto f = [a, b](double v) {
            const double u = std::pow(v, 1.0 / a);
            return std::pow(1.0 - u, b - 1.0) / a;
        };
        left = integrate(f, 0.0, std::pow(0.5, a), cfg).value;
    }
    else
    {
        auto f = [a, b](double u) { return std::pow(u, a - 1.0) * std::pow(1.0 - u, b - 1.0); };
        left = integrate(f, 0.0, 0.5, cfg).value;
    }
    // [1/2, 1]: mirror image with the roles of a and b swapped.
    double right = 0.0;
    if (b < 1.0)
    {
        auto f = [a, b](double v) {
            const double w = std::pow(v, 1.0 / b);
            return std::pow(1.0 - w, a - 1.0) / b;
        };
        right = integrate(f, 0.0, std::pow(0.5, b), cfg).value;
    }
    else
    {
        auto f = [a, b](double w) { return std::pow(w, b - 1.0) * std::pow(1.0 - w, a - 1.0); };
        right = integrate(f, 0.0, 0.5, cfg).value;
    }
    return left + right;
}

/*!
 * Product-integration weights of
 *   [B_delta f](t) = 1/Gamma(delta) int_0^t (t-s)^{delta-1} e^{-mu (t-s)} f(s) ds
 * on a uniform grid with piecewise-constant f. omega[k-1] is the exact
 * integral of the kernel over the cell whose right end lies k steps before t,
 * k = 1..count. mu = 0 is allowed.
 */
inline std::vector<double> fractional_convolution_weights(double delta, double mu,
                                                          double step, std::size_t count)
{
    if (!(delta > 0.0))
        throw std::domain_error("fractional_convolution_weights: delta must be positive");
    if (!(mu >= 0.0))
        throw std::domain_error("fractional_convolution_weights: mu must be nonnegative");
    if (!(step > 0.0))
        throw std::domain_error("fractional_convolution_weights: step must be positive");
    std::vector<double> w(count);
    if (mu == 0.0)
    {
        const double scale = 1.0 / specfun::gamma_fn(delta + 1.0);
        for (std::size_t k = 1; k <= count; ++k)
            w[k - 1] = scale * (std::pow(k * step, delta) - std::pow((k - 1.0) * step, delta));
        return w;
    }
    const double scale = std::pow(mu, -delta) / specfun::gamma_fn(delta);
    double prev = 0.0;
    for (std::size_t k = 1; k <= count; ++k)
    {
        const double cur = specfun::lower_incomplete_gamma(delta, mu * k * step);
        w[k - 1] = scale * (cur - prev);
        prev = cur;
    }
    return w;
}

//! Applies B_delta to cell values f_i on [t_i, t_{i+1}); returns values at every t_n.
inline std::vector<double> apply_fractional_convolution(double delta, double mu,
                                                        const TimeGrid& grid,
                                                        std::span<const double> cell_values)
{
    const double h = grid.uniform_step();
    if (grid.size() < 2 || h == 0.0)
        throw std::invalid_argument("apply_fractional_convolution: grid must be uniform");
    if (cell_values.size() + 1 != grid.size())
        throw std::invalid_argument("apply_fractional_convolution: need one value per cell");
    const std::size_t n = grid.size();
    const auto omega = fractional_convolution_weights(delta, mu, h, n - 1);
    std::vector<double> out(n, 0.0);
    for (std::size_t t = 1; t < n; ++t)
    {
        double s = 0.0;
        for (std::size_t i = 0; i < t; ++i)
            s += omega[t - i - 1] * cell_values[i];
        out[t] = s;
    }
    return out;
}

namespace detail
{

inline void check_factorization(const ModeKernel& k, double delta, const TimeGrid& grid)
{
    k.validate();
    if (!(delta > 0.0 && delta < k.gamma - 0.5))
        throw std::domain_error("factorization: delta must lie in (0, gamma - 1/2)");
    if (grid.size() < 2 || grid.front() != 0.0 || grid.uniform_step() == 0.0)
        throw std::invalid_argument("factorization: fine grid must be uniform and start at 0");
}

inline TimeGrid cell_midpoints(const TimeGrid& grid)
{
    std::vector<double> m(grid.size() - 1);
    for (std::size_t i = 0; i + 1 < grid.size(); ++i)
        m[i] = 0.5 * (grid[i] + grid[i + 1]);
    return TimeGrid(std::move(m));
}

}  // namespace detail

/*!
 * n_paths factorized paths sharing one factorization of the midpoint Gram
 * matrix; path p uses the stream of path index first_path + p.
 */
inline std::vector<std::vector<double>> factorized_samples(const ModeKernel& k, double delta,
                                                           const TimeGrid& fine_grid,
                                                           SeedSpec seed, std::size_t n_paths,
                                                           std::uint64_t first_path = 0,
                                                           const QuadratureConfig& cfg = {})
{
    detail::check_factorization(k, delta, fine_grid);
    const ModeKernel inner{k.mu, k.weight, k.gamma - delta};
    const TimeGrid mid = detail::cell_midpoints(fine_grid);
    const auto factor = detail::make_active_factor(gram(inner, mid, cfg).values);
    std::vector<std::vector<double>> out;
    out.reserve(n_paths);
    std::vector<double> f(mid.size());
    std::vector<double> xi;
    for (std::size_t p = 0; p < n_paths; ++p)
    {
        RandomStream rs(seed, first_path + p, 0);
        detail::correlate(factor, rs, f, xi);
        out.push_back(apply_fractional_convolution(delta, k.mu, fine_grid, f));
    }
    return out;
}

/*!
 * One path of Z_gamma on the fine grid via the factorization construction:
 * Z_{gamma - delta} is sampled exactly at the cell midpoints, held constant
 * on each cell, and passed through the product-integrated B_delta.
 */
inline std::vector<double> factorized_sample(const ModeKernel& k, double delta,
                                             const TimeGrid& fine_grid, SeedSpec seed,
                                             std::uint64_t path = 0,
                                             const QuadratureConfig& cfg = {})
{
    return factorized_samples(k, delta, fine_grid, seed, 1, path, cfg).front();
}

/*!
 * Exact variance at fine_grid[n] of the discretized factorization
 * construction (the law of factorized_sample at that point).
 *
 * With c_i the product-integration weights and p_i the cell midpoints,
 *   Var = w / Gamma(g')^2 int_0^{t_n} F(r)^2 dr,
 *   F(r) = sum_i c_i (p_i - r)_+^{g'-1} e^{-mu (p_i - r)},   g' = gamma - delta.
 * F is singular only at the right end of each interval between midpoints;
 * there the offset s = v^P makes the integrand smooth for a Gauss-Legendre rule.
 */
inline double factorized_variance(const ModeKernel& k, double delta,
                                  const TimeGrid& fine_grid, std::size_t n)
{
    detail::check_factorization(k, delta, fine_grid);
    if (n >= fine_grid.size())
        throw std::out_of_range("factorized_variance: grid index out of range");
    if (n == 0)
        return 0.0;

    const double h = fine_grid.uniform_step();
    const double g = k.gamma - delta;
    const double mu = k.mu;
    const auto omega = fractional_convolution_weights(delta, mu, h, n);
    // c_i for cells i = 0..n-1 at target t_n
    std::vector<double> c(n);
    for (std::size_t i = 0; i < n; ++i)
        c[i] = omega[n - i - 1];

    const double power = std::max(6.0, std::ceil(4.0 / (2.0 * g - 1.0)));
    const int nodes = 64;
    auto [v, gw] = gauss_legendre_unit(nodes);
    std::vector<double> off(nodes);
    std::vector<double> wt(nodes);
    for (int m = 0; m < nodes; ++m)
    {
        off[m] = std::pow(v[m], power);
        wt[m] = gw[m] * power * std::pow(v[m], power - 1.0);
    }
    auto kern = [g, mu](double u) { return std::pow(u, g - 1.0) * std::exp(-mu * u); };

    // First interval [0, p_0]: u_i = h (i + s/2).
    double first = 0.0;
    {
        std::vector<double> f(nodes, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (int m = 0; m < nodes; ++m)
                f[m] += c[i] * kern(h * (static_cast<double>(i) + 0.5 * off[m]));
        for (int m = 0; m < nodes; ++m)
            first += wt[m] * f[m] * f[m];
        first *= 0.5 * h;
    }

    // Interval [p_{k-1}, p_k]: u_i = h (i - k + s), i >= k.
    std::vector<double> table(n * nodes);
    for (std::size_t d = 0; d + 1 < n; ++d)
        for (int m = 0; m < nodes; ++m)
            table[d * nodes + m] = kern(h * (static_cast<double>(d) + off[m]));
    std::vector<double> parts(n, 0.0);
    std::vector<double> f(nodes);
    for (std::size_t kk = 1; kk < n; ++kk)
    {
        std::fill(f.begin(), f.end(), 0.0);
        for (std::size_t i = kk; i < n; ++i)
        {
            const double ci = c[i];
            const double* row = table.data() + (i - kk) * nodes;
            for (int m = 0; m < nodes; ++m)
                f[m] += ci * row[m];
        }
        double s = 0.0;
        for (int m = 0; m < nodes; ++m)
            s += wt[m] * f[m] * f[m];
        parts[kk] = s * h;
    }
    parts[0] = first;
    const double gg = specfun::gamma_fn(g);
    return k.weight / (gg * gg) * pairwise_sum(parts);
}

}  // namespace stwm
