#pragma once

// Adaptive Gauss-Kronrod (7/15) quadrature over a list of breakpoints, with
// global error control: the panel carrying the largest error estimate is
// bisected until the summed estimate meets the tolerance.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace stwm
{

struct QuadratureConfig
{
    double rel_tol = 1e-10;
    double abs_tol = 1e-14;
    int max_subdivisions = 2000;

    void validate() const
    {
        if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
            throw std::invalid_argument("QuadratureConfig: tolerances must be positive");
        if (max_subdivisions < 16)
            throw std::invalid_argument("QuadratureConfig: max_subdivisions must be >= 16");
    }
};

struct QuadratureResult
{
    double value = 0.0;
    double error = 0.0;
    int subdivisions = 0;
};

//! Thrown when the adaptive scheme exhausts its subdivision budget.
class QuadratureError : public std::runtime_error
{
  public:
    QuadratureError(const std::string& what, double estimate, double error_bound)
        : std::runtime_error(what), estimate_(estimate), error_bound_(error_bound)
    {
    }

    double estimate() const noexcept { return estimate_; }
    double error_bound() const noexcept { return error_bound_; }

  private:
    double estimate_;
    double error_bound_;
};

namespace detail
{

inline constexpr std::array<double, 8> gk15_nodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> gk15_kronrod_weights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for the odd-indexed Kronrod nodes (1, 3, 5) and the centre.
inline constexpr std::array<double, 4> gk15_gauss_weights = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel
{
    double a;
    double b;
    double value;
    double error;

    bool operator<(const Panel& other) const { return error < other.error; }
};

template <class F>
Panel gk15(const F& f, double a, double b)
{
    constexpr double eps = std::numeric_limits<double>::epsilon();
    const double centre = 0.5 * (a + b);
    const double half = 0.5 * (b - a);

    const double fc = f(centre);
    double kronrod = fc * gk15_kronrod_weights[7];
    double gauss = fc * gk15_gauss_weights[3];
    double abs_sum = std::abs(kronrod);
    std::array<double, 7> f1{};
    std::array<double, 7> f2{};
    for (std::size_t i = 0; i < 7; ++i)
    {
        const double dx = half * gk15_nodes[i];
        f1[i] = f(centre - dx);
        f2[i] = f(centre + dx);
        kronrod += gk15_kronrod_weights[i] * (f1[i] + f2[i]);
        abs_sum += gk15_kronrod_weights[i] * (std::abs(f1[i]) + std::abs(f2[i]));
        if (i % 2 == 1)
            gauss += gk15_gauss_weights[i / 2] * (f1[i] + f2[i]);
    }
    const double mean = 0.5 * kronrod;
    double asc = gk15_kronrod_weights[7] * std::abs(fc - mean);
    for (std::size_t i = 0; i < 7; ++i)
        asc += gk15_kronrod_weights[i] * (std::abs(f1[i] - mean) + std::abs(f2[i] - mean));

    const double result = kronrod * half;
    const double res_abs = abs_sum * std::abs(half);
    const double res_asc = asc * std::abs(half);
    double err = std::abs((kronrod - gauss) * half);
    if (res_asc != 0.0 && err != 0.0)
        err = res_asc * std::min(1.0, std::pow(200.0 * err / res_asc, 1.5));
    if (res_abs > std::numeric_limits<double>::min() / (50.0 * eps))
        err = std::max(err, 50.0 * eps * res_abs);
    return {a, b, result, err};
}

}  // namespace detail

/*!
 * Integrate f over [breaks.front(), breaks.back()], starting from the panels
 * delimited by the (sorted) breakpoints. Throws QuadratureError when the
 * tolerance max(abs_tol, rel_tol * |I|) is not reached within
 * cfg.max_subdivisions bisections.
 */
template <class F>
QuadratureResult integrate(const F& f, std::span<const double> breaks,
                           const QuadratureConfig& cfg = {})
{
    if (breaks.size() < 2)
        throw std::invalid_argument("integrate: need at least two breakpoints");

    std::priority_queue<detail::Panel> heap;
    double total = 0.0;
    double total_err = 0.0;
    for (std::size_t i = 0; i + 1 < breaks.size(); ++i)
    {
        if (!(breaks[i + 1] > breaks[i]))
            continue;
        auto p = detail::gk15(f, breaks[i], breaks[i + 1]);
        total += p.value;
        total_err += p.error;
        heap.push(p);
    }

    int subdivisions = 0;
    auto tolerance = [&] { return std::max(cfg.abs_tol, cfg.rel_tol * std::abs(total)); };
    while (total_err > tolerance() && !heap.empty())
    {
        if (subdivisions >= cfg.max_subdivisions)
        {
            throw QuadratureError("integrate: subdivision limit reached", total,
                                  total_err);
        }
        const auto worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        if (!(mid > worst.a && mid < worst.b))
        {
            throw QuadratureError("integrate: panel width underflow", total, total_err);
        }
        auto left = detail::gk15(f, worst.a, mid);
        auto right = detail::gk15(f, mid, worst.b);
        total += left.value + right.value - worst.value;
        total_err += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
        ++subdivisions;
    }

    // Resum to shed the drift accumulated by incremental updates.
    double value = 0.0;
    double err = 0.0;
    while (!heap.empty())
    {
        value += heap.top().value;
        err += heap.top().error;
        heap.pop();
    }
    return {value, err, subdivisions};
}

template <class F>
QuadratureResult integrate(const F& f, double a, double b, const QuadratureConfig& cfg = {})
{
    const std::array<double, 2> breaks{a, b};
    return integrate(f, std::span<const double>(breaks), cfg);
}

//! Nodes and weights of the n-point Gauss-Legendre rule on [0, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre_unit(int n)
{
    if (n < 1)
        throw std::invalid_argument("gauss_legendre_unit: n must be positive");
    std::vector<double> x(n);
    std::vector<double> w(n);
    for (int i = 0; i < (n + 1) / 2; ++i)
    {
        double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it)
        {
            double p0 = 1.0;
            double p1 = 0.0;
            for (int k = 1; k <= n; ++k)
            {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
            }
            dp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / dp;
            z -= dz;
            if (std::abs(dz) < 1e-16)
                break;
        }
        const double wt = 2.0 / ((1.0 - z * z) * dp * dp);
        x[i] = 0.5 * (1.0 - z);
        x[n - 1 - i] = 0.5 * (1.0 + z);
        w[i] = 0.5 * wt;
        w[n - 1 - i] = 0.5 * wt;
    }
    return {x, w};
}

}  // namespace stwm
