#pragma once

// Temporal covariance of a single eigenmode.
//
// The mode process is the scalar stochastic convolution
//   Z(t) = sqrt(w) / Gamma(gamma) int_0^t (t - s)^{gamma-1} e^{-mu (t-s)} dB(s)
// driven by a standard Brownian motion B, so that
//   q(s, t) = w / Gamma(gamma)^2 int_0^{s^t} [(s-r)(t-r)]^{gamma-1}
//             e^{-mu (s + t - 2r)} dr.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "stwm/quadrature.hpp"
#include "stwm/specfun.hpp"

namespace stwm
{

//! Temporal law of one eigenmode: decay rate, noise weight, fractional order.
struct ModeKernel
{
    double mu = 1.0;
    double weight = 1.0;
    double gamma = 1.0;

    void validate() const
    {
        if (!(mu > 0.0) || !std::isfinite(mu))
            throw std::domain_error("ModeKernel: mu must be positive");
        if (!(weight > 0.0) || !std::isfinite(weight))
            throw std::domain_error("ModeKernel: weight must be positive");
        if (!(gamma > 0.0) || !std::isfinite(gamma))
            throw std::domain_error("ModeKernel: gamma must be positive");
    }

    //! Finite pointwise variance requires gamma > 1/2.
    bool has_finite_variance() const { return gamma > 0.5; }
};

namespace detail
{

inline void require_finite_variance(const ModeKernel& k, const char* fn)
{
    k.validate();
    if (!k.has_finite_variance())
    {
        throw std::domain_error(std::string(fn)
                                + ": gamma <= 1/2 gives infinite variance");
    }
}

// Breakpoints on [lo, hi]: the endpoints, `extra` points inside, and a
// geometric ladder scale * 2^k that resolves the e^{-x / scale} decay.
inline std::vector<double> ladder_breaks(double lo, double hi, double scale,
                                         std::initializer_list<double> extra)
{
    std::vector<double> b{lo, hi};
    for (double p : extra)
        if (p > lo && p < hi)
            b.push_back(p);
    for (double x = scale / 64.0; x < hi; x *= 2.0)
        if (x > lo)
            b.push_back(x);
    std::sort(b.begin(), b.end());
    b.erase(std::unique(b.begin(), b.end()), b.end());
    return b;
}

inline std::vector<double> map_breaks(std::vector<double> b, double power)
{
    for (auto& x : b)
        x = std::pow(x, power);
    return b;
}

/*
 * I(D, m) = int_0^m u^{g-1} (D + u)^{g-1} e^{-2 mu u} du, u = min(s,t) - r.
 *
 * For g < 1 the integrand is singular at u = 0. On [0, min(D, m)] the factor
 * (D + u)^{g-1} is bounded and v = u^g absorbs u^{g-1}. On [D, m] (or all of
 * [0, m] when D = 0) v = u^{2g-1} absorbs u^{2g-2}, leaving
 * (1 + D/u)^{g-1}, which lies in [2^{g-1}, 1].
 */
inline double mode_integral(double mu, double g, double gap, double m,
                            const QuadratureConfig& cfg)
{
    const double scale = 0.5 / mu;
    const double peak = g > 1.0 ? (g - 1.0) / mu : 0.0;

    if (g == 1.0)
    {
        auto f = [mu](double u) { return std::exp(-2.0 * mu * u); };
        const auto b = ladder_breaks(0.0, m, scale, {gap});
        return integrate(f, std::span<const double>(b), cfg).value;
    }
    if (g > 1.0)
    {
        auto f = [mu, g, gap](double u) {
            if (u <= 0.0)
                return 0.0;
            return std::exp((g - 1.0) * (std::log(u) + std::log(gap + u))
                            - 2.0 * mu * u);
        };
        const auto b = ladder_breaks(0.0, m, scale, {gap, peak});
        return integrate(f, std::span<const double>(b), cfg).value;
    }

    double total = 0.0;
    const double split = std::min(gap, m);
    if (split > 0.0)
    {
        const double inv = 1.0 / g;
        auto f = [mu, g, gap, inv](double v) {
            const double u = std::pow(v, inv);
            return inv * std::pow(gap + u, g - 1.0) * std::exp(-2.0 * mu * u);
        };
        const auto b = map_breaks(ladder_breaks(0.0, split, scale, {}), g);
        total += integrate(f, std::span<const double>(b), cfg).value;
    }
    if (split < m)
    {
        const double p = 2.0 * g - 1.0;
        const double inv = 1.0 / p;
        auto f = [mu, g, gap, inv](double v) {
            const double u = std::pow(v, inv);
            const double ratio = u > 0.0 ? gap / u : 0.0;
            return inv * std::pow(1.0 + ratio, g - 1.0) * std::exp(-2.0 * mu * u);
        };
        const auto b = map_breaks(ladder_breaks(split, m, scale, {}), p);
        total += integrate(f, std::span<const double>(b), cfg).value;
    }
    return total;
}

}  // namespace detail

/*!
 * Covariance q(s, t) of the mode process, by adaptive quadrature.
 *
 * Arguments are sorted first so the result is exactly symmetric. Returns 0
 * when min(s, t) = 0, and also when e^{-mu |t - s|} underflows (mu |t-s| >
 * 745), where the true value is below the smallest double. Throws
 * QuadratureError on non-convergence.
 */
inline double mode_cov(const ModeKernel& k, double s, double t,
                       const QuadratureConfig& cfg = {})
{
    k.validate();
    cfg.validate();
    if (!(s >= 0.0) || !(t >= 0.0))
        throw std::domain_error("mode_cov: times must be nonnegative");
    const double m = std::min(s, t);
    const double gap = std::max(s, t) - m;
    if (m == 0.0)
        return 0.0;
    if (gap == 0.0)
        detail::require_finite_variance(k, "mode_cov");
    const double decay = std::exp(-k.mu * gap);
    if (decay == 0.0)
        return 0.0;
    const double gg = specfun::gamma_fn(k.gamma);
    const double integral = detail::mode_integral(k.mu, k.gamma, gap, m, cfg);
    return k.weight / (gg * gg) * decay * integral;
}

/*!
 * Variance q(t, t) in closed form,
 *   w / (Gamma(gamma)^2 (2 mu)^{2 gamma - 1}) * gamma_inc(2 gamma - 1, 2 mu t).
 */
inline double mode_var(const ModeKernel& k, double t)
{
    detail::require_finite_variance(k, "mode_var");
    if (!(t >= 0.0))
        throw std::domain_error("mode_var: time must be nonnegative");
    if (t == 0.0)
        return 0.0;
    const double a = 2.0 * k.gamma - 1.0;
    const double gg = specfun::gamma_fn(k.gamma);
    return k.weight / (gg * gg) * std::pow(2.0 * k.mu, -a)
           * specfun::lower_incomplete_gamma(a, 2.0 * k.mu * t);
}

//! lim_{t -> inf} q(t, t) = Gamma(gamma - 1/2) / (2 sqrt(pi) Gamma(gamma)) mu^{1-2gamma} w.
inline double stationary_variance(const ModeKernel& k)
{
    detail::require_finite_variance(k, "stationary_variance");
    return specfun::gamma_fn(k.gamma - 0.5)
           / (2.0 * std::sqrt(std::numbers::pi) * specfun::gamma_fn(k.gamma))
           * std::pow(k.mu, 1.0 - 2.0 * k.gamma) * k.weight;
}

/*!
 * lim_{t -> inf} q(t, t + h) for mu = kappa, w = 1: a Matern function of the
 * lag with smoothness gamma - 1/2. At h = 0 the continuous extension (the
 * stationary variance) is returned.
 */
inline double temporal_matern_limit(double gamma, double kappa, double h)
{
    if (!(gamma > 0.5))
        throw std::domain_error("temporal_matern_limit: gamma must exceed 1/2");
    if (!(kappa > 0.0))
        throw std::domain_error("temporal_matern_limit: kappa must be positive");
    if (!std::isfinite(h))
        throw std::domain_error("temporal_matern_limit: lag must be finite");
    if (h == 0.0)
        return stationary_variance({kappa, 1.0, gamma});
    const double nu = gamma - 0.5;
    const double x = kappa * std::abs(h);
    if (gamma == std::floor(gamma) && gamma <= 20.0)
    {
        // Half-integer order: x^nu K_nu(x) is e^{-x} times a polynomial.
        const int p = static_cast<int>(gamma) - 1;
        double poly = 0.0;
        double coef = 1.0;
        for (int j = 0; j <= p; ++j)
        {
            poly += coef * std::pow(x, p - j);
            coef *= static_cast<double>((p + j + 1) * (p - j)) / (2.0 * (j + 1));
        }
        return std::exp(-x) * poly
               / (std::pow(2.0, gamma) * specfun::gamma_fn(gamma) * std::pow(kappa, 2.0 * gamma - 1.0));
    }
    const double k = specfun::bessel_k(nu, x);
    if (k == 0.0)
        return 0.0;
    return std::pow(2.0, 0.5 - gamma) * std::pow(kappa, 1.0 - 2.0 * gamma)
           / (std::sqrt(std::numbers::pi) * specfun::gamma_fn(gamma))
           * std::pow(x, nu) * k;
}

/*!
 * Diagonal square-function ratio
 *   int_0^inf t^{2(gamma-1-delta)} e^{-2 mu t} dt / mu^{1 + 2 delta - 2 gamma}
 * in closed form, Gamma(a) / 2^a with a = 2 gamma - 2 delta - 1. The value
 * does not depend on mu.
 */
inline double square_function_ratio(const ModeKernel& k, double delta)
{
    k.validate();
    if (!(delta >= 0.0))
        throw std::domain_error("square_function_ratio: delta must be nonnegative");
    const double a = 2.0 * k.gamma - 2.0 * delta - 1.0;
    if (!(a > 0.0))
        throw std::domain_error("square_function_ratio: gamma <= 1/2 + delta diverges");
    return specfun::gamma_fn(a) * std::pow(2.0, -a);
}

//! The same ratio with the time integral evaluated by quadrature.
inline double square_function_ratio_quadrature(const ModeKernel& k, double delta,
                                               const QuadratureConfig& cfg = {})
{
    k.validate();
    cfg.validate();
    if (!(delta >= 0.0))
        throw std::domain_error("square_function_ratio: delta must be nonnegative");
    const double a = 2.0 * k.gamma - 2.0 * delta - 1.0;
    if (!(a > 0.0))
        throw std::domain_error("square_function_ratio: gamma <= 1/2 + delta diverges");

    const double mu = k.mu;
    const double scale = 0.5 / mu;
    // Beyond 2 mu t = 2a + 60 the tail is below 1e-20 of Gamma(a).
    const double upper = (2.0 * a + 60.0) * scale;
    const double peak = (a - 1.0) * scale;
    double integral = 0.0;
    if (a < 1.0)
    {
        const double inv = 1.0 / a;
        auto f = [mu, inv](double v) {
            return inv * std::exp(-2.0 * mu * std::pow(v, inv));
        };
        const auto b = detail::map_breaks(detail::ladder_breaks(0.0, upper, scale, {}), a);
        integral = integrate(f, std::span<const double>(b), cfg).value;
    }
    else
    {
        auto f = [mu, a](double t) {
            if (t <= 0.0)
                return a == 1.0 ? 1.0 : 0.0;
            return std::exp((a - 1.0) * std::log(t) - 2.0 * mu * t);
        };
        const auto b = detail::ladder_breaks(0.0, upper, scale, {peak});
        integral = integrate(f, std::span<const double>(b), cfg).value;
    }
    return integral / std::pow(mu, -a);
}

}  // namespace stwm
