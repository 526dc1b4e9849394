#pragma once

// Regularity and covariance-structure analysis of a SpectralModel: exponent
// conditions, the Hilbert-Schmidt series and its Weyl tail, truncated field
// covariances, long-time limits, separability and Hölder slopes.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include "stwm/kernel.hpp"
#include "stwm/linalg.hpp"
#include "stwm/quadrature.hpp"
#include "stwm/rng.hpp"
#include "stwm/spectral.hpp"
#include "stwm/specfun.hpp"

namespace stwm
{

//! n time derivatives, Hölder exponent tau, spatial smoothness sigma.
struct RegularityQuery
{
    int n = 0;
    double tau = 0.0;
    double sigma = 0.0;

    void validate() const
    {
        if (n < 0)
            throw std::invalid_argument("n: must be a nonnegative integer");
        if (!(tau >= 0.0 && tau < 1.0))
            throw std::invalid_argument("tau: must lie in [0, 1)");
        if (!(sigma >= 0.0) || !std::isfinite(sigma))
            throw std::invalid_argument("sigma: must be nonnegative");
    }
};

//! Slack (lhs - rhs) of each inequality; positive means satisfied.
struct Margins
{
    double strict_gamma = 0.0;
    double holder_gamma = 0.0;
    double spectral = 0.0;
};

struct HsSum
{
    double partial = 0.0;
    double tail = 0.0;
    bool diverges = false;
    double exponent = 0.0;  //!< Weyl exponent p of the terms, ~ j^p
};

struct RegularityReport
{
    bool satisfied = false;
    bool strict_ok = false;
    bool holder_ok = false;
    bool spectral_ok = false;
    double r = 0.0;
    Margins margins;
    HsSum hs;
};

namespace detail
{

// Rounding noise around an exact boundary is reported as exactly 0.
inline double snap_margin(double lhs, double rhs)
{
    const double m = lhs - rhs;
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs)});
    return std::abs(m) <= 64.0 * std::numeric_limits<double>::epsilon() * scale ? 0.0 : m;
}

inline double spectral_margin(const SpectralModel& model, const RegularityQuery& q)
{
    const double b = model.beta();
    const double lhs = b * model.gamma();
    const double rhs = model.dim() / 4.0 - model.alpha() / 2.0
                       + b * (q.n + q.tau + (1.0 + q.sigma) / 2.0);
    return snap_margin(lhs, rhs);
}

inline double hs_term_exponent(const SpectralModel& model, const RegularityQuery& q)
{
    return 2.0 * model.beta() * (q.sigma / 2.0 + q.n + q.tau + 0.5 - model.gamma());
}

inline std::vector<double> hs_terms(const SpectralModel& model, const RegularityQuery& q)
{
    const double e = hs_term_exponent(model, q);
    std::vector<double> terms(model.size());
    for (std::size_t j = 1; j <= model.size(); ++j)
        terms[j - 1] = std::pow(model.basis().lambda(j), e)
                       * std::pow(model.basis_tilde().lambda(j), -model.alpha());
    return terms;
}

}  // namespace detail

/*!
 * Weyl-law test and truncated sum of
 *   sum_j lambda_j^{2 beta (sigma/2 + n + tau + 1/2 - gamma)} lambda~_j^{-alpha}.
 *
 * The terms behave like j^p with p = (4/d)[beta(n + tau + (1+sigma)/2)
 * - beta gamma - alpha/2], so the series is finite iff p < -1. For finite
 * series the tail beyond J is bounded by C J^{p+1} / (-p-1), with C from the
 * measured two-sided Weyl ratios.
 */
inline HsSum hs_sum(const SpectralModel& model, const RegularityQuery& q)
{
    q.validate();
    const double m = detail::spectral_margin(model, q);
    HsSum out;
    out.exponent = -1.0 - 4.0 * m / model.dim();
    out.diverges = !(m > 0.0);
    const auto terms = detail::hs_terms(model, q);
    out.partial = pairwise_sum(terms);
    if (out.diverges)
    {
        out.tail = std::numeric_limits<double>::infinity();
        return out;
    }
    const double c = weyl_majorant(model.basis(), detail::hs_term_exponent(model, q))
                     * weyl_majorant(model.basis_tilde(), -model.alpha());
    const double p = out.exponent;
    out.tail = c * std::pow(static_cast<double>(model.size()), p + 1.0) / (-p - 1.0);
    return out;
}

struct HsGrowth
{
    double early_increment = 0.0;  //!< S(J/4) - S(J/16)
    double late_increment = 0.0;   //!< S(J) - S(J/4)
    bool confirms_divergence = false;
};

/*!
 * Partial-sum growth test. A series with terms ~ j^p adds about
 * 4^{p+1} times as much over (J/4, J] as over (J/16, J/4]; divergence
 * (p >= -1) is confirmed when the late increment exceeds 0.9 times the
 * early one. Needs J >= 16.
 */
inline HsGrowth hs_growth(const SpectralModel& model, const RegularityQuery& q)
{
    q.validate();
    const std::size_t n = model.size();
    if (n < 16)
        throw std::invalid_argument("hs_growth: needs at least 16 modes");
    const auto terms = detail::hs_terms(model, q);
    const std::span<const double> all(terms);
    const double s16 = pairwise_sum(all.first(n / 16));
    const double s4 = pairwise_sum(all.first(n / 4));
    const double s1 = pairwise_sum(all);
    HsGrowth g{s4 - s16, s1 - s4, false};
    g.confirms_divergence = g.late_increment > 0.9 * g.early_increment;
    return g;
}

/*!
 * Evaluate the three exponent conditions with r = min(alpha/beta, sigma)
 * (r = sigma when beta = 0):
 *   strict:   gamma >  n + max(sigma - r, 1) / 2
 *   holder:   gamma >= n + (1 + max(sigma - r, 2 tau)) / 2
 *   spectral: beta gamma > d/4 - alpha/2 + beta (n + tau + (1 + sigma)/2)
 */
inline RegularityReport check_exponents(const SpectralModel& model, const RegularityQuery& q)
{
    q.validate();
    const double a = model.alpha();
    const double b = model.beta();
    const double g = model.gamma();
    RegularityReport rep;
    rep.r = b > 0.0 ? std::min(a / b, q.sigma) : q.sigma;
    const double excess = q.sigma - rep.r;
    rep.margins.strict_gamma = detail::snap_margin(g, q.n + std::max(excess, 1.0) / 2.0);
    rep.margins.holder_gamma
        = detail::snap_margin(g, q.n + (1.0 + std::max(excess, 2.0 * q.tau)) / 2.0);
    rep.margins.spectral = detail::spectral_margin(model, q);
    rep.strict_ok = rep.margins.strict_gamma > 0.0;
    rep.holder_ok = rep.margins.holder_gamma >= 0.0;
    rep.spectral_ok = rep.margins.spectral > 0.0;
    rep.satisfied = rep.strict_ok && rep.holder_ok && rep.spectral_ok;
    rep.hs = hs_sum(model, q);
    return rep;
}

struct FieldCovariance
{
    double value = 0.0;
    double tail_bound = 0.0;
    bool diverges = false;
};

/*!
 * C((s, x), (t, y)) = sum_{j <= J} q_j(s, t) e_j(x) e_j(y), with a bound on
 * the omitted modes from |q_j(s, t)| <= stationary variance of mode j and
 * sup e_j^2. When the variance series fails the Weyl test the tail is
 * infinite and `diverges` is set.
 */
inline FieldCovariance field_cov(const SpectralModel& model, double s, double t,
                                 const Point& x, const Point& y,
                                 const QuadratureConfig& cfg = {})
{
    model.require_finite_variance();
    std::vector<double> terms(model.size());
    for (std::size_t j = 1; j <= model.size(); ++j)
        terms[j - 1] = mode_cov(mode_params(model, j), s, t, cfg)
                       * model.basis().eval(j, x) * model.basis().eval(j, y);
    FieldCovariance out;
    out.value = pairwise_sum(terms);
    const RegularityQuery base{};
    const double m = detail::spectral_margin(model, base);
    out.diverges = !(m > 0.0);
    if (out.diverges)
    {
        out.tail_bound = std::numeric_limits<double>::infinity();
        return out;
    }
    const double p = -1.0 - 4.0 * m / model.dim();
    const double g = model.gamma();
    const double c_stat = specfun::gamma_fn(g - 0.5)
                          / (2.0 * std::sqrt(std::numbers::pi) * specfun::gamma_fn(g));
    const double c = c_stat * model.basis().sup_square()
                     * weyl_majorant(model.basis(), model.beta() * (1.0 - 2.0 * g))
                     * weyl_majorant(model.basis_tilde(), -model.alpha());
    out.tail_bound = c * std::pow(static_cast<double>(model.size()), p + 1.0) / (-p - 1.0);
    return out;
}

struct MarginalCovariance
{
    std::vector<double> coefficients;  //!< stationary_variance of each mode
    std::vector<double> closed_form;   //!< c lambda_j^{beta(1-2gamma)} lambda~_j^{-alpha}
    double max_rel_diff = 0.0;
};

//! Eigenvalues of the t -> infinity marginal spatial covariance operator.
inline MarginalCovariance asymptotic_marginal_cov(const SpectralModel& model)
{
    model.require_finite_variance();
    const double g = model.gamma();
    const double c = specfun::gamma_fn(g - 0.5)
                     / (2.0 * std::sqrt(std::numbers::pi) * specfun::gamma_fn(g));
    MarginalCovariance out;
    out.coefficients.resize(model.size());
    out.closed_form.resize(model.size());
    for (std::size_t j = 1; j <= model.size(); ++j)
    {
        const double a = stationary_variance(mode_params(model, j));
        const double b = c * std::pow(model.basis().lambda(j), model.beta() * (1.0 - 2.0 * g))
                         * std::pow(model.basis_tilde().lambda(j), -model.alpha());
        out.coefficients[j - 1] = a;
        out.closed_form[j - 1] = b;
        out.max_rel_diff = std::max(out.max_rel_diff, std::abs(a - b) / std::abs(b));
    }
    return out;
}

struct TemporalSample
{
    std::size_t mode = 0;
    double s = 0.0;
    double t = 0.0;
    double rho = 0.0;
    double q = 0.0;
    double rel_error = 0.0;
};

//! q_a(1,2)/q_a(1,1) differs from q_b(1,2)/q_b(1,1): no common temporal factor.
struct RatioWitness
{
    std::size_t mode_a = 0;
    std::size_t mode_b = 0;
    double ratio_a = 0.0;
    double ratio_b = 0.0;
};

struct SeparabilityReport
{
    bool separable = false;
    bool verified = false;  //!< factorization checked (beta = 0) or witness found
    double max_rel_error = 0.0;
    std::vector<TemporalSample> profile;
    RatioWitness witness;
};

/*!
 * Separability of the space-time covariance, which holds exactly when
 * beta = 0. Then q_j(s, t) = rho(s, t) lambda~_j^{-alpha} with rho the mode
 * covariance at mu = 1, w = 1; this is checked on 3 random modes and 10
 * random (s, t) in (0, T]. Otherwise modes 1 and 2 give a ratio witness.
 */
inline SeparabilityReport separability_check(const SpectralModel& model,
                                             const QuadratureConfig& cfg = {},
                                             SeedSpec seed = {0x5e9a7a61u})
{
    model.require_finite_variance();
    SeparabilityReport rep;
    rep.separable = model.beta() == 0.0;
    if (rep.separable)
    {
        RandomStream rs(seed, 0, 0);
        const ModeKernel unit{1.0, 1.0, model.gamma()};
        const std::size_t nm = model.size();
        for (int k = 0; k < 3; ++k)
        {
            const auto j = std::min<std::size_t>(
                nm, 1 + static_cast<std::size_t>(rs.uniform() * static_cast<double>(nm)));
            const ModeKernel mk = mode_params(model, j);
            for (int i = 0; i < 10; ++i)
            {
                TemporalSample ts;
                ts.mode = j;
                ts.s = rs.uniform() * model.horizon();
                ts.t = rs.uniform() * model.horizon();
                ts.rho = mode_cov(unit, ts.s, ts.t, cfg);
                ts.q = mode_cov(mk, ts.s, ts.t, cfg);
                const double pred = ts.rho * mk.weight;
                ts.rel_error = pred == ts.q ? 0.0 : std::abs(ts.q - pred) / std::abs(pred);
                rep.max_rel_error = std::max(rep.max_rel_error, ts.rel_error);
                rep.profile.push_back(ts);
            }
        }
        rep.verified = rep.max_rel_error <= 1e-9;
        return rep;
    }
    if (model.size() < 2)
        return rep;
    const ModeKernel k1 = mode_params(model, 1);
    const ModeKernel k2 = mode_params(model, 2);
    rep.witness = {1, 2, mode_cov(k1, 1.0, 2.0, cfg) / mode_cov(k1, 1.0, 1.0, cfg),
                   mode_cov(k2, 1.0, 2.0, cfg) / mode_cov(k2, 1.0, 1.0, cfg)};
    const double diff = std::abs(rep.witness.ratio_a - rep.witness.ratio_b);
    rep.verified
        = diff > 1e-9 * std::max(std::abs(rep.witness.ratio_a), std::abs(rep.witness.ratio_b));
    return rep;
}

struct HolderEstimate
{
    double slope = 0.0;
    double intercept = 0.0;
    double residual = 0.0;  //!< RMS deviation of the log increments from the fit
    double theory = 0.0;    //!< 2 min(gamma - 1/2, 1)
    std::vector<double> lags;
    std::vector<double> increments;
};

inline QuadratureConfig holder_quadrature()
{
    return {1e-13, 1e-300, 5000};
}

/*!
 * Least-squares slope of log E|Z(t0+h) - Z(t0)|^2 against log h, from exact
 * increments q(t0+h, t0+h) + q(t0, t0) - 2 q(t0, t0+h).
 */
inline HolderEstimate estimate_holder(const ModeKernel& k, double t0,
                                      const std::vector<double>& lags,
                                      const QuadratureConfig& cfg = holder_quadrature())
{
    detail::require_finite_variance(k, "estimate_holder");
    if (!(t0 >= 1.0) || !std::isfinite(t0))
        throw std::invalid_argument("t0: must be at least 1");
    for (double h : lags)
        if (!(h > 0.0 && h <= 0.25))
            throw std::invalid_argument("lags: every lag must lie in (0, 1/4]");
    std::vector<double> sorted = lags;
    std::sort(sorted.begin(), sorted.end());
    if (std::unique(sorted.begin(), sorted.end()) - sorted.begin() < 2)
        throw std::invalid_argument("lags: degenerate lag set (need two distinct lags)");

    HolderEstimate est;
    est.lags = lags;
    est.theory = 2.0 * std::min(k.gamma - 0.5, 1.0);
    const double v0 = mode_var(k, t0);
    std::vector<double> lx;
    std::vector<double> ly;
    for (double h : lags)
    {
        const double inc = mode_var(k, t0 + h) + v0 - 2.0 * mode_cov(k, t0, t0 + h, cfg);
        if (!(inc > 0.0))
            throw std::runtime_error("estimate_holder: increment lost to cancellation at lag "
                                     + std::to_string(h));
        est.increments.push_back(inc);
        lx.push_back(std::log(h));
        ly.push_back(std::log(inc));
    }
    const double n = static_cast<double>(lx.size());
    double mx = 0.0;
    double my = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        mx += lx[i];
        my += ly[i];
    }
    mx /= n;
    my /= n;
    double sxx = 0.0;
    double sxy = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
    }
    est.slope = sxy / sxx;
    est.intercept = my - est.slope * mx;
    double ss = 0.0;
    for (std::size_t i = 0; i < lx.size(); ++i)
    {
        const double e = ly[i] - (est.intercept + est.slope * lx[i]);
        ss += e * e;
    }
    est.residual = std::sqrt(ss / n);
    return est;
}

//! Lags 2^{-k} for k = from..to.
inline std::vector<double> dyadic_lags(int from, int to)
{
    std::vector<double> out;
    for (int k = from; k <= to; ++k)
        out.push_back(std::ldexp(1.0, -k));
    return out;
}

}  // namespace stwm
