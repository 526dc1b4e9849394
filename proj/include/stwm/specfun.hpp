#pragma once

// Special functions used by the covariance formulas: Gamma, log-Gamma, the
// lower incomplete Gamma function, the modified Bessel function of the second
// kind K_nu, and the Matern covariance built from them.
//
// Everything here is a pure function of its scalar arguments.

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

namespace stwm::specfun
{

namespace detail
{

// Lanczos approximation, g = 7, nine coefficients.
inline constexpr double lanczos_g = 7.0;
inline constexpr std::array<double, 9> lanczos_coef = {
    0.99999999999980993,  676.5203681218851,     -1259.1392167224028,
    771.32342877765313,   -176.61502916214059,   12.507343278686905,
    -0.13857109526572012, 9.9843695780195716e-6, 1.5056327351493116e-7};

inline double lanczos_series(double z)
{
    // z is the shifted argument (x - 1)
    double a = lanczos_coef[0];
    for (std::size_t i = 1; i < lanczos_coef.size(); ++i)
        a += lanczos_coef[i] / (z + static_cast<double>(i));
    return a;
}

// Taylor coefficients of 1/Gamma(1+z) about z = 0.
inline constexpr std::array<double, 30> rgamma1p_coef = {
    1.0,
    0.57721566490153286061,
    -0.65587807152025388108,
    -0.042002635034095235529,
    0.1665386113822914895,
    -0.042197734555544336748,
    -0.0096219715278769735621,
    0.0072189432466630995424,
    -0.0011651675918590651121,
    -0.00021524167411495097282,
    0.00012805028238811618615,
    -0.000020134854780788238656,
    -1.2504934821426706573e-6,
    1.1330272319816958824e-6,
    -2.0563384169776071035e-7,
    6.1160951044814158179e-9,
    5.0020076444692229301e-9,
    -1.1812745704870201446e-9,
    1.0434267116911005105e-10,
    7.782263439905071254e-12,
    -3.6968056186422057082e-12,
    5.100370287454475979e-13,
    -2.0583260535665067832e-14,
    -5.3481225394230179824e-15,
    1.2267786282382607902e-15,
    -1.1812593016974587695e-16,
    1.1866922547516003326e-18,
    1.4123806553180317816e-18,
    -2.2987456844353702066e-19,
    1.7144063219273374334e-20};

inline void domain_check(bool ok, const char* fn, const std::string& what)
{
    if (!ok)
        throw std::domain_error(std::string(fn) + ": " + what);
}

}  // namespace detail

//! Largest argument for which Gamma(x) is finite in double precision.
inline constexpr double gamma_max_arg = 171.6243769563027;

//! Natural log of Gamma(x) for x > 0.
inline double log_gamma(double x)
{
    detail::domain_check(x > 0.0 && std::isfinite(x), "log_gamma",
                         "argument must be positive and finite");
    if (x < 0.5)
    {
        // Gamma(x) = Gamma(x + 1) / x keeps the Lanczos argument >= 1/2
        return log_gamma(x + 1.0) - std::log(x);
    }
    const double z = x - 1.0;
    const double t = z + detail::lanczos_g + 0.5;
    return 0.5 * std::log(2.0 * std::numbers::pi) + (z + 0.5) * std::log(t)
           - t + std::log(detail::lanczos_series(z));
}

//! Gamma(x) for x > 0; throws std::overflow_error beyond gamma_max_arg.
inline double gamma_fn(double x)
{
    detail::domain_check(x > 0.0 && !std::isnan(x), "gamma_fn",
                         "argument must be positive");
    if (x > gamma_max_arg)
        throw std::overflow_error("gamma_fn: argument exceeds 171.62");
    if (x < 0.5)
        return gamma_fn(x + 1.0) / x;
    if (x == std::floor(x) && x <= 23.0)
    {
        double f = 1.0;
        for (int k = 2; k < static_cast<int>(x); ++k)
            f *= k;
        return f;
    }
    const double z = x - 1.0;
    const double t = z + detail::lanczos_g + 0.5;
    const double series = detail::lanczos_series(z);
    // Split t^(z+1/2) so large arguments do not overflow before exp(-t).
    const double half_pow = std::pow(t, 0.5 * (z + 0.5));
    return std::sqrt(2.0 * std::numbers::pi) * half_pow * (half_pow * std::exp(-t))
           * series;
}

//! Beta function via Gamma.
inline double beta_fn(double a, double b)
{
    detail::domain_check(a > 0.0 && b > 0.0, "beta_fn",
                         "arguments must be positive");
    if (a + b < 170.0)
        return gamma_fn(a) * gamma_fn(b) / gamma_fn(a + b);
    return std::exp(log_gamma(a) + log_gamma(b) - log_gamma(a + b));
}

/*!
 * Lower incomplete Gamma function gamma(a, x) = int_0^x u^{a-1} e^{-u} du.
 *
 * Series for x < a + 1, modified Lentz continued fraction for the upper
 * function otherwise.
 */
inline double lower_incomplete_gamma(double a, double x)
{
    detail::domain_check(a > 0.0, "lower_incomplete_gamma", "a must be positive");
    detail::domain_check(x >= 0.0 && !std::isnan(x), "lower_incomplete_gamma",
                         "x must be nonnegative");
    if (x == 0.0)
        return 0.0;
    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr int max_iter = 10000;

    if (x < a + 1.0)
    {
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < max_iter; ++n)
        {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * eps)
                break;
        }
        return sum * std::exp(a * std::log(x) - x);
    }

    // Upper function Gamma(a, x) by continued fraction.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < max_iter; ++i)
    {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny)
            d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny)
            c = tiny;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps)
            break;
    }
    const double upper = std::exp(a * std::log(x) - x) * h;
    if (a <= gamma_max_arg)
        return gamma_fn(a) - upper;
    return std::exp(log_gamma(a)) - upper;
}

/*!
 * Modified Bessel function of the second kind K_nu(x), nu >= 0, x > 0.
 *
 * The order is reduced to mu = nu - round(nu) in [-1/2, 1/2]. K_mu and
 * K_{mu+1} come from Temme's series for x < 2 and from Steed's continued
 * fraction for x >= 2; forward recurrence then reaches K_nu. Returns 0 once
 * the result underflows (x beyond roughly 705).
 */
inline double bessel_k(double nu, double x)
{
    detail::domain_check(nu >= 0.0 && std::isfinite(nu), "bessel_k",
                         "order must be nonnegative");
    detail::domain_check(x > 0.0 && !std::isnan(x), "bessel_k",
                         "argument must be positive");
    if (x > 745.0)
        return 0.0;

    constexpr double eps = std::numeric_limits<double>::epsilon();
    constexpr double pi = std::numbers::pi;
    constexpr int max_iter = 100000;

    const int nl = static_cast<int>(nu + 0.5);
    const double mu = nu - nl;
    const double mu2 = mu * mu;
    const double xi = 1.0 / x;
    const double xi2 = 2.0 * xi;

    double k_mu = 0.0;
    double k_mu1 = 0.0;

    if (x < 2.0)
    {
        const double x2 = 0.5 * x;
        const double pimu = pi * mu;
        const double fact = std::abs(pimu) < eps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < eps ? 1.0 : std::sinh(e) / e;

        // gam1 = (1/G(1-mu) - 1/G(1+mu)) / (2 mu), gam2 = their mean.
        double gam1 = 0.0;
        double gam2 = 0.0;
        {
            const auto& c = detail::rgamma1p_coef;
            double p_even = 1.0;
            for (std::size_t k = 0; k < c.size(); k += 2)
            {
                gam2 += c[k] * p_even;
                if (k + 1 < c.size())
                    gam1 -= c[k + 1] * p_even;
                p_even *= mu2;
            }
        }
        const double gampl = gam2 - mu * gam1;  // 1/Gamma(1 + mu)
        const double gammi = gam2 + mu * gam1;  // 1/Gamma(1 - mu)

        double ff = fact * (gam1 * std::cosh(e) + gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / gampl;
        double q = 0.5 / (e * gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        for (int i = 1; i <= max_iter; ++i)
        {
            ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
            c *= d / i;
            p /= i - mu;
            q /= i + mu;
            const double del = c * ff;
            sum += del;
            sum1 += c * (p - i * ff);
            if (std::abs(del) < std::abs(sum) * eps)
                break;
        }
        k_mu = sum;
        k_mu1 = sum1 * xi2;
    }
    else
    {
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d;
        double delh = d;
        double q1 = 0.0;
        double q2 = 1.0;
        const double a1 = 0.25 - mu2;
        double q = a1;
        double c = a1;
        double a = -a1;
        double s = 1.0 + q * delh;
        for (int i = 2; i <= max_iter; ++i)
        {
            a -= 2 * (i - 1);
            c = -a * c / i;
            const double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            const double dels = q * delh;
            s += dels;
            if (std::abs(dels / s) < eps)
                break;
        }
        h = a1 * h;
        k_mu = std::sqrt(pi / (2.0 * x)) * std::exp(-x) / s;
        k_mu1 = k_mu * (mu + x + 0.5 - h) * xi;
    }

    for (int i = 1; i <= nl; ++i)
    {
        const double next = (mu + i) * xi2 * k_mu1 + k_mu;
        k_mu = k_mu1;
        k_mu1 = next;
    }
    return k_mu;
}

/*!
 * Matern covariance
 *   2^{1-nu} sigma2 / Gamma(nu) (kappa r)^nu K_nu(kappa r),
 * continuously extended by sigma2 at r = 0.
 */
inline double matern_cov(double nu, double kappa, double sigma2, double dist)
{
    detail::domain_check(nu > 0.0, "matern_cov", "nu must be positive");
    detail::domain_check(kappa > 0.0, "matern_cov", "kappa must be positive");
    detail::domain_check(sigma2 > 0.0, "matern_cov", "sigma2 must be positive");
    detail::domain_check(dist >= 0.0, "matern_cov", "distance must be nonnegative");
    if (dist == 0.0)
        return sigma2;
    const double x = kappa * dist;
    const double k = bessel_k(nu, x);
    if (!std::isfinite(k))
        return sigma2;  // x^nu K_nu(x) has already reached its x -> 0 limit
    const double log_scale = (1.0 - nu) * std::log(2.0) - log_gamma(nu)
                             + nu * std::log(x);
    return sigma2 * std::exp(log_scale) * k;
}

}  // namespace stwm::specfun
