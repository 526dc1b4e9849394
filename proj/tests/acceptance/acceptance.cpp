// Acceptance checks. `stwm_acceptance` runs every criterion; `stwm_acceptance N`
// runs criterion N only. One PASS/FAIL line per criterion; exit status 1 if
// any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "stwm/analysis.hpp"
#include "stwm/kernel.hpp"
#include "stwm/rng.hpp"
#include "stwm/sampler.hpp"
#include "stwm/specfun.hpp"
#include "stwm/spectral.hpp"

using namespace stwm;

namespace
{

constexpr double pi = std::numbers::pi;

struct Outcome
{
    bool pass = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what)
    {
        if (!ok)
        {
            pass = false;
            detail << " [failed: " << what << "]";
        }
    }
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

SpectralModel model(int d, double alpha, double beta, double gamma, std::size_t J, double T,
                    double kappa2 = 0.0)
{
    ModelConfig c;
    c.d = d;
    c.extents.assign(d, pi);
    c.kappa2 = kappa2;
    c.kappa2_tilde = kappa2;
    c.count = J;
    c.alpha = alpha;
    c.beta = beta;
    c.gamma = gamma;
    c.horizon = T;
    return SpectralModel(c);
}

// 1. gamma = 1 against the Ornstein-Uhlenbeck covariance.
void ou_oracle(Outcome& o)
{
    RandomStream rs({20261016}, 1, 0);
    double worst = 0.0;
    int zeros = 0;
    for (int i = 0; i < 10000; ++i)
    {
        const double mu = 0.1 + 49.9 * rs.uniform();
        const double w = 0.1 + 9.9 * rs.uniform();
        const double s = 20.0 * rs.uniform();
        const double t = 20.0 * rs.uniform();
        const double m = std::min(s, t);
        // e^{-mu|t-s|} - e^{-mu(s+t)} = -e^{-mu|t-s|} expm1(-2 mu min(s,t))
        const double exact = -w * std::exp(-mu * std::abs(t - s)) * std::expm1(-2.0 * mu * m)
                             / (2.0 * mu);
        const double got = mode_cov({mu, w, 1.0}, s, t);
        if (exact == 0.0)
        {
            ++zeros;
            o.require(got == 0.0, "underflow case not zero");
            continue;
        }
        worst = std::max(worst, rel(got, exact));
    }
    o.detail << "max rel err " << worst << " over 10^4 draws (" << zeros << " underflow)";
    o.require(worst <= 1e-10, "rel err > 1e-10");
}

// 2. mode_var at 2 mu t >= 80 equals the stationary variance.
void stationary_limit(Outcome& o)
{
    double worst = 0.0;
    for (double g : {0.75, 1.0, 1.5, 2.5})
        for (double mu : {0.5, 1.0, 4.0})
            for (double factor : {80.0, 200.0})
            {
                const ModeKernel k{mu, 1.0, g};
                worst = std::max(worst, rel(mode_var(k, factor / (2.0 * mu)), stationary_variance(k)));
            }
    o.detail << "max rel gap " << worst;
    o.require(worst <= 1e-12, "gap > 1e-12 * stationary variance");
}

// 3. mode_cov(t, t + h) at t = 60 / kappa against the temporal Matern limit.
void matern_limit(Outcome& o)
{
    const QuadratureConfig cfg{1e-13, 1e-300, 5000};
    double worst = 0.0;
    double worst_ou = 0.0;
    int n = 0;
    for (double g : {0.75, 1.0, 1.25, 1.5, 2.5})
        for (double kappa : {0.5, 1.0})
            for (double h : {0.05, 0.3, 1.0, 2.5, 5.0})
            {
                const double t = 60.0 / kappa;
                const double lim = temporal_matern_limit(g, kappa, h);
                worst = std::max(worst, std::abs(mode_cov({kappa, 1.0, g}, t, t + h, cfg) - lim));
                if (g == 1.0)
                    worst_ou = std::max(worst_ou,
                                        rel(lim, std::exp(-kappa * h) / (2.0 * kappa)));
                ++n;
            }
    o.detail << n << " combinations, max abs gap " << worst
             << "; gamma=1 vs e^{-kappa h}/(2 kappa) max rel " << worst_ou;
    o.require(n == 50, "expected 50 combinations");
    o.require(worst <= 1e-10, "abs gap > 1e-10");
    o.require(worst_ou <= 4 * std::numeric_limits<double>::epsilon(), "OU form not exact");
}

// 4. Gamma(2g-1) / (Gamma(g)^2 2^{2g-1}) = Gamma(g - 1/2) / (2 sqrt(pi) Gamma(g)).
void duplication(Outcome& o)
{
    RandomStream rs({4}, 0, 0);
    double worst = 0.0;
    for (int i = 0; i < 100; ++i)
    {
        const double g = 0.6 + 9.4 * rs.uniform();
        const double gg = specfun::gamma_fn(g);
        const double lhs = specfun::gamma_fn(2.0 * g - 1.0) / (gg * gg * std::pow(2.0, 2.0 * g - 1.0));
        const double rhs = specfun::gamma_fn(g - 0.5) / (2.0 * std::sqrt(pi) * gg);
        worst = std::max(worst, rel(lhs, rhs));
        // the same identity through the kernel: t -> infinity of mode_var
        const ModeKernel k{1.0, 1.0, g};
        worst = std::max(worst, rel(mode_var(k, 1e4), stationary_variance(k)));
    }
    o.detail << "max rel err " << worst << " over 100 gammas";
    o.require(worst <= 1e-10, "rel err > 1e-10");
}

// 5. Square-function ratio by quadrature, constant in mu.
void square_function(Outcome& o)
{
    const QuadratureConfig cfg{1e-13, 1e-300, 5000};
    double worst = 0.0;
    double spread = 0.0;
    int n = 0;
    for (double g : {0.75, 1.0, 1.5, 2.5, 4.0})
        for (double f : {0.0, 0.25, 0.5, 0.8})
        {
            const double delta = f * (g - 0.5);
            const ModeKernel base{1.0, 1.0, g};
            const double exact = square_function_ratio(base, delta);
            std::vector<double> vals;
            for (double mu : {0.01, 1.0, 100.0})
            {
                const double v = square_function_ratio_quadrature({mu, 1.0, g}, delta, cfg);
                worst = std::max(worst, rel(v, exact));
                vals.push_back(v);
            }
            const auto [lo, hi] = std::minmax_element(vals.begin(), vals.end());
            spread = std::max(spread, (*hi - *lo) / exact);
            ++n;
        }
    o.detail << n << " pairs, max rel err " << worst << ", max spread in mu " << spread;
    o.require(n == 20, "expected 20 pairs");
    o.require(worst <= 1e-8, "rel err > 1e-8");
    o.require(spread <= 1e-9, "spread > 1e-9");
}

// 6. Sampler law, zero initial values and thread-independent output.
void sampler_law(Outcome& o)
{
    // kappa^2 = 1 on (0, pi): lambda_1 = 2, so mu = 2 with beta = 1, w = 1 with alpha = 0
    const auto m = model(1, 0.0, 1.0, 1.3, 1, 2.0, 1.0);
    const auto k = mode_params(m, 1);
    o.require(k.mu == 2.0 && k.weight == 1.0, "mode parameters");
    const TimeGrid grid({0.0, 0.25, 0.5, 1.0, 2.0});
    const std::size_t n = 100000;
    const SeedSpec seed{606};
    SamplerOptions one;
    one.threads = 1;
    SamplerOptions eight;
    eight.threads = 8;
    const auto a = sample_modes(m, grid, n, seed, one);
    const auto b = sample_modes(m, grid, n, seed, eight);
    const auto c = sample_modes(m, grid, n, seed, one);
    o.require(a.values == b.values, "1 vs 8 threads differ");
    o.require(a.values == c.values, "rerun differs");

    const auto g = gram(k, grid).values;
    const std::size_t T = grid.size();
    std::vector<double> mean(T, 0.0);
    for (std::size_t p = 0; p < n; ++p)
        for (std::size_t i = 0; i < T; ++i)
            mean[i] += a.at(p, 0, i);
    for (auto& v : mean)
        v /= double(n);
    double worst_z = 0.0;
    bool zero_ok = true;
    for (std::size_t p = 0; p < n; ++p)
        zero_ok = zero_ok && a.at(p, 0, 0) == 0.0;
    for (std::size_t i = 1; i < T; ++i)
        for (std::size_t j = i; j < T; ++j)
        {
            double s = 0.0;
            for (std::size_t p = 0; p < n; ++p)
                s += (a.at(p, 0, i) - mean[i]) * (a.at(p, 0, j) - mean[j]);
            const double emp = s / double(n - 1);
            const double se = std::sqrt((g(i, i) * g(j, j) + g(i, j) * g(i, j)) / double(n));
            worst_z = std::max(worst_z, std::abs(emp - g(i, j)) / se);
        }
    o.detail << "max |emp - gram| / stderr " << worst_z << "; t=0 zeros " << (zero_ok ? "ok" : "BAD")
             << "; 1/8-thread reruns bit-identical " << (a.values == b.values ? "yes" : "no");
    o.require(zero_ok, "t=0 value not exactly 0");
    o.require(worst_z <= 4.0, "entry outside 4 standard errors");
}

// 7. Beta identity and convergence of the factorization construction.
void factorization(Outcome& o)
{
    RandomStream rs({7}, 0, 0);
    double worst_beta = 0.0;
    for (int i = 0; i < 50; ++i)
    {
        const double g = 0.6 + 4.4 * rs.uniform();
        const double d = g * (0.02 + 0.96 * rs.uniform());
        const double exact = specfun::gamma_fn(d) * specfun::gamma_fn(g - d) / specfun::gamma_fn(g);
        worst_beta = std::max(worst_beta, rel(beta_integral(d, g - d, {1e-13, 1e-300, 5000}), exact));
    }
    o.require(worst_beta <= 1e-10, "Beta identity rel err > 1e-10");

    const ModeKernel k{1.0, 1.0, 1.2};
    const double delta = 0.3;
    const double exact = mode_cov(k, 1.0, 1.0);
    std::vector<double> err;
    for (int e : {8, 10, 12})
    {
        const std::size_t steps = std::size_t{1} << e;
        const double v = factorized_variance(k, delta, TimeGrid::uniform(0.0, 1.0, steps), steps);
        err.push_back(std::abs(v - exact) / exact);
    }
    const double order1 = std::log(err[0] / err[1]) / std::log(4.0);
    const double order2 = std::log(err[1] / err[2]) / std::log(4.0);

    // Monte Carlo check that the factorized sampler has the law used above.
    const auto coarse = TimeGrid::uniform(0.0, 1.0, 64);
    const double v64 = factorized_variance(k, delta, coarse, 64);
    const std::size_t n = 20000;
    double s2 = 0.0;
    for (const auto& path : factorized_samples(k, delta, coarse, {77}, n))
        s2 += path.back() * path.back();
    const double z = std::abs(s2 / double(n) - v64) / (v64 * std::sqrt(2.0 / double(n)));

    o.detail << "Beta max rel err " << worst_beta << "; rel err at h=2^-8,2^-10,2^-12: " << err[0]
             << ", " << err[1] << ", " << err[2] << "; observed orders " << order1 << ", "
             << order2 << "; sampler MC z=" << z;
    o.require(std::min(order1, order2) >= 1.0, "observed order < 1");
    o.require(err[2] <= 0.01, "final error > 1%");
    o.require(z <= 4.0, "sampler variance outside 4 standard errors");
}

// 8. Hölder slopes from exact increments.
void holder_slopes(Outcome& o)
{
    const auto lags = dyadic_lags(6, 12);
    for (double g : {0.75, 1.0, 1.5, 2.0, 3.0})
    {
        const auto est = estimate_holder({1.0, 1.0, g}, 5.0, lags);
        const bool ok = std::abs(est.slope - est.theory) <= 0.05;
        o.detail << " gamma=" << g << ": slope " << est.slope << " (theory " << est.theory << ")"
                 << (ok ? "" : " OUT OF BAND");
        o.require(ok, "gamma=" + std::to_string(g) + " slope outside +-0.05");
    }
}

// 9. Regularity checker thresholds.
void regularity(Outcome& o)
{
    const auto heat = model(1, 0.0, 1.0, 1.0, 8, 1.0);
    const bool admit = check_exponents(heat, {0, 0.249, 0.0}).satisfied;
    const bool reject = !check_exponents(heat, {0, 0.251, 0.0}).satisfied;
    o.detail << "heat tau=0.249 " << (admit ? "admitted" : "REJECTED") << ", tau=0.251 "
             << (reject ? "rejected" : "ADMITTED");
    o.require(admit && reject, "stochastic-heat bound");
    for (int d : {1, 2})
    {
        const bool above = check_exponents(model(d, d / 2.0 + 0.01, 0.0, 1.0, 8, 1.0), {}).satisfied;
        const bool below = !check_exponents(model(d, d / 2.0 - 0.01, 0.0, 1.0, 8, 1.0), {}).satisfied;
        o.detail << "; d=" << d << " alpha=d/2+-0.01 " << (above ? "admit" : "REJECT") << "/"
                 << (below ? "reject" : "ADMIT");
        o.require(above && below, "white-in-space threshold d=" + std::to_string(d));
    }
}

// 10. Hilbert-Schmidt sums against the Weyl test.
void hs_weyl(Outcome& o)
{
    const auto basel = hs_sum(model(1, 0.0, 1.0, 1.0, 10000, 1.0), {});
    const double gap = pi * pi / 6.0 - basel.partial;
    o.detail << "Basel p=" << basel.exponent << " partial " << basel.partial << " gap " << gap
             << " tail bound " << basel.tail;
    o.require(basel.exponent == -2.0 && !basel.diverges, "Basel flagged divergent");
    o.require(gap >= 0.0 && gap <= basel.tail, "pi^2/6 outside reported tail bound");

    const auto harm_model = model(1, 0.0, 1.0, 0.75, 10000, 1.0);
    const auto harm = hs_sum(harm_model, {});
    const auto growth = hs_growth(harm_model, {});
    o.detail << "; p=" << harm.exponent << " diverges=" << harm.diverges << " increments "
             << growth.early_increment << " -> " << growth.late_increment;
    o.require(harm.exponent == -1.0 && harm.diverges, "p=-1 not flagged divergent");
    o.require(growth.confirms_divergence, "growth test did not confirm divergence");
}

// 11. Monte Carlo field variance against the spectral sum.
void field_consistency(Outcome& o)
{
    const auto m = model(1, 1.0, 1.0, 1.0, 64, 5.0);
    const Point x{pi / 2.0, 0.0};
    const double expected = field_cov(m, 5.0, 5.0, x, x).value;
    const TimeGrid grid({0.0, 5.0});
    const std::size_t total = 100000;
    const std::size_t batch = 10000;
    double s1 = 0.0;
    double s2 = 0.0;
    SamplerOptions opts;
    opts.threads = std::max(1u, std::thread::hardware_concurrency());
    for (std::size_t first = 0; first < total; first += batch)
    {
        opts.first_path = first;
        const auto paths = sample_modes(m, grid, batch, {1111}, opts);
        const auto f = assemble_field(paths, m.basis(), {x});
        for (std::size_t p = 0; p < batch; ++p)
        {
            const double v = f.at(p, 1, 0);
            s1 += v;
            s2 += v * v;
        }
    }
    const double n = double(total);
    const double var = (s2 - s1 * s1 / n) / (n - 1.0);
    const double se = expected * std::sqrt(2.0 / (n - 1.0));
    const double z = std::abs(var - expected) / se;
    o.detail << "MC variance " << var << " vs sum " << expected << " (z=" << z << ")";
    o.require(z <= 4.0, "outside 4 standard errors");
}

// 12. Separability for beta = 0 and a non-separability witness for beta = 1.
void separability(Outcome& o)
{
    const auto sep = separability_check(model(1, 1.5, 0.0, 1.4, 32, 8.0));
    o.detail << "beta=0: separable=" << sep.separable << " max rel err " << sep.max_rel_error
             << " over " << sep.profile.size() << " checks";
    o.require(sep.separable && sep.verified && sep.max_rel_error <= 1e-9, "beta=0 factorization");

    const auto non = separability_check(model(1, 0.0, 1.0, 1.0, 8, 8.0));
    o.detail << "; beta=1: separable=" << non.separable << " witness q1(1,2)/q1(1,1)="
             << non.witness.ratio_a << " vs q2(1,2)/q2(1,1)=" << non.witness.ratio_b;
    o.require(!non.separable && non.verified, "beta=1 witness");
    // OU oracle: ratio_j = e^{-mu_j}, mu_1 = 1, mu_2 = 4
    o.require(rel(non.witness.ratio_a, std::exp(-1.0)) <= 1e-10
                  && rel(non.witness.ratio_b, std::exp(-4.0)) <= 1e-10,
              "witness ratios differ from OU oracle");
}

struct Criterion
{
    const char* name;
    std::function<void(Outcome&)> run;
    double time_limit = 0.0;  // seconds; 0 means unbounded
};

}  // namespace

int main(int argc, char** argv)
{
    const std::vector<Criterion> all = {
        {"OU oracle", ou_oracle, 30},
        {"stationary variance limit", stationary_limit, 10},
        {"temporal Matern limit", matern_limit, 30},
        {"Legendre duplication", duplication},
        {"square-function ratio", square_function},
        {"sampler law", sampler_law, 120},
        {"factorization method", factorization},
        {"Holder slopes", holder_slopes, 60},
        {"regularity checker", regularity},
        {"HS sum vs Weyl", hs_weyl},
        {"field consistency", field_consistency, 180},
        {"separability", separability},
    };
    std::vector<std::size_t> which;
    if (argc > 1)
    {
        const int c = std::atoi(argv[1]);
        if (c < 1 || c > static_cast<int>(all.size()))
        {
            std::fprintf(stderr, "usage: %s [criterion 1..%zu]\n", argv[0], all.size());
            return 2;
        }
        which.push_back(static_cast<std::size_t>(c - 1));
    }
    else
    {
        for (std::size_t i = 0; i < all.size(); ++i)
            which.push_back(i);
    }

    bool ok = true;
    for (auto i : which)
    {
        Outcome o;
        o.detail.precision(4);
        const auto t0 = std::chrono::steady_clock::now();
        try
        {
            all[i].run(o);
        }
        catch (const std::exception& e)
        {
            o.pass = false;
            o.detail << " [exception: " << e.what() << "]";
        }
        const double secs
            = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (all[i].time_limit > 0.0 && secs > all[i].time_limit)
        {
            o.pass = false;
            o.detail << " [runtime over " << all[i].time_limit << " s]";
        }
        std::printf("criterion %2zu %-27s %s  (%.2fs)  %s\n", i + 1, all[i].name,
                    o.pass ? "PASS" : "FAIL", secs, o.detail.str().c_str());
        std::fflush(stdout);
        ok = ok && o.pass;
    }
    return ok ? 0 : 1;
}
