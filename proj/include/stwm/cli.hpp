#pragma once

// Command-line front end. `run` parses arguments, dispatches one subcommand
// and maps failures onto the exit codes below; tools/stwm.cpp is a thin main.

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "stwm/analysis.hpp"
#include "stwm/config.hpp"
#include "stwm/field_io.hpp"
#include "stwm/linalg.hpp"
#include "stwm/sampler.hpp"
#include "stwm/spectral.hpp"

namespace stwm::cli
{

enum ExitCode : int
{
    ok = 0,
    unsatisfied = 1,
    config_error = 2,
    invalid_model = 3,
    numerical_failure = 4,
};

struct GlobalOptions
{
    std::string config;
    std::optional<std::string> out;
    std::optional<std::uint64_t> seed;
    std::optional<unsigned> threads;
    std::optional<double> rel_tol;
    bool force = false;
};

struct Context
{
    RunConfig rc;
    GlobalOptions g;
    unsigned threads = 1;
    std::ostream& out;
    std::ostream& err;
};

namespace detail
{

inline unsigned resolve_threads(const std::optional<unsigned>& flag)
{
    if (flag)
    {
        if (*flag < 1)
            throw ConfigError("--threads", "must be at least 1");
        return *flag;
    }
    if (const char* env = std::getenv("STWM_THREADS"); env && *env)
    {
        char* end = nullptr;
        const long v = std::strtol(env, &end, 10);
        if (*end != '\0' || v < 1 || v > 4096)
            throw ConfigError("STWM_THREADS", "expected a positive integer, got '"
                                                  + std::string(env) + "'");
        return static_cast<unsigned>(v);
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

// Writes to <out>/<name> when --out was given, otherwise to the console.
template <class F>
void emit(const Context& ctx, const std::string& name, F&& body)
{
    if (!ctx.g.out)
    {
        body(ctx.out);
        return;
    }
    std::filesystem::create_directories(*ctx.g.out);
    const auto path = std::filesystem::path(*ctx.g.out) / name;
    std::ofstream os(path);
    if (!os)
        throw ConfigError("--out", "cannot write " + path.string());
    body(os);
    ctx.out << "wrote " << path.string() << '\n';
}

}  // namespace detail

inline int cmd_basis(Context& ctx)
{
    const SpectralModel model(ctx.rc.model);
    detail::emit(ctx, "basis.csv", [&](std::ostream& os) {
        os << "j,lambda,lambda_tilde,weyl_ratio\n";
        const double p = 2.0 / model.dim();
        for (std::size_t j = 1; j <= model.size(); ++j)
        {
            const double lam = model.basis().lambda(j);
            os << j << ',' << format_real(lam) << ',' << format_real(model.basis_tilde().lambda(j))
               << ',' << format_real(lam / std::pow(static_cast<double>(j), p)) << '\n';
        }
    });
    return ok;
}

inline int cmd_sample(Context& ctx)
{
    const RunConfig& rc = ctx.rc;
    const SpectralModel model(rc.model);
    model.require_finite_variance();
    const auto hs = hs_sum(model, RegularityQuery{});
    if (hs.diverges)
    {
        if (!ctx.g.force)
        {
            ctx.err << "error: the variance series diverges (Weyl exponent "
                    << format_real(hs.exponent)
                    << " >= -1); the truncated field does not converge as J grows. "
                       "Use --force to sample anyway.\n";
            return invalid_model;
        }
        ctx.err << "warning: variance series diverges; sampling anyway (--force)\n";
    }
    const TimeGrid grid = rc.time_grid();
    SamplerOptions opts;
    opts.threads = ctx.threads;
    opts.quadrature = rc.quadrature;
    const auto paths = sample_modes(model, grid, rc.n_paths, rc.seed, opts);
    const auto field = assemble_field(paths, model.basis(), rc.points);

    const std::filesystem::path dir = ctx.g.out.value_or(".");
    std::filesystem::create_directories(dir);
    write_stwm((dir / "field.stwm").string(), field);

    std::ofstream sum(dir / "summary.csv");
    if (!sum)
        throw ConfigError("--out", "cannot write " + (dir / "summary.csv").string());
    sum << "time,x,mean,variance\n";
    const double n = static_cast<double>(field.n_paths);
    for (std::size_t i = 0; i < grid.size(); ++i)
        for (std::size_t m = 0; m < field.points.size(); ++m)
        {
            double mean = 0.0;
            for (std::size_t p = 0; p < field.n_paths; ++p)
                mean += field.at(p, i, m);
            mean /= n;
            double var = 0.0;
            for (std::size_t p = 0; p < field.n_paths; ++p)
            {
                const double dv = field.at(p, i, m) - mean;
                var += dv * dv;
            }
            var = field.n_paths > 1 ? var / (n - 1.0) : 0.0;
            sum << format_real(grid[i]) << ',' << point_label(field.points[m], field.dim) << ','
                << format_real(mean) << ',' << format_real(var) << '\n';
        }
    if (rc.write_csv)
    {
        std::ofstream csv(dir / "field.csv");
        if (!csv)
            throw ConfigError("--out", "cannot write " + (dir / "field.csv").string());
        write_field_csv(csv, field);
    }
    ctx.out << "seed master=" << rc.seed.master << " generator=philox4x32-10 first_path="
            << opts.first_path << " n_paths=" << rc.n_paths << '\n';
    ctx.out << "wrote " << (dir / "field.stwm").string() << " and "
            << (dir / "summary.csv").string() << '\n';
    return ok;
}

inline int cmd_cov(Context& ctx)
{
    const RunConfig& rc = ctx.rc;
    const SpectralModel model(rc.model);
    model.require_finite_variance();
    const TimeGrid grid = rc.time_grid();
    if (!rc.cov.field)
    {
        const ModeKernel k = mode_params(model, rc.cov.mode);
        detail::emit(ctx, "cov.csv", [&](std::ostream& os) {
            os << "s,t,value\n";
            for (std::size_t i = 0; i < grid.size(); ++i)
                for (std::size_t j = 0; j < grid.size(); ++j)
                    os << format_real(grid[i]) << ',' << format_real(grid[j]) << ','
                       << format_real(mode_cov(k, grid[i], grid[j], rc.quadrature)) << '\n';
        });
        return ok;
    }
    Point centre{0.0, 0.0};
    for (int i = 0; i < model.dim(); ++i)
        centre[i] = rc.model.extents[i] / 2.0;
    const Point x = rc.cov.x.value_or(centre);
    const Point y = rc.cov.y.value_or(centre);
    if (!model.basis().contains(x))
        throw ConfigError("cov.x", "lies outside the open domain");
    if (!model.basis().contains(y))
        throw ConfigError("cov.y", "lies outside the open domain");
    bool warned = false;
    detail::emit(ctx, "cov.csv", [&](std::ostream& os) {
        os << "s,t,value,tail_bound\n";
        for (std::size_t i = 0; i < grid.size(); ++i)
            for (std::size_t j = 0; j < grid.size(); ++j)
            {
                const auto c = field_cov(model, grid[i], grid[j], x, y, rc.quadrature);
                if (c.diverges && !warned)
                {
                    ctx.err << "warning: variance series diverges; values are truncated at J\n";
                    warned = true;
                }
                os << format_real(grid[i]) << ',' << format_real(grid[j]) << ','
                   << format_real(c.value) << ',' << format_real(c.tail_bound) << '\n';
            }
    });
    return ok;
}

inline int cmd_limits(Context& ctx)
{
    const RunConfig& rc = ctx.rc;
    const SpectralModel model(rc.model);
    model.require_finite_variance();
    const auto marg = asymptotic_marginal_cov(model);
    detail::emit(ctx, "stationary.csv", [&](std::ostream& os) {
        os << "j,stationary_var\n";
        for (std::size_t j = 0; j < marg.coefficients.size(); ++j)
            os << j + 1 << ',' << format_real(marg.coefficients[j]) << '\n';
    });
    if (!ctx.g.out)
        ctx.out << '\n';
    detail::emit(ctx, "matern.csv", [&](std::ostream& os) {
        os << "h,matern_value\n";
        for (std::size_t i = 0; i <= rc.limits.h_steps; ++i)
        {
            const double h = rc.limits.h_max * static_cast<double>(i)
                             / static_cast<double>(rc.limits.h_steps);
            os << format_real(h) << ','
               << format_real(temporal_matern_limit(model.gamma(), rc.limits.kappa, h)) << '\n';
        }
    });
    return ok;
}

inline int cmd_regularity(Context& ctx, const RegularityQuery& q)
{
    const SpectralModel model(ctx.rc.model);
    const auto rep = check_exponents(model, q);
    ctx.out << to_json(rep).dump(2) << '\n';
    return rep.satisfied ? ok : unsatisfied;
}

inline int cmd_holder(Context& ctx)
{
    const RunConfig& rc = ctx.rc;
    const SpectralModel model(rc.model);
    model.require_finite_variance();
    QuadratureConfig cfg = holder_quadrature();
    if (ctx.g.rel_tol)
        cfg.rel_tol = *ctx.g.rel_tol;
    const auto est = estimate_holder(mode_params(model, rc.holder.mode), rc.holder.t0,
                                     rc.holder.lags, cfg);
    json j = to_json(est);
    j["t0"] = rc.holder.t0;
    j["mode"] = rc.holder.mode;
    ctx.out << j.dump(2) << '\n';
    return ok;
}

/*!
 * Exit codes: 0 ok (or condition satisfied), 1 condition unsatisfied,
 * 2 configuration error, 3 invalid model, 4 numerical failure.
 * `args` excludes the program name.
 */
inline int run(std::vector<std::string> args, std::ostream& out = std::cout,
               std::ostream& err = std::cerr)
{
    CLI::App app{"Spatiotemporal Whittle-Matern fields: sampling and analysis", "stwm"};
    app.require_subcommand(1);
    app.fallthrough();
    GlobalOptions g;
    app.add_option("--config", g.config, "JSON run configuration");
    app.add_option("--out", g.out, "output directory");
    app.add_option("--seed", g.seed, "master seed (u64), overrides the config");
    app.add_option("--threads", g.threads, "worker threads (fallback: $STWM_THREADS)");
    app.add_option("--rel-tol", g.rel_tol, "quadrature relative tolerance");
    app.add_flag("--force", g.force, "sample even when the variance series diverges");

    auto* basis = app.add_subcommand("basis", "eigenvalue table");
    auto* sample = app.add_subcommand("sample", "sample the field; writes field.stwm, summary.csv");
    auto* cov = app.add_subcommand("cov", "mode or field covariance over the time grid");
    std::optional<std::size_t> cov_mode;
    bool cov_field = false;
    cov->add_option("--mode", cov_mode, "1-based mode index");
    cov->add_flag("--field", cov_field, "assembled field covariance at cov.x, cov.y");
    auto* limits = app.add_subcommand("limits", "stationary variances and temporal Matern curve");
    auto* regularity = app.add_subcommand("regularity", "exponent conditions as JSON");
    RegularityQuery q;
    regularity->add_option("--n", q.n, "time derivatives");
    regularity->add_option("--tau", q.tau, "Holder exponent in [0, 1)");
    regularity->add_option("--sigma", q.sigma, "spatial smoothness");
    auto* holder = app.add_subcommand("holder", "Holder slope from exact increments");
    std::optional<double> t0;
    std::optional<std::string> lags;
    std::optional<std::size_t> holder_mode;
    holder->add_option("--t0", t0, "base time (>= 1)");
    holder->add_option("--lags", lags, "'k1:k2' for 2^-k1..2^-k2, or a comma-separated list");
    holder->add_option("--mode", holder_mode, "1-based mode index");

    try
    {
        std::reverse(args.begin(), args.end());
        app.parse(args);
    }
    catch (const CLI::CallForHelp&)
    {
        out << app.help();
        return ok;
    }
    catch (const CLI::ParseError& e)
    {
        err << "error: " << e.what() << '\n';
        return config_error;
    }

    try
    {
        if (g.config.empty())
            throw ConfigError("--config", "a configuration file is required");
        Context ctx{load_run_config(g.config), g, 1, out, err};
        if (g.seed)
            ctx.rc.seed.master = *g.seed;
        if (g.rel_tol)
        {
            if (!(*g.rel_tol > 0.0))
                throw ConfigError("--rel-tol", "must be positive");
            ctx.rc.quadrature.rel_tol = *g.rel_tol;
        }
        ctx.threads = detail::resolve_threads(g.threads);

        if (basis->parsed())
            return cmd_basis(ctx);
        if (sample->parsed())
            return cmd_sample(ctx);
        if (cov->parsed())
        {
            if (cov_mode)
            {
                if (*cov_mode < 1 || *cov_mode > ctx.rc.model.count)
                    throw ConfigError("--mode", "must lie in [1, J]");
                ctx.rc.cov.mode = *cov_mode;
            }
            if (cov_field)
                ctx.rc.cov.field = true;
            return cmd_cov(ctx);
        }
        if (limits->parsed())
            return cmd_limits(ctx);
        if (regularity->parsed())
        {
            q.validate();
            return cmd_regularity(ctx, q);
        }
        if (t0)
            ctx.rc.holder.t0 = *t0;
        if (lags)
            ctx.rc.holder.lags = parse_lag_spec(*lags);
        if (holder_mode)
        {
            if (*holder_mode < 1 || *holder_mode > ctx.rc.model.count)
                throw ConfigError("--mode", "must lie in [1, J]");
            ctx.rc.holder.mode = *holder_mode;
        }
        return cmd_holder(ctx);
    }
    catch (const QuadratureError& e)
    {
        err << "numerical failure: " << e.what() << " (estimate " << format_real(e.estimate())
            << ", error bound " << format_real(e.error_bound()) << ")\n";
        return numerical_failure;
    }
    catch (const std::invalid_argument& e)
    {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    catch (const std::out_of_range& e)
    {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    catch (const std::domain_error& e)
    {
        err << "invalid model: " << e.what() << '\n';
        return invalid_model;
    }
    catch (const std::filesystem::filesystem_error& e)
    {
        err << "config error: " << e.what() << '\n';
        return config_error;
    }
    catch (const std::exception& e)
    {
        err << "numerical failure: " << e.what() << '\n';
        return numerical_failure;
    }
}

}  // namespace stwm::cli
