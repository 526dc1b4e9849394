#pragma once

// JSON run configuration (nlohmann/json) and JSON views of analysis reports.
// Every validation failure is a ConfigError naming the offending field.

#include <cmath>
#include <cstdint>
#include <fstream>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "stwm/analysis.hpp"
#include "stwm/quadrature.hpp"
#include "stwm/rng.hpp"
#include "stwm/sampler.hpp"
#include "stwm/spectral.hpp"

namespace stwm
{

using json = nlohmann::json;

class ConfigError : public std::invalid_argument
{
  public:
    ConfigError(const std::string& field, const std::string& msg)
        : std::invalid_argument(field + ": " + msg), field_(field)
    {
    }

    const std::string& field() const noexcept { return field_; }

  private:
    std::string field_;
};

struct GridSpec
{
    double t_start = 0.0;
    std::optional<double> t_end;  //!< defaults to the model horizon T
    std::size_t steps = 10;
};

struct CovOptions
{
    std::size_t mode = 1;
    bool field = false;
    std::optional<Point> x;
    std::optional<Point> y;
};

struct LimitsOptions
{
    double kappa = 1.0;
    double h_max = 5.0;
    std::size_t h_steps = 50;
};

struct HolderOptions
{
    double t0 = 5.0;
    std::vector<double> lags = dyadic_lags(6, 12);
    std::size_t mode = 1;
};

struct RunConfig
{
    ModelConfig model;
    GridSpec grid;
    std::vector<Point> points;
    std::size_t n_paths = 1;
    SeedSpec seed{};
    QuadratureConfig quadrature{};
    bool write_csv = false;
    CovOptions cov;
    LimitsOptions limits;
    HolderOptions holder;

    TimeGrid time_grid() const
    {
        return TimeGrid::uniform(grid.t_start, grid.t_end.value_or(model.horizon), grid.steps);
    }
};

namespace detail
{

inline std::string join_path(const std::string& prefix, const std::string& key)
{
    return prefix.empty() ? key : prefix + "." + key;
}

inline void reject_unknown(const json& obj, const std::string& prefix,
                           const std::set<std::string>& known)
{
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key()))
            throw ConfigError(join_path(prefix, it.key()), "unknown field");
}

inline const json& require_object(const json& j, const std::string& field)
{
    if (!j.is_object())
        throw ConfigError(field.empty() ? "<root>" : field, "expected an object");
    return j;
}

inline double get_real(const json& j, const std::string& field)
{
    if (!j.is_number())
        throw ConfigError(field, "expected a number");
    const double v = j.get<double>();
    if (!std::isfinite(v))
        throw ConfigError(field, "must be finite");
    return v;
}

inline std::uint64_t get_unsigned(const json& j, const std::string& field)
{
    if (j.is_number_unsigned())
        return j.get<std::uint64_t>();
    if (j.is_number_integer())
    {
        const auto v = j.get<std::int64_t>();
        if (v < 0)
            throw ConfigError(field, "must be nonnegative");
        return static_cast<std::uint64_t>(v);
    }
    if (j.is_number_float())
    {
        const double v = j.get<double>();
        if (v >= 0.0 && v == std::floor(v) && v < 0x1.0p63)
            return static_cast<std::uint64_t>(v);
    }
    throw ConfigError(field, "expected a nonnegative integer");
}

inline Point get_point(const json& j, const std::string& field, int d)
{
    if (d == 1 && j.is_number())
        return {get_real(j, field), 0.0};
    if (!j.is_array() || j.size() != static_cast<std::size_t>(d))
        throw ConfigError(field, "expected " + std::to_string(d) + " coordinates");
    Point p{0.0, 0.0};
    for (int i = 0; i < d; ++i)
        p[i] = get_real(j[i], field + "[" + std::to_string(i) + "]");
    return p;
}

inline std::vector<Point> lattice_points(const std::vector<std::size_t>& n,
                                         const std::vector<double>& extents)
{
    std::vector<Point> pts;
    if (n.size() == 1)
    {
        for (std::size_t i = 1; i <= n[0]; ++i)
            pts.push_back({extents[0] * static_cast<double>(i) / static_cast<double>(n[0] + 1),
                           0.0});
        return pts;
    }
    for (std::size_t i = 1; i <= n[0]; ++i)
        for (std::size_t k = 1; k <= n[1]; ++k)
            pts.push_back({extents[0] * static_cast<double>(i) / static_cast<double>(n[0] + 1),
                           extents[1] * static_cast<double>(k) / static_cast<double>(n[1] + 1)});
    return pts;
}

}  // namespace detail

/*!
 * Model fields: d, J, alpha, beta, gamma (required); extents (default pi on
 * each axis), kappa2 (default 0), kappa2_tilde (default kappa2), T (default 1).
 */
inline ModelConfig parse_model(const json& j, const std::string& prefix = "")
{
    using detail::join_path;
    detail::require_object(j, prefix);
    detail::reject_unknown(j, prefix,
                           {"d", "extents", "kappa2", "kappa2_tilde", "J", "alpha", "beta",
                            "gamma", "T"});
    auto need = [&](const char* key) -> const json& {
        if (!j.contains(key))
            throw ConfigError(join_path(prefix, key), "missing required field");
        return j.at(key);
    };
    ModelConfig m;
    const json& jd = need("d");
    if (!jd.is_number_integer())
        throw ConfigError(join_path(prefix, "d"), "expected an integer");
    m.d = jd.get<int>();
    if (m.d != 1 && m.d != 2)
        throw ConfigError(join_path(prefix, "d"), "unsupported dimension " + std::to_string(m.d)
                                                      + " (expected 1 or 2)");
    m.extents.assign(m.d, std::numbers::pi);
    if (j.contains("extents"))
    {
        const auto& e = j.at("extents");
        const std::string f = join_path(prefix, "extents");
        if (m.d == 1 && e.is_number())
            m.extents = {detail::get_real(e, f)};
        else if (!e.is_array() || e.size() != static_cast<std::size_t>(m.d))
            throw ConfigError(f, "expected " + std::to_string(m.d) + " lengths");
        else
            for (int i = 0; i < m.d; ++i)
                m.extents[i] = detail::get_real(e[i], f + "[" + std::to_string(i) + "]");
        for (double l : m.extents)
            if (!(l > 0.0))
                throw ConfigError(f, "lengths must be positive");
    }
    auto real_field = [&](const char* key, double def, bool present_required) {
        if (!j.contains(key))
        {
            if (present_required)
                throw ConfigError(join_path(prefix, key), "missing required field");
            return def;
        }
        return detail::get_real(j.at(key), join_path(prefix, key));
    };
    m.kappa2 = real_field("kappa2", 0.0, false);
    m.kappa2_tilde = real_field("kappa2_tilde", m.kappa2, false);
    m.alpha = real_field("alpha", 0.0, true);
    m.beta = real_field("beta", 0.0, true);
    m.gamma = real_field("gamma", 0.0, true);
    m.horizon = real_field("T", 1.0, false);
    m.count = detail::get_unsigned(need("J"), join_path(prefix, "J"));

    if (!(m.kappa2 >= 0.0))
        throw ConfigError(join_path(prefix, "kappa2"), "must be nonnegative");
    if (!(m.kappa2_tilde >= 0.0))
        throw ConfigError(join_path(prefix, "kappa2_tilde"), "must be nonnegative");
    if (m.count < 1)
        throw ConfigError(join_path(prefix, "J"), "must be at least 1");
    if (m.count > max_basis_size)
        throw ConfigError(join_path(prefix, "J"), "exceeds cap of 10^7 modes");
    if (!(m.alpha >= 0.0))
        throw ConfigError(join_path(prefix, "alpha"), "must be nonnegative");
    if (!(m.beta >= 0.0))
        throw ConfigError(join_path(prefix, "beta"), "must be nonnegative");
    if (!(m.gamma > 0.0))
        throw ConfigError(join_path(prefix, "gamma"), "must be positive");
    if (!(m.horizon > 0.0))
        throw ConfigError(join_path(prefix, "T"), "must be positive");
    return m;
}

inline QuadratureConfig parse_quadrature(const json& j, const std::string& f)
{
    detail::require_object(j, f);
    detail::reject_unknown(j, f, {"rel_tol", "abs_tol", "max_subdivisions"});
    QuadratureConfig q;
    if (j.contains("rel_tol"))
        q.rel_tol = detail::get_real(j["rel_tol"], f + ".rel_tol");
    if (j.contains("abs_tol"))
        q.abs_tol = detail::get_real(j["abs_tol"], f + ".abs_tol");
    if (j.contains("max_subdivisions"))
        q.max_subdivisions
            = static_cast<int>(detail::get_unsigned(j["max_subdivisions"], f + ".max_subdivisions"));
    if (!(q.rel_tol > 0.0))
        throw ConfigError(f + ".rel_tol", "must be positive");
    if (!(q.abs_tol > 0.0))
        throw ConfigError(f + ".abs_tol", "must be positive");
    if (q.max_subdivisions < 16)
        throw ConfigError(f + ".max_subdivisions", "must be at least 16");
    return q;
}

//! Parses "k1:k2" as 2^-k1 .. 2^-k2, or a comma-separated list of lags.
inline std::vector<double> parse_lag_spec(const std::string& spec)
{
    const auto colon = spec.find(':');
    try
    {
        if (colon != std::string::npos)
        {
            std::size_t pos = 0;
            const int a = std::stoi(spec.substr(0, colon), &pos);
            if (pos != colon)
                throw std::invalid_argument("bad");
            const std::string rest = spec.substr(colon + 1);
            const int b = std::stoi(rest, &pos);
            if (pos != rest.size() || b < a)
                throw std::invalid_argument("bad");
            return dyadic_lags(a, b);
        }
        std::vector<double> out;
        std::size_t start = 0;
        while (start <= spec.size())
        {
            const auto comma = spec.find(',', start);
            const std::string tok = spec.substr(start, comma == std::string::npos
                                                           ? std::string::npos
                                                           : comma - start);
            std::size_t pos = 0;
            out.push_back(std::stod(tok, &pos));
            if (pos != tok.size())
                throw std::invalid_argument("bad");
            if (comma == std::string::npos)
                break;
            start = comma + 1;
        }
        return out;
    }
    catch (const std::exception&)
    {
        throw ConfigError("lags", "expected 'k1:k2' (dyadic 2^-k) or a comma-separated list, got '"
                                      + spec + "'");
    }
}

inline RunConfig parse_run_config(const json& doc)
{
    using detail::get_real;
    using detail::get_unsigned;
    detail::require_object(doc, "");
    RunConfig rc;
    if (!doc.contains("model"))
    {
        rc.model = parse_model(doc);
    }
    else
    {
        detail::reject_unknown(doc, "",
                               {"model", "grid", "space", "n_paths", "seed", "quadrature",
                                "write_csv", "cov", "limits", "holder"});
        rc.model = parse_model(doc["model"], "model");
    }
    const int d = rc.model.d;
    rc.points = detail::lattice_points(std::vector<std::size_t>(d, d == 1 ? 16 : 8),
                                       rc.model.extents);
    if (!doc.contains("model"))
        return rc;

    if (doc.contains("grid"))
    {
        const auto& g = detail::require_object(doc["grid"], "grid");
        detail::reject_unknown(g, "grid", {"t_start", "t_end", "steps"});
        if (g.contains("t_start"))
            rc.grid.t_start = get_real(g["t_start"], "grid.t_start");
        if (g.contains("t_end"))
            rc.grid.t_end = get_real(g["t_end"], "grid.t_end");
        if (g.contains("steps"))
            rc.grid.steps = get_unsigned(g["steps"], "grid.steps");
    }
    const double t_end = rc.grid.t_end.value_or(rc.model.horizon);
    if (!(rc.grid.t_start >= 0.0))
        throw ConfigError("grid.t_start", "must be nonnegative");
    if (t_end > rc.model.horizon)
        throw ConfigError("grid.t_end", "exceeds the model horizon T");
    if (rc.grid.steps == 0 ? t_end != rc.grid.t_start : !(t_end > rc.grid.t_start))
        throw ConfigError("grid.t_end", "must exceed grid.t_start");

    if (doc.contains("space"))
    {
        const auto& s = detail::require_object(doc["space"], "space");
        detail::reject_unknown(s, "space", {"points", "lattice"});
        if (s.contains("points") == s.contains("lattice"))
            throw ConfigError("space", "give exactly one of 'points' or 'lattice'");
        if (s.contains("points"))
        {
            const auto& p = s["points"];
            if (!p.is_array() || p.empty())
                throw ConfigError("space.points", "expected a nonempty array");
            rc.points.clear();
            for (std::size_t i = 0; i < p.size(); ++i)
                rc.points.push_back(
                    detail::get_point(p[i], "space.points[" + std::to_string(i) + "]", d));
        }
        else
        {
            const auto& l = s["lattice"];
            std::vector<std::size_t> n;
            if (d == 1 && l.is_number())
                n = {get_unsigned(l, "space.lattice")};
            else if (!l.is_array() || l.size() != static_cast<std::size_t>(d))
                throw ConfigError("space.lattice", "expected " + std::to_string(d) + " counts");
            else
                for (int i = 0; i < d; ++i)
                    n.push_back(get_unsigned(l[i], "space.lattice"));
            for (auto c : n)
                if (c < 1)
                    throw ConfigError("space.lattice", "counts must be positive");
            rc.points = detail::lattice_points(n, rc.model.extents);
        }
        EigenBasis probe = build_basis(d, rc.model.extents, 0.0, 1);
        for (std::size_t i = 0; i < rc.points.size(); ++i)
            if (!probe.contains(rc.points[i]))
                throw ConfigError("space.points[" + std::to_string(i) + "]",
                                  "lies outside the open domain");
    }

    if (doc.contains("n_paths"))
        rc.n_paths = get_unsigned(doc["n_paths"], "n_paths");
    if (rc.n_paths < 1)
        throw ConfigError("n_paths", "must be at least 1");
    if (doc.contains("seed"))
        rc.seed.master = get_unsigned(doc["seed"], "seed");
    if (doc.contains("quadrature"))
        rc.quadrature = parse_quadrature(doc["quadrature"], "quadrature");
    if (doc.contains("write_csv"))
    {
        if (!doc["write_csv"].is_boolean())
            throw ConfigError("write_csv", "expected a boolean");
        rc.write_csv = doc["write_csv"].get<bool>();
    }

    if (doc.contains("cov"))
    {
        const auto& c = detail::require_object(doc["cov"], "cov");
        detail::reject_unknown(c, "cov", {"mode", "field", "x", "y"});
        if (c.contains("mode"))
            rc.cov.mode = get_unsigned(c["mode"], "cov.mode");
        if (c.contains("field"))
        {
            if (!c["field"].is_boolean())
                throw ConfigError("cov.field", "expected a boolean");
            rc.cov.field = c["field"].get<bool>();
        }
        if (c.contains("x"))
            rc.cov.x = detail::get_point(c["x"], "cov.x", d);
        if (c.contains("y"))
            rc.cov.y = detail::get_point(c["y"], "cov.y", d);
    }
    if (rc.cov.mode < 1 || rc.cov.mode > rc.model.count)
        throw ConfigError("cov.mode", "must lie in [1, J]");

    if (doc.contains("limits"))
    {
        const auto& l = detail::require_object(doc["limits"], "limits");
        detail::reject_unknown(l, "limits", {"kappa", "h_max", "h_steps"});
        if (l.contains("kappa"))
            rc.limits.kappa = get_real(l["kappa"], "limits.kappa");
        if (l.contains("h_max"))
            rc.limits.h_max = get_real(l["h_max"], "limits.h_max");
        if (l.contains("h_steps"))
            rc.limits.h_steps = get_unsigned(l["h_steps"], "limits.h_steps");
    }
    if (!(rc.limits.kappa > 0.0))
        throw ConfigError("limits.kappa", "must be positive");
    if (!(rc.limits.h_max > 0.0))
        throw ConfigError("limits.h_max", "must be positive");
    if (rc.limits.h_steps < 1)
        throw ConfigError("limits.h_steps", "must be at least 1");

    if (doc.contains("holder"))
    {
        const auto& h = detail::require_object(doc["holder"], "holder");
        detail::reject_unknown(h, "holder", {"t0", "lags", "mode"});
        if (h.contains("t0"))
            rc.holder.t0 = get_real(h["t0"], "holder.t0");
        if (h.contains("mode"))
            rc.holder.mode = get_unsigned(h["mode"], "holder.mode");
        if (h.contains("lags"))
        {
            const auto& l = h["lags"];
            if (l.is_string())
                rc.holder.lags = parse_lag_spec(l.get<std::string>());
            else if (l.is_array())
            {
                rc.holder.lags.clear();
                for (std::size_t i = 0; i < l.size(); ++i)
                    rc.holder.lags.push_back(
                        get_real(l[i], "holder.lags[" + std::to_string(i) + "]"));
            }
            else
                throw ConfigError("holder.lags", "expected an array or 'k1:k2'");
        }
    }
    if (rc.holder.mode < 1 || rc.holder.mode > rc.model.count)
        throw ConfigError("holder.mode", "must lie in [1, J]");
    return rc;
}

inline RunConfig load_run_config(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw ConfigError("config", "cannot open '" + path + "'");
    json doc;
    try
    {
        doc = json::parse(is);
    }
    catch (const json::parse_error& e)
    {
        throw ConfigError("config", std::string("malformed JSON: ") + e.what());
    }
    return parse_run_config(doc);
}

// Non-finite reals (an infinite tail bound) serialize as null.
namespace detail
{

inline json finite_or_null(double v)
{
    return std::isfinite(v) ? json(v) : json(nullptr);
}

}  // namespace detail

inline json to_json(const RegularityReport& r)
{
    return json{{"satisfied", r.satisfied},
                {"margins",
                 {{"strict_gamma", r.margins.strict_gamma},
                  {"holder_gamma", r.margins.holder_gamma},
                  {"spectral", r.margins.spectral}}},
                {"hs", {{"partial", detail::finite_or_null(r.hs.partial)}, {"tail", detail::finite_or_null(r.hs.tail)}, {"diverges", r.hs.diverges}}},
                {"conditions",
                 {{"strict_gamma", r.strict_ok}, {"holder_gamma", r.holder_ok},
                  {"spectral", r.spectral_ok}}},
                {"r", r.r},
                {"weyl_exponent", r.hs.exponent}};
}

inline json to_json(const HolderEstimate& e)
{
    return json{{"slope", e.slope},       {"theory", e.theory},       {"residual", e.residual},
                {"intercept", e.intercept}, {"lags", e.lags}, {"increments", e.increments}};
}

}  // namespace stwm
