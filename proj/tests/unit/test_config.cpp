#include <gtest/gtest.h>

#include "stwm/config.hpp"

using namespace stwm;

namespace
{

std::string field_of(const json& doc)
{
    try
    {
        parse_run_config(doc);
    }
    catch (const ConfigError& e)
    {
        return e.field();
    }
    return "";
}

json base()
{
    return json::parse(R"({"model": {"d": 1, "J": 4, "alpha": 0, "beta": 1, "gamma": 1, "T": 2}})");
}

}  // namespace

TEST(Config, BareModelDocument)
{
    const auto rc = parse_run_config(
        json::parse(R"({"d": 2, "J": 4, "alpha": 0.5, "beta": 1, "gamma": 1.2})"));
    EXPECT_EQ(rc.model.d, 2);
    EXPECT_EQ(rc.model.count, 4u);
    EXPECT_EQ(rc.model.extents.size(), 2u);
    EXPECT_EQ(rc.model.horizon, 1.0);
    EXPECT_EQ(rc.points.size(), 64u);
}

TEST(Config, FullDocument)
{
    auto doc = base();
    doc["model"]["kappa2"] = 1.5;
    doc["grid"] = {{"t_start", 0.0}, {"t_end", 1.5}, {"steps", 3}};
    doc["space"] = {{"points", {0.5, 1.0}}};
    doc["n_paths"] = 7;
    doc["seed"] = 12345678901234ull;
    doc["quadrature"] = {{"rel_tol", 1e-12}};
    doc["holder"] = {{"t0", 4}, {"lags", "5:9"}, {"mode", 2}};
    const auto rc = parse_run_config(doc);
    EXPECT_EQ(rc.model.kappa2_tilde, 1.5);
    EXPECT_EQ(rc.time_grid().size(), 4u);
    EXPECT_EQ(rc.time_grid().back(), 1.5);
    EXPECT_EQ(rc.points.size(), 2u);
    EXPECT_EQ(rc.n_paths, 7u);
    EXPECT_EQ(rc.seed.master, 12345678901234ull);
    EXPECT_EQ(rc.quadrature.rel_tol, 1e-12);
    EXPECT_EQ(rc.holder.lags.size(), 5u);
    EXPECT_EQ(rc.holder.lags.front(), 1.0 / 32);
}

TEST(Config, LatticePoints)
{
    auto doc = base();
    doc["space"] = {{"lattice", {3}}};
    const auto rc = parse_run_config(doc);
    ASSERT_EQ(rc.points.size(), 3u);
    EXPECT_DOUBLE_EQ(rc.points[1][0], std::numbers::pi / 2);
}

TEST(Config, FieldLevelErrors)
{
    auto d3 = base();
    d3["model"]["d"] = 3;
    EXPECT_EQ(field_of(d3), "model.d");
    EXPECT_EQ(field_of(json::parse(R"({"d": 3, "J": 1, "alpha": 0, "beta": 1, "gamma": 1})")), "d");
    auto noJ = base();
    noJ["model"].erase("J");
    EXPECT_EQ(field_of(noJ), "model.J");
    auto typo = base();
    typo["model"]["gama"] = 1;
    EXPECT_EQ(field_of(typo), "model.gama");
    auto grid = base();
    grid["grid"] = {{"t_end", 5.0}};
    EXPECT_EQ(field_of(grid), "grid.t_end");
    auto pts = base();
    pts["space"] = {{"points", {4.0}}};
    EXPECT_EQ(field_of(pts), "space.points[0]");
    auto paths = base();
    paths["n_paths"] = 0;
    EXPECT_EQ(field_of(paths), "n_paths");
    auto neg = base();
    neg["seed"] = -3;
    EXPECT_EQ(field_of(neg), "seed");
    auto frac = base();
    frac["model"]["J"] = 2.5;
    EXPECT_EQ(field_of(frac), "model.J");
    auto tol = base();
    tol["quadrature"] = {{"rel_tol", 0}};
    EXPECT_EQ(field_of(tol), "quadrature.rel_tol");
    auto mode = base();
    mode["cov"] = {{"mode", 9}};
    EXPECT_EQ(field_of(mode), "cov.mode");
}

TEST(Config, LagSpec)
{
    EXPECT_EQ(parse_lag_spec("6:12").size(), 7u);
    EXPECT_EQ(parse_lag_spec("0.1,0.05"), (std::vector<double>{0.1, 0.05}));
    EXPECT_THROW(parse_lag_spec("a:b"), ConfigError);
    EXPECT_THROW(parse_lag_spec("0.1,,0.2"), ConfigError);
    EXPECT_THROW(parse_lag_spec("9:3"), ConfigError);
}

TEST(Config, ReportJson)
{
    ModelConfig c;
    c.count = 8;
    c.gamma = 0.75;
    const auto r = check_exponents(SpectralModel(c), {});
    const json j = to_json(r);
    EXPECT_FALSE(j["satisfied"].get<bool>());
    EXPECT_TRUE(j["hs"]["diverges"].get<bool>());
    EXPECT_TRUE(j["hs"]["tail"].is_null());
    EXPECT_TRUE(j["margins"].contains("strict_gamma"));
    EXPECT_TRUE(j["margins"].contains("holder_gamma"));
    EXPECT_TRUE(j["margins"].contains("spectral"));
    EXPECT_TRUE(json::parse(j.dump())["hs"]["tail"].is_null());
}
