#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <limits>

#include "nlslab/experiments.hpp"

using namespace nlslab;
namespace fs = std::filesystem;

TEST_CASE("resolution presets") {
    const auto ref = resolution_preset("ref");
    CHECK(ref.r_max == 500.0);
    CHECK(ref.n == 32768);
    CHECK(resolution_preset("fine").n == 2 * ref.n);
    CHECK(resolution_preset("coarse").r_max == 250.0);
    CHECK_THROWS_AS(resolution_preset("ultra"), ConfigError);
}

TEST_CASE("checks compare values against bounds") {
    CHECK(make_check("a", 1.0, "<=", 1.0)["pass"].get<bool>());
    CHECK_FALSE(make_check("a", 1.0, "<", 1.0)["pass"].get<bool>());
    CHECK(make_check("a", 2.0, "in", 1.0, 3.0)["pass"].get<bool>());
    CHECK_FALSE(make_check("a", 3.5, "in", 1.0, 3.0)["pass"].get<bool>());
    CHECK(make_check("a", 1.0, "==", 1.0)["pass"].get<bool>());
    // Non-finite values never pass.
    CHECK_FALSE(make_check("a", std::numeric_limits<double>::quiet_NaN(), "<=", 1.0)["pass"].get<bool>());
    CHECK_FALSE(make_check("a", std::numeric_limits<double>::infinity(), ">", 0.0)["pass"].get<bool>());
    CHECK_THROWS(make_check("a", 1.0, "~", 1.0));
    Json rep = {{"checks", Json::array({make_check("a", 1.0, "<=", 2.0), make_check("b", 3.0, "<=", 2.0)})}};
    CHECK_FALSE(all_pass(rep));
    rep["checks"].erase(1);
    CHECK(all_pass(rep));
}

TEST_CASE("seeded random fields are reproducible") {
    const auto g = RadialGrid::uniform(50.0, 512);
    Rng a(7), b(7), c(8);
    const auto fa = random_smooth_field(g, a), fb = random_smooth_field(g, b), fc = random_smooth_field(g, c);
    for (int i = 0; i < g->n(); ++i) CHECK(fa.values[i] == fb.values[i]);
    CHECK(fa.values[0] != fc.values[0]);
    Rng r(1);
    for (int k = 0; k < 1000; ++k) {
        const double x = r.uniform(0.2, 1.0);
        CHECK(x >= 0.2);
        CHECK(x < 1.0);
    }
}

TEST_CASE("evolution settings round trip through JSON") {
    EvolutionConfig c;
    c.dt = 0.005;
    c.t_end = 3.0;
    c.scheme = Scheme::StrangSplit;
    c.absorber.enabled = true;
    c.weights = PotentialWeights::Honest;
    c.delta0 = 0.2;
    const Json j = evolution_config_to_json(c);
    const EvolutionConfig d = evolution_config_from_json(j);
    CHECK(evolution_config_to_json(d) == j);
    CHECK_THROWS_AS(evolution_config_from_json({{"dtt", 0.1}}), ConfigError);
    CHECK_THROWS_AS(evolution_config_from_json({{"dt", "fast"}}), ConfigError);
    CHECK_THROWS_AS(evolution_config_from_json({{"absorber", {{"width", 3}}}}), ConfigError);
}

TEST_CASE("unknown keys are reported") {
    CHECK_NOTHROW(check_keys({{"a", 1}}, {"a", "b"}, "x"));
    CHECK_THROWS_AS(check_keys({{"c", 1}}, {"a", "b"}, "x"), ConfigError);
    CHECK_THROWS_AS(check_keys(Json::array(), {"a"}, "x"), ConfigError);
}

TEST_CASE("eigenpair artifacts round trip") {
    const auto g = RadialGrid::uniform(250.0, 4096);
    const auto ep = solve_eigenpair(g, PotentialWeights::Balanced);
    const auto dir = (fs::temp_directory_path() / "nlslab_test_eigenpair").string();
    fs::remove_all(dir);
    CHECK_THROWS_AS(read_eigenpair(dir, g), PrerequisiteError);
    write_eigenpair(dir, ep);
    const auto back = read_eigenpair(dir, g);
    CHECK(back.e0 == ep.e0);
    CHECK(back.weights == PotentialWeights::Balanced);
    for (int i = 0; i < g->n(); ++i) CHECK(back.Y1.values[i] == ep.Y1.values[i]);
    CHECK_THROWS_AS(read_eigenpair(dir, RadialGrid::uniform(250.0, 2048)), PrerequisiteError);
    fs::remove_all(dir);
}

TEST_CASE("resampling between grids") {
    const auto a = RadialGrid::uniform(50.0, 1024), b = RadialGrid::uniform(50.0, 2048);
    const auto f = RadialField::from_real_function(a, [](double r) { return std::exp(-r * r / 4.0); });
    const auto exact = RadialField::from_real_function(b, [](double r) { return std::exp(-r * r / 4.0); });
    CHECK(std::sqrt(h1_norm_sq(resample(f, b) - exact) / h1_norm_sq(exact)) < 1e-4);
}

TEST_CASE("evolve runner validates its parameters") {
    const auto res = resolution_preset("coarse");
    CHECK_THROWS_AS(run_evolve(res, {{"initial", {{"family", "sech"}}}}, 1), ConfigError);
    CHECK_THROWS_AS(run_evolve(res, {{"initial", {{"amplitud", 0.5}}}}, 1), ConfigError);
    CHECK_THROWS_AS(run_evolve(res, {{"initial", {{"family", "field"}, {"path", "/nonexistent.csv"}}}}, 1),
                    PrerequisiteError);
    const Json rep = run_evolve(res,
                                {{"initial", {{"family", "gaussian"}, {"amplitude", 0.5}}},
                                 {"evolution", {{"t_end", 0.1}, {"modulation", false}}}},
                                1);
    CHECK(rep["trajectory"]["samples"].get<int>() == 2);
}

TEST_CASE("ground-state runner reports all criterion checks") {
    const Json rep = run_groundstate(resolution_preset("coarse"), 3);
    CHECK(rep["checks"].size() == 5);
    CHECK(rep["random_fields"].size() == 20);
    for (const auto& c : rep["checks"]) CHECK(c.contains("pass"));
}
