#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlslab/evolution.hpp"

using namespace nlslab;

namespace {

double hn(const RadialField& f) { return std::sqrt(h1_norm_sq(f)); }

GridPtr coarse() { return RadialGrid::uniform(250.0, 4096); }

RadialField gaussian(GridPtr g, double a) {
    return RadialField::from_real_function(g, [a](double r) { return a * std::exp(-r * r); });
}

EvolutionConfig quiet(double dt, double t_end) {
    EvolutionConfig c;
    c.dt = dt;
    c.t_end = t_end;
    c.sample_dt = 0.1;
    c.modulation = false;
    return c;
}

}  // namespace

TEST_CASE("scheme names round trip") {
    for (Scheme s : {Scheme::CrankNicolsonRelaxation, Scheme::StrangSplit}) CHECK(parse_scheme(scheme_name(s)) == s);
    CHECK_THROWS_AS(parse_scheme("leapfrog"), ConfigError);
}

TEST_CASE("invalid configurations are rejected") {
    const auto u = gaussian(coarse(), 0.5);
    auto c = quiet(0.01, 1.0);
    c.dt = 0.0;
    CHECK_THROWS_AS(evolve(u, c), ConfigError);
    c = quiet(0.01, 1.0);
    c.absorber.enabled = true;
    c.absorber.start = 0.5;
    CHECK_THROWS_AS(evolve(u, c), ConfigError);
    c = quiet(10.0, 10.0);
    c.scheme = Scheme::StrangSplit;
    CHECK_THROWS_AS(evolve(gaussian(coarse(), 3.0), c), ConfigError);
}

TEST_CASE("the sampled ground state is a static solution") {
    const auto g = coarse();
    const auto W = RadialField::from_real_function(g, exact::W);
    const auto tr = evolve(W, quiet(0.01, 1.0));
    CHECK(hn(tr.final_state - W) < 1e-8);
    CHECK(tr.verdict.is_static);
}

TEST_CASE("gauge covariance and conservation laws") {
    const auto g = coarse();
    const auto u0 = gaussian(g, 0.8);
    const auto c = quiet(0.01, 0.5);
    const auto a = evolve(u0, c);
    const cplx ph = std::exp(cplx(0.0, 0.7));
    const auto b = evolve(ph * u0, c);
    CHECK(hn(ph * a.final_state - b.final_state) / hn(a.final_state) < 1e-10);
    CHECK(l2_norm_sq(a.final_state) == doctest::Approx(l2_norm_sq(u0)).epsilon(1e-8));
    // Energy drift of the scheme falls at second order in dt.
    auto half = c;
    half.dt = 0.005;
    const double drift_half = evolve(u0, half).energy_drift_rate;
    CHECK(a.energy_drift_rate / drift_half > 3.0);
}

TEST_CASE("split-step scheme is second order in time on smooth data") {
    const auto g = coarse();
    const auto u0 = gaussian(g, 0.8);
    std::vector<RadialField> out;
    for (double dt : {0.002, 0.001, 0.0005}) {
        auto c = quiet(dt, 0.2);
        c.scheme = Scheme::StrangSplit;
        out.push_back(evolve(u0, c).final_state);
    }
    const double p = std::log2(hn(out[0] - out[1]) / hn(out[1] - out[2]));
    CHECK(p == doctest::Approx(2.0).epsilon(0.1));
}

TEST_CASE("supercritical multiple of W blows up") {
    auto c = quiet(0.01, 3.0);
    c.sample_dt = 0.05;
    const auto tr = evolve(1.1 * RadialField::from_real_function(coarse(), exact::W), c);
    CHECK(tr.blowup_detected);
    CHECK(tr.verdict.kind == ClassifierVerdict::Kind::BlowupProxy);
    CHECK(tr.t_stop < 3.0);
}

TEST_CASE("small data disperse") {
    auto c = quiet(0.01, 10.0);
    c.absorber.enabled = true;
    const auto tr = evolve(gaussian(coarse(), 0.5), c);
    CHECK(tr.verdict.kind == ClassifierVerdict::Kind::ScatteringProxy);
    CHECK(tr.verdict.V_ratio < 0.05);
}

TEST_CASE("series and diagnostics are consistent") {
    const auto g = coarse();
    auto c = quiet(0.01, 1.0);
    c.modulation = true;
    const auto tr = evolve(0.99 * RadialField::from_real_function(g, exact::W), c);
    REQUIRE(tr.t.size() == 11);
    CHECK(tr.t.back() == doctest::Approx(1.0));
    CHECK(tr.modulation.size() == tr.t.size());
    for (size_t i = 0; i < tr.t.size(); ++i) CHECK(tr.E[i] == doctest::Approx(tr.E[0]).epsilon(1e-5));
    // Backward runs mirror time.
    c.backward = true;
    const auto back = evolve(0.99 * RadialField::from_real_function(g, exact::W), c);
    CHECK(back.t.back() == doctest::Approx(-1.0));
}

TEST_CASE("virial check on a static ground state is trivial") {
    auto c = quiet(0.01, 1.0);
    const auto tr = evolve(RadialField::from_real_function(coarse(), exact::W), c);
    const auto v = modulated_virial_check(tr, 0.0, 1.0);
    CHECK(v.trivial);
    CHECK_THROWS_AS(modulated_virial_check(tr, 1.0, 0.5), DomainError);
}
