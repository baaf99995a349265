#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlslab/modulation.hpp"

using namespace nlslab;

namespace {

const cplx kI(0.0, 1.0);

double hn(const RadialField& f) { return std::sqrt(h1_norm_sq(f)); }

GridPtr grid() { return RadialGrid::uniform(500.0, 16384); }

}  // namespace

TEST_CASE("decomposition of W is trivial") {
    const auto ctx = make_modulation_context(grid(), 8.0);
    const auto st = decompose(ctx.W, ctx);
    CHECK(std::abs(st.theta) < 1e-12);
    CHECK(std::abs(st.lambda - 1.0) < 1e-12);
    CHECK(hn(st.v) < 1e-12);
    CHECK(ctx.det_at_W > ctx.det_floor);
}

TEST_CASE("modulation parameters of a rescaled ground state") {
    const auto g = grid();
    const auto ctx = make_modulation_context(g, 8.0);
    for (auto [th, lam] : {std::pair{0.3, 1.7}, std::pair{-2.0, 0.6}, std::pair{3.0, 1.2}}) {
        const auto u = rescale(ctx.W, {th, lam});
        const auto st = decompose(u, ctx);
        CHECK(std::abs(std::remainder(st.theta - th, 2.0 * exact::kPi)) < 1e-6);
        CHECK(std::abs(st.lambda - lam) < 1e-6);
    }
}

TEST_CASE("orthogonality conditions hold after decomposition") {
    const auto g = grid();
    const auto ctx = make_modulation_context(g, 8.0);
    const auto bump = RadialField::from_function(g, [](double r) { return cplx(std::exp(-r * r), 0.5 * std::exp(-r)); });
    const auto u = rescale(ctx.W + 0.01 * bump, {0.2, 1.1});
    const auto st = decompose(u, ctx);
    CHECK(std::abs(st.orth1) < 1e-9);
    CHECK(std::abs(st.orth2) < 1e-9);
    // v = αP≤M W + g and v = βW + ṽ exactly.
    CHECK(hn(st.v - st.alpha * ctx.PW - st.g) < 1e-12);
    CHECK(hn(st.v - st.beta * ctx.W - st.vtilde) < 1e-12);
    CHECK(std::abs(h1_real(st.g.real_part(), ctx.PW)) < 1e-12 * hn(st.g) * std::sqrt(ctx.PW_sq));
}

TEST_CASE("regime guard and cutoff errors") {
    const auto g = grid();
    const auto ctx = make_modulation_context(g, 8.0, 0.1 * exact::W_h1_sq);
    CHECK_THROWS_AS(decompose(1.2 * ctx.W, ctx), OutOfRegimeError);
    CHECK_NOTHROW(decompose(1.01 * ctx.W, ctx));
    CHECK_THROWS_AS(make_modulation_context(g, -1.0), DomainError);
}

TEST_CASE("alpha and beta splits on pure directions") {
    const auto ctx = make_modulation_context(grid(), 8.0);
    const auto a = alpha_split(0.01 * ctx.PW, ctx);
    CHECK(a.coeff == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(hn(a.rest) < 1e-12);
    CHECK(std::abs(alpha_split(kI * ctx.PW, ctx).coeff) < 1e-15);
    const auto b = beta_split(0.01 * ctx.W, ctx);
    CHECK(b.coeff == doctest::Approx(0.01).epsilon(1e-12));
    CHECK(hn(b.rest) < 1e-12);
}

TEST_CASE("parameter rates of a manufactured trace") {
    const auto g = grid();
    ModulationTrace tr;
    for (int k = 0; k < 20; ++k) {
        ModulationState s;
        s.theta = 0.25 * 0.1 * k;
        s.lambda = std::exp(0.1 * 0.1 * k);
        s.alpha = 0.0;
        s.g = RadialField(g);
        tr.push(0.1 * k, &s, 1e-3);
    }
    const auto r = parameter_rates(tr, 8.0);
    CHECK(r.sup_theta_rate == doctest::Approx(0.25));
    CHECK(r.sup_lambda_rate == doctest::Approx(0.1).epsilon(1e-3));
    CHECK(r.sup_alpha_rate == 0.0);
    ModulationTrace empty;
    empty.push(0.0, nullptr, 1.0);
    CHECK_THROWS_AS(parameter_rates(empty, 8.0), DomainError);
}

TEST_CASE("modulated equation residual detects a corrupted phase") {
    const auto g = grid();
    const auto ctx = make_modulation_context(g, 8.0);
    const auto st = decompose(ctx.W, ctx);
    const auto ok = residual_system_check(st, st, st, 0.01);
    auto bad_next = st;
    bad_next.theta += 0.01;  // fake phase velocity ½ with an unchanged profile
    const auto bad = residual_system_check(st, st, bad_next, 0.01);
    CHECK(ok.total() < 1e-8);
    CHECK(bad.theta_dot == doctest::Approx(0.5));
    CHECK(bad.total() > 1e4 * ok.total());
}

TEST_CASE("energy expansion defect is cubic") {
    const auto g = grid();
    const auto d = RadialField::from_function(g, [](double r) { return cplx(std::exp(-r * r), std::exp(-0.5 * r * r)); });
    const auto e = (1.0 / hn(d)) * d;
    const double d1 = energy_expansion_defect(1e-2 * e), d2 = energy_expansion_defect(1e-3 * e);
    CHECK(std::log10(d1 / d2) > 2.9);
}
