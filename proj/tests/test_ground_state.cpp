#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlslab/ground_state.hpp"

using namespace nlslab;

namespace {

double hn(const RadialField& f) { return std::sqrt(h1_norm_sq(f)); }

GridPtr ref_grid() { return RadialGrid::uniform(500.0, 32768); }

}  // namespace

TEST_CASE("closed forms of W and its scaling derivatives") {
    CHECK(exact::W(0.0) == 1.0);
    CHECK(exact::W(2.0) == doctest::Approx(0.5));
    // ΛW = ½W + rW' and Λ²W = ½ΛW + r(ΛW)'.
    for (double r : {0.1, 1.0, 2.0, 7.5, 40.0}) {
        const double e = 1e-5;
        const double dW = (exact::W(r + e) - exact::W(r - e)) / (2 * e);
        CHECK(exact::LambdaW(r) == doctest::Approx(0.5 * exact::W(r) + r * dW).epsilon(1e-8));
        const double dL = (exact::LambdaW(r + e) - exact::LambdaW(r - e)) / (2 * e);
        CHECK(exact::Lambda2W(r) == doctest::Approx(0.5 * exact::LambdaW(r) + r * dL).epsilon(1e-7));
    }
    CHECK(exact::LambdaW(2.0) == 0.0);
}

TEST_CASE("ground-state bundle reproduces the threshold values") {
    const auto gs = build_ground_state(ref_grid());
    CHECK(std::abs(gs.E_W / exact::E_W - 1.0) < 1e-6);
    CHECK(std::abs(gs.W_h1_sq / exact::W_h1_sq - 1.0) < 1e-6);
    CHECK(std::abs(gs.W_quartic / exact::W_h1_sq - 1.0) < 1e-6);
    CHECK(hn(gs.LambdaW_fd - gs.LambdaW) / hn(gs.LambdaW) < 1e-3);
    const auto vr = variational_report(gs.W);
    CHECK(std::abs(vr.sobolev_ratio / exact::sobolev_const - 1.0) < 1e-6);
}

TEST_CASE("scaling generator is second order") {
    std::vector<double> err;
    for (int n : {2048, 4096}) {
        const auto g = RadialGrid::uniform(50.0, n);
        const auto W = RadialField::from_real_function(g, exact::W);
        const auto LW = RadialField::from_real_function(g, exact::LambdaW);
        err.push_back(hn(scaling_generator(W) - LW));
    }
    CHECK(std::log2(err[0] / err[1]) > 1.8);
}

TEST_CASE("delta measures the distance to the threshold norm") {
    const auto g = ref_grid();
    const auto W = RadialField::from_real_function(g, exact::W);
    CHECK(delta(W) == 0.0);
    for (double a : {0.5, 0.9, 1.1, 1.5})
        CHECK(delta(a * W) == doctest::Approx(std::abs(a * a - 1.0) * exact::W_h1_sq).epsilon(1e-6));
}

TEST_CASE("symmetry action: group law and invariances") {
    const auto g = RadialGrid::uniform(100.0, 8192);
    const auto u = RadialField::from_function(g, [](double r) { return cplx(std::exp(-r * r / 4.0), 0.2 * std::exp(-r)); });
    const SymmetryElement a{0.4, 1.3}, b{-1.1, 0.7};
    const auto lhs = rescale(rescale(u, a), b);
    const auto rhs = rescale(u, a.compose(b));
    CHECK(hn(lhs - rhs) / hn(u) < 1e-5);
    // Ḣ¹ norm, potential energy and energy are invariant; the phase acts by multiplication.
    const auto v = rescale(u, a);
    CHECK(h1_norm_sq(v) == doctest::Approx(h1_norm_sq(u)).epsilon(1e-6));
    CHECK(weighted_quartic(v) == doctest::Approx(weighted_quartic(u)).epsilon(1e-6));
    CHECK(energy(v) == doctest::Approx(energy(u)).epsilon(1e-6));
    const auto p = rescale(u, {0.9, 1.0});
    CHECK(hn(p - std::exp(cplx(0.0, -0.9)) * u) / hn(u) < 1e-13);
    CHECK_THROWS_AS(rescale(u, {0.0, -1.0}), DomainError);
}

TEST_CASE("rescaled ground state keeps its W-like exterior") {
    const auto g = ref_grid();
    for (double lam : {0.6, 1.7}) {
        const auto direct = RadialField::from_real_function(g, [lam](double r) { return exact::W(r / lam) / std::sqrt(lam); });
        const auto W = RadialField::from_real_function(g, exact::W);
        CHECK(hn(rescale(W, {0.0, lam}) - direct) / hn(direct) < 1e-6);
        CHECK(delta(rescale(W, {0.0, lam})) < 1e-5);
    }
}

TEST_CASE("weighted Sobolev inequality is strict away from W") {
    const auto g = ref_grid();
    for (double s : {0.5, 1.0, 3.0}) {
        const auto f = RadialField::from_real_function(g, [s](double r) { return std::exp(-r * r / (s * s)); });
        const auto vr = variational_report(f);
        CHECK(vr.sobolev_ratio < exact::sobolev_const - 1e-3);
        // Scale invariance of the ratio.
        CHECK(variational_report(rescale(f, {0.0, 2.0})).sobolev_ratio == doctest::Approx(vr.sobolev_ratio).epsilon(1e-5));
    }
}

TEST_CASE("energy of multiples of W") {
    const auto g = ref_grid();
    const auto W = RadialField::from_real_function(g, exact::W);
    for (double a : {0.5, 0.9, 1.1}) {
        const double expect = exact::W_h1_sq * (0.5 * a * a - 0.25 * std::pow(a, 4));
        CHECK(energy(a * W) == doctest::Approx(expect).epsilon(1e-6));
    }
    CHECK(kinetic(W) == doctest::Approx(h1_norm_sq(W)));
}
