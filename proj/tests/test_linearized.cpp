#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "nlslab/linearized.hpp"

using namespace nlslab;
using K = LinearizedOperator::Kind;

namespace {

double hn(const RadialField& f) { return std::sqrt(h1_norm_sq(f)); }

GridPtr coarse() { return RadialGrid::uniform(250.0, 4096); }

}  // namespace

TEST_CASE("potential weights") {
    const auto g = coarse();
    const auto honest = potential_weights(*g, PotentialWeights::Honest);
    CHECK(honest[0] == 0.75);
    CHECK(honest[1] == 1.0);
    const auto bal = potential_weights(*g, PotentialWeights::Balanced);
    CHECK(std::abs(bal[g->n() / 2] - 1.0) < 1e-3);
}

TEST_CASE("operator matrices are symmetric") {
    const auto g = coarse();
    const Tridiag A = kinetic_matrix(*g, 0);
    const Tridiag Lp = operator_matrix(*g, {K::Lplus});
    std::vector<double> x(g->n()), y(g->n());
    for (int i = 0; i < g->n(); ++i) {
        x[i] = std::sin(0.01 * i) * std::exp(-1e-3 * i);
        y[i] = std::cos(0.02 * i) / (1.0 + 1e-2 * i);
    }
    for (const Tridiag* T : {&A, &Lp}) {
        const auto Tx = T->apply(x), Ty = T->apply(y);
        double a = 0, b = 0;
        for (int i = 0; i < g->n(); ++i) {
            a += Tx[i] * y[i];
            b += Ty[i] * x[i];
        }
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("kernel elements: L- W and L+ Lambda W vanish to second order") {
    std::vector<double> rm, rp;
    for (int n : {2048, 4096}) {
        const auto g = RadialGrid::uniform(250.0, n);
        const auto W = RadialField::from_real_function(g, exact::W);
        const auto LW = RadialField::from_real_function(g, exact::LambdaW);
        rm.push_back(hm1_norm(apply_linearized({K::Lminus}, W)) / hn(W));
        rp.push_back(hm1_norm(apply_linearized({K::Lplus}, LW)) / hn(LW));
    }
    CHECK(std::log2(rm[0] / rm[1]) > 1.8);
    CHECK(std::log2(rp[0] / rp[1]) > 1.8);
    // Negative control: W is not in the kernel of L+.
    const auto g = coarse();
    const auto W = RadialField::from_real_function(g, exact::W);
    CHECK(hm1_norm(apply_linearized({K::Lplus}, W)) / hn(W) > 0.1);
}

TEST_CASE("sign structure of L+ and L-") {
    const auto g = coarse();
    const auto p = count_directions(g, {K::Lplus}, {});
    CHECK(p.neg_count == 1);
    CHECK(p.zero_count == 1);
    const auto m = count_directions(g, {K::Lminus}, {});
    CHECK(m.neg_count == 0);
    CHECK(m.zero_count == 1);
}

TEST_CASE("quadratic form polarizes to the bilinear form") {
    const auto g = coarse();
    const auto v = RadialField::from_function(g, [](double r) { return cplx(std::exp(-r), 0.5 * std::exp(-r * r)); });
    const auto w = RadialField::from_function(g, [](double r) { return cplx(1.0 / (1.0 + r * r), -std::exp(-0.5 * r)); });
    CHECK(bilinear_form(v, v) == doctest::Approx(quadratic_form(v)));
    const double pol = 0.25 * (quadratic_form(v + w) - quadratic_form(v - w));
    CHECK(bilinear_form(v, w) == doctest::Approx(pol).epsilon(1e-10));
    // Q(v) = ½⟨L+v₁,v₁⟩ + ½⟨L-v₂,v₂⟩.
    const double q = 0.5 * linearized_form({K::Lplus}, v.real_part(), v.real_part()) +
                     0.5 * linearized_form({K::Lminus}, v.imag_part(), v.imag_part());
    CHECK(quadratic_form(v) == doctest::Approx(q).epsilon(1e-10));
}

TEST_CASE("eigenpair of the linearized operator") {
    const auto g = coarse();
    const auto ep = solve_eigenpair(g);
    CHECK(ep.e0 == doctest::Approx(0.4277).epsilon(5e-3));
    CHECK(ep.relative_residual < 1e-6);
    CHECK(h1_real(ep.Y1, RadialField::from_real_function(g, exact::W)) > 0.0);
    CHECK(h1_norm_sq(ep.Y1) + h1_norm_sq(ep.Y2) == doctest::Approx(1.0));
    CHECK(ep.l2_identity_lhs == doctest::Approx(ep.l2_identity_rhs).epsilon(1e-4));
    // 𝒴± = Y₁ ± iY₂.
    CHECK(hn(ep.unstable() - ep.stable() - 2.0 * cplx(0.0, 1.0) * ep.Y2) < 1e-14);
}

TEST_CASE("linearized flow grows and decays at rate e0") {
    const auto g = coarse();
    const auto ep = solve_eigenpair(g);
    const double up = std::log(hn(linearized_flow(ep.unstable(), 1.0, 0.01)) / hn(ep.unstable()));
    const double down = -std::log(hn(linearized_flow(ep.stable(), 1.0, 0.01)) / hn(ep.stable()));
    CHECK(up == doctest::Approx(ep.e0).epsilon(0.02));
    CHECK(down == doctest::Approx(ep.e0).epsilon(0.02));
}

TEST_CASE("one real unstable direction across sectors") {
    const auto rows = sector_sweep(coarse(), 3);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].real_unstable == 1);
    for (size_t j = 1; j < rows.size(); ++j) CHECK(rows[j].real_unstable == 0);
}

TEST_CASE("coercivity under orthogonality conditions") {
    const auto g = coarse();
    CHECK(coercivity_orthogonal(g).min_rayleigh > 0.0);
    CHECK(coercivity_lowpass(g, 8.0).min_rayleigh > 0.0);
    // Negative control: without constraints L+ has a negative direction.
    CHECK(count_directions(g, {K::Lplus}, {}).min_rayleigh < 0.0);
    CHECK(sector_min_rayleigh(g, 3) > sector_min_rayleigh(g, 2));
}

TEST_CASE("j = 1 kernel closed forms solve the sector ODE") {
    std::vector<double> res;
    for (int n : {1024, 2048}) {
        const auto g = RadialGrid::uniform(50.0, n);
        const auto f = sector_kernel_solution(g, 1, 0.0, 1.0);
        const auto r = sector_kernel_residual(f);
        double e = 0.0;
        for (int i = 0; i < n; ++i)
            if (g->r(i) > 1.0 && g->r(i) < 40.0) e = std::max(e, std::abs(r.values[i]) / std::abs(f.values[i]));
        res.push_back(e);
    }
    CHECK(std::log2(res[0] / res[1]) > 1.8);
}
