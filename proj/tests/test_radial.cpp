#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "nlslab/ground_state.hpp"
#include "nlslab/radial.hpp"

using namespace nlslab;

namespace {

constexpr double kPi = exact::kPi;

double gaussian(double r) { return std::exp(-r * r); }

// ∫₀^∞ r^{2k} e^{-a r²} dr for k = 1, 2.
double moment2(double a) { return std::sqrt(kPi) / 4.0 * std::pow(a, -1.5); }
double moment4(double a) { return 3.0 * std::sqrt(kPi) / 8.0 * std::pow(a, -2.5); }

}  // namespace

TEST_CASE("grid nodes sit at cell midpoints") {
    const auto g = RadialGrid::uniform(10.0, 100);
    CHECK(g->n() == 100);
    CHECK(g->h() == doctest::Approx(0.1));
    CHECK(g->r(0) == doctest::Approx(0.05));
    CHECK(g->r(99) == doctest::Approx(9.95));
    CHECK(same_grid(*g, *RadialGrid::uniform(10.0, 100)));
    CHECK_FALSE(same_grid(*g, *RadialGrid::uniform(10.0, 200)));
}

TEST_CASE("Gaussian norms match closed forms") {
    const auto g = RadialGrid::uniform(20.0, 4096);
    const auto f = RadialField::from_real_function(g, gaussian);
    // ‖∇e^{-r²}‖² = 4π∫(2r e^{-r²})² r² dr, ‖e^{-r²}‖² = 4π∫ r² e^{-2r²} dr.
    CHECK(h1_norm_sq(f) == doctest::Approx(16.0 * kPi * moment4(2.0)).epsilon(1e-8));
    CHECK(l2_norm_sq(f) == doctest::Approx(4.0 * kPi * moment2(2.0)).epsilon(1e-8));
    // ∫|x|⁻¹ e^{-4r²} dx = 4π∫ r e^{-4r²} dr = π/2.
    CHECK(weighted_quartic(f) == doctest::Approx(kPi / 2.0).epsilon(1e-8));
}

TEST_CASE("ground-state integrals converge to 8pi/3") {
    const auto g = RadialGrid::uniform(500.0, 32768);
    const auto W = RadialField::from_real_function(g, exact::W);
    CHECK(std::abs(h1_norm_sq(W) / exact::W_h1_sq - 1.0) < 1e-6);
    CHECK(std::abs(weighted_quartic(W) / exact::W_h1_sq - 1.0) < 1e-6);
}

TEST_CASE("Hdot1 inner product is Hermitian and phase covariant") {
    const auto g = RadialGrid::uniform(20.0, 1024);
    const auto f = RadialField::from_function(g, [](double r) { return cplx(gaussian(r), 0.3 * r * gaussian(r)); });
    const auto h = RadialField::from_function(g, [](double r) { return cplx(1.0 / (1.0 + r * r), 0.0); });
    CHECK(std::abs(h1_inner(f, h) - std::conj(h1_inner(h, f))) < 1e-14);
    const cplx ph = std::exp(cplx(0.0, 0.7));
    CHECK(std::abs(h1_inner(ph * f, h) - ph * h1_inner(f, h)) < 1e-13);
    CHECK(h1_real(f, f) == doctest::Approx(h1_norm_sq(f)));
}

TEST_CASE("sine transform round trip") {
    const auto g = RadialGrid::uniform(500.0, 8192);
    const auto W = RadialField::from_real_function(g, exact::W);
    const auto back = inverse_sine_transform(sine_transform(W));
    double err = 0.0;
    for (int i = 0; i < g->n(); ++i) err = std::max(err, std::abs(back.values[i] - W.values[i]) / std::abs(W.values[i]));
    CHECK(err <= 1e-8);

    std::vector<double> x(64);
    for (size_t i = 0; i < x.size(); ++i) x[i] = std::sin(0.3 * i) + 0.1 * i;
    const auto y = dst3(dst2(x));
    for (size_t i = 0; i < x.size(); ++i) CHECK(y[i] == doctest::Approx(2.0 * x.size() * x[i]));
}

TEST_CASE("spectral and quadrature Hdot1 norms agree on smooth data") {
    const auto g = RadialGrid::uniform(20.0, 2048);
    const auto f = RadialField::from_real_function(g, gaussian);
    CHECK(h1_norm_sq_spectral(sine_transform(f)) == doctest::Approx(h1_norm_sq(f)).epsilon(1e-4));
}

TEST_CASE("frequency profile is a C2 step from 1 to 0") {
    CHECK(FrequencyProfile::phi(0.0) == 1.0);
    CHECK(FrequencyProfile::phi(1.0) == 1.0);
    CHECK(FrequencyProfile::phi(1.5) == doctest::Approx(0.5));
    CHECK(FrequencyProfile::phi(2.0) == doctest::Approx(0.0));
    CHECK(FrequencyProfile::phi(3.0) == 0.0);
    double prev = 1.0;
    for (double s = 1.0; s <= 2.0; s += 0.01) {
        const double p = FrequencyProfile::phi(s);
        CHECK(p <= prev + 1e-15);
        prev = p;
    }
}

TEST_CASE("low-pass and high-pass split a field exactly") {
    const auto g = RadialGrid::uniform(50.0, 2048);
    const auto f = RadialField::from_real_function(g, [](double r) { return std::cos(3.0 * r) * gaussian(0.5 * r); });
    const auto h = RadialField::from_real_function(g, exact::W);
    const FrequencyProfile prof{4.0};
    const auto sum = lowpass(f, prof) + highpass(f, prof);
    CHECK(std::sqrt(h1_norm_sq(sum - f) / h1_norm_sq(f)) < 1e-12);
    // Linearity.
    const auto lin = lowpass(2.0 * f + h, prof) - (2.0 * lowpass(f, prof) + lowpass(h, prof));
    CHECK(std::sqrt(h1_norm_sq(lin) / h1_norm_sq(h)) < 1e-12);
    // A low-frequency profile passes almost unchanged; a high-frequency one is removed.
    const auto slow = RadialField::from_real_function(g, [](double r) { return gaussian(0.2 * r); });
    CHECK(std::sqrt(h1_norm_sq(lowpass(slow, prof) - slow) / h1_norm_sq(slow)) < 1e-6);
    const auto fast = RadialField::from_real_function(g, [](double r) { return std::sin(20.0 * r) * gaussian(0.1 * r); });
    CHECK(h1_norm_sq(lowpass(fast, prof)) < 1e-6 * h1_norm_sq(fast));
}

TEST_CASE("sector Laplacian is second-order accurate") {
    // Δ e^{-r²} = (4r² - 6) e^{-r²}.
    std::vector<double> err;
    for (int n : {512, 1024}) {
        const auto g = RadialGrid::uniform(10.0, n);
        const auto f = RadialField::from_real_function(g, gaussian);
        const auto lap = apply_sector_laplacian(f, 0.0);
        double e = 0.0;
        for (int i = 0; i < n; ++i) {
            const double r = g->r(i);
            e = std::max(e, std::abs(lap.values[i].real() - (4.0 * r * r - 6.0) * gaussian(r)));
        }
        err.push_back(e);
    }
    CHECK(std::log2(err[0] / err[1]) > 1.8);
}

TEST_CASE("sample_v interpolates and extends by the harmonic tail") {
    const auto g = RadialGrid::uniform(10.0, 1000);
    const auto f = RadialField::from_real_function(g, [](double r) { return 1.0 / (1.0 + r); });
    for (double x : {0.3, 2.71, 7.77}) CHECK(sample_v(f, x).real() == doctest::Approx(x / (1.0 + x)).epsilon(1e-8));
    CHECK(sample_v(f, 25.0) == f.tail);
    CHECK(sample_v(f, 0.0) == cplx(0.0));
}

TEST_CASE("field CSV round trip is exact") {
    const auto g = RadialGrid::uniform(10.0, 64);
    const auto f = RadialField::from_function(g, [](double r) { return cplx(std::exp(-r), std::sin(r) / (1.0 + r)); });
    const auto path = (std::filesystem::temp_directory_path() / "nlslab_test_field.csv").string();
    write_field_csv(path, f);
    const auto back = read_field_csv(path, g);
    for (int i = 0; i < g->n(); ++i) CHECK(back.values[i] == f.values[i]);
    CHECK(back.tail == f.tail);
    CHECK_THROWS_AS(read_field_csv(path, RadialGrid::uniform(10.0, 32)), StructuralError);
    std::remove(path.c_str());
}

TEST_CASE("non-finite fields are rejected") {
    const auto g = RadialGrid::uniform(10.0, 16);
    auto f = RadialField::from_real_function(g, gaussian);
    CHECK_NOTHROW(f.check_finite());
    f.values[3] = cplx(std::nan(""), 0.0);
    CHECK_THROWS_AS(f.check_finite(), NumericalError);
}

TEST_CASE("fields on different grids do not mix") {
    const auto a = RadialField::from_real_function(RadialGrid::uniform(10.0, 16), gaussian);
    const auto b = RadialField::from_real_function(RadialGrid::uniform(10.0, 32), gaussian);
    CHECK_THROWS_AS(a + b, StructuralError);
}
