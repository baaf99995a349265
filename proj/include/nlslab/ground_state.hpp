#pragma once

#include "nlslab/radial.hpp"

namespace nlslab {

namespace exact {
inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double W_h1_sq = 8.0 * kPi / 3.0;    // ‖W‖²_{Ḣ¹} = ∫|x|⁻¹W⁴
inline constexpr double E_W = 2.0 * kPi / 3.0;        // E[W]
inline constexpr double sobolev_const = 3.0 / (8.0 * kPi);

inline double W(double r) { return 1.0 / (1.0 + 0.5 * r); }
inline double LambdaW(double r) { return (2.0 - r) / ((2.0 + r) * (2.0 + r)); }
inline double Lambda2W(double r) {
    const double s = 2.0 + r;
    return (r * r - 12.0 * r + 4.0) / (2.0 * s * s * s);
}
}  // namespace exact

// Phase/scale element acting by u ↦ e^{-iθ} λ^{-1/2} u(x/λ).
struct SymmetryElement {
    double theta = 0.0;
    double lambda = 1.0;
    SymmetryElement compose(const SymmetryElement& o) const {
        return {theta + o.theta, lambda * o.lambda};
    }
};

struct GroundStateBundle {
    RadialField W, LambdaW, Lambda2W;
    RadialField LambdaW_fd;  // scaling generator applied to sampled W
    double W_h1_sq = 0.0;
    double W_quartic = 0.0;
    double E_W = 0.0;
};

GroundStateBundle build_ground_state(GridPtr grid);

RadialField ground_state_field(GridPtr grid, const SymmetryElement& s = {});

// Λf = ½ f + r f' by second-order differences (on v = r f: r v' - ½ v).
RadialField scaling_generator(const RadialField& f);

double energy(const RadialField& u);
double kinetic(const RadialField& u);  // ‖u‖²_{Ḣ¹}
// δ(u) = |‖u‖²_{Ḣ¹} - ‖W‖²_{Ḣ¹}| with ‖W‖² evaluated by the same quadrature.
double delta(const RadialField& u);
double w_h1_sq_on(const RadialGrid& g);

struct VariationalReport {
    double weinstein;
    double sobolev_ratio;
};
VariationalReport variational_report(const RadialField& f);

// Resampling by piecewise-cubic interpolation of r f; harmonic tail beyond r_max.
RadialField rescale(const RadialField& u, const SymmetryElement& s, bool* truncation = nullptr);

}  // namespace nlslab
