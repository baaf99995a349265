#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nlslab/ground_state.hpp"
#include "nlslab/linearized.hpp"
#include "nlslab/radial.hpp"

namespace nlslab {

struct OutOfRegimeError : DomainError {
    using DomainError::DomainError;
};
struct CutoffTooSmallError : DomainError {
    using DomainError::DomainError;
};
struct DecompositionFailure : NumericalError {
    using NumericalError::NumericalError;
};

// Fields and constants shared by all decompositions at one (grid, M).
struct ModulationContext {
    GridPtr grid;
    FrequencyProfile prof;
    double delta0 = 0.0;
    double det_floor = 0.1;  // relative to ‖W‖²‖ΛW‖²
    RadialField W, LW, PW, PLW;
    double W_sq = 0.0, LW_sq = 0.0, PW_sq = 0.0, PLW_sq = 0.0;
    double median_W = 0.0;
    double det_at_W = 0.0;  // relative determinant of the 2×2 Jacobian at u = W
};

// delta0 < 0 selects the default 0.05·‖W‖²_{Ḣ¹}.
ModulationContext make_modulation_context(GridPtr grid, double M, double delta0 = -1.0,
                                          double det_floor = 0.1);

struct ModulationState {
    double theta = 0.0;
    double lambda = 1.0;
    RadialField v;
    double alpha = 0.0;
    RadialField g;
    double beta = 0.0;
    RadialField vtilde;
    double M = 0.0;
    double delta = 0.0;
    double det = 0.0;     // relative Jacobian determinant
    double orth1 = 0.0;   // ⟨v₁, P≤M ΛW⟩
    double orth2 = 0.0;   // ⟨v₂, P≤M W⟩
    int iterations = 0;
};

// w(y) = e^{iθ} λ^{1/2} u(λ y).
RadialField modulated_profile(const RadialField& u, double theta, double lambda);
SymmetryElement cold_start(const RadialField& u, const ModulationContext& ctx);

ModulationState decompose(const RadialField& u, const ModulationContext& ctx,
                          std::optional<SymmetryElement> guess = std::nullopt);

struct Split {
    double coeff;
    RadialField rest;
};
Split alpha_split(const RadialField& v, const ModulationContext& ctx);
Split beta_split(const RadialField& v, const ModulationContext& ctx);

struct ModulationTrace {
    std::vector<double> t, theta, lambda, alpha, beta, delta, g_h1;
    std::vector<bool> in_regime;
    void push(double time, const ModulationState* s, double delta_u);
    size_t size() const { return t.size(); }
    void write_csv(const std::string& path) const;
};

struct RateReport {
    int samples = 0;
    double sup_theta_ratio = 0.0;   // sup |θ̇| / (M²λ⁻²δ)
    double sup_lambda_ratio = 0.0;  // sup |λ̇/λ| / (M²λ⁻²δ)
    double sup_alpha_ratio = 0.0;   // sup |α̇| / (M²λ⁻²δ)
    double sup_theta_rate = 0.0, sup_lambda_rate = 0.0, sup_alpha_rate = 0.0;
    double sup_ratio() const;
};
RateReport parameter_rates(const ModulationTrace& trace, double M, double delta_floor = 1e-14);

struct ResidualReport {
    double real_eq = 0.0;  // Ḣ⁻¹ proxy of the real part of the modulated equation
    double imag_eq = 0.0;
    double total() const { return std::hypot(real_eq, imag_eq); }
    double theta_dot = 0.0, lambda_dot_over_lambda = 0.0;
};
// Centered differences over (prev, mid, next) spaced dt apart; weights select the
// discrete nonlinearity matching the trajectory's scheme.
ResidualReport residual_system_check(const ModulationState& prev, const ModulationState& mid,
                                     const ModulationState& next, double dt,
                                     PotentialWeights weights = PotentialWeights::Balanced);

// Energy expansion defect |E[W+v] - E[W] - Q(v)|.
double energy_expansion_defect(const RadialField& v);

}  // namespace nlslab
