#pragma once

#include <string>
#include <vector>

#include "nlslab/ground_state.hpp"
#include "nlslab/radial.hpp"

namespace nlslab {

// Node weights multiplying the |x|⁻¹W² coefficient.  Honest: 1 everywhere except 3/4 at
// the first node, which corrects the odd-reflection stencil's 3/2-vs-2 error on the r²
// Taylor term.  Balanced: chosen so that the sampled W is an exact discrete static
// solution of the evolution scheme (1 + O(h²) away from the origin).
enum class PotentialWeights { Honest, Balanced };

std::vector<double> potential_weights(const RadialGrid& g, PotentialWeights kind);

// Symmetric tridiagonal matrix on v = r f.
struct Tridiag {
    std::vector<double> d, e;  // diagonal (n), off-diagonal (n-1)
    int n() const { return static_cast<int>(d.size()); }
    std::vector<double> apply(const std::vector<double>& x) const;
};

struct LinearizedOperator {
    enum class Kind { Lplus, Lminus };
    Kind kind = Kind::Lplus;
    int j = 0;
    PotentialWeights weights = PotentialWeights::Honest;
    double coeff() const { return kind == Kind::Lplus ? 3.0 : 1.0; }
    double mu() const { return j * (j + 1.0); }
    std::string name() const;
};

// Discrete kinetic form A (-∂_rr + μ/r² on v, Neumann at r_max) and the form of the operator.
Tridiag kinetic_matrix(const RadialGrid& g, int j);
Tridiag operator_matrix(const RadialGrid& g, const LinearizedOperator& op);

// v-samples of r·Δf with the odd reflection at the origin and the field's tail as
// Dirichlet data at r_max (the stencil shared by the evolution schemes).
std::vector<cplx> scheme_laplacian_v(const RadialField& f);

// Applies the operator to a field using the field's own tail as boundary data.
RadialField apply_linearized(const LinearizedOperator& op, const RadialField& f);

// ⟨L_c f, g⟩_{L²} = Re⟨f,g⟩_{Ḣ¹} - c ∫|x|⁻¹W² Re(f ḡ), high-order quadrature.
double linearized_form(const LinearizedOperator& op, const RadialField& f, const RadialField& g);
double potential_pairing(const RadialField& f, const RadialField& g);
// Q(v) and its polarization B(v,w).
double quadratic_form(const RadialField& v);
double bilinear_form(const RadialField& v, const RadialField& w);

RadialField sector_kernel_solution(GridPtr grid, int j, double c1, double c2);
// Residual of the j=1 kernel ODE (second-order differences, values on nodes).
RadialField sector_kernel_residual(const RadialField& f1);
// Ḣ¹(r²dr) norm of a j=1 profile including the angular term: 4π∫(f'² + 2f²/r²) r² dr.
double sector_h1_norm_sq(const RadialField& f, int j);

struct Constraint {
    std::string name;
    std::vector<double> row;  // linear functional on v = r f
};
// ⟨·, f⟩_{Ḣ¹} using the discrete kinetic form.
Constraint h1_constraint(const std::string& name, const RadialField& f, int j = 0);
// Raw functional given as a vector (e.g. the form of another operator against a field).
Constraint functional_constraint(const std::string& name, std::vector<double> row);

struct CoercivityReport {
    std::string op_name;
    std::vector<std::string> constraint_set;
    double min_rayleigh = 0.0;
    int neg_count = 0;
    int zero_count = 0;
    double zero_tol = 0.0;
    double gap = 0.0;  // smallest eigenvalue above zero_tol
    std::vector<double> lowest;  // few smallest constrained eigenvalues
    std::vector<RadialField> zero_modes;
};

// Number of eigenvalues of the constrained pencil (K, A) below sigma.
int count_below(const Tridiag& K, const Tridiag& A, const std::vector<Constraint>& cons, double sigma);
// k smallest eigenvalues of the constrained pencil by bisection on inertia counts.
std::vector<double> smallest_eigenvalues(const Tridiag& K, const Tridiag& A,
                                         const std::vector<Constraint>& cons, int k,
                                         double tol = 1e-12);
// Eigenvector of the unconstrained pencil near sigma (inverse iteration).
std::vector<double> pencil_eigenvector(const Tridiag& K, const Tridiag& A, double sigma);
// Residual bound ‖K x‖_{A⁻¹}/‖x‖_A: some eigenvalue lies within this of zero.
double kernel_residual_bound(const Tridiag& K, const Tridiag& A, const std::vector<double>& x);
// Ḣ¹ angle (A-metric) between two v-vectors.
double form_angle(const Tridiag& A, const std::vector<double>& x, const std::vector<double>& y);

CoercivityReport count_directions(GridPtr grid, const LinearizedOperator& op,
                                  const std::vector<Constraint>& constraints, int n_lowest = 3);

struct CoercivityFamily {
    std::string name;
    CoercivityReport plus, minus;
    double min_rayleigh = 0.0;   // min over both blocks
    double epsilon_M = 0.0;      // P≤M family only
    double c_used = 0.0;         // P≤M family only
    double M = 0.0;
};

struct EigenPair;
CoercivityFamily coercivity_orthogonal(GridPtr grid);
CoercivityFamily coercivity_eigen_adapted(GridPtr grid, const EigenPair& ep);
CoercivityFamily coercivity_lowpass(GridPtr grid, double M);
// Smallest eigenvalue of the j-sector L₊ form relative to the sector kinetic form.
double sector_min_rayleigh(GridPtr grid, int j);

struct EigenPair {
    double e0 = 0.0;
    RadialField Y1, Y2;
    double residual_plus = 0.0;   // ‖L₊Y₁ + e₀Y₂‖_{Ḣ⁻¹}
    double residual_minus = 0.0;  // ‖L₋Y₂ - e₀Y₁‖_{Ḣ⁻¹}
    double relative_residual = 0.0;
    double l2_identity_lhs = 0.0;  // e₀(‖Y₁‖²+‖Y₂‖²)_{L²}
    double l2_identity_rhs = 0.0;  // 2∫|x|⁻¹W²Y₁Y₂
    double h2_norm = 0.0;
    std::vector<double> weighted_lp;  // ‖|x|⁻²W²Y₁‖_{L^p}, p = 1, 1.2, 1.4
    int iterations = 0;
    PotentialWeights weights = PotentialWeights::Honest;

    RadialField stable() const;    // 𝒴₋ = Y₁ - iY₂
    RadialField unstable() const;  // 𝒴₊ = Y₁ + iY₂
};

EigenPair solve_eigenpair(GridPtr grid, PotentialWeights weights = PotentialWeights::Honest,
                          double shift = -0.3);

struct SectorSweepRow {
    int j;
    int neg_Lplus;
    int neg_Lminus;
    int real_unstable;  // negative eigenvalues of L₋L₊ (= neg_Lplus when L₋ > 0)
};
std::vector<SectorSweepRow> sector_sweep(GridPtr grid, int jmax);

struct GeneralizedKernelReport {
    double r_small, r_large;
    double norm_LambdaW_small, norm_LambdaW_large;  // ‖v‖ solving 𝓛v = ΛW
    double norm_iW_small, norm_iW_large;            // ‖v‖ solving 𝓛v = iW
    double growth_LambdaW, growth_iW;
    double angle_LambdaW, angle_W;                  // kernel modes vs ΛW, W
    double kernel_residual;                         // ‖𝓛(ΛW)‖_{Ḣ⁻¹}/‖ΛW‖
};
GeneralizedKernelReport generalized_kernel_check(double h, double r_small, double r_large);

// ∂_t(v₁,v₂) = (L₋v₂, -L₊v₁), Crank–Nicolson; returns v(t).
RadialField linearized_flow(const RadialField& v0, double t, double dt,
                            PotentialWeights weights = PotentialWeights::Honest);

}  // namespace nlslab
