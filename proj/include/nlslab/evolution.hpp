#pragma once

#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "nlslab/linearized.hpp"
#include "nlslab/modulation.hpp"
#include "nlslab/radial.hpp"

namespace nlslab {

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

enum class Scheme { CrankNicolsonRelaxation, StrangSplit };
std::string scheme_name(Scheme s);
Scheme parse_scheme(const std::string& s);

// Complex damping ramp γ(r) = strength·s², s = (r - start·r_max)/((1 - start)·r_max), pulling
// the solution toward its initial far field inside the layer.
struct AbsorbingLayer {
    bool enabled = false;
    double start = 0.85;  // fraction of r_max
    double strength = 2.0;
};

struct EvolutionConfig {
    double dt = 0.01;
    double t_end = 1.0;
    bool backward = false;  // integrate toward -t_end
    Scheme scheme = Scheme::CrankNicolsonRelaxation;
    PotentialWeights weights = PotentialWeights::Balanced;
    AbsorbingLayer absorber;
    int monitor_stride = 10;   // steps between blowup / finiteness checks
    double sample_dt = 0.1;    // diagnostic series spacing (rounded to a multiple of dt)
    int snapshot_stride = 0;   // keep every k-th sample as a snapshot (0: none)
    bool modulation = true;
    double M = 8.0;
    double delta0 = -1.0;      // < 0: 0.05·‖W‖²
    bool residual_check = false;
    double blowup_grad_factor = 10.0;
    double concentration_factor = 10.0;

    void validate(const RadialField& u0) const;
    int sample_every() const;
};

struct ClassifierThresholds {
    double scatter_V_fraction = 0.05;
    double scatter_grad_tol = 0.05;
    double blowup_grad_factor = 10.0;
    double blowup_concentration = 10.0;
    double soliton_final_delta = 1e-4;
    double static_delta = 1e-10;
};

struct ClassifierVerdict {
    enum class Kind { ScatteringProxy, BlowupProxy, SolitonConvergence, Undecided };
    Kind kind = Kind::Undecided;
    bool is_static = false;
    double V_ratio = 0.0;            // V(end)/V(0)
    double grad_minus_2E = 0.0;      // max relative |‖∇u‖² - 2E| over the final quarter
    double max_grad_ratio = 0.0;     // max ‖∇u‖² / ‖W‖²
    double N_growth = 0.0;           // max N_proxy / N_proxy(0)
    double decay_rate = 0.0;
    double decay_R2 = 0.0;
    double final_delta = 0.0;
    bool overflow = false;
};
std::string verdict_name(ClassifierVerdict::Kind k);

struct DiagnosticsReport {
    double decay_rate = 0.0;  // fitted exponential rate of δ(t)
    double decay_R2 = 0.0;
    int fit_samples = 0;
    double Nlambda_min = 0.0, Nlambda_max = 0.0;  // N_proxy·λ over in-regime samples
    double Nlambda_C = 0.0;                        // smallest C with 1/C ≤ Nλ ≤ C
};

struct Trajectory {
    GridPtr grid;
    EvolutionConfig cfg;
    std::vector<double> t, E, grad_sq, V, delta, N_proxy, E_scheme;
    ModulationTrace modulation;
    std::vector<double> mod_v_h1, mod_Lgg;  // ‖v‖_{Ḣ¹}, ⟨L g, g⟩ per sample (NaN out of regime)
    std::vector<double> residual_t, residual_norm;
    std::vector<std::pair<double, RadialField>> snapshots;
    RadialField final_state;
    bool blowup_detected = false;
    bool overflow = false;
    double t_stop = 0.0;
    long steps = 0;
    double energy_drift_rate = 0.0;  // max |E_h(t) - E_h(0)|/|E_h(0)| divided by the run length
    ClassifierVerdict verdict;
    DiagnosticsReport diagnostics;

    void write_series_csv(const std::string& path) const;
};

// Scheme-consistent discrete gradient norm and energy (fixed tail, node weights).
double scheme_grad_sq(const RadialField& u);
double scheme_energy(const RadialField& u, PotentialWeights weights);

Trajectory evolve(const RadialField& u0, const EvolutionConfig& cfg,
                  const ClassifierThresholds& thr = {});

// Fitted δ decay and N·λ compatibility; stored into traj.diagnostics and returned.
DiagnosticsReport trace_diagnostics(Trajectory& traj, double t_fit_start = 0.0,
                                    double delta_floor = 1e-12);

struct VirialReport {
    double t1 = 0.0, t2 = 0.0;
    double lhs = 0.0;       // ∫ δ
    double rhs = 0.0;       // sup N⁻² · (δ(t1) + δ(t2))
    double ratio = 0.0;
    bool trivial = false;   // δ ≤ 1e-10 throughout: both sides vanish to round-off
};
VirialReport modulated_virial_check(const Trajectory& traj, double t1, double t2);

ClassifierVerdict classify(const Trajectory& traj, const ClassifierThresholds& thr = {});

struct SpecialConfig {
    int sign = -1;
    double a = 1e-2;
    double T_start = 12.0;
    EvolutionConfig evo;          // dt, scheme, sampling; direction and length set internally
    double forward_extra = 5.0;   // forward re-integration runs to T_start + forward_extra
    double extended_backward = 0.0;  // > 0: continue backward from t = 0 to -extended_backward
    double extended_dt = 0.0;        // step of the extended run (0: evo.dt)
    bool consistency_check = false;  // rerun with T_start + 1/e₀
};

struct SpecialReport {
    int sign = -1;
    double a = 0.0, T_start = 0.0, e0 = 0.0;
    RadialField u0;
    double energy0 = 0.0, energy_rel_err = 0.0;
    double h1_sq0 = 0.0, h1_excess = 0.0;  // ‖u(0)‖² - ‖W‖² (same quadrature)
    bool energy_ok = false, sign_ok = false;
    double forward_rate = 0.0, forward_R2 = 0.0;
    bool rate_ok = false;
    bool left_regime = false;
    double consistency_rel = -1.0;
    Trajectory backward, forward;
    std::optional<Trajectory> extended;
    bool construction_ok = false;
    std::string failure;
};
SpecialReport construct_special(const EigenPair& ep, const SpecialConfig& cfg);

}  // namespace nlslab
