#include "nlslab/evolution.hpp"

#include <complex>
#define lapack_complex_float std::complex<float>
#define lapack_complex_double std::complex<double>
#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace nlslab {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
const cplx kI(0.0, 1.0);

std::vector<double> absorber_profile(const RadialGrid& g, const AbsorbingLayer& a) {
    std::vector<double> gamma(g.n(), 0.0);
    if (!a.enabled) return gamma;
    const double r0 = a.start * g.r_max();
    const double width = g.r_max() - r0;
    for (int i = 0; i < g.n(); ++i) {
        const double s = (g.r(i) - r0) / width;
        if (s > 0) gamma[i] = a.strength * s * s;
    }
    return gamma;
}

// Nonlinear coefficient on v = r f: φ_i = w_i |v_i|² / r_i³ (= w_i |f_i|² / r_i).
std::vector<double> potential_of(const std::vector<cplx>& v, const std::vector<double>& wr3) {
    std::vector<double> phi(v.size());
    for (size_t i = 0; i < v.size(); ++i) phi[i] = wr3[i] * std::norm(v[i]);
    return phi;
}

class Stepper {
public:
    Stepper(const RadialGrid& g, const std::vector<double>& weights, double tau, cplx tail,
            std::vector<double> gamma, std::vector<cplx> vref)
        : n_(g.n()), h_(g.h()), tau_(tau), tail_(tail), gamma_(std::move(gamma)), vref_(std::move(vref)) {
        wr3_.resize(n_);
        for (int i = 0; i < n_; ++i) wr3_[i] = weights[i] / (g.r(i) * g.r(i) * g.r(i));
        // Damping acts forward in the direction of integration.
        sgn_ = tau >= 0 ? 1.0 : -1.0;
    }
    virtual ~Stepper() = default;
    virtual void step(std::vector<cplx>& v) = 0;

protected:
    int n_;
    double h_, tau_;
    cplx tail_;
    std::vector<double> gamma_;
    std::vector<cplx> vref_;
    std::vector<double> wr3_;
    double sgn_ = 1.0;
};

// Linearly implicit Crank–Nicolson with the relaxation φ^{n+½} = 2φ(vⁿ) - φ^{n-½}.
class RelaxationCN : public Stepper {
public:
    RelaxationCN(const RadialGrid& g, const std::vector<double>& weights, double tau, cplx tail,
                 std::vector<double> gamma, std::vector<cplx> vref, const std::vector<cplx>& v0)
        : Stepper(g, weights, tau, tail, std::move(gamma), std::move(vref)) {
        // Predictor: half step with the frozen initial coefficient gives φ^{½} to O(τ²).
        std::vector<cplx> half = v0;
        solve(half, 0.5 * tau_, potential_of(v0, wr3_));
        phi_ = potential_of(half, wr3_);
    }

    void step(std::vector<cplx>& v) override {
        solve(v, tau_, phi_);
        const auto p = potential_of(v, wr3_);
        for (int i = 0; i < n_; ++i) phi_[i] = 2.0 * p[i] - phi_[i];
    }

private:
    void solve(std::vector<cplx>& v, double tau, const std::vector<double>& phi) {
        const double ih2 = 1.0 / (h_ * h_);
        const cplx it = kI / tau;
        dl_.assign(n_ - 1, cplx(0.5 * ih2));
        du_.assign(n_ - 1, cplx(0.5 * ih2));
        d_.resize(n_);
        rhs_.resize(n_);
        for (int i = 0; i < n_; ++i) {
            const double a = (i == 0 || i == n_ - 1 ? 3.0 : 2.0) * ih2;
            const cplx vm = i > 0 ? v[i - 1] : cplx(0.0);
            const cplx vp = i + 1 < n_ ? v[i + 1] : cplx(0.0);
            const cplx A0v = a * v[i] - ih2 * (vm + vp);
            const double gm = sgn_ * gamma_[i];
            d_[i] = it - 0.5 * a + 0.5 * phi[i] + 0.5 * kI * gm;
            rhs_[i] = it * v[i] + 0.5 * A0v - 0.5 * phi[i] * v[i] - 0.5 * kI * gm * v[i] + kI * gm * vref_[i];
        }
        rhs_[n_ - 1] += -2.0 * tail_ * ih2;
        const lapack_int info =
            LAPACKE_zgtsv(LAPACK_COL_MAJOR, n_, 1, dl_.data(), d_.data(), du_.data(), rhs_.data(), n_);
        if (info != 0) throw NumericalError("Crank-Nicolson system singular");
        v.swap(rhs_);
    }

    std::vector<double> phi_;
    std::vector<cplx> dl_, d_, du_, rhs_;
};

// Strang splitting: exact kinetic propagator of the discrete Laplacian (DST-II basis after
// subtracting the harmonic lift tail·r/r_max) around an exact pointwise phase rotation.
class StrangSplit : public Stepper {
public:
    StrangSplit(const RadialGrid& g, const std::vector<double>& weights, double tau, cplx tail,
                std::vector<double> gamma, std::vector<cplx> vref)
        : Stepper(g, weights, tau, tail, std::move(gamma), std::move(vref)) {
        lift_.resize(n_);
        for (int i = 0; i < n_; ++i) lift_[i] = tail_ * (g.r(i) / g.r_max());
        half_phase_.resize(n_);
        for (int k = 0; k < n_; ++k) {
            const double s = std::sin(exact::kPi * (k + 1) / (2.0 * n_));
            const double lam = 4.0 * s * s / (h_ * h_);
            half_phase_[k] = std::exp(-kI * lam * 0.5 * tau_) / (2.0 * n_);
        }
        damp_.resize(n_);
        for (int i = 0; i < n_; ++i) damp_[i] = std::exp(-gamma_[i] * std::abs(tau_));
    }

    void step(std::vector<cplx>& v) override {
        kinetic_half(v);
        for (int i = 0; i < n_; ++i) {
            v[i] *= std::exp(kI * (tau_ * wr3_[i] * std::norm(v[i])));
            if (gamma_[i] > 0) v[i] = vref_[i] + (v[i] - vref_[i]) * damp_[i];
        }
        kinetic_half(v);
    }

private:
    void kinetic_half(std::vector<cplx>& v) {
        std::vector<double> re(n_), im(n_);
        for (int i = 0; i < n_; ++i) {
            const cplx w = v[i] - lift_[i];
            re[i] = w.real();
            im[i] = w.imag();
        }
        const auto Re = dst2(re), Im = dst2(im);
        for (int k = 0; k < n_; ++k) {
            const cplx c = cplx(Re[k], Im[k]) * half_phase_[k];
            re[k] = c.real();
            im[k] = c.imag();
        }
        const auto xr = dst3(re), xi = dst3(im);
        for (int i = 0; i < n_; ++i) v[i] = cplx(xr[i], xi[i]) + lift_[i];
    }

    std::vector<cplx> lift_, half_phase_;
    std::vector<double> damp_;
};

struct LinearFit {
    double slope = 0.0, intercept = 0.0, R2 = 0.0;
    int n = 0;
};

LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
    LinearFit f;
    f.n = static_cast<int>(x.size());
    if (f.n < 3) return f;
    double mx = 0, my = 0;
    for (int i = 0; i < f.n; ++i) {
        mx += x[i];
        my += y[i];
    }
    mx /= f.n;
    my /= f.n;
    double sxx = 0, sxy = 0, syy = 0;
    for (int i = 0; i < f.n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (!(sxx > 0)) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.R2 = syy > 0 ? sxy * sxy / (sxx * syy) : 1.0;
    return f;
}

double interquartile_width(const RadialField& u) {
    return h1_density_quantile(u, 0.75) - h1_density_quantile(u, 0.25);
}

}  // namespace

std::string scheme_name(Scheme s) {
    return s == Scheme::StrangSplit ? "strang-split" : "crank-nicolson-relaxation";
}

Scheme parse_scheme(const std::string& s) {
    if (s == "strang-split") return Scheme::StrangSplit;
    if (s == "crank-nicolson-relaxation") return Scheme::CrankNicolsonRelaxation;
    throw ConfigError("unknown scheme '" + s + "'");
}

std::string verdict_name(ClassifierVerdict::Kind k) {
    switch (k) {
        case ClassifierVerdict::Kind::ScatteringProxy: return "scattering_proxy";
        case ClassifierVerdict::Kind::BlowupProxy: return "blowup_proxy";
        case ClassifierVerdict::Kind::SolitonConvergence: return "soliton_convergence";
        default: return "undecided";
    }
}

int EvolutionConfig::sample_every() const {
    return std::max(1, static_cast<int>(std::lround(sample_dt / dt)));
}

void EvolutionConfig::validate(const RadialField& u0) const {
    if (!(dt > 0) || !std::isfinite(dt)) throw ConfigError("dt must be positive");
    if (!(t_end >= 0) || !std::isfinite(t_end)) throw ConfigError("t_end must be non-negative");
    if (!(sample_dt > 0)) throw ConfigError("sample_dt must be positive");
    if (monitor_stride < 1) throw ConfigError("monitor_stride must be at least 1");
    if (snapshot_stride < 0) throw ConfigError("snapshot_stride must be non-negative");
    if (absorber.enabled) {
        if (!(absorber.start >= 0.8 && absorber.start < 1.0))
            throw ConfigError("absorbing layer must start inside [0.8 r_max, r_max)");
        if (!(absorber.strength >= 0)) throw ConfigError("absorber strength must be non-negative");
    }
    if (!(M > 0)) throw ConfigError("M must be positive");
    if (scheme == Scheme::StrangSplit) {
        // The pointwise rotation must resolve the largest nonlinear phase per step.
        const auto& g = *u0.grid;
        double pmax = 0.0;
        for (int i = 0; i < g.n(); ++i) pmax = std::max(pmax, std::norm(u0.values[i]) / g.r(i));
        if (dt * pmax > exact::kPi)
            throw ConfigError("dt violates the split-step phase bound dt·max|u|²/r ≤ π");
    }
}

double scheme_grad_sq(const RadialField& u) {
    const auto& g = *u.grid;
    const int n = g.n();
    const double h = g.h();
    const auto v = u.v_vec();
    double acc = 0.5 * std::norm(2.0 * v[0] / h);
    for (int k = 1; k < n; ++k) acc += std::norm((v[k] - v[k - 1]) / h);
    acc += 0.5 * std::norm(2.0 * (u.tail - v[n - 1]) / h);
    return 4.0 * exact::kPi * h * acc;
}

double scheme_energy(const RadialField& u, PotentialWeights weights) {
    const auto& g = *u.grid;
    const auto w = potential_weights(g, weights);
    const auto v = u.v_vec();
    double pot = 0.0;
    for (int i = 0; i < g.n(); ++i) {
        const double r = g.r(i);
        pot += w[i] * std::norm(v[i]) * std::norm(v[i]) / (r * r * r);
    }
    pot *= 4.0 * exact::kPi * g.h();
    // Exterior harmonic tail contributes a constant 2π|tail|⁴/r_max².
    pot += 2.0 * exact::kPi * std::norm(u.tail) * std::norm(u.tail) / (g.r_max() * g.r_max());
    return 0.5 * scheme_grad_sq(u) - 0.25 * pot;
}

void Trajectory::write_series_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot write " + path);
    os << "t,E,grad_sq,V,delta,N_proxy\n" << std::setprecision(17);
    for (size_t i = 0; i < t.size(); ++i)
        os << t[i] << ',' << E[i] << ',' << grad_sq[i] << ',' << V[i] << ',' << delta[i] << ',' << N_proxy[i]
           << '\n';
}

Trajectory evolve(const RadialField& u0, const EvolutionConfig& cfg, const ClassifierThresholds& thr) {
    cfg.validate(u0);
    u0.check_finite();
    const GridPtr grid = u0.grid;
    const auto& g = *grid;
    const int n = g.n();
    const double tau = cfg.backward ? -cfg.dt : cfg.dt;
    const long nsteps = std::lround(cfg.t_end / cfg.dt);
    const int every = cfg.sample_every();

    Trajectory tr;
    tr.grid = grid;
    tr.cfg = cfg;

    const auto weights = potential_weights(g, cfg.weights);
    std::vector<cplx> v = u0.v_vec();
    const cplx tail = u0.tail;
    auto gamma = absorber_profile(g, cfg.absorber);
    std::unique_ptr<Stepper> stepper;
    if (cfg.scheme == Scheme::StrangSplit)
        stepper = std::make_unique<StrangSplit>(g, weights, tau, tail, gamma, v);
    else
        stepper = std::make_unique<RelaxationCN>(g, weights, tau, tail, gamma, v, v);

    std::optional<ModulationContext> ctx;
    if (cfg.modulation) ctx = make_modulation_context(grid, cfg.M, cfg.delta0);
    const RadialField W = RadialField::from_real_function(grid, exact::W);
    const double iqr_W = interquartile_width(W);
    const double W_sq = w_h1_sq_on(g);
    std::optional<SymmetryElement> guess;
    std::vector<ModulationState> window;  // last three in-regime states for the residual check
    std::vector<double> window_t;

    auto record = [&](double t, const RadialField& u) {
        const double G = h1_norm_sq(u);
        const double V = weighted_quartic(u);
        const double d = std::abs(G - W_sq);
        tr.t.push_back(t);
        tr.grad_sq.push_back(G);
        tr.V.push_back(V);
        tr.E.push_back(0.5 * G - 0.25 * V);
        tr.delta.push_back(d);
        tr.E_scheme.push_back(scheme_energy(u, cfg.weights));
        std::optional<ModulationState> st;
        if (ctx && d < ctx->delta0) {
            try {
                st = decompose(u, *ctx, guess);
            } catch (const DomainError&) {
            } catch (const NumericalError&) {
            }
        }
        if (st) {
            guess = SymmetryElement{st->theta, st->lambda};
            tr.N_proxy.push_back(1.0 / st->lambda);
            tr.mod_v_h1.push_back(std::sqrt(h1_norm_sq(st->v)));
            tr.mod_Lgg.push_back(2.0 * quadratic_form(st->g));
        } else {
            guess.reset();
            const double iqr = interquartile_width(u);
            tr.N_proxy.push_back(iqr > 0 ? iqr_W / iqr : kNaN);
            tr.mod_v_h1.push_back(kNaN);
            tr.mod_Lgg.push_back(kNaN);
        }
        tr.modulation.push(t, st ? &*st : nullptr, d);
        if (cfg.residual_check) {
            if (!st) {
                window.clear();
                window_t.clear();
            } else {
                window.push_back(*st);
                window_t.push_back(t);
                if (window.size() > 3) {
                    window.erase(window.begin());
                    window_t.erase(window_t.begin());
                }
                if (window.size() == 3) {
                    const double h = 0.5 * (window_t[2] - window_t[0]);
                    const auto rr = residual_system_check(window[0], window[1], window[2], h, cfg.weights);
                    tr.residual_t.push_back(window_t[1]);
                    tr.residual_norm.push_back(rr.total());
                }
            }
        }
        if (cfg.snapshot_stride > 0 && (tr.t.size() - 1) % cfg.snapshot_stride == 0)
            tr.snapshots.emplace_back(t, u);
    };

    record(0.0, u0);
    const double grad_limit = cfg.blowup_grad_factor * W_sq;
    double t = 0.0;
    long s = 0;
    for (s = 1; s <= nsteps; ++s) {
        stepper->step(v);
        t = s * tau;
        const bool sample = s % every == 0 || s == nsteps;
        if (s % cfg.monitor_stride == 0 || sample) {
            bool finite = true;
            for (const cplx& z : v)
                if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
                    finite = false;
                    break;
                }
            if (!finite) {
                tr.overflow = true;
                break;
            }
            RadialField u = RadialField::from_v(grid, v, tail);
            if (scheme_grad_sq(u) >= grad_limit) {
                tr.blowup_detected = true;
                record(t, u);
                break;
            }
            if (sample) record(t, u);
        }
    }
    tr.steps = std::min(s, nsteps);
    tr.t_stop = tr.t.back();
    if (!tr.overflow) tr.final_state = RadialField::from_v(grid, v, tail);
    const double E0 = tr.E_scheme.front();
    double drift = 0.0;
    for (double e : tr.E_scheme) drift = std::max(drift, std::abs(e - E0));
    const double span = std::abs(tr.t_stop);
    tr.energy_drift_rate = span > 0 && std::abs(E0) > 0 ? drift / std::abs(E0) / span : 0.0;
    (void)n;
    trace_diagnostics(tr);
    tr.verdict = classify(tr, thr);
    return tr;
}

DiagnosticsReport trace_diagnostics(Trajectory& tr, double t_fit_start, double delta_floor) {
    DiagnosticsReport rep;
    std::vector<double> x, y;
    for (size_t i = 0; i < tr.t.size(); ++i) {
        if (std::abs(tr.t[i]) < t_fit_start) continue;
        if (tr.delta[i] > delta_floor && tr.modulation.in_regime[i]) {
            x.push_back(std::abs(tr.t[i]));
            y.push_back(std::log(tr.delta[i]));
        }
    }
    const LinearFit f = fit_line(x, y);
    rep.fit_samples = f.n;
    rep.decay_rate = -f.slope;
    rep.decay_R2 = f.R2;
    rep.Nlambda_min = std::numeric_limits<double>::infinity();
    rep.Nlambda_max = 0.0;
    for (size_t i = 0; i < tr.t.size(); ++i) {
        if (!tr.modulation.in_regime[i]) continue;
        const double nl = tr.N_proxy[i] * tr.modulation.lambda[i];
        rep.Nlambda_min = std::min(rep.Nlambda_min, nl);
        rep.Nlambda_max = std::max(rep.Nlambda_max, nl);
    }
    if (rep.Nlambda_max > 0) rep.Nlambda_C = std::max(rep.Nlambda_max, 1.0 / rep.Nlambda_min);
    else rep.Nlambda_min = 0.0;
    tr.diagnostics = rep;
    return rep;
}

VirialReport modulated_virial_check(const Trajectory& tr, double t1, double t2) {
    VirialReport rep;
    rep.t1 = t1;
    rep.t2 = t2;
    if (!(t2 > t1)) throw DomainError("virial window must satisfy t1 < t2");
    std::vector<size_t> idx;
    for (size_t i = 0; i < tr.t.size(); ++i) {
        const double t = std::abs(tr.t[i]);
        if (t >= t1 - 1e-12 && t <= t2 + 1e-12) idx.push_back(i);
    }
    if (idx.size() < 2) throw DomainError("virial window contains fewer than two samples");
    double sup_inv_N2 = 0.0, max_delta = 0.0;
    for (size_t k = 0; k < idx.size(); ++k) {
        const size_t i = idx[k];
        max_delta = std::max(max_delta, tr.delta[i]);
        const double N = tr.N_proxy[i];
        if (!(N > 0)) throw DomainError("N_proxy unavailable inside the virial window");
        sup_inv_N2 = std::max(sup_inv_N2, 1.0 / (N * N));
        if (k > 0) {
            const size_t j = idx[k - 1];
            rep.lhs += 0.5 * (tr.delta[i] + tr.delta[j]) * std::abs(tr.t[i] - tr.t[j]);
        }
    }
    rep.rhs = sup_inv_N2 * (tr.delta[idx.front()] + tr.delta[idx.back()]);
    // Both sides vanish up to round-off on a static ground state (same floor as the classifier).
    if (max_delta <= ClassifierThresholds{}.static_delta) rep.trivial = true;
    else rep.ratio = rep.rhs > 0 ? rep.lhs / rep.rhs : std::numeric_limits<double>::infinity();
    return rep;
}

ClassifierVerdict classify(const Trajectory& tr, const ClassifierThresholds& thr) {
    ClassifierVerdict v;
    using K = ClassifierVerdict::Kind;
    const size_t m = tr.t.size();
    const double W_sq = w_h1_sq_on(*tr.grid);
    v.overflow = tr.overflow;
    v.V_ratio = tr.V.front() > 0 ? tr.V.back() / tr.V.front() : 0.0;
    for (double G : tr.grad_sq) v.max_grad_ratio = std::max(v.max_grad_ratio, G / W_sq);
    const double N0 = tr.N_proxy.front();
    for (double N : tr.N_proxy)
        if (std::isfinite(N) && N0 > 0) v.N_growth = std::max(v.N_growth, N / N0);
    const double twoE = 2.0 * tr.E.front();
    const double tq = 0.75 * std::abs(tr.t.back());
    for (size_t i = 0; i < m; ++i)
        if (std::abs(tr.t[i]) >= tq && twoE != 0.0)
            v.grad_minus_2E = std::max(v.grad_minus_2E, std::abs(tr.grad_sq[i] - twoE) / std::abs(twoE));
    v.final_delta = tr.delta.back();
    v.decay_rate = tr.diagnostics.decay_rate;
    v.decay_R2 = tr.diagnostics.decay_R2;

    double max_delta = 0.0;
    for (double d : tr.delta) max_delta = std::max(max_delta, d);
    v.is_static = max_delta <= thr.static_delta;

    if (v.max_grad_ratio >= thr.blowup_grad_factor || tr.blowup_detected ||
        (tr.overflow && v.N_growth >= thr.blowup_concentration)) {
        v.kind = K::BlowupProxy;
    } else if (v.is_static) {
        v.kind = K::SolitonConvergence;
        v.decay_rate = 0.0;
    } else if (tr.diagnostics.fit_samples >= 3 && v.decay_rate > 0 && v.final_delta <= thr.soliton_final_delta &&
               tr.modulation.in_regime.back()) {
        v.kind = K::SolitonConvergence;
    } else if (v.V_ratio <= thr.scatter_V_fraction && v.grad_minus_2E <= thr.scatter_grad_tol) {
        v.kind = K::ScatteringProxy;
    }
    return v;
}

SpecialReport construct_special(const EigenPair& ep, const SpecialConfig& cfg) {
    if (cfg.sign != 1 && cfg.sign != -1) throw ConfigError("special: sign must be +1 or -1");
    if (!(cfg.a >= 0)) throw ConfigError("special: a must be non-negative");
    const double e0 = ep.e0;
    if (cfg.a * std::exp(-e0 * cfg.T_start) > 1e-4)
        throw ConfigError("special: seed amplitude a·exp(-e0 T) exceeds the linear regime 1e-4");
    if (cfg.T_start < 3.0 / e0 - 1e-12 || cfg.T_start > 8.0 / e0 + 1e-12)
        throw ConfigError("special: T_start must lie in [3/e0, 8/e0]");

    SpecialReport rep;
    rep.sign = cfg.sign;
    rep.a = cfg.a;
    rep.T_start = cfg.T_start;
    rep.e0 = e0;
    const GridPtr grid = ep.Y1.grid;
    const RadialField W = RadialField::from_real_function(grid, exact::W);
    auto seed_at = [&](double T) {
        return W + (cfg.sign * cfg.a * std::exp(-e0 * T)) * ep.stable();
    };

    EvolutionConfig back = cfg.evo;
    back.backward = true;
    back.t_end = cfg.T_start;
    rep.backward = evolve(seed_at(cfg.T_start), back);
    if (rep.backward.overflow || rep.backward.blowup_detected) {
        rep.failure = "backward integration failed before t = 0";
        return rep;
    }
    for (bool b : rep.backward.modulation.in_regime)
        if (!b) rep.left_regime = true;
    rep.u0 = rep.backward.final_state;
    rep.energy0 = energy(rep.u0);
    const double EW = energy(W);
    rep.energy_rel_err = std::abs(rep.energy0 - EW) / EW;
    rep.energy_ok = rep.energy_rel_err <= 1e-3;
    rep.h1_sq0 = h1_norm_sq(rep.u0);
    rep.h1_excess = rep.h1_sq0 - h1_norm_sq(W);
    rep.sign_ok = (rep.h1_excess > 0 ? 1 : -1) == cfg.sign && rep.h1_excess != 0.0;

    EvolutionConfig fwd = cfg.evo;
    fwd.backward = false;
    fwd.t_end = cfg.T_start + cfg.forward_extra;
    rep.forward = evolve(rep.u0, fwd);
    rep.forward_rate = rep.forward.diagnostics.decay_rate;
    rep.forward_R2 = rep.forward.diagnostics.decay_R2;
    rep.rate_ok = std::abs(rep.forward_rate - e0) <= 0.1 * e0;

    if (cfg.consistency_check) {
        SpecialConfig c2 = cfg;
        c2.consistency_check = false;
        c2.extended_backward = 0.0;
        c2.T_start = cfg.T_start + 1.0 / e0;
        EvolutionConfig b2 = back;
        b2.t_end = c2.T_start;
        b2.modulation = false;
        const Trajectory tb = evolve(W + (cfg.sign * cfg.a * std::exp(-e0 * c2.T_start)) * ep.stable(), b2);
        if (!tb.overflow) {
            const RadialField d = tb.final_state - rep.u0;
            rep.consistency_rel = std::sqrt(h1_norm_sq(d) / h1_norm_sq(rep.u0 - W));
        }
    }
    if (cfg.extended_backward > 0) {
        EvolutionConfig ext = cfg.evo;
        ext.backward = true;
        ext.t_end = cfg.extended_backward;
        if (cfg.extended_dt > 0) ext.dt = cfg.extended_dt;
        ext.absorber.enabled = true;
        ext.sample_dt = std::max(ext.sample_dt, 1.0);
        rep.extended = evolve(rep.u0, ext);
    }
    rep.construction_ok = rep.energy_ok && rep.sign_ok;
    if (!rep.construction_ok)
        rep.failure = rep.left_regime ? "left the modulation regime without matching sign/energy conditions"
                                      : "sign or energy condition violated at t = 0";
    return rep;
}

}  // namespace nlslab
