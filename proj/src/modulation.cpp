#include "nlslab/modulation.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>

namespace nlslab {

namespace {

constexpr double kTwoPi = 2.0 * exact::kPi;

double wrap_angle(double a) {
    a = std::fmod(a, kTwoPi);
    if (a <= -exact::kPi) a += kTwoPi;
    if (a > exact::kPi) a -= kTwoPi;
    return a;
}

struct Residual2 {
    double F1, F2;
    double J[2][2];
};

// Orthogonality residuals and Jacobian in (θ, λ) for the profile w = e^{iθ}λ^{1/2}u(λ·).
Residual2 evaluate(const RadialField& w, double lambda, const ModulationContext& ctx, double c1) {
    const RadialField re = w.real_part();
    const RadialField im = w.imag_part();
    const RadialField Lw = scaling_generator(w);
    Residual2 r{};
    r.F1 = h1_real(re, ctx.PLW) - c1;
    r.F2 = h1_real(im, ctx.PW);
    // ∂_θ w = i w, ∂_λ w = Λw / λ.
    r.J[0][0] = -h1_real(im, ctx.PLW);
    r.J[1][0] = h1_real(re, ctx.PW);
    r.J[0][1] = h1_real(Lw.real_part(), ctx.PLW) / lambda;
    r.J[1][1] = h1_real(Lw.imag_part(), ctx.PW) / lambda;
    return r;
}

}  // namespace

ModulationContext make_modulation_context(GridPtr grid, double M, double delta0, double det_floor) {
    if (!(M > 0)) throw DomainError("cutoff M must be positive");
    ModulationContext ctx;
    ctx.grid = grid;
    ctx.prof.M = M;
    ctx.delta0 = delta0 < 0 ? 0.05 * exact::W_h1_sq : delta0;
    ctx.det_floor = det_floor;
    ctx.W = RadialField::from_real_function(grid, exact::W);
    ctx.LW = RadialField::from_real_function(grid, exact::LambdaW);
    ctx.PW = lowpass(ctx.W, ctx.prof).real_part();
    ctx.PLW = lowpass(ctx.LW, ctx.prof).real_part();
    ctx.W_sq = h1_norm_sq(ctx.W);
    ctx.LW_sq = h1_norm_sq(ctx.LW);
    ctx.PW_sq = h1_norm_sq(ctx.PW);
    ctx.PLW_sq = h1_norm_sq(ctx.PLW);
    ctx.median_W = h1_density_quantile(ctx.W, 0.5);
    const Residual2 r = evaluate(ctx.W, 1.0, ctx, h1_real(ctx.W, ctx.PLW));
    ctx.det_at_W = std::abs(r.J[0][0] * r.J[1][1] - r.J[0][1] * r.J[1][0]) / (ctx.W_sq * ctx.LW_sq);
    if (ctx.det_at_W < det_floor)
        throw CutoffTooSmallError("modulation Jacobian at W below floor for M = " + std::to_string(M));
    return ctx;
}

RadialField modulated_profile(const RadialField& u, double theta, double lambda) {
    return rescale(u, SymmetryElement{-theta, 1.0 / lambda});
}

SymmetryElement cold_start(const RadialField& u, const ModulationContext& ctx) {
    const cplx p = h1_inner(u, ctx.W);
    SymmetryElement s;
    s.theta = std::abs(p) > 0 ? -std::arg(p) : 0.0;
    const double med = h1_density_quantile(u, 0.5);
    s.lambda = med > 0 ? med / ctx.median_W : 1.0;
    return s;
}

ModulationState decompose(const RadialField& u, const ModulationContext& ctx,
                          std::optional<SymmetryElement> guess) {
    if (!same_grid(*u.grid, *ctx.grid)) throw StructuralError("field and modulation context grids differ");
    u.check_finite();
    const double d = delta(u);
    if (!(d < ctx.delta0))
        throw OutOfRegimeError("delta(u) = " + std::to_string(d) + " outside the modulation regime");

    SymmetryElement s = guess ? *guess : cold_start(u, ctx);
    const double c1 = h1_real(ctx.W, ctx.PLW);
    const double scale = std::sqrt(ctx.W_sq * ctx.LW_sq);
    ModulationState st;
    st.M = ctx.prof.M;
    st.delta = d;
    RadialField w;
    bool converged = false;
    for (int it = 1; it <= 50; ++it) {
        w = modulated_profile(u, s.theta, s.lambda);
        const Residual2 r = evaluate(w, s.lambda, ctx, c1);
        const double det = r.J[0][0] * r.J[1][1] - r.J[0][1] * r.J[1][0];
        st.det = std::abs(det) * s.lambda / (ctx.W_sq * ctx.LW_sq);
        st.iterations = it;
        if (st.det < ctx.det_floor)
            throw CutoffTooSmallError("modulation Jacobian determinant below floor");
        if (std::max(std::abs(r.F1), std::abs(r.F2)) <= 1e-12 * scale) {
            converged = true;
            break;
        }
        double dth = -(r.J[1][1] * r.F1 - r.J[0][1] * r.F2) / det;
        double dla = -(-r.J[1][0] * r.F1 + r.J[0][0] * r.F2) / det;
        // Keep λ positive and steps local.
        const double cap = 0.5 * s.lambda;
        if (std::abs(dla) > cap) {
            const double f = cap / std::abs(dla);
            dla *= f;
            dth *= f;
        }
        s.theta += dth;
        s.lambda += dla;
        if (!std::isfinite(s.theta) || !std::isfinite(s.lambda) || !(s.lambda > 0))
            throw DecompositionFailure("Newton iterate left the admissible parameter set");
    }
    if (!converged) throw DecompositionFailure("modulation Newton did not converge in 50 iterations");

    st.theta = wrap_angle(s.theta);
    st.lambda = s.lambda;
    st.v = w - ctx.W;
    st.orth1 = h1_real(st.v.real_part(), ctx.PLW);
    st.orth2 = h1_real(st.v.imag_part(), ctx.PW);
    const Split a = alpha_split(st.v, ctx);
    st.alpha = a.coeff;
    st.g = a.rest;
    const Split b = beta_split(st.v, ctx);
    st.beta = b.coeff;
    st.vtilde = b.rest;
    return st;
}

Split alpha_split(const RadialField& v, const ModulationContext& ctx) {
    const double a = h1_real(v.real_part(), ctx.PW) / ctx.PW_sq;
    return {a, v - a * ctx.PW};
}

Split beta_split(const RadialField& v, const ModulationContext& ctx) {
    const double b = h1_real(v.real_part(), ctx.W) / ctx.W_sq;
    return {b, v - b * ctx.W};
}

void ModulationTrace::push(double time, const ModulationState* s, double delta_u) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    t.push_back(time);
    delta.push_back(delta_u);
    in_regime.push_back(s != nullptr);
    theta.push_back(s ? s->theta : nan);
    lambda.push_back(s ? s->lambda : nan);
    alpha.push_back(s ? s->alpha : nan);
    beta.push_back(s ? s->beta : nan);
    g_h1.push_back(s ? std::sqrt(h1_norm_sq(s->g)) : nan);
}

void ModulationTrace::write_csv(const std::string& path) const {
    std::ofstream os(path);
    if (!os) throw DomainError("cannot write " + path);
    os << "t,theta,lambda,alpha,beta,delta,g_h1,in_regime\n";
    os << std::setprecision(17);
    for (size_t i = 0; i < t.size(); ++i)
        os << t[i] << ',' << theta[i] << ',' << lambda[i] << ',' << alpha[i] << ',' << beta[i] << ','
           << delta[i] << ',' << g_h1[i] << ',' << (in_regime[i] ? 1 : 0) << '\n';
}

double RateReport::sup_ratio() const {
    return std::max({sup_theta_ratio, sup_lambda_ratio, sup_alpha_ratio});
}

RateReport parameter_rates(const ModulationTrace& tr, double M, double delta_floor) {
    RateReport rep;
    for (size_t i = 1; i + 1 < tr.size(); ++i) {
        if (!(tr.in_regime[i - 1] && tr.in_regime[i] && tr.in_regime[i + 1])) continue;
        const double span = tr.t[i + 1] - tr.t[i - 1];
        if (!(std::abs(span) > 0)) continue;
        const double th = wrap_angle(tr.theta[i + 1] - tr.theta[i - 1]) / span;
        const double la = (tr.lambda[i + 1] - tr.lambda[i - 1]) / span / tr.lambda[i];
        const double al = (tr.alpha[i + 1] - tr.alpha[i - 1]) / span;
        ++rep.samples;
        rep.sup_theta_rate = std::max(rep.sup_theta_rate, std::abs(th));
        rep.sup_lambda_rate = std::max(rep.sup_lambda_rate, std::abs(la));
        rep.sup_alpha_rate = std::max(rep.sup_alpha_rate, std::abs(al));
        if (tr.delta[i] <= delta_floor) continue;
        const double den = M * M * tr.delta[i] / (tr.lambda[i] * tr.lambda[i]);
        rep.sup_theta_ratio = std::max(rep.sup_theta_ratio, std::abs(th) / den);
        rep.sup_lambda_ratio = std::max(rep.sup_lambda_ratio, std::abs(la) / den);
        rep.sup_alpha_ratio = std::max(rep.sup_alpha_ratio, std::abs(al) / den);
    }
    if (rep.samples == 0) throw DomainError("fewer than three consecutive in-regime samples");
    return rep;
}

ResidualReport residual_system_check(const ModulationState& prev, const ModulationState& mid,
                                     const ModulationState& next, double dt, PotentialWeights weights) {
    if (!(std::abs(dt) > 0)) throw DomainError("residual check needs a nonzero time step");
    const auto& g = *mid.v.grid;
    const int n = g.n();
    ResidualReport rep;
    rep.theta_dot = wrap_angle(next.theta - prev.theta) / (2.0 * dt);
    rep.lambda_dot_over_lambda = (next.lambda - prev.lambda) / (2.0 * dt) / mid.lambda;

    const RadialField W = RadialField::from_real_function(mid.v.grid, exact::W);
    const RadialField U = W + mid.v;
    const RadialField LU = scaling_generator(U);
    const auto lap = scheme_laplacian_v(U);
    const auto w = potential_weights(g, weights);
    const auto vp = next.v.v_vec(), vm = prev.v.v_vec(), u = U.v_vec(), lu = LU.v_vec();
    const cplx I(0.0, 1.0);
    const double il2 = 1.0 / (mid.lambda * mid.lambda);
    std::vector<cplx> res(n);
    for (int i = 0; i < n; ++i) {
        const double r = g.r(i);
        const cplx vdot = (vp[i] - vm[i]) / (2.0 * dt);
        const double mod2 = std::norm(u[i]) / (r * r);
        const cplx rhs = lap[i] + w[i] * mod2 * u[i] / r;
        res[i] = (I * vdot + rep.theta_dot * u[i] - I * rep.lambda_dot_over_lambda * lu[i] + il2 * rhs) / r;
    }
    const RadialField R = RadialField::from_samples(mid.v.grid, std::move(res));
    rep.real_eq = hm1_norm(R.real_part());
    rep.imag_eq = hm1_norm(R.imag_part());
    return rep;
}

double energy_expansion_defect(const RadialField& v) {
    const RadialField W = RadialField::from_real_function(v.grid, exact::W);
    // Discrete first variation of the quadrature energy at W (zero in the continuum).
    const RadialField v1 = v.real_part();
    const double first = h1_real(W, v1) - potential_pairing(v1, W);
    return std::abs(energy(W + v) - energy(W) - first - quadratic_form(v));
}

}  // namespace nlslab
