#include "nlslab/radial.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <mutex>
#include <numbers>
#include <sstream>

namespace nlslab {

namespace {

constexpr double kPi = std::numbers::pi;

// Lagrange value and derivative weights at t for nodes x[0..m).
void lagrange_weights(const double* x, int m, double t, double* val, double* der) {
    for (int j = 0; j < m; ++j) {
        double denom = 1.0, p = 1.0, dp = 0.0;
        for (int l = 0; l < m; ++l) {
            if (l == j) continue;
            denom *= x[j] - x[l];
            dp = dp * (t - x[l]) + p;
            p *= t - x[l];
        }
        val[j] = p / denom;
        if (der) der[j] = dp / denom;
    }
}

struct PlanCache {
    std::mutex mu;
    std::map<std::pair<int, int>, fftw_plan> plans;
    fftw_plan get(int n, fftw_r2r_kind kind) {
        std::lock_guard<std::mutex> lock(mu);
        const auto key = std::make_pair(n, static_cast<int>(kind));
        auto it = plans.find(key);
        if (it != plans.end()) return it->second;
        double* a = fftw_alloc_real(n);
        double* b = fftw_alloc_real(n);
        fftw_plan p = fftw_plan_r2r_1d(n, a, b, kind, FFTW_ESTIMATE);
        fftw_free(a);
        fftw_free(b);
        plans[key] = p;
        return p;
    }
};

PlanCache& plan_cache() {
    static PlanCache c;
    return c;
}

std::vector<double> r2r(const std::vector<double>& x, fftw_r2r_kind kind) {
    const int n = static_cast<int>(x.size());
    fftw_plan p = plan_cache().get(n, kind);
    double* a = fftw_alloc_real(n);
    double* b = fftw_alloc_real(n);
    std::copy(x.begin(), x.end(), a);
    fftw_execute_r2r(p, a, b);
    std::vector<double> y(b, b + n);
    fftw_free(a);
    fftw_free(b);
    return y;
}

// Unnormalized DST-IV (FFTW RODFT11) of a real vector.
std::vector<double> dst4(const std::vector<double>& x) { return r2r(x, FFTW_RODFT11); }

void require_same(const RadialField& a, const RadialField& b) {
    if (!a.grid || !b.grid || !same_grid(*a.grid, *b.grid))
        throw StructuralError("fields live on different grids");
}

// v on the augmented point list.
std::vector<cplx> augmented_v(const RadialField& f) {
    const int n = f.n();
    std::vector<cplx> va(n + 2);
    va[0] = 0.0;
    for (int i = 0; i < n; ++i) va[i + 1] = f.v(i);
    va[n + 1] = f.tail;
    return va;
}

}  // namespace

std::vector<double> dst2(const std::vector<double>& x) { return r2r(x, FFTW_RODFT10); }
std::vector<double> dst3(const std::vector<double>& x) { return r2r(x, FFTW_RODFT01); }

RadialGrid::RadialGrid(double r_max, int n) : n_(n), r_max_(r_max), h_(r_max / n) {
    if (n < 16) throw StructuralError("grid needs n >= 16");
    if (!(r_max > 0)) throw StructuralError("grid needs r_max > 0");
    r_.resize(n);
    for (int i = 0; i < n; ++i) r_[i] = (i + 0.5) * h_;

    static const double gx[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                 0.8611363115940526};
    static const double gw[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                 0.3478548451374538};
    const int na = n + 2;
    cells_.resize(n + 1);
    for (int k = 0; k <= n; ++k) {
        QuadCell& c = cells_[k];
        c.start = std::clamp(k - 2, 0, na - 6);
        double xs[6];
        for (int j = 0; j < 6; ++j) xs[j] = xa(c.start + j);
        const double a = xa(k), b = xa(k + 1);
        for (int q = 0; q < 4; ++q) {
            c.x[q] = 0.5 * (a + b) + 0.5 * (b - a) * gx[q];
            c.w[q] = 0.5 * (b - a) * gw[q];
            lagrange_weights(xs, 6, c.x[q], c.val[q], c.der[q]);
        }
    }
}

std::shared_ptr<const RadialGrid> RadialGrid::uniform(double r_max, int n) {
    return std::make_shared<const RadialGrid>(r_max, n);
}

bool same_grid(const RadialGrid& a, const RadialGrid& b) {
    return &a == &b || (a.n() == b.n() && a.r_max() == b.r_max());
}

RadialField::RadialField(GridPtr g) : grid(std::move(g)) { values.assign(grid->n(), 0.0); }

RadialField::RadialField(GridPtr g, std::vector<cplx> vals, cplx tail_v)
    : grid(std::move(g)), values(std::move(vals)), tail(tail_v) {
    if (static_cast<int>(values.size()) != grid->n())
        throw StructuralError("field length does not match grid");
}

RadialField RadialField::from_function(GridPtr g, const std::function<cplx(double)>& f) {
    std::vector<cplx> vals(g->n());
    for (int i = 0; i < g->n(); ++i) vals[i] = f(g->r(i));
    cplx t = g->r_max() * f(g->r_max());
    return RadialField(g, std::move(vals), t);
}

RadialField RadialField::from_real_function(GridPtr g, const std::function<double(double)>& f) {
    return from_function(g, [&](double r) { return cplx(f(r), 0.0); });
}

RadialField RadialField::from_samples(GridPtr g, std::vector<cplx> vals) {
    RadialField out(g, std::move(vals), 0.0);
    const int n = out.n();
    out.tail = 0.375 * out.v(n - 3) - 1.25 * out.v(n - 2) + 1.875 * out.v(n - 1);
    return out;
}

RadialField RadialField::from_v(GridPtr g, const std::vector<cplx>& v, cplx tail_v) {
    std::vector<cplx> vals(g->n());
    for (int i = 0; i < g->n(); ++i) vals[i] = v[i] / g->r(i);
    return RadialField(g, std::move(vals), tail_v);
}

std::vector<cplx> RadialField::v_vec() const {
    std::vector<cplx> out(n());
    for (int i = 0; i < n(); ++i) out[i] = v(i);
    return out;
}

std::vector<double> RadialField::re_v() const {
    std::vector<double> out(n());
    for (int i = 0; i < n(); ++i) out[i] = grid->r(i) * values[i].real();
    return out;
}

std::vector<double> RadialField::im_v() const {
    std::vector<double> out(n());
    for (int i = 0; i < n(); ++i) out[i] = grid->r(i) * values[i].imag();
    return out;
}

RadialField RadialField::real_part() const {
    RadialField out(*this);
    for (auto& x : out.values) x = x.real();
    out.tail = tail.real();
    return out;
}

RadialField RadialField::imag_part() const {
    RadialField out(*this);
    for (auto& x : out.values) x = x.imag();
    out.tail = tail.imag();
    return out;
}

RadialField RadialField::conj() const {
    RadialField out(*this);
    for (auto& x : out.values) x = std::conj(x);
    out.tail = std::conj(tail);
    return out;
}

bool RadialField::is_real(double tol) const {
    for (const auto& x : values)
        if (std::abs(x.imag()) > tol) return false;
    return std::abs(tail.imag()) <= tol;
}

void RadialField::check_finite() const {
    for (const auto& x : values)
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag()))
            throw NumericalError("non-finite field entry");
}

RadialField& RadialField::operator+=(const RadialField& o) {
    require_same(*this, o);
    for (int i = 0; i < n(); ++i) values[i] += o.values[i];
    tail += o.tail;
    return *this;
}

RadialField& RadialField::operator-=(const RadialField& o) {
    require_same(*this, o);
    for (int i = 0; i < n(); ++i) values[i] -= o.values[i];
    tail -= o.tail;
    return *this;
}

RadialField& RadialField::operator*=(cplx s) {
    for (auto& x : values) x *= s;
    tail *= s;
    return *this;
}

RadialField operator+(RadialField a, const RadialField& b) { return a += b; }
RadialField operator-(RadialField a, const RadialField& b) { return a -= b; }
RadialField operator*(cplx s, RadialField a) { return a *= s; }
RadialField operator*(double s, RadialField a) { return a *= cplx(s, 0.0); }

cplx h1_inner(const RadialField& f, const RadialField& g) {
    require_same(f, g);
    const auto vf = augmented_v(f);
    const auto vg = augmented_v(g);
    cplx acc = 0.0;
    for (const QuadCell& c : f.grid->cells()) {
        for (int q = 0; q < 4; ++q) {
            cplx df = 0.0, dg = 0.0;
            for (int j = 0; j < 6; ++j) {
                df += c.der[q][j] * vf[c.start + j];
                dg += c.der[q][j] * vg[c.start + j];
            }
            acc += c.w[q] * df * std::conj(dg);
        }
    }
    return 4.0 * kPi * acc;
}

double h1_norm_sq(const RadialField& f) { return h1_inner(f, f).real(); }
double h1_real(const RadialField& f, const RadialField& g) { return h1_inner(f, g).real(); }

double weighted_quartic(const RadialField& f) {
    const auto vf = augmented_v(f);
    double acc = 0.0;
    for (const QuadCell& c : f.grid->cells()) {
        for (int q = 0; q < 4; ++q) {
            cplx val = 0.0;
            for (int j = 0; j < 6; ++j) val += c.val[q][j] * vf[c.start + j];
            const double a2 = std::norm(val);
            acc += c.w[q] * a2 * a2 / (c.x[q] * c.x[q] * c.x[q]);
        }
    }
    const double R = f.grid->r_max();
    const double t2 = std::norm(f.tail);
    return 4.0 * kPi * acc + 2.0 * kPi * t2 * t2 / (R * R);
}

double l2_norm_sq(const RadialField& f) {
    const auto vf = augmented_v(f);
    double acc = 0.0;
    for (const QuadCell& c : f.grid->cells()) {
        for (int q = 0; q < 4; ++q) {
            cplx val = 0.0;
            for (int j = 0; j < 6; ++j) val += c.val[q][j] * vf[c.start + j];
            acc += c.w[q] * std::norm(val);
        }
    }
    return 4.0 * kPi * acc;
}

cplx FrequencyField::fourier(int m) const {
    // ∫ v sin(k r) dr = (R/2) coef_m on the DST-IV basis.
    return 4.0 * kPi / k[m] * 0.5 * grid->r_max() * coef[m];
}

FrequencyField sine_transform(const RadialField& f) {
    const int n = f.n();
    const double R = f.grid->r_max();
    FrequencyField F;
    F.grid = f.grid;
    F.k.resize(n);
    for (int m = 0; m < n; ++m) F.k[m] = (m + 0.5) * kPi / R;
    const auto yr = dst4(f.re_v());
    const auto yi = dst4(f.im_v());
    F.coef.resize(n);
    for (int m = 0; m < n; ++m) F.coef[m] = cplx(yr[m], yi[m]) / static_cast<double>(n);

    // Boundary slope of v relative to its largest slope flags non-decaying fields.
    const double h = f.grid->h();
    double dmax = 0.0;
    for (int i = 1; i < n; ++i) dmax = std::max(dmax, std::abs(f.v(i) - f.v(i - 1)) / h);
    const double dend = std::abs(f.tail - f.v(n - 1)) / (0.5 * h);
    F.truncation_warning = dmax > 0 && dend > 1e-3 * dmax;
    return F;
}

RadialField inverse_sine_transform(const FrequencyField& F) {
    const int n = static_cast<int>(F.coef.size());
    std::vector<double> ar(n), ai(n);
    cplx tail = 0.0;
    for (int m = 0; m < n; ++m) {
        ar[m] = F.coef[m].real();
        ai[m] = F.coef[m].imag();
        tail += (m % 2 == 0 ? 1.0 : -1.0) * F.coef[m];
    }
    const auto vr = dst4(ar);
    const auto vi = dst4(ai);
    std::vector<cplx> v(n);
    for (int i = 0; i < n; ++i) v[i] = 0.5 * cplx(vr[i], vi[i]);
    return RadialField::from_v(F.grid, v, tail);
}

double h1_norm_sq_spectral(const FrequencyField& F) {
    double acc = 0.0;
    for (size_t m = 0; m < F.k.size(); ++m) acc += F.k[m] * F.k[m] * std::norm(F.coef[m]);
    return 4.0 * kPi * 0.5 * F.grid->r_max() * acc;
}

double hm1_norm_sq(const RadialField& f) {
    const auto F = sine_transform(f);
    double acc = 0.0;
    for (size_t m = 0; m < F.k.size(); ++m) acc += std::norm(F.coef[m]) / (F.k[m] * F.k[m]);
    return 4.0 * kPi * 0.5 * F.grid->r_max() * acc;
}

double hm1_norm(const RadialField& f) { return std::sqrt(hm1_norm_sq(f)); }

double FrequencyProfile::phi(double s) {
    s = std::abs(s);
    if (s <= 1.0) return 1.0;
    if (s >= 2.0) return 0.0;
    const double t = s - 1.0;
    return 1.0 - t * t * t * (10.0 - 15.0 * t + 6.0 * t * t);
}

RadialField lowpass(const RadialField& f, const FrequencyProfile& prof) {
    auto F = sine_transform(f);
    for (size_t m = 0; m < F.k.size(); ++m) F.coef[m] *= FrequencyProfile::phi(F.k[m] / prof.M);
    RadialField out = inverse_sine_transform(F);
    out.origin = f.origin;
    return out;
}

RadialField highpass(const RadialField& f, const FrequencyProfile& prof) {
    return f - lowpass(f, prof);
}

RadialField apply_sector_laplacian(const RadialField& f, double mu) {
    if (mu < 0) throw DomainError("sector eigenvalue mu_j must be non-negative");
    const int n = f.n();
    const double h = f.grid->h();
    const auto v = f.v_vec();
    const cplx ghost0 = -3.0 * v[0] + v[1] - 0.2 * v[2];
    const cplx ghostR = 2.0 * f.tail - v[n - 1];
    std::vector<cplx> out(n);
    for (int i = 0; i < n; ++i) {
        const cplx vm = i == 0 ? ghost0 : v[i - 1];
        const cplx vp = i == n - 1 ? ghostR : v[i + 1];
        const double r = f.grid->r(i);
        out[i] = ((vp - 2.0 * v[i] + vm) / (h * h) - mu * v[i] / (r * r)) / r;
    }
    return RadialField::from_samples(f.grid, std::move(out));
}

cplx sample_v(const RadialField& f, double x) {
    const auto& g = *f.grid;
    const int n = g.n();
    if (x <= 0.0) return 0.0;
    if (x >= g.r_max()) return f.tail;
    // Cell k of the augmented list containing x.
    int k;
    if (x < g.r(0)) {
        k = 0;
    } else {
        k = std::min(n - 1, static_cast<int>(std::floor(x / g.h() - 0.5))) + 1;
    }
    const int start = std::clamp(k - 1, 0, n + 2 - 4);
    double xs[4], w[4];
    for (int j = 0; j < 4; ++j) xs[j] = g.xa(start + j);
    lagrange_weights(xs, 4, x, w, nullptr);
    cplx acc = 0.0;
    for (int j = 0; j < 4; ++j) {
        const int a = start + j;
        const cplx va = a == 0 ? cplx(0.0) : (a == n + 1 ? f.tail : f.v(a - 1));
        acc += w[j] * va;
    }
    return acc;
}

double h1_density_quantile(const RadialField& f, double q) {
    const auto va = augmented_v(f);
    const auto& g = *f.grid;
    const int na = g.n() + 2;
    std::vector<double> cum(na, 0.0);
    for (int k = 0; k + 1 < na; ++k) {
        const double dx = g.xa(k + 1) - g.xa(k);
        cum[k + 1] = cum[k] + std::norm(va[k + 1] - va[k]) / dx;
    }
    const double total = cum.back();
    if (!(total > 0)) return 0.0;
    const double target = q * total;
    auto it = std::lower_bound(cum.begin(), cum.end(), target);
    const int k = std::max(1, static_cast<int>(it - cum.begin()));
    const double frac = (target - cum[k - 1]) / std::max(cum[k] - cum[k - 1], 1e-300);
    return g.xa(k - 1) + frac * (g.xa(k) - g.xa(k - 1));
}

void write_field_csv(const std::string& path, const RadialField& f) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("cannot write " + path);
    os << "r,re,im\n";
    char buf[128];
    for (int i = 0; i < f.n(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", f.grid->r(i), f.values[i].real(),
                      f.values[i].imag());
        os << buf;
    }
    const double R = f.grid->r_max();
    std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g\n", R, f.tail.real() / R, f.tail.imag() / R);
    os << buf;
}

RadialField read_field_csv(const std::string& path, GridPtr g) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("cannot read " + path);
    std::string line;
    std::getline(is, line);
    std::vector<cplx> vals;
    std::vector<double> rs;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string a, b, c;
        std::getline(ss, a, ',');
        std::getline(ss, b, ',');
        std::getline(ss, c, ',');
        rs.push_back(std::stod(a));
        vals.emplace_back(std::stod(b), std::stod(c));
    }
    if (static_cast<int>(vals.size()) == g->n() + 1) {
        const cplx fR = vals.back();
        vals.pop_back();
        return RadialField(g, std::move(vals), g->r_max() * fR);
    }
    if (static_cast<int>(vals.size()) != g->n())
        throw StructuralError("field file " + path + " does not match grid");
    return RadialField::from_samples(g, std::move(vals));
}

}  // namespace nlslab
