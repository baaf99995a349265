#pragma once

#include <complex>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace nlslab {

using cplx = std::complex<double>;

struct StructuralError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct DomainError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
// Numerical failures (non-convergence, blowup without a verdict, spectral failure).
struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Per-cell interpolation data for the high-order quadrature: v is interpolated by a
// degree-5 polynomial through six neighbours of the augmented point list
// {0, r_0, ..., r_{n-1}, r_max}, evaluated at 4 Gauss points per cell.
struct QuadCell {
    int start;                 // index into the augmented list
    double x[4];               // Gauss abscissae
    double w[4];               // Gauss weights
    double val[4][6];          // value weights
    double der[4][6];          // derivative weights
};

class RadialGrid {
public:
    enum class Scheme { UniformOffset };

    static std::shared_ptr<const RadialGrid> uniform(double r_max, int n);

    int n() const { return n_; }
    double r_max() const { return r_max_; }
    double h() const { return h_; }
    double r(int i) const { return r_[i]; }
    const std::vector<double>& nodes() const { return r_; }
    Scheme scheme() const { return Scheme::UniformOffset; }
    std::string scheme_name() const { return "uniform-offset"; }
    const std::vector<QuadCell>& cells() const { return cells_; }
    // Augmented abscissae: 0, nodes, r_max.
    double xa(int k) const { return k == 0 ? 0.0 : (k == n_ + 1 ? r_max_ : r_[k - 1]); }

    RadialGrid(double r_max, int n);

private:
    int n_;
    double r_max_, h_;
    std::vector<double> r_;
    std::vector<QuadCell> cells_;
};

using GridPtr = std::shared_ptr<const RadialGrid>;

bool same_grid(const RadialGrid& a, const RadialGrid& b);

enum class OriginBehavior { Regular, Singular };

// Samples f(r_i) plus the harmonic-tail coefficient tail = r_max * f(r_max); the
// field is continued as tail / r beyond r_max (the Ḣ¹-minimal exterior extension).
struct RadialField {
    GridPtr grid;
    std::vector<cplx> values;
    cplx tail{0.0, 0.0};
    OriginBehavior origin = OriginBehavior::Regular;

    RadialField() = default;
    explicit RadialField(GridPtr g);
    RadialField(GridPtr g, std::vector<cplx> vals, cplx tail_v);

    static RadialField from_function(GridPtr g, const std::function<cplx(double)>& f);
    static RadialField from_real_function(GridPtr g, const std::function<double(double)>& f);
    // Tail extrapolated quadratically from the last three samples of r*f.
    static RadialField from_samples(GridPtr g, std::vector<cplx> vals);
    // Build from v = r*f samples and v(r_max).
    static RadialField from_v(GridPtr g, const std::vector<cplx>& v, cplx tail_v);

    int n() const { return static_cast<int>(values.size()); }
    cplx v(int i) const { return grid->r(i) * values[i]; }
    std::vector<cplx> v_vec() const;
    std::vector<double> re_v() const;
    std::vector<double> im_v() const;

    RadialField real_part() const;
    RadialField imag_part() const;  // returned as a real-valued field
    RadialField conj() const;
    bool is_real(double tol = 0.0) const;
    void check_finite() const;

    RadialField& operator+=(const RadialField& o);
    RadialField& operator-=(const RadialField& o);
    RadialField& operator*=(cplx s);
};

RadialField operator+(RadialField a, const RadialField& b);
RadialField operator-(RadialField a, const RadialField& b);
RadialField operator*(cplx s, RadialField a);
RadialField operator*(double s, RadialField a);

// ⟨f,g⟩_{Ḣ¹} = 4π∫ f' ḡ' r² dr (complex; callers take the real part).
cplx h1_inner(const RadialField& f, const RadialField& g);
double h1_norm_sq(const RadialField& f);
// Real pairing Re⟨f,g⟩_{Ḣ¹}.
double h1_real(const RadialField& f, const RadialField& g);
// ∫|x|⁻¹|f|⁴ dx.
double weighted_quartic(const RadialField& f);
// ∫|f|² dx over the ball of radius r_max.
double l2_norm_sq(const RadialField& f);

// Half-line sine transform of v = r f on the DST-IV basis sin(k_m r), k_m = (m+½)π/r_max
// (odd at the origin, even at r_max, matching the harmonic tail).
struct FrequencyField {
    GridPtr grid;
    std::vector<double> k;
    std::vector<cplx> coef;  // v(r) = Σ coef_m sin(k_m r)
    bool truncation_warning = false;

    // 3d radial Fourier transform f̂(k_m) = (4π/k_m) ∫ v sin(k_m r) dr.
    cplx fourier(int m) const;
};

FrequencyField sine_transform(const RadialField& f);
RadialField inverse_sine_transform(const FrequencyField& F);
double h1_norm_sq_spectral(const FrequencyField& F);
// Discrete Ḣ⁻¹ proxy ‖|∇|⁻¹ f‖²_{L²}.
double hm1_norm_sq(const RadialField& f);
double hm1_norm(const RadialField& f);

struct FrequencyProfile {
    double M = 8.0;
    static constexpr const char* id = "quintic-smoothstep-C2";
    // 1 on [0,1], 0 on [2,∞), 1 - (10t³ - 15t⁴ + 6t⁵) with t = s-1 in between.
    static double phi(double s);
};

RadialField lowpass(const RadialField& f, const FrequencyProfile& prof);
RadialField highpass(const RadialField& f, const FrequencyProfile& prof);

// (∂_rr + (2/r)∂_r - μ/r²) f, second order; ghost at the origin by cubic extrapolation of
// r f through (0,0), at r_max from the tail.
RadialField apply_sector_laplacian(const RadialField& f, double mu);

// v = r f at arbitrary radius: piecewise cubic through the augmented points, tail beyond r_max.
cplx sample_v(const RadialField& f, double x);

// Ḣ¹ energy density |v'|² used for quantile-based width estimates; returns r at which
// the cumulative fraction reaches q.
double h1_density_quantile(const RadialField& f, double q);

// Unnormalized DST-II / DST-III pair (FFTW RODFT10 / RODFT01 conventions); dst3(dst2(x)) = 2n x.
std::vector<double> dst2(const std::vector<double>& x);
std::vector<double> dst3(const std::vector<double>& x);

// CSV (r,re,im) serialization.
void write_field_csv(const std::string& path, const RadialField& f);
RadialField read_field_csv(const std::string& path, GridPtr g);

}  // namespace nlslab
