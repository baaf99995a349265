#pragma once

#include <cstdint>
#include <vector>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include <json.hpp>

#include "nlslab/evolution.hpp"
#include "nlslab/linearized.hpp"
#include "nlslab/radial.hpp"

// Experiment runners shared by the command-line tool and the acceptance binary.  Each runner
// returns a JSON report whose "checks" array lists named comparisons against tolerances
// fixed in this library; CSV artifacts are written only when an output directory is given.
namespace nlslab {

using Json = nlohmann::json;

// A required input artifact (e.g. eigenpair files from a spectrum run) is missing or unusable.
struct PrerequisiteError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Resolution {
    std::string name;
    double r_max = 500.0;
    int n = 32768;
    GridPtr grid() const { return RadialGrid::uniform(r_max, n); }
    Json to_json() const;
};

// ref: r_max 500, n 32768; fine: r_max 500, n 65536; coarse: r_max 250, n 4096.
Resolution resolution_preset(const std::string& name);

// Deterministic uniform variates from a seeded 64-bit Mersenne twister (portable across
// standard libraries, unlike std::uniform_real_distribution).
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}
    double uniform(double a, double b) { return a + (b - a) * (static_cast<double>(gen_() >> 11) * 0x1.0p-53); }

private:
    std::mt19937_64 gen_;
};

// Random smooth radial profile: a sum of one to three terms a·(1 + b r²)·exp(-r²/s²).
RadialField random_smooth_field(GridPtr grid, Rng& rng);

// Throws ConfigError naming the first key of `j` (an object) not in `allowed`.
void check_keys(const Json& j, const std::vector<std::string>& allowed, const std::string& where);

// One named comparison; op is "<=", ">=", "<", ">", "==" or "in" (bound ≤ value ≤ bound_hi).
Json make_check(const std::string& name, double value, const std::string& op, double bound,
                double bound_hi = 0.0);
bool all_pass(const Json& report);
// The tolerances of the acceptance checks, as recorded in run manifests.
Json acceptance_tolerances();

// Eigenpair artifacts (JSON + CSV of Y1, Y2) written by the spectrum runner and read back
// by runners that need the stable mode.
void write_eigenpair(const std::string& dir, const EigenPair& ep);
EigenPair read_eigenpair(const std::string& dir, GridPtr grid);

Json run_groundstate(const Resolution& res, std::uint64_t seed, const std::string& outdir = "");
// Kernel and sign structure of L± and the j = 1 closed forms.
Json run_kernel_structure(const Resolution& res);
// Eigenpair: refinement table, Richardson estimate, sector sweep, identities, flow rates.
// The evolution pair (balanced weights) is returned through *evolution_pair when requested.
Json run_spectrum(const Resolution& res, const std::string& outdir = "", EigenPair* evolution_pair = nullptr);
Json run_coercivity(const Resolution& res, std::uint64_t seed);
Json run_modulation(const Resolution& res, std::uint64_t seed, const Json& params = Json::object());
// Evolution fidelity suite: static W, gauge, energy drift, self-convergence, scaling covariance.
Json run_evolution_fidelity(const Resolution& res, const Json& params = Json::object());
// Evolves configured initial data and writes series / trace / snapshot CSVs.
Json run_evolve(const Resolution& res, const Json& params, std::uint64_t seed, const std::string& outdir = "");
// Constructed W± seeds, kept so the classification battery can reuse them.
struct SpecialSeeds {
    std::optional<SpecialReport> minus, plus;
};

// W± constructions plus the parameter-rate, virial and Gronwall diagnostics on the W⁻ run.
Json run_special(const EigenPair& ep, const Json& params = Json::object(), const std::string& outdir = "",
                 SpecialSeeds* keep = nullptr);
// Initial-data battery {0.9W, W, 1.1W, W⁻ seed, W⁺ seed, sub-threshold Gaussian}; seeds are
// constructed here unless supplied.
Json run_classify_suite(const EigenPair& ep, const Json& params = Json::object(), const std::string& outdir = "",
                        const SpecialSeeds* seeds = nullptr);

// Field on another grid through sample_v (piecewise-cubic v = r f, harmonic tail).
RadialField resample(const RadialField& f, GridPtr grid);

EvolutionConfig evolution_config_from_json(const Json& j, EvolutionConfig base = {});
Json evolution_config_to_json(const EvolutionConfig& c);

}  // namespace nlslab
