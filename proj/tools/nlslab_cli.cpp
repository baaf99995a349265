// Command-line front end: one subcommand per experiment family, JSON configuration with
// optional parameter sweeps, and a manifest (config hash, resolution, tolerances) per run.
//
// Exit codes: 0 completed, 2 configuration error, 3 numerical failure, 4 missing prerequisite.

#include <sys/wait.h>
#include <unistd.h>

#include <openssl/evp.h>

#include <CLI11.hpp>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "nlslab/experiments.hpp"
#include "nlslab/modulation.hpp"

namespace fs = std::filesystem;
using namespace nlslab;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitPrerequisite = 4;
constexpr const char* kVersion = "1.0.0";

struct Options {
    std::string subcommand;
    std::string config_path;
    std::string output = "nlslab_out";
    int jobs = 1;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> resolution;
};

// Effective configuration of one job after CLI overrides and sweep expansion.
struct Job {
    std::string subcommand;
    std::string resolution = "ref";
    std::uint64_t seed = 1;
    std::string spectrum_dir;
    Json params = Json::object();
    Json sweep_point = Json::object();

    Json to_json() const {
        Json j = {{"subcommand", subcommand}, {"resolution", resolution}, {"seed", seed}, {"params", params}};
        if (!spectrum_dir.empty()) j["spectrum_dir"] = spectrum_dir;
        return j;
    }
};

std::string sha256_hex(const std::string& data) {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    if (!ctx || EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr) != 1 ||
        EVP_DigestUpdate(ctx, data.data(), data.size()) != 1 || EVP_DigestFinal_ex(ctx, md, &len) != 1) {
        EVP_MD_CTX_free(ctx);
        throw std::runtime_error("SHA-256 digest failed");
    }
    EVP_MD_CTX_free(ctx);
    std::string hex;
    char buf[3];
    for (unsigned int i = 0; i < len; ++i) {
        std::snprintf(buf, sizeof buf, "%02x", md[i]);
        hex += buf;
    }
    return hex;
}

// The hash covers the canonical serialization (sorted keys) of the effective job config.
std::string config_hash(const Job& job) { return sha256_hex(job.to_json().dump()); }

void write_json(const fs::path& path, const Json& j) {
    std::ofstream os(path);
    if (!os) throw ConfigError("cannot write " + path.string());
    os << j.dump(2) << '\n';
}

Json load_config(const std::string& path) {
    if (path.empty()) return Json::object();
    std::ifstream is(path);
    if (!is) throw ConfigError("cannot read config file '" + path + "'");
    Json j;
    try {
        is >> j;
    } catch (const Json::exception& e) {
        throw ConfigError("config file '" + path + "' is not valid JSON: " + e.what());
    }
    if (!j.is_object()) throw ConfigError("config file must hold a JSON object");
    check_keys(j, {"resolution", "seed", "params", "spectrum_dir", "sweep"}, "config");
    return j;
}

void check_params(const std::string& sub, const Json& p) {
    static const std::map<std::string, std::vector<std::string>> allowed = {
        {"groundstate", {}},
        {"spectrum", {}},
        {"coercivity", {}},
        {"modulate", {"M", "epsilon", "theta", "lambda", "field"}},
        // evolve validates its nested keys itself.
        {"evolve", {"initial", "evolution", "classifier", "fidelity", "fidelity_params"}},
        {"special", {"a", "T_start", "forward_extra", "consistency", "dt", "sample_dt", "M"}},
        {"classify-suite",
         {"a", "T_start", "forward_extra", "consistency", "dt", "sample_dt", "M", "scatter_T", "seed_backward_T",
          "long_dt"}},
    };
    check_keys(p, allowed.at(sub), sub + " parameters");
}

// Sets a dotted path ("evolution.dt") inside a JSON object.
void set_path(Json& j, const std::string& path, const Json& value) {
    Json* cur = &j;
    size_t start = 0;
    for (;;) {
        const size_t dot = path.find('.', start);
        const std::string key = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (key.empty()) throw ConfigError("malformed sweep key '" + path + "'");
        if (dot == std::string::npos) {
            (*cur)[key] = value;
            return;
        }
        if (!cur->contains(key)) (*cur)[key] = Json::object();
        cur = &(*cur)[key];
        if (!cur->is_object()) throw ConfigError("sweep key '" + path + "' descends into a non-object");
        start = dot + 1;
    }
}

// Cartesian product of the sweep lists, keys in lexicographic order (last key fastest).
std::vector<Job> expand(const Job& base, const Json& sweep) {
    if (sweep.is_null() || sweep.empty()) return {base};
    if (!sweep.is_object()) throw ConfigError("'sweep' must map parameter paths to lists");
    std::vector<std::pair<std::string, Json>> axes;
    for (const auto& [k, v] : sweep.items()) {
        if (!v.is_array() || v.empty()) throw ConfigError("sweep '" + k + "' must be a non-empty list");
        axes.emplace_back(k, v);
    }
    std::vector<Job> jobs = {base};
    for (const auto& [key, values] : axes) {
        std::vector<Job> next;
        for (const auto& job : jobs)
            for (const auto& v : values) {
                Job j = job;
                if (key == "seed") {
                    if (!v.is_number_unsigned()) throw ConfigError("sweep 'seed' values must be non-negative integers");
                    j.seed = v.get<std::uint64_t>();
                } else if (key == "resolution") {
                    if (!v.is_string()) throw ConfigError("sweep 'resolution' values must be strings");
                    j.resolution = v.get<std::string>();
                } else {
                    set_path(j.params, key, v);
                }
                j.sweep_point[key] = v;
                next.push_back(std::move(j));
            }
        jobs = std::move(next);
    }
    return jobs;
}

int count_failures(const Json& report) {
    int f = 0;
    if (report.contains("checks"))
        for (const auto& c : report.at("checks"))
            if (!c.at("pass").get<bool>()) ++f;
    return f;
}

void print_checks(const Json& report, const std::string& label) {
    for (const char* key : {"checks", "module_checks"}) {
        if (!report.contains(key)) continue;
        for (const auto& c : report.at(key)) {
            const bool pass = c.at("pass").get<bool>();
            std::cout << label << (pass ? "PASS  " : "FAIL  ") << c.at("name").get<std::string>() << "  ["
                      << c.at("value").dump() << "]\n";
        }
    }
}

Json run_modulate(const Resolution& res, const Job& job, const fs::path& out) {
    Json p = job.params;
    const std::string field = p.value("field", std::string());
    p.erase("field");
    Json rep = run_modulation(res, job.seed, p);
    if (!field.empty()) {
        if (!fs::exists(field)) throw PrerequisiteError("field file '" + field + "' not found");
        const GridPtr g = res.grid();
        const RadialField u = read_field_csv(field, g);
        const auto ctx = make_modulation_context(g, p.value("M", 8.0));
        const auto st = decompose(u, ctx);
        rep["field"] = {{"path", field}, {"theta", st.theta},   {"lambda", st.lambda}, {"alpha", st.alpha},
                        {"beta", st.beta}, {"delta", st.delta}, {"det", st.det},       {"orth1", st.orth1},
                        {"orth2", st.orth2}};
        write_field_csv(out / "v.csv", st.v);
        write_field_csv(out / "g.csv", st.g);
    }
    return rep;
}

EigenPair evolution_pair(const Resolution& res, const Job& job, const fs::path& out, bool required) {
    if (!job.spectrum_dir.empty()) return read_eigenpair(job.spectrum_dir, res.grid());
    if (required)
        throw PrerequisiteError("classify-suite needs eigenpair artifacts: set \"spectrum_dir\" to the output of "
                                "the spectrum subcommand");
    EigenPair ep = solve_eigenpair(res.grid(), PotentialWeights::Balanced);
    write_eigenpair((out / "eigenpair").string(), ep);
    return ep;
}

Json run_job(const Job& job, const fs::path& out) {
    check_params(job.subcommand, job.params);
    const Resolution res = resolution_preset(job.resolution);
    const std::string dir = out.string();
    const std::string& s = job.subcommand;
    if (s == "groundstate") return run_groundstate(res, job.seed, dir);
    if (s == "spectrum") {
        Json rep = run_spectrum(res, dir);
        Json ks = run_kernel_structure(res);
        rep["kernel_structure"] = ks;
        for (auto& c : ks["checks"]) rep["checks"].push_back(c);
        for (auto& c : ks["module_checks"]) rep["module_checks"].push_back(c);
        return rep;
    }
    if (s == "coercivity") return run_coercivity(res, job.seed);
    if (s == "modulate") return run_modulate(res, job, out);
    if (s == "evolve") return run_evolve(res, job.params, job.seed, dir);
    if (s == "special") return run_special(evolution_pair(res, job, out, false), job.params, dir);
    if (s == "classify-suite") return run_classify_suite(evolution_pair(res, job, out, true), job.params, dir);
    throw ConfigError("unknown subcommand " + s);
}

std::vector<std::string> listed_outputs(const fs::path& out) {
    std::vector<std::string> files;
    if (!fs::exists(out)) return files;
    for (const auto& e : fs::recursive_directory_iterator(out))
        if (e.is_regular_file()) files.push_back(fs::relative(e.path(), out).generic_string());
    std::sort(files.begin(), files.end());
    return files;
}

// Runs one job in the current process; returns the exit code.
int execute(const Job& job, const fs::path& out, bool quiet) {
    const std::string label = quiet ? "[" + out.filename().string() + "] " : "";
    Json manifest = {{"tool", "nlslab"},
                     {"version", kVersion},
                     {"config", job.to_json()},
                     {"config_hash", config_hash(job)},
                     {"sweep_point", job.sweep_point},
                     {"frequency_profile", FrequencyProfile::id},
                     {"tolerances", acceptance_tolerances()}};
    int code = kExitOk;
    try {
        fs::create_directories(out);
        manifest["resolution"] = resolution_preset(job.resolution).to_json();
        const Json report = run_job(job, out);
        write_json(out / "report.json", report);
        const int failures = count_failures(report);
        manifest["status"] = "completed";
        manifest["failed_checks"] = failures;
        print_checks(report, label);
        std::cout << label << job.subcommand << ": " << (failures ? "completed with failing checks" : "all checks pass")
                  << " -> " << out.string() << '\n';
    } catch (const PrerequisiteError& e) {
        code = kExitPrerequisite;
        manifest["status"] = std::string("prerequisite missing: ") + e.what();
    } catch (const ConfigError& e) {
        code = kExitConfig;
        manifest["status"] = std::string("configuration error: ") + e.what();
    } catch (const Json::exception& e) {
        code = kExitConfig;
        manifest["status"] = std::string("configuration error: ") + e.what();
    } catch (const DomainError& e) {
        code = kExitConfig;
        manifest["status"] = std::string("invalid input: ") + e.what();
    } catch (const StructuralError& e) {
        code = kExitConfig;
        manifest["status"] = std::string("invalid input: ") + e.what();
    } catch (const std::exception& e) {
        code = kExitNumerical;
        manifest["status"] = std::string("numerical failure: ") + e.what();
    }
    if (code != kExitOk) std::cerr << label << "error: " << manifest["status"].get<std::string>() << '\n';
    manifest["exit_code"] = code;
    manifest["outputs"] = listed_outputs(out);
    try {
        fs::create_directories(out);
        write_json(out / "manifest.json", manifest);
    } catch (const std::exception& e) {
        std::cerr << "error: cannot write manifest: " << e.what() << '\n';
        if (code == kExitOk) code = kExitConfig;
    }
    return code;
}

int severity(int code) { return code == kExitOk ? 0 : code == kExitNumerical ? 1 : code == kExitPrerequisite ? 2 : 3; }

int run(const Options& opt) {
    std::vector<Job> jobs;
    Json sweep;
    try {
        const Json cfg = load_config(opt.config_path);
        Job base;
        base.subcommand = opt.subcommand;
        if (cfg.contains("resolution")) base.resolution = cfg.at("resolution").get<std::string>();
        if (cfg.contains("seed")) base.seed = cfg.at("seed").get<std::uint64_t>();
        if (cfg.contains("spectrum_dir")) base.spectrum_dir = cfg.at("spectrum_dir").get<std::string>();
        if (cfg.contains("params")) base.params = cfg.at("params");
        if (opt.resolution) base.resolution = *opt.resolution;
        if (opt.seed) base.seed = *opt.seed;
        sweep = cfg.value("sweep", Json());
        jobs = expand(base, sweep);
        for (const auto& j : jobs) {
            resolution_preset(j.resolution);
            check_params(j.subcommand, j.params);
        }
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const Json::exception& e) {
        std::cerr << "error: invalid configuration: " << e.what() << '\n';
        return kExitConfig;
    }

    const fs::path root(opt.output);
    if (jobs.size() == 1 && sweep.is_null()) return execute(jobs.front(), root, false);

    std::vector<fs::path> dirs;
    char name[32];
    for (size_t k = 0; k < jobs.size(); ++k) {
        std::snprintf(name, sizeof name, "job_%03zu", k);
        dirs.push_back(root / name);
    }
    std::vector<int> codes(jobs.size(), kExitOk);
    if (opt.jobs <= 1) {
        for (size_t k = 0; k < jobs.size(); ++k) codes[k] = execute(jobs[k], dirs[k], true);
    } else {
        std::cout.flush();
        std::map<pid_t, size_t> running;
        size_t next = 0;
        while (next < jobs.size() || !running.empty()) {
            while (next < jobs.size() && static_cast<int>(running.size()) < opt.jobs) {
                const pid_t pid = fork();
                if (pid < 0) {
                    codes[next] = execute(jobs[next], dirs[next], true);
                    ++next;
                    continue;
                }
                if (pid == 0) {
                    const int c = execute(jobs[next], dirs[next], true);
                    std::cout.flush();
                    _exit(c);
                }
                running[pid] = next++;
            }
            int status = 0;
            const pid_t done = wait(&status);
            if (done < 0) break;
            const auto it = running.find(done);
            if (it == running.end()) continue;
            codes[it->second] = WIFEXITED(status) ? WEXITSTATUS(status) : kExitNumerical;
            running.erase(it);
        }
    }

    Json index = Json::array();
    int worst = kExitOk;
    for (size_t k = 0; k < jobs.size(); ++k) {
        index.push_back({{"dir", dirs[k].filename().string()},
                         {"sweep_point", jobs[k].sweep_point},
                         {"config_hash", config_hash(jobs[k])},
                         {"exit_code", codes[k]}});
        if (severity(codes[k]) > severity(worst)) worst = codes[k];
    }
    Json manifest = {{"tool", "nlslab"},
                     {"version", kVersion},
                     {"subcommand", opt.subcommand},
                     {"sweep", sweep},
                     {"config_hash", sha256_hex(Json({{"jobs", index}}).dump())},
                     {"frequency_profile", FrequencyProfile::id},
                     {"jobs", index}};
    fs::create_directories(root);
    write_json(root / "manifest.json", manifest);
    return worst;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Numerical laboratory for threshold dynamics of the 3d energy-critical inhomogeneous NLS"};
    app.set_version_flag("--version", kVersion);
    app.require_subcommand(1);
    Options opt;
    std::string resolution;
    std::uint64_t seed = 0;
    const std::vector<std::pair<std::string, std::string>> subs = {
        {"groundstate", "ground-state invariants and the weighted Sobolev ratio"},
        {"spectrum", "eigenpair of the linearized operator, kernel and sign structure"},
        {"coercivity", "constrained coercivity constants across refinements"},
        {"modulate", "modulation decomposition round trip (optionally of a field file)"},
        {"evolve", "time evolution of configured initial data"},
        {"special", "construction of the special solutions W+ and W-"},
        {"classify-suite", "classification of the threshold initial-data battery"}};
    for (const auto& [name, help] : subs) {
        CLI::App* sc = app.add_subcommand(name, help);
        sc->add_option("--config", opt.config_path, "JSON configuration file")->check(CLI::ExistingFile);
        sc->add_option("--output", opt.output, "output directory")->capture_default_str();
        sc->add_option("--jobs", opt.jobs, "parallel worker processes for sweeps")->check(CLI::Range(1, 256));
        sc->add_option("--seed", seed, "seed for randomized test fields");
        sc->add_option("--resolution", resolution, "grid preset")->check(CLI::IsMember({"ref", "fine", "coarse"}));
        sc->callback([&opt, &resolution, &seed, sc, name = name] {
            opt.subcommand = name;
            if (sc->count("--resolution")) opt.resolution = resolution;
            if (sc->count("--seed")) opt.seed = seed;
        });
    }
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }
    return run(opt);
}
