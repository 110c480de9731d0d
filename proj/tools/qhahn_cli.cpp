// qhahn: build, solve, simulate and verify the open q-Hahn process.

#include "qhahn/errors.hpp"
#include "qhahn/fock.hpp"
#include "qhahn/markov.hpp"
#include "qhahn/rates.hpp"
#include "qhahn/verify.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <unistd.h>
#include <string>
#include <vector>

#ifndef QHAHN_VERSION
#define QHAHN_VERSION "0.0.0"
#endif

namespace {

using nlohmann::json;
using namespace qhahn;

constexpr int kExitCheckFailed = 1;
constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& field, const std::string& what)
        : std::runtime_error("invalid config field '" + field + "': " + what) {}
};

// Everything a subcommand may read. Unset optionals fall back to defaults
// after the JSON file and the flags have been merged.
struct RunConfig {
    std::optional<double> q, s, gamma, mu;
    double rho_l = 0.2;
    double rho_r = 0.1;
    int sites = 2;
    int cap = 8;
    double tol = 1e-14;
    std::uint64_t seed = 20240601;
    std::string mode = "stochasticized";
    std::string out;
    double t_max = 100.0;
    std::size_t events = 1'000'000;
    unsigned jobs = 1;
};

struct Flags {
    std::optional<double> q, s, gamma, mu, rho_l, rho_r, tol, t_max;
    std::optional<int> sites, cap;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> events;
    std::optional<unsigned> jobs;
    std::optional<std::string> mode, out;
    std::string config_path;
};

template <class T>
T field(const json& j, const char* name) {
    try {
        return j.at(name).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(name, e.what());
    }
}

void apply_json(RunConfig& c, const json& j) {
    if (!j.is_object()) throw ConfigError("<root>", "config must be a JSON object");
    for (const auto& [key, v] : j.items()) {
        (void)v;
        const char* k = key.c_str();
        if (key == "q") c.q = field<double>(j, k);
        else if (key == "s") c.s = field<double>(j, k);
        else if (key == "gamma") c.gamma = field<double>(j, k);
        else if (key == "mu") c.mu = field<double>(j, k);
        else if (key == "rho_L") c.rho_l = field<double>(j, k);
        else if (key == "rho_R") c.rho_r = field<double>(j, k);
        else if (key == "n_sites" || key == "sites") c.sites = field<int>(j, k);
        else if (key == "cap") c.cap = field<int>(j, k);
        else if (key == "tol") c.tol = field<double>(j, k);
        else if (key == "seed") c.seed = field<std::uint64_t>(j, k);
        else if (key == "mode") c.mode = field<std::string>(j, k);
        else if (key == "output_path" || key == "out") c.out = field<std::string>(j, k);
        else if (key == "t_max") c.t_max = field<double>(j, k);
        else if (key == "events") c.events = field<std::size_t>(j, k);
        else if (key == "jobs") c.jobs = field<unsigned>(j, k);
        else throw ConfigError(key, "unknown field");
    }
}

RunConfig resolve(const Flags& f) {
    RunConfig c;
    if (!f.config_path.empty()) {
        std::ifstream in(f.config_path);
        if (!in) throw ConfigError("config", "cannot open '" + f.config_path + "'");
        json j;
        try {
            in >> j;
        } catch (const json::exception& e) {
            throw ConfigError("config", std::string("malformed JSON: ") + e.what());
        }
        apply_json(c, j);
    }
    if (f.q) c.q = f.q;
    if (f.s) c.s = f.s;
    if (f.gamma) c.gamma = f.gamma;
    if (f.mu) c.mu = f.mu;
    if (f.rho_l) c.rho_l = *f.rho_l;
    if (f.rho_r) c.rho_r = *f.rho_r;
    if (f.sites) c.sites = *f.sites;
    if (f.cap) c.cap = *f.cap;
    if (f.tol) c.tol = *f.tol;
    if (f.seed) c.seed = *f.seed;
    if (f.mode) c.mode = *f.mode;
    if (f.out) c.out = *f.out;
    if (f.t_max) c.t_max = *f.t_max;
    if (f.events) c.events = *f.events;
    if (f.jobs) c.jobs = *f.jobs;

    const bool rate_form = c.gamma || c.mu;
    const bool qs_form = c.q || c.s;
    if (rate_form && qs_form) throw ConfigError(c.gamma ? "gamma" : "mu", "give either (q, s) or (gamma, mu), not both");
    if (rate_form && !(c.gamma && c.mu)) throw ConfigError(c.gamma ? "mu" : "gamma", "missing");
    if (!rate_form) {
        if (!c.q) c.q = 0.6;
        if (!c.s) c.s = 0.5;
    }
    if (c.q && !(*c.q > 0.0 && *c.q < 1.0)) throw ConfigError("q", "must lie in (0,1)");
    if (c.s && !(*c.s > 0.0 && std::isfinite(*c.s))) throw ConfigError("s", "must be positive");
    if (c.gamma && !(*c.gamma > 0.0 && *c.gamma < 1.0)) throw ConfigError("gamma", "must lie in (0,1)");
    if (c.mu && !(*c.mu > 0.0 && *c.mu < 1.0)) throw ConfigError("mu", "must lie in (0,1)");
    if (!(c.rho_l >= 0.0 && c.rho_l < 1.0)) throw ConfigError("rho_L", "must lie in [0,1)");
    if (!(c.rho_r >= 0.0 && c.rho_r < 1.0)) throw ConfigError("rho_R", "must lie in [0,1)");
    if (c.sites < 1) throw ConfigError("n_sites", "must be at least 1");
    if (c.cap < 1) throw ConfigError("cap", "must be at least 1");
    if (!(c.tol > 0.0 && c.tol < 1.0)) throw ConfigError("tol", "must lie in (0,1)");
    if (!(c.t_max > 0.0)) throw ConfigError("t_max", "must be positive");
    if (c.jobs < 1) throw ConfigError("jobs", "must be at least 1");
    try {
        truncation_from_string(c.mode);
    } catch (const DomainError&) {
        throw ConfigError("mode", "expected raw or stochasticized, got '" + c.mode + "'");
    }
    return c;
}

ModelParams params_of(const RunConfig& c) {
    try {
        if (c.q) return ModelParams::from_qs(*c.q, *c.s, c.rho_l, c.rho_r);
        return ModelParams::from_rates(*c.gamma, *c.mu, c.rho_l, c.rho_r);
    } catch (const DomainError& e) {
        // q^{4s} can leave (0,1) only through underflow
        throw ConfigError("s", e.what());
    }
}

json config_json(const RunConfig& c) {
    json j;
    if (c.q) j["q"] = *c.q;
    if (c.s) j["s"] = *c.s;
    if (c.gamma) j["gamma"] = *c.gamma;
    if (c.mu) j["mu"] = *c.mu;
    j["rho_L"] = c.rho_l;
    j["rho_R"] = c.rho_r;
    j["n_sites"] = c.sites;
    j["cap"] = c.cap;
    j["tol"] = c.tol;
    j["seed"] = c.seed;
    j["mode"] = c.mode;
    j["t_max"] = c.t_max;
    j["events"] = c.events;
    return j;
}

std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ULL;
    }
    return h;
}

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

// subcommand name, version and config hash
std::vector<std::pair<std::string, std::string>> provenance(const std::string& cmd, const RunConfig& c) {
    const std::string cfg = config_json(c).dump();
    return {{"tool", std::string("qhahn ") + QHAHN_VERSION},
            {"command", cmd},
            {"config_hash", "fnv1a64:" + hex64(fnv1a(cfg))},
            {"config", cfg}};
}

void write_header(std::ostream& os, const std::vector<std::pair<std::string, std::string>>& h) {
    for (const auto& [k, v] : h) os << "# " << k << ": " << v << '\n';
}

std::string fmt(double v) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

// Writes through a sibling temp file and renames, so readers never see a
// partial result. Empty path means stdout.
template <class F>
void emit(const std::string& path, F&& body) {
    if (path.empty()) {
        body(std::cout);
        std::cout.flush();
        return;
    }
    namespace fs = std::filesystem;
    const fs::path target(path);
    fs::path tmp = target;
    tmp += ".tmp" + std::to_string(::getpid());
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw ConfigError("out", "cannot write '" + tmp.string() + "'");
        os.imbue(std::locale::classic());
        body(os);
        os.flush();
        if (!os) throw ConfigError("out", "write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    fs::rename(tmp, target, ec);
    if (ec) {
        fs::remove(tmp);
        throw ConfigError("out", "cannot rename onto '" + path + "': " + ec.message());
    }
}

SparseOperator build_generator(const RunConfig& c, const ModelParams& p, int cap) {
    BuildOptions opt;
    opt.tol = c.tol;
    opt.mode = Truncation::Stochasticized;
    return markov_generator(full_hamiltonian(p, c.sites, cap, opt));
}

// ---- subcommands -------------------------------------------------------------

int cmd_verify(const RunConfig& c, const std::vector<std::string>& only) {
    if (!c.q) throw ConfigError("q", "verify needs the deformation parameters (q, s)");
    verify::Context ctx;
    ctx.params = params_of(c);
    ctx.cap = c.cap;
    ctx.tol = c.tol;
    ctx.seed = c.seed;
    ctx.events = c.events;
    std::vector<verify::CheckResult> results;
    try {
        results = verify::run(ctx, only, c.jobs);
    } catch (const verify::CheckFailure& e) {
        spdlog::error("check {} failed with a numeric error: {}", e.check_id(), e.what());
        std::cerr << "qhahn verify: numeric error in check " << e.check_id() << ": " << e.what() << '\n';
        return kExitNumeric;
    } catch (const DomainError& e) {
        throw ConfigError("only", e.what());
    }
    bool ok = true;
    json report;
    json prov = json::object();
    for (const auto& [k, v] : provenance("verify", c)) prov[k] = v;
    report["provenance"] = prov;
    report["results"] = json::array();
    for (const auto& r : results) {
        report["results"].push_back(verify::to_json(r));
        if (r.acceptance && !r.pass) ok = false;
        spdlog::info("{} {} residual={} tol={}", r.pass ? "PASS" : "FAIL", r.check_id, r.residual, r.tolerance);
    }
    report["acceptance_passed"] = ok;
    emit(c.out, [&](std::ostream& os) { os << report.dump(2) << '\n'; });
    return ok ? 0 : kExitCheckFailed;
}

int cmd_generator(const RunConfig& c, const std::string& which) {
    const auto p = params_of(c);
    BuildOptions opt;
    opt.tol = c.tol;
    opt.mode = truncation_from_string(c.mode);
    auto h = full_hamiltonian(p, c.sites, c.cap, opt);
    if (which == "M") h = markov_generator(h);
    auto header = provenance("generator", c);
    header.emplace_back("operator", which);
    header.emplace_back("N", std::to_string(c.sites));
    header.emplace_back("cap", std::to_string(c.cap));
    header.emplace_back("mode", to_string(opt.mode));
    header.emplace_back("params", p.describe());
    emit(c.out, [&](std::ostream& os) { write_operator_dump(os, h, header); });
    return 0;
}

int cmd_steady(const RunConfig& c, const std::vector<int>& sweep) {
    const auto p = params_of(c);
    const QHahnRates rates(p);
    std::vector<int> caps = sweep.empty() ? std::vector<int>{c.cap} : sweep;
    for (int k : caps)
        if (k < 1) throw ConfigError("cap-sweep", "caps must be at least 1");

    struct Row {
        int cap;
        SteadyState ss;
        Observables obs;
    };
    std::vector<Row> rows;
    for (int k : caps) {
        auto ss = steady_state(build_generator(c, p, k));
        auto obs = observables(ss.pi, TruncatedSpace(c.sites, k), rates, c.tol);
        spdlog::info("cap {}: residual {} via {}", k, ss.residual, ss.method);
        rows.push_back({k, std::move(ss), std::move(obs)});
    }

    json summary;
    for (const auto& [k, v] : provenance("steady", c)) summary["provenance"][k] = v;
    summary["params"] = verify::params_json(p);
    for (const auto& r : rows) {
        summary["solves"].push_back({{"cap", r.cap},
                                     {"dimension", r.ss.pi.weights.size()},
                                     {"method", r.ss.method},
                                     {"residual", r.ss.residual},
                                     {"density", r.obs.density},
                                     {"total_mass", r.obs.total_mass},
                                     {"current_left", r.obs.current},
                                     {"current_right", r.obs.current_right}});
    }
    if (rows.size() > 1) {
        double delta = 0.0;
        const auto& a = rows[rows.size() - 2].obs.density;
        const auto& b = rows.back().obs.density;
        for (std::size_t i = 0; i < a.size(); ++i) delta = std::max(delta, std::abs(a[i] - b[i]));
        summary["last_cap_delta"] = delta;
    }

    emit(c.out, [&](std::ostream& os) {
        write_header(os, provenance("steady", c));
        if (rows.size() == 1) {
            os << "site,density\n";
            const auto& d = rows[0].obs.density;
            for (std::size_t i = 0; i < d.size(); ++i) os << i + 1 << ',' << fmt(d[i]) << '\n';
        } else {
            os << "cap,site,density\n";
            for (const auto& r : rows)
                for (std::size_t i = 0; i < r.obs.density.size(); ++i)
                    os << r.cap << ',' << i + 1 << ',' << fmt(r.obs.density[i]) << '\n';
        }
    });
    (c.out.empty() ? std::cerr : std::cout) << summary.dump(2) << '\n';
    return 0;
}

int cmd_simulate(const RunConfig& c, bool uncapped, const std::vector<int>& initial) {
    const auto p = params_of(c);
    const QHahnRates rates(p);
    GillespieOptions opt;
    opt.t_max = c.t_max;
    opt.max_events = c.events;
    opt.tol = c.tol;
    if (!uncapped) opt.cap = c.cap;
    if (!initial.empty()) {
        if (static_cast<int>(initial.size()) != c.sites) throw ConfigError("initial", "needs one occupancy per site");
        for (int v : initial)
            if (v < 0 || (!uncapped && v > c.cap)) throw ConfigError("initial", "occupancy outside [0, cap]");
        opt.initial = initial;
    }
    const auto tr = gillespie(rates, c.sites, c.seed, opt, p.describe());

    json summary;
    for (const auto& [k, v] : provenance("simulate", c)) summary["provenance"][k] = v;
    summary["events"] = tr.size();
    summary["t_end"] = tr.t_end;
    summary["rng"] = tr.algorithm;
    if (!uncapped) {
        const TruncatedSpace sp(c.sites, c.cap);
        if (sp.dimension() <= 200'000 && tr.t_end > 0.0) {
            const auto ss = steady_state(build_generator(c, p, c.cap));
            const auto f = occupation_frequencies(tr, sp);
            summary["tv_distance_to_steady_state"] = total_variation(f.frequency, ss.pi.weights);
        }
    }

    emit(c.out, [&](std::ostream& os) {
        auto h = provenance("simulate", c);
        h.emplace_back("rng", tr.algorithm);
        h.emplace_back("seed", std::to_string(tr.seed));
        h.emplace_back("cap", uncapped ? std::string("none") : std::to_string(c.cap));
        write_header(os, h);
        os << "time";
        for (int i = 1; i <= c.sites; ++i) os << ",site_" << i;
        os << '\n';
        for (std::size_t e = 0; e < tr.size(); ++e) {
            os << fmt(tr.times[e]);
            for (int i = 0; i < c.sites; ++i) os << ',' << tr.occupancy[e * static_cast<std::size_t>(c.sites) + i];
            os << '\n';
        }
    });
    (c.out.empty() ? std::cerr : std::cout) << summary.dump(2) << '\n';
    return 0;
}

int cmd_limits(const RunConfig& c) {
    const double s = c.s.value_or(0.5);
    const double g = c.gamma.value_or(c.q ? *c.q * *c.q : 0.36);
    const int cap = std::min(c.cap, 10);
    struct Line {
        std::string family;
        double parameter;
        double value;
    };
    std::vector<Line> lines;
    const HarmonicRates hr(s, c.rho_l, c.rho_r);
    const auto hl = boundary_operator(hr, Side::Left, cap, 1e-16);
    const auto hrt = boundary_operator(hr, Side::Right, cap, 1e-16);
    for (int j = 1; j <= 5; ++j) {
        const double eps = std::pow(10.0, -j);
        const double q = 1 - eps;
        const auto p = ModelParams::from_qs(q, s, c.rho_l, c.rho_r);
        const double L = std::log(1 / (q * q));
        double e = 0.0;
        for (int m = 1; m <= 10; ++m)
            for (int k = 1; k <= m; ++k)
                e = std::max({e, std::abs(L * beta_plus(p, m, k) - harmonic_beta(s, m, k)),
                              std::abs(L * beta_minus(p, m, k) - harmonic_beta(s, m, k))});
        lines.push_back({"harmonic_bulk", eps, e});
        const double eb = std::max(max_abs_difference(L * boundary_left(p, cap, 1e-16), hl),
                                   max_abs_difference(L * boundary_right(p, cap, 1e-16), hrt));
        lines.push_back({"harmonic_boundary", eps, eb});
    }
    for (int j = 1; j <= 8; ++j) {
        const double mu = std::pow(10.0, -j);
        double mb = 0.0;
        for (int m = 1; m <= 10; ++m)
            for (int k = 1; k <= m; ++k) mb = std::max(mb, beta_plus(g, mu, m, k));
        lines.push_back({"tasep_max_beta_plus", mu, mb});
    }
    emit(c.out, [&](std::ostream& os) {
        write_header(os, provenance("limits", c));
        os << "family,parameter,value\n";
        for (const auto& l : lines) os << l.family << ',' << fmt(l.parameter) << ',' << fmt(l.value) << '\n';
    });
    return 0;
}

void setup_logging() {
    auto logger = spdlog::stderr_color_mt("qhahn");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::warn);
    if (const char* env = std::getenv("QHAHN_LOG")) spdlog::set_level(spdlog::level::from_str(env));
}

void add_common(CLI::App& app, Flags& f) {
    app.add_option("--q", f.q, "deformation parameter q in (0,1) [default 0.6]");
    app.add_option("--s", f.s, "spin s > 0 [default 0.5]");
    app.add_option("--gamma", f.gamma, "rate parameter gamma (instead of q, s)");
    app.add_option("--mu", f.mu, "rate parameter mu (instead of q, s)");
    app.add_option("--rho-l", f.rho_l, "left reservoir density [default 0.2]");
    app.add_option("--rho-r", f.rho_r, "right reservoir density [default 0.1]");
    app.add_option("--sites", f.sites, "number of sites N [default 2]");
    app.add_option("--cap", f.cap, "per-site occupancy cap [default 8]");
    app.add_option("--tol", f.tol, "insertion series cutoff [default 1e-14]");
    app.add_option("--seed", f.seed, "RNG seed [default 20240601]");
    app.add_option("--mode", f.mode, "truncation: raw | stochasticized [default stochasticized]");
    app.add_option("--config", f.config_path, "JSON config file; flags override its fields");
    app.add_option("--out", f.out, "output file (written atomically) [default stdout]");
    app.add_option("--jobs", f.jobs, "worker threads for verify [default 1]");
}

}  // namespace

int main(int argc, char** argv) {
    std::locale::global(std::locale::classic());
    setup_logging();

    CLI::App app{"Open q-Hahn process: generators, steady states, simulation and identity checks"};
    app.set_version_flag("--version", std::string("qhahn ") + QHAHN_VERSION);
    app.require_subcommand(1);
    Flags flags;

    auto* verify_cmd = app.add_subcommand("verify", "run the registered identity checks, JSON report");
    add_common(*verify_cmd, flags);
    std::vector<std::string> only;
    verify_cmd->add_option("--only", only, "restrict to these check ids")->delimiter(',');
    verify_cmd->add_option("--events", flags.events, "events for the dynamics check [default 1e6]");
    bool list = false;
    verify_cmd->add_flag("--list", list, "print the check ids and exit");

    auto* gen_cmd = app.add_subcommand("generator", "dump H (or M = -H^T) as coordinate triplets");
    add_common(*gen_cmd, flags);
    std::string which = "H";
    gen_cmd->add_option("--operator", which, "H or M [default H]")->check(CLI::IsMember({"H", "M"}));

    auto* steady_cmd = app.add_subcommand("steady", "stationary density profile (CSV) and summary (JSON)");
    add_common(*steady_cmd, flags);
    std::vector<int> sweep;
    steady_cmd->add_option("--cap-sweep", sweep, "solve at each of these caps, e.g. 6,8,10")->delimiter(',');

    auto* sim_cmd = app.add_subcommand("simulate", "Gillespie trajectory CSV");
    add_common(*sim_cmd, flags);
    sim_cmd->add_option("--t-max", flags.t_max, "time horizon [default 100]");
    sim_cmd->add_option("--events", flags.events, "event budget [default 1e6]");
    bool uncapped = false;
    sim_cmd->add_flag("--uncapped", uncapped, "simulate without the occupancy cap");
    std::vector<int> initial;
    sim_cmd->add_option("--initial", initial, "initial occupancies, comma separated")->delimiter(',');

    auto* lim_cmd = app.add_subcommand("limits", "q -> 1 and mu -> 0 convergence table (CSV)");
    add_common(*lim_cmd, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitConfig;
    }

    try {
        if (verify_cmd->parsed() && list) {
            for (const auto& ch : verify::registry())
                std::cout << ch.id << (ch.acceptance ? "" : " (diagnostic)") << "  " << ch.description << '\n';
            return 0;
        }
        const RunConfig cfg = resolve(flags);
        if (verify_cmd->parsed()) return cmd_verify(cfg, only);
        if (gen_cmd->parsed()) return cmd_generator(cfg, which);
        if (steady_cmd->parsed()) return cmd_steady(cfg, sweep);
        if (sim_cmd->parsed()) return cmd_simulate(cfg, uncapped, initial);
        if (lim_cmd->parsed()) return cmd_limits(cfg);
    } catch (const ConfigError& e) {
        std::cerr << "qhahn: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "qhahn: numeric error: " << e.what() << '\n';
        return kExitNumeric;
    }
    return kExitConfig;
}
