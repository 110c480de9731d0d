#include "qhahn/verify.hpp"

#include "qhahn/errors.hpp"
#include "qhahn/fock.hpp"
#include "qhahn/markov.hpp"
#include "qhahn/yangbaxter.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>

namespace qhahn::verify {

using nlohmann::json;
using yb::Bybe;

nlohmann::json params_json(const ModelParams& p) {
    json j;
    if (p.has_deformation()) {
        j["q"] = p.q();
        j["s"] = p.s();
    }
    j["gamma"] = p.gamma();
    j["mu"] = p.mu();
    j["rho_L"] = p.rho_left();
    j["rho_R"] = p.rho_right();
    return j;
}

nlohmann::json to_json(const CheckResult& r) {
    return json{{"check_id", r.check_id}, {"params", r.params},   {"residual", r.residual},
                {"tolerance", r.tolerance}, {"pass", r.pass},     {"acceptance", r.acceptance},
                {"details", r.details}};
}

namespace {

CheckResult make(const std::string& id, const Context& ctx, double residual, double tol, json details = json::object()) {
    CheckResult r;
    r.check_id = id;
    r.residual = residual;
    r.tolerance = tol;
    r.pass = residual <= tol;
    r.params = params_json(ctx.params);
    r.details = std::move(details);
    return r;
}

SparseOperator stochastic_generator(const RateModel& rates, int n, int cap, double tol) {
    BuildOptions opt;
    opt.mode = Truncation::Stochasticized;
    opt.tol = tol;
    return markov_generator(full_hamiltonian(rates, n, cap, opt));
}

// fixed alternative points next to the configured one
std::vector<std::pair<double, double>> rate_points(const ModelParams& p) {
    return {{p.gamma(), p.mu()}, {0.25, 0.5}, {0.5, 0.3}, {0.81, 0.09}};
}

CheckResult sum_rule(const Context& ctx) {
    double worst = 0.0;
    for (auto [g, mu] : rate_points(ctx.params)) {
        for (int m = 1; m <= 20; ++m) {
            double sp = 0.0, sm = 0.0;
            for (int k = 1; k <= m; ++k) {
                sp += beta_plus(g, mu, m, k);
                sm += beta_minus(g, mu, m, k);
            }
            worst = std::max({worst, std::abs(alpha_plus(g, mu, m) - sp), std::abs(alpha_minus(g, mu, m) - sm)});
        }
    }
    return make("sum_rule", ctx, worst, 1e-12, {{"m_max", 20}});
}

CheckResult stochasticity(const Context& ctx) {
    BuildOptions opt;
    opt.mode = Truncation::Stochasticized;
    opt.tol = ctx.tol;
    const auto h = full_hamiltonian(ctx.params, 3, ctx.cap, opt);
    double worst = 0.0;
    for (double c : h.column_sums()) worst = std::max(worst, std::abs(c));
    double max_off = -std::numeric_limits<double>::infinity();
    for (const auto& e : h.entries())
        if (e.row != e.col) max_off = std::max(max_off, e.value);
    auto r = make("stochasticity", ctx, worst, 1e-12, {{"sites", 3}, {"cap", ctx.cap}, {"max_offdiagonal", max_off}});
    r.pass = r.pass && max_off <= 0.0;
    return r;
}

CheckResult r_permutation(const Context& ctx) {
    double worst = 0.0;
    for (int m = 0; m <= 8; ++m)
        for (int n = 0; n <= 8; ++n)
            for (int mp = 0; mp <= m + n; ++mp) {
                const int np = m + n - mp;
                const double e = (m == np && n == mp) ? 1.0 : 0.0;
                worst = std::max(worst, std::abs(yb::r_matrix_hyp(ctx.params, 1.0, m, n, mp, np) - e));
                worst = std::max(worst, std::abs(yb::r_matrix_fact(ctx.params, 1.0, m, n, mp, np) - e));
            }
    return make("r_permutation_point", ctx, worst, 1e-12, {{"max_index", 8}});
}

CheckResult r_forms(const Context& ctx) {
    // deterministic spread of points in (0.5, 2)
    double worst = 0.0;
    std::size_t compared = 0;
    for (int t = 0; t < 20; ++t) {
        const double x = 0.5 + 1.5 * (t + 0.5) / 20.0 + 0.013 * std::sin(7.0 * t);
        for (int m = 0; m <= 6; ++m)
            for (int n = 0; n <= 6; ++n)
                for (int mp = 0; mp <= 6; ++mp) {
                    const int np = m + n - mp;
                    if (np < 0 || np > 6) continue;
                    const double f = yb::r_matrix_fact(ctx.params, x, m, n, mp, np);
                    const double h = yb::r_matrix_hyp(ctx.params, x, m, n, mp, np);
                    worst = std::max(worst, std::abs(f - h) / std::max(1.0, std::abs(f)));
                    ++compared;
                }
    }
    return make("r_form_equivalence", ctx, worst, 1e-10, {{"points", 20}, {"elements", compared}});
}

CheckResult density_analytic(const Context& ctx) {
    const auto a = yb::density_from_r(ctx.params, 8);
    const auto b = bulk_density(ctx.params, 8);
    return make("density_from_r", ctx, max_abs_difference(a, b), 1e-12, {{"cap", 8}});
}

CheckResult density_fd(const Context& ctx) {
    const auto fd = yb::density_from_r_numeric(ctx.params, 8, 1e-5);
    const auto b = bulk_density(ctx.params, 8);
    const auto diff = fd - b;
    double entrywise = 0.0;
    for (const auto& e : diff.entries())
        entrywise = std::max(entrywise, std::abs(e.value) / std::max(1.0, std::abs(b.at(e.row, e.col))));
    return make("density_finite_difference", ctx, diff.max_abs() / std::max(1.0, b.max_abs()), 1e-8,
                {{"h", 1e-5}, {"cap", 8}, {"absolute", diff.max_abs()}, {"entrywise_relative", entrywise}});
}

CheckResult lax_unitarity(const Context& ctx) {
    double worst = 0.0;
    for (double x : {1.3, 0.8, 2.1}) worst = std::max(worst, yb::lax_unitarity_residual(ctx.params, x, 8));
    return make("lax_unitarity", ctx, worst, 1e-10, {{"x", {1.3, 0.8, 2.1}}, {"cutoff", 8}});
}

CheckResult crossing(const Context& ctx) {
    double a = 0, b = 0, c = 0;
    for (double x : {1.3, 0.8, 2.1}) {
        const auto r = yb::crossing_check(ctx.params, x, 8);
        a = std::max(a, r.box_transpose);
        b = std::max(b, r.site_transpose);
        c = std::max(c, r.d_invariance);
    }
    return make("crossing", ctx, std::max({a, b, c}), 1e-10,
                {{"box_transpose", a}, {"site_transpose", b}, {"d_invariance", c}, {"cutoff", 8}, {"edge_band", 2}});
}

CheckResult r_symmetry(const Context& ctx) {
    double worst = 0.0;
    for (double x : {1.3, 0.8}) worst = std::max(worst, yb::r_symmetry_residual(ctx.params, x, 6));
    return make("r_symmetry", ctx, worst, 1e-10, {{"max_particles", 6}});
}

CheckResult bybe_rank1(Bybe which, const std::string& id, double nu_override, bool acceptance, const Context& ctx) {
    const double q = ctx.params.q();
    const double rho = ctx.params.rho_right();
    auto kp = yb::rank1_params(ctx.params, rho);
    if (nu_override != 0.0) kp.nu = nu_override;
    yb::KEntries k = [&](int i, int j) { return yb::k_rank1_at_qinv(ctx.params, rho, i, j); };
    double worst = 0.0;
    for (int j = 0; j <= 10; ++j)
        for (int l = 0; l <= 10; ++l) worst = std::max(worst, std::abs(yb::bybe_residual(which, kp, ctx.params, k, 1.0 / q, j, l)));
    auto r = make(id, ctx, worst, 1e-10, {{"y", 1.0 / q}, {"nu", kp.nu}, {"t_plus", kp.t_plus}, {"index_max", 10}});
    r.acceptance = acceptance;
    return r;
}

CheckResult bybe_identity_point(const Context& ctx) {
    const auto kp = yb::identity_point_params(ctx.params, ctx.params.rho_right());
    yb::KEntries k = [](int i, int j) { return i == j ? 0.25 : 0.0; };
    double worst = 0.0;
    for (Bybe w : {Bybe::Eq1, Bybe::Eq2})
        for (int j = 0; j <= 10; ++j)
            for (int l = 0; l <= 10; ++l) worst = std::max(worst, std::abs(yb::bybe_residual(w, kp, ctx.params, k, 1.0, j, l)));
    return make("bybe_identity_point", ctx, worst, 1e-10, {{"y", 1.0}, {"nu", kp.nu}});
}

CheckResult bybe_derivative(Bybe which, const std::string& id, const Context& ctx) {
    const double rho = ctx.params.rho_right();
    yb::KEntries k = [&](int i, int j) { return yb::k_prime_at_1(ctx.params, rho, i, j); };
    json cases = json::object();
    double worst = 0.0;
    for (int j = 0; j <= 10; ++j)
        for (int l = 0; l <= 10; ++l) {
            const double r = std::abs(yb::bybe_derivative_residual(which, ctx.params, rho, k, j, l));
            const int off = j - l;
            const std::string c = off > 1 ? "j-l>1" : off == 1 ? "j-l=1" : off == 0 ? "j=l" : off == -1 ? "j-l=-1" : "j-l<-1";
            cases[c] = std::max(cases.value(c, 0.0), r);
            worst = std::max(worst, r);
        }
    return make(id, ctx, worst, 1e-10, {{"cases", cases}});
}

CheckResult trace_closed_form(const Context& ctx) {
    double worst = 0.0;
    json per;
    for (double rho : {ctx.params.rho_left(), 0.3}) {
        const auto t = yb::trace_kbar(ctx.params, rho, 1e-16);
        worst = std::max(worst, std::abs(t.direct - t.closed_form));
        per.push_back({{"rho", rho}, {"direct", t.direct}, {"closed_form", t.closed_form}, {"terms", t.terms}});
    }
    return make("trace_closed_form", ctx, worst, 1e-12, {{"evaluations", per}});
}

CheckResult trace_identity_left(const Context& ctx) {
    const auto b = yb::left_boundary_from_trace(ctx.params, ctx.params.rho_left(), 8, 200, 1e-12);
    const auto bl = boundary_left(ctx.params, 8, 1e-16);
    return make("trace_identity_left", ctx, max_abs_difference(b, bl), 1e-10, {{"cap", 8}, {"aux_cutoff", 200}});
}

CheckResult right_boundary(const Context& ctx) {
    const double q = ctx.params.q();
    const auto br = boundary_right(ctx.params, 10, 1e-16);
    const double rho_k = ctx.params.rho_right() / (q * q);
    const auto k = yb::b_right_from_k_prime(ctx.params, rho_k, 10);
    return make("right_boundary_k_prime", ctx, max_abs_difference(br, k), 1e-12, {{"rho_K", rho_k}, {"cap", 10}});
}

CheckResult transfer_commutativity(const Context& ctx) {
    const yb::KBoxParams right{0.7, -1.3, 0.45, 1.7};
    const yb::KBoxParams left{-0.4, 0.9, 1.3, 0.6};
    const double r = yb::transfer_commutativity(ctx.params, right, left, 1.2, 0.8, 2, 10);
    return make("transfer_commutativity", ctx, r, 1e-9,
                {{"x", 1.2}, {"y", 0.8}, {"sites", 2}, {"cap", 10}, {"interior_bound", 6}, {"normalisation", "max|T(x)| max|T(y)|"}});
}

CheckResult limit_harmonic(const Context& ctx) {
    const double s = ctx.params.has_deformation() ? ctx.params.s() : 0.5;
    json errs = json::array();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 2; j <= 4; ++j) {
        const double q = 1 - std::pow(10.0, -j);
        const auto p = ModelParams::from_qs(q, s, 0.2, 0.1);
        const double L = std::log(1 / (q * q));
        double e = 0.0;
        for (int m = 1; m <= 10; ++m)
            for (int k = 1; k <= m; ++k)
                e = std::max({e, std::abs(L * beta_plus(p, m, k) - harmonic_beta(s, m, k)),
                              std::abs(L * beta_minus(p, m, k) - harmonic_beta(s, m, k))});
        errs.push_back(e);
        monotone = monotone && e < prev;
        prev = e;
    }
    auto r = make("limit_harmonic_bulk", ctx, prev, 1e-2, {{"errors", errs}, {"monotone", monotone}});
    r.pass = r.pass && monotone;
    return r;
}

CheckResult limit_tasep(const Context& ctx) {
    const double g = ctx.params.gamma();
    json maxes = json::array();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 2; j <= 8; ++j) {
        const double mu = std::pow(10.0, -j);
        double mb = 0.0;
        for (int m = 1; m <= 10; ++m)
            for (int k = 1; k <= m; ++k) mb = std::max(mb, beta_plus(g, mu, m, k));
        maxes.push_back(mb);
        monotone = monotone && mb < prev;
        prev = mb;
    }
    auto r = make("limit_tasep", ctx, prev, 1e-6, {{"max_beta_plus", maxes}, {"monotone", monotone}});
    r.pass = r.pass && monotone;
    return r;
}

CheckResult limit_boundary(const Context& ctx) {
    const double s = ctx.params.has_deformation() ? ctx.params.s() : 0.5;
    const double rl = ctx.params.rho_left(), rr = ctx.params.rho_right();
    const int cap = 10;
    const HarmonicRates hr(s, rl, rr);
    const auto hl = boundary_operator(hr, Side::Left, cap, 1e-16);
    const auto hrr = boundary_operator(hr, Side::Right, cap, 1e-16);
    json errs = json::array();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 2; j <= 4; ++j) {
        const double q = 1 - std::pow(10.0, -j);
        const auto p = ModelParams::from_qs(q, s, rl, rr);
        const double L = std::log(1 / (q * q));
        const double e = std::max(max_abs_difference(L * boundary_left(p, cap, 1e-16), hl),
                                  max_abs_difference(L * boundary_right(p, cap, 1e-16), hrr));
        errs.push_back(e);
        monotone = monotone && e < prev;
        prev = e;
    }
    auto r = make("limit_harmonic_boundary", ctx, prev, 1e-2, {{"errors", errs}, {"monotone", monotone}});
    r.pass = r.pass && monotone;
    return r;
}

CheckResult limit_tasep_boundary(const Context& ctx) {
    // rho_R -> rho_R mu: B_L keeps only insertion, B_R only extraction
    const double g = ctx.params.gamma();
    const int cap = 10;
    const auto limit = ModelParams::from_rates(g, 1e-300, ctx.params.rho_left(), ctx.params.rho_right(), true);
    const auto bl0 = boundary_left(limit, cap, 1e-16);
    const auto br0 = boundary_right(limit, cap, 1e-16);
    json errs = json::array();
    bool monotone = true;
    double prev = std::numeric_limits<double>::infinity();
    for (int j = 2; j <= 8; j += 2) {
        const auto p = ModelParams::from_rates(g, std::pow(10.0, -j), ctx.params.rho_left(), ctx.params.rho_right(), true);
        const double e = std::max(max_abs_difference(boundary_left(p, cap, 1e-16), bl0),
                                  max_abs_difference(boundary_right(p, cap, 1e-16), br0));
        errs.push_back(e);
        monotone = monotone && e < prev;
        prev = e;
    }
    auto r = make("limit_tasep_boundary", ctx, prev, 1e-6, {{"errors", errs}, {"monotone", monotone}});
    r.pass = r.pass && monotone;
    return r;
}

CheckResult steady_residual(const Context& ctx) {
    const QHahnRates rates(ctx.params);
    const auto ss = steady_state(stochastic_generator(rates, 2, 6, ctx.tol));
    const auto o = observables(ss.pi, TruncatedSpace(2, 6), rates, ctx.tol);
    return make("steady_state_residual", ctx, ss.residual, 1e-10,
                {{"method", ss.method}, {"density", o.density}, {"current_left", o.current}, {"current_right", o.current_right}});
}

CheckResult dynamics(const Context& ctx) {
    const QHahnRates rates(ctx.params);
    const TruncatedSpace sp(2, 6);
    const auto ss = steady_state(stochastic_generator(rates, 2, 6, ctx.tol));
    GillespieOptions opt;
    opt.cap = 6;
    opt.t_max = std::numeric_limits<double>::infinity();
    opt.max_events = ctx.events;
    opt.tol = ctx.tol;
    const auto tr = gillespie(rates, 2, ctx.seed, opt);
    const auto f = occupation_frequencies(tr, sp);
    return make("dynamics_tv", ctx, total_variation(f.frequency, ss.pi.weights), 0.05,
                {{"events", tr.size()}, {"seed", ctx.seed}, {"rng", tr.algorithm}});
}

// ---- diagnostics -----------------------------------------------------------

CheckResult cap_convergence(const Context& ctx) {
    const QHahnRates rates(ctx.params);
    const auto d8 = density_profile(steady_state(stochastic_generator(rates, 2, 8, ctx.tol)).pi, TruncatedSpace(2, 8));
    const auto d12 = density_profile(steady_state(stochastic_generator(rates, 2, 12, ctx.tol)).pi, TruncatedSpace(2, 12));
    double delta = 0.0;
    for (std::size_t i = 0; i < d8.size(); ++i) delta = std::max(delta, std::abs(d8[i] - d12[i]));
    auto r = make("cap_convergence", ctx, delta, 1e-6, {{"density_cap8", d8}, {"density_cap12", d12}});
    r.acceptance = false;
    return r;
}

CheckResult hamiltonian_transfer(const Context& ctx) {
    // right K at the point identified with B_R, left K its R->L image
    const double q = ctx.params.q();
    const auto right = yb::identity_point_params(ctx.params, ctx.params.rho_right() / (q * q));
    const auto left = yb::identity_point_params(ctx.params, ctx.params.rho_left());
    const int cap = 8;
    const auto t = yb::transfer_matrix_box(ctx.params, right, left, 1.2, 2, cap);
    const auto h = full_hamiltonian(ctx.params, 2, cap, BuildOptions{ctx.tol, Truncation::Raw, 2'000'000});
    const auto idx = yb::interior_states(TruncatedSpace(2, cap), cap - 4);
    const double scale = yb::restricted_max_abs(t, idx) * yb::restricted_max_abs(h, idx);
    const double r = scale == 0.0 ? 0.0 : yb::restricted_max_abs(commutator(h, t), idx) / scale;
    auto out = make("hamiltonian_transfer_commutator", ctx, r, 1e-9, {{"x", 1.2}, {"cap", cap}});
    out.acceptance = false;
    return out;
}

CheckResult raw_tail(const Context& ctx) {
    // interior raw columns sum to the clipped insertion tail
    const int N = 2, cap = 8;
    BuildOptions opt;
    opt.tol = 1e-6;
    const auto h = full_hamiltonian(ctx.params, N, cap, opt);
    const TruncatedSpace sp(N, cap);
    const QHahnRates rates(ctx.params);
    const auto sums = h.column_sums();
    double worst_excess = 0.0;
    for (std::size_t j = 0; j < sp.dimension(); ++j) {
        const int a = sp.occupation(j, 0), b = sp.occupation(j, 1);
        if (a + b > cap) continue;
        const double bound = rates.insertion_tail(Side::Left, insertion_depth(rates, Side::Left, a, cap, opt.tol)) +
                             rates.insertion_tail(Side::Right, insertion_depth(rates, Side::Right, b, cap, opt.tol));
        worst_excess = std::max(worst_excess, std::abs(sums[j]) - bound);
    }
    auto r = make("raw_truncation_tail", ctx, std::max(0.0, worst_excess), 1e-13, {{"series_tol", opt.tol}});
    r.acceptance = false;
    return r;
}

std::vector<Check> build_registry() {
    std::vector<Check> c;
    auto add = [&](std::string id, bool acc, std::string desc, std::function<CheckResult(const Context&)> f) {
        c.push_back({std::move(id), acc, std::move(desc), std::move(f)});
    };
    add("sum_rule", true, "alpha = sum of beta, m <= 20", sum_rule);
    add("stochasticity", true, "stochasticized H columns sum to zero, N=3", stochasticity);
    add("r_permutation_point", true, "R(1) = P, indices <= 8", r_permutation);
    add("r_form_equivalence", true, "hypergeometric and factorised R agree", r_forms);
    add("density_from_r", true, "-1/2 R'(1) P equals the bulk density", density_analytic);
    add("density_finite_difference", true, "central difference of R at x=1", density_fd);
    add("lax_unitarity", true, "L_{a,box}(x) L_{box,a}(1/x) = I", lax_unitarity);
    add("crossing", true, "both crossing relations and D invariance", crossing);
    add("r_symmetry", true, "R(x) P R(1/x) P = I", r_symmetry);
    add("bybe_eq1_rank1", true, "first component equation, rank-1 K at y=1/q",
        [](const Context& x) { return bybe_rank1(Bybe::Eq1, "bybe_eq1_rank1", 0.0, true, x); });
    add("bybe_eq2_rank1", true, "second component equation, rank-1 K at y=1/q",
        [](const Context& x) { return bybe_rank1(Bybe::Eq2, "bybe_eq2_rank1", 0.0, true, x); });
    add("bybe_identity_point", true, "K = I/4 at y = 1", bybe_identity_point);
    add("bybe_eq1_derivative", true, "first differentiated equation with K'(1)",
        [](const Context& x) { return bybe_derivative(Bybe::Eq1, "bybe_eq1_derivative", x); });
    add("bybe_eq2_derivative", true, "second differentiated equation with K'(1)",
        [](const Context& x) { return bybe_derivative(Bybe::Eq2, "bybe_eq2_derivative", x); });
    add("trace_closed_form", true, "tr Kbar(1) direct vs product formula", trace_closed_form);
    add("trace_identity_left", true, "B_L from the auxiliary trace", trace_identity_left);
    add("right_boundary_k_prime", true, "B_R from -K'(1)/(4K(1))", right_boundary);
    add("transfer_commutativity", true, "[T(1.2), T(0.8)] on the interior block", transfer_commutativity);
    add("limit_harmonic_bulk", true, "q -> 1 bulk rates", limit_harmonic);
    add("limit_tasep", true, "mu -> 0 kills beta_plus", limit_tasep);
    add("limit_harmonic_boundary", true, "q -> 1 boundary operators", limit_boundary);
    add("limit_tasep_boundary", true, "mu -> 0 boundary operators with rho_R shifted by mu", limit_tasep_boundary);
    add("steady_state_residual", true, "||pi M|| for N=2, cap=6", steady_residual);
    add("dynamics_tv", true, "simulation vs exact steady state", dynamics);
    add("bybe_eq1_rank1_alt_nu", false, "rank-1 K with the nu of the y=1 identification",
        [](const Context& x) { return bybe_rank1(Bybe::Eq1, "bybe_eq1_rank1_alt_nu", -std::pow(x.params.q(), -2 * x.params.s()), false, x); });
    add("cap_convergence", false, "density profile, cap 8 vs 12", cap_convergence);
    add("hamiltonian_transfer_commutator", false, "[H, T(1.2)] with the identified boundary parameters", hamiltonian_transfer);
    add("raw_truncation_tail", false, "raw column sums bounded by the insertion tail", raw_tail);
    return c;
}

}  // namespace

const std::vector<Check>& registry() {
    static const std::vector<Check> r = build_registry();
    return r;
}

std::vector<CheckResult> run(const Context& ctx, const std::vector<std::string>& only, unsigned jobs) {
    std::vector<const Check*> selected;
    for (const auto& c : registry()) {
        if (only.empty() || std::find(only.begin(), only.end(), c.id) != only.end()) selected.push_back(&c);
    }
    for (const auto& id : only) {
        if (std::none_of(registry().begin(), registry().end(), [&](const Check& c) { return c.id == id; })) {
            throw DomainError("unknown check id '" + id + "'");
        }
    }
    std::vector<CheckResult> out(selected.size());
    std::vector<std::exception_ptr> errors(selected.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < selected.size();) {
            try {
                out[i] = selected[i]->run(ctx);
                out[i].acceptance = selected[i]->acceptance;
            } catch (...) {
                errors[i] = std::current_exception();
            }
        }
    };
    const unsigned n = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(selected.size())));
    std::vector<std::thread> pool;
    for (unsigned t = 1; t < n; ++t) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (std::size_t i = 0; i < errors.size(); ++i) {
        if (!errors[i]) continue;
        try {
            std::rethrow_exception(errors[i]);
        } catch (const std::exception& e) {
            throw CheckFailure(selected[i]->id, e.what());
        }
    }
    return out;
}

}  // namespace qhahn::verify
