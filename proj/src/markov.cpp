#include "qhahn/markov.hpp"

#include "qhahn/errors.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseLU>

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

namespace qhahn {

// ---- steady state --------------------------------------------------------

void require_generator(const SparseOperator& m, double rel_tol) {
    if (!m.square()) throw DomainError("generator must be square");
    const double scale = std::max(1.0, m.max_abs());
    for (const auto& e : m.entries()) {
        if (e.row != e.col && e.value < 0.0) {
            std::ostringstream os;
            os << "not a generator: negative off-diagonal entry " << e.value << " at (" << e.row << "," << e.col << ")";
            throw DomainError(os.str());
        }
    }
    const auto rs = m.row_sums();
    for (std::size_t i = 0; i < rs.size(); ++i) {
        if (std::abs(rs[i]) > rel_tol * scale) {
            std::ostringstream os;
            os << "not a generator: row " << i << " sums to " << rs[i];
            throw DomainError(os.str());
        }
    }
}

namespace {

double balance_residual(const SparseOperator& m, const std::vector<double>& pi) {
    // (pi M)_j = sum_i pi_i M_ij
    std::vector<double> r(m.cols(), 0.0);
    for (const auto& e : m.entries()) r[e.col] += pi[e.row] * e.value;
    double worst = 0.0;
    for (double v : r) worst = std::max(worst, std::abs(v));
    return worst;
}

void clean_and_normalise(std::vector<double>& pi) {
    double total = 0.0;
    for (double& v : pi) {
        if (v < 0.0) {
            if (v < -1e-10) throw NumericError("steady state has a significantly negative weight");
            v = 0.0;
        }
        total += v;
    }
    if (!(total > 0.0)) throw NumericError("steady state has zero total weight");
    for (double& v : pi) v /= total;
}

std::vector<double> solve_direct(const SparseOperator& m) {
    const auto n = static_cast<Eigen::Index>(m.rows());
    // M^t pi = 0 with the last balance equation replaced by sum pi = 1.
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.nnz() + m.rows());
    for (const auto& e : m.entries()) {
        if (static_cast<Eigen::Index>(e.col) == n - 1) continue;
        trip.emplace_back(static_cast<Eigen::Index>(e.col), static_cast<Eigen::Index>(e.row), e.value);
    }
    for (Eigen::Index j = 0; j < n; ++j) trip.emplace_back(n - 1, j, 1.0);
    Eigen::SparseMatrix<double> a(n, n);
    a.setFromTriplets(trip.begin(), trip.end());
    a.makeCompressed();

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(a);
    if (lu.info() != Eigen::Success) throw NumericError("steady state: sparse LU factorisation failed");
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b(n - 1) = 1.0;
    Eigen::VectorXd x = lu.solve(b);
    if (lu.info() != Eigen::Success) throw NumericError("steady state: sparse LU solve failed");
    // one step of iterative refinement
    const Eigen::VectorXd r = b - a * x;
    x += lu.solve(r);
    return std::vector<double>(x.data(), x.data() + n);
}

std::vector<double> solve_power(const SparseOperator& m, const SteadyStateOptions& opt) {
    double max_exit = 0.0;
    for (const auto& e : m.entries()) {
        if (e.row == e.col) max_exit = std::max(max_exit, -e.value);
    }
    const std::size_t n = m.rows();
    std::vector<double> pi(n, 1.0 / static_cast<double>(n));
    if (max_exit == 0.0) return pi;
    // uniformised chain P = I + M / Lambda
    const double lambda = 1.05 * max_exit;
    std::vector<double> next(n);
    for (std::size_t it = 0; it < opt.max_power_iterations; ++it) {
        next = pi;
        for (const auto& e : m.entries()) next[e.col] += pi[e.row] * e.value / lambda;
        pi.swap(next);
        if (it % 100 == 99) {
            clean_and_normalise(pi);
            if (balance_residual(m, pi) <= opt.tol) return pi;
        }
    }
    throw NumericError("steady state: power iteration did not converge");
}

}  // namespace

SteadyState steady_state(const SparseOperator& m, const SteadyStateOptions& opt) {
    require_generator(m);
    SteadyState out;
    if (m.rows() <= opt.direct_limit) {
        out.pi.weights = solve_direct(m);
        out.method = "sparse-lu";
    } else {
        spdlog::info("steady state: dimension {} above direct limit, using power iteration", m.rows());
        out.pi.weights = solve_power(m, opt);
        out.method = "power-iteration";
    }
    clean_and_normalise(out.pi.weights);
    out.residual = balance_residual(m, out.pi.weights);
    if (out.residual > opt.tol) {
        throw ToleranceError("steady state residual above tolerance", out.residual);
    }
    return out;
}

// ---- observables -----------------------------------------------------------

std::vector<double> density_profile(const ProbabilityVector& pi, const TruncatedSpace& space) {
    if (pi.weights.size() != space.dimension()) throw DomainError("density_profile: dimension mismatch");
    std::vector<double> rho(static_cast<std::size_t>(space.n_sites()), 0.0);
    for (std::size_t idx = 0; idx < pi.weights.size(); ++idx) {
        const double w = pi.weights[idx];
        if (w == 0.0) continue;
        for (int i = 0; i < space.n_sites(); ++i) rho[static_cast<std::size_t>(i)] += w * space.occupation(idx, i);
    }
    return rho;
}

Observables observables(const ProbabilityVector& pi, const TruncatedSpace& space, const RateModel& rates,
                        double tol) {
    Observables out;
    out.density = density_profile(pi, space);
    for (double d : out.density) out.total_mass += d;

    const int cap = space.cap();
    const int last = space.n_sites() - 1;
    for (std::size_t idx = 0; idx < pi.weights.size(); ++idx) {
        const double w = pi.weights[idx];
        if (w == 0.0) continue;
        const int m1 = space.occupation(idx, 0);
        const int mn = space.occupation(idx, last);
        double left = 0.0;
        for (int k = 1; k <= insertion_depth(rates, Side::Left, m1, cap, tol); ++k) left += k * rates.insertion(Side::Left, k);
        for (int k = 1; k <= m1; ++k) left -= k * rates.beta_plus(m1, k);
        double right = 0.0;
        for (int k = 1; k <= mn; ++k) right += k * rates.beta_minus(mn, k);
        for (int k = 1; k <= insertion_depth(rates, Side::Right, mn, cap, tol); ++k) right -= k * rates.insertion(Side::Right, k);
        out.current += w * left;
        out.current_right += w * right;
    }
    return out;
}

// ---- simulation ------------------------------------------------------------

double uniform01(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

namespace {

template <class Rate, class Tail>
int inverse_cdf_depth(Rate rate, Tail tail, double total, double u) {
    const double target = u * total;
    double cum = 0.0;
    for (int k = 1; k < 100000000; ++k) {
        cum += rate(k);
        if (cum > target) return k;
        // the remaining mass cannot reach the target: rounding in `total`
        if (tail(k) <= target - cum) return k;
    }
    throw NumericError("insertion depth sampler did not terminate");
}

// Lazily extended tables of beta_(plus|minus)(m, k).
class RateCache {
public:
    explicit RateCache(const RateModel& r) : r_(r) {}

    double plus(int m, int k) { return row(plus_, m, true)[static_cast<std::size_t>(k)]; }
    double minus(int m, int k) { return row(minus_, m, false)[static_cast<std::size_t>(k)]; }

private:
    const std::vector<double>& row(std::vector<std::vector<double>>& t, int m, bool plus) {
        while (static_cast<int>(t.size()) <= m) {
            const int mm = static_cast<int>(t.size());
            std::vector<double> v(static_cast<std::size_t>(mm) + 1, 0.0);
            for (int k = 1; k <= mm; ++k) v[static_cast<std::size_t>(k)] = plus ? r_.beta_plus(mm, k) : r_.beta_minus(mm, k);
            t.push_back(std::move(v));
        }
        return t[static_cast<std::size_t>(m)];
    }

    const RateModel& r_;
    std::vector<std::vector<double>> plus_, minus_;
};

struct Channel {
    double rate;
    int from;  // site index, or -1 for a reservoir
    int to;
    int k;     // 0: insertion with depth still to be drawn
    Side side;
};

}  // namespace

int sample_insertion_depth(double rho, double gamma, double u) {
    if (!(rho > 0.0 && rho < 1.0)) throw DomainError("sample_insertion_depth: rho must lie in (0,1)");
    if (!(u >= 0.0 && u < 1.0)) throw DomainError("sample_insertion_depth: u must lie in [0,1)");
    const double total = insertion_series(rho, gamma, 1e-17).value;
    return inverse_cdf_depth([&](int k) { return insertion_rate(rho, gamma, k); },
                             [&](int K) { return insertion_tail_bound(rho, gamma, K); }, total, u);
}

std::vector<int> Trajectory::state(std::size_t event) const {
    const auto n = static_cast<std::size_t>(n_sites);
    return std::vector<int>(occupancy.begin() + static_cast<std::ptrdiff_t>(event * n),
                            occupancy.begin() + static_cast<std::ptrdiff_t>((event + 1) * n));
}

Trajectory gillespie(const RateModel& rates, int n_sites, std::uint64_t seed, const GillespieOptions& opt,
                     const std::string& params_description) {
    if (n_sites < 1) throw DomainError("sites must be >= 1");
    if (!(opt.t_max > 0.0)) throw DomainError("t_max must be positive");
    if (opt.cap && *opt.cap < 1) throw DomainError("cap must be >= 1");

    std::vector<int> occ = opt.initial.empty() ? std::vector<int>(static_cast<std::size_t>(n_sites), 0) : opt.initial;
    if (occ.size() != static_cast<std::size_t>(n_sites)) throw DomainError("initial state has the wrong number of sites");
    for (int v : occ) {
        if (v < 0 || (opt.cap && v > *opt.cap)) throw DomainError("initial occupation outside [0, cap]");
    }

    Trajectory traj;
    traj.n_sites = n_sites;
    traj.seed = seed;
    traj.params = params_description;
    traj.initial = occ;

    std::mt19937_64 gen(seed);
    RateCache cache(rates);
    const double tol = opt.tol;
    const SeriesValue ins_l = rates.insertion_total(Side::Left, tol);
    const SeriesValue ins_r = rates.insertion_total(Side::Right, tol);
    const int last = n_sites - 1;

    auto insertion_channel = [&](Side side, int m) -> double {
        if (rates.rho(side) == 0.0) return 0.0;
        if (!opt.cap) return side == Side::Left ? ins_l.value : ins_r.value;
        double s = 0.0;
        for (int k = 1; k <= insertion_depth(rates, side, m, *opt.cap, tol); ++k) s += rates.insertion(side, k);
        return s;
    };

    std::vector<Channel> ch;
    double t = 0.0;
    while (traj.times.size() < opt.max_events) {
        ch.clear();
        auto fits = [&](int site, int k) { return !opt.cap || occ[static_cast<std::size_t>(site)] + k <= *opt.cap; };
        const int m1 = occ.front();
        for (int k = 1; k <= m1; ++k) ch.push_back({cache.plus(m1, k), 0, -1, k, Side::Left});
        if (const double r = insertion_channel(Side::Left, m1); r > 0.0) ch.push_back({r, -1, 0, 0, Side::Left});
        for (int i = 0; i < last; ++i) {
            const int a = occ[static_cast<std::size_t>(i)];
            const int b = occ[static_cast<std::size_t>(i) + 1];
            for (int k = 1; k <= a && fits(i + 1, k); ++k) ch.push_back({cache.minus(a, k), i, i + 1, k, Side::Left});
            for (int k = 1; k <= b && fits(i, k); ++k) ch.push_back({cache.plus(b, k), i + 1, i, k, Side::Left});
        }
        const int mn = occ.back();
        for (int k = 1; k <= mn; ++k) ch.push_back({cache.minus(mn, k), last, -1, k, Side::Right});
        if (const double r = insertion_channel(Side::Right, mn); r > 0.0) ch.push_back({r, -1, last, 0, Side::Right});

        double total = 0.0;
        for (const auto& c : ch) total += c.rate;
        if (total == 0.0) {
            if (std::isfinite(opt.t_max)) t = opt.t_max;
            break;
        }
        const double dt = -std::log1p(-uniform01(gen())) / total;
        if (t + dt > opt.t_max) {
            t = opt.t_max;
            break;
        }
        t += dt;

        const double target = uniform01(gen()) * total;
        double cum = 0.0;
        std::size_t pick = ch.size() - 1;
        for (std::size_t i = 0; i < ch.size(); ++i) {
            cum += ch[i].rate;
            if (cum > target) {
                pick = i;
                break;
            }
        }
        Channel c = ch[pick];
        if (c.k == 0) {
            const double u = uniform01(gen());
            const int m = occ[static_cast<std::size_t>(c.to)];
            if (opt.cap) {
                const int depth = insertion_depth(rates, c.side, m, *opt.cap, tol);
                const double target_k = u * c.rate;
                double acc = 0.0;
                c.k = depth;
                for (int k = 1; k <= depth; ++k) {
                    acc += rates.insertion(c.side, k);
                    if (acc > target_k) {
                        c.k = k;
                        break;
                    }
                }
            } else {
                c.k = inverse_cdf_depth([&](int k) { return rates.insertion(c.side, k); },
                                        [&](int K) { return rates.insertion_tail(c.side, K); }, c.rate, u);
            }
        }
        if (c.from >= 0) occ[static_cast<std::size_t>(c.from)] -= c.k;
        if (c.to >= 0) {
            occ[static_cast<std::size_t>(c.to)] += c.k;
            if (occ[static_cast<std::size_t>(c.to)] > opt.hard_limit) {
                throw ResourceError("occupation exceeded the hard limit of " + std::to_string(opt.hard_limit));
            }
        }
        traj.times.push_back(t);
        traj.occupancy.insert(traj.occupancy.end(), occ.begin(), occ.end());
    }
    traj.t_end = t;
    return traj;
}

Trajectory gillespie(const ModelParams& p, int n_sites, std::uint64_t seed, const GillespieOptions& opt) {
    return gillespie(QHahnRates(p), n_sites, seed, opt, p.describe());
}

OccupationFrequencies occupation_frequencies(const Trajectory& traj, const TruncatedSpace& space) {
    if (traj.n_sites != space.n_sites()) throw DomainError("occupation_frequencies: site count mismatch");
    OccupationFrequencies out;
    out.frequency.assign(space.dimension(), 0.0);
    const auto n = static_cast<std::size_t>(traj.n_sites);

    auto index_of = [&](const int* occ) -> std::optional<std::size_t> {
        std::size_t idx = 0;
        for (std::size_t i = 0; i < n; ++i) {
            if (occ[i] > space.cap()) return std::nullopt;
            idx = idx * space.local_dim() + static_cast<std::size_t>(occ[i]);
        }
        return idx;
    };
    auto add = [&](const int* occ, double dt) {
        if (auto idx = index_of(occ)) {
            out.frequency[*idx] += dt;
        } else {
            out.outside += dt;
        }
    };

    double prev = 0.0;
    const int* cur = traj.initial.data();
    for (std::size_t e = 0; e < traj.size(); ++e) {
        add(cur, traj.times[e] - prev);
        prev = traj.times[e];
        cur = traj.occupancy.data() + e * n;
    }
    add(cur, traj.t_end - prev);

    const double total = traj.t_end;
    if (total > 0.0) {
        for (double& f : out.frequency) f /= total;
        out.outside /= total;
    }
    return out;
}

double total_variation(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size()) throw DomainError("total_variation: size mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += std::abs(a[i] - b[i]);
    return 0.5 * s;
}

}  // namespace qhahn
