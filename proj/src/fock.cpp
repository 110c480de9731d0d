#include "qhahn/fock.hpp"

#include "qhahn/errors.hpp"

#include <algorithm>
#include <cstdio>
#include <istream>
#include <limits>
#include <locale>
#include <ostream>
#include <sstream>

namespace qhahn {

namespace {

using Entry = SparseOperator::Entry;

void require_cap(int cap) {
    if (cap < 1) throw DomainError("cap must be >= 1, got " + std::to_string(cap));
}

}  // namespace

// ---- TruncatedSpace ------------------------------------------------------

TruncatedSpace::TruncatedSpace(int n_sites, int cap) : n_sites_(n_sites), cap_(cap) {
    if (n_sites < 1) throw DomainError("sites must be >= 1, got " + std::to_string(n_sites));
    require_cap(cap);
    stride_.assign(static_cast<std::size_t>(n_sites), 1);
    std::size_t d = 1;
    const std::size_t base = local_dim();
    for (int i = n_sites - 1; i >= 0; --i) {
        stride_[static_cast<std::size_t>(i)] = d;
        if (d > std::numeric_limits<std::size_t>::max() / base) {
            throw ResourceError("state space dimension overflows");
        }
        d *= base;
    }
    dim_ = d;
}

std::size_t TruncatedSpace::encode(const OccupationState& s) const {
    if (s.occ.size() != static_cast<std::size_t>(n_sites_)) throw DomainError("encode: wrong number of sites");
    std::size_t idx = 0;
    for (std::size_t i = 0; i < s.occ.size(); ++i) {
        if (s.occ[i] < 0 || s.occ[i] > cap_) throw DomainError("encode: occupation outside [0, cap]");
        idx += static_cast<std::size_t>(s.occ[i]) * stride_[i];
    }
    return idx;
}

OccupationState TruncatedSpace::decode(std::size_t index) const {
    if (index >= dim_) throw DomainError("decode: index out of range");
    OccupationState s;
    s.occ.resize(static_cast<std::size_t>(n_sites_));
    for (std::size_t i = 0; i < s.occ.size(); ++i) {
        s.occ[i] = static_cast<int>(index / stride_[i]);
        index %= stride_[i];
    }
    return s;
}

int TruncatedSpace::occupation(std::size_t index, int site) const {
    if (site < 0 || site >= n_sites_) throw DomainError("occupation: site out of range");
    return static_cast<int>((index / stride_[static_cast<std::size_t>(site)]) % local_dim());
}

std::string to_string(Truncation t) { return t == Truncation::Raw ? "raw" : "stochasticized"; }

Truncation truncation_from_string(const std::string& s) {
    if (s == "raw") return Truncation::Raw;
    if (s == "stochasticized" || s == "stochastic") return Truncation::Stochasticized;
    throw DomainError("mode must be 'raw' or 'stochasticized', got '" + s + "'");
}

std::size_t local_dimension(int cap) {
    require_cap(cap);
    return static_cast<std::size_t>(cap) + 1;
}

// ---- local operators -----------------------------------------------------

SparseOperator bulk_density(const RateModel& rates, int cap, Truncation mode) {
    const std::size_t d = local_dimension(cap);
    std::vector<Entry> e;
    for (int m = 0; m <= cap; ++m) {
        for (int mp = 0; mp <= cap; ++mp) {
            const std::size_t col = static_cast<std::size_t>(m) * d + static_cast<std::size_t>(mp);
            double kept = 0.0;
            // k particles hop from the first site to the second
            for (int k = 1; k <= m; ++k) {
                if (mp + k > cap) break;
                const double r = rates.beta_minus(m, k);
                e.push_back({static_cast<std::size_t>(m - k) * d + static_cast<std::size_t>(mp + k), col, -r});
                kept += r;
            }
            // and from the second back to the first
            for (int k = 1; k <= mp; ++k) {
                if (m + k > cap) break;
                const double r = rates.beta_plus(mp, k);
                e.push_back({static_cast<std::size_t>(m + k) * d + static_cast<std::size_t>(mp - k), col, -r});
                kept += r;
            }
            const double diag = mode == Truncation::Raw ? rates.alpha_minus(m) + rates.alpha_plus(mp) : kept;
            e.push_back({col, col, diag});
        }
    }
    return SparseOperator::from_triplets(d * d, d * d, std::move(e));
}

SparseOperator bulk_density(const ModelParams& p, int cap, Truncation mode) {
    return bulk_density(QHahnRates(p), cap, mode);
}

int insertion_depth(const RateModel& rates, Side side, int m, int cap, double tol) {
    if (rates.rho(side) == 0.0) return 0;
    const int K = rates.insertion_total(side, tol).terms_used;
    return std::min(cap - m, K);
}

SparseOperator boundary_operator(const RateModel& rates, Side side, int cap, double tol, Truncation mode) {
    const std::size_t d = local_dimension(cap);
    const SeriesValue series = rates.insertion_total(side, tol);
    std::vector<Entry> e;
    for (int m = 0; m <= cap; ++m) {
        const auto col = static_cast<std::size_t>(m);
        double kept = 0.0;
        for (int k = 1; k <= m; ++k) {
            const double r = side == Side::Left ? rates.beta_plus(m, k) : rates.beta_minus(m, k);
            e.push_back({col - static_cast<std::size_t>(k), col, -r});
            kept += r;
        }
        const int depth = rates.rho(side) == 0.0 ? 0 : std::min(cap - m, series.terms_used);
        for (int k = 1; k <= depth; ++k) {
            const double r = rates.insertion(side, k);
            e.push_back({col + static_cast<std::size_t>(k), col, -r});
            kept += r;
        }
        double diag = kept;
        if (mode == Truncation::Raw) {
            diag = (side == Side::Left ? rates.alpha_plus(m) : rates.alpha_minus(m)) + series.value;
        }
        e.push_back({col, col, diag});
    }
    return SparseOperator::from_triplets(d, d, std::move(e));
}

SparseOperator boundary_left(const ModelParams& p, int cap, double tol, Truncation mode) {
    return boundary_operator(QHahnRates(p), Side::Left, cap, tol, mode);
}

SparseOperator boundary_right(const ModelParams& p, int cap, double tol, Truncation mode) {
    return boundary_operator(QHahnRates(p), Side::Right, cap, tol, mode);
}

// ---- embedding and assembly ----------------------------------------------

SparseOperator embed(const SparseOperator& op, const std::vector<int>& sites, const TruncatedSpace& space) {
    const int N = space.n_sites();
    const std::size_t d = space.local_dim();
    std::vector<char> used(static_cast<std::size_t>(N), 0);
    std::size_t local = 1;
    for (int s : sites) {
        if (s < 0 || s >= N) throw DomainError("embed: site index " + std::to_string(s) + " out of range");
        if (used[static_cast<std::size_t>(s)]) throw DomainError("embed: repeated site index");
        used[static_cast<std::size_t>(s)] = 1;
        local *= d;
    }
    if (op.rows() != local || op.cols() != local) throw DomainError("embed: operator dimension does not match sites");

    // global stride of every site, and of every local digit of `op`
    std::vector<std::size_t> stride(static_cast<std::size_t>(N));
    for (int i = N - 1, acc = 0; i >= 0; --i, ++acc) {
        std::size_t st = 1;
        for (int j = 0; j < acc; ++j) st *= d;
        stride[static_cast<std::size_t>(i)] = st;
    }
    auto spread = [&](std::size_t local_index) {
        std::size_t g = 0;
        for (std::size_t t = sites.size(); t-- > 0;) {
            g += (local_index % d) * stride[static_cast<std::size_t>(sites[t])];
            local_index /= d;
        }
        return g;
    };

    std::vector<int> others;
    for (int i = 0; i < N; ++i) {
        if (!used[static_cast<std::size_t>(i)]) others.push_back(i);
    }
    std::size_t n_other = 1;
    for (std::size_t i = 0; i < others.size(); ++i) n_other *= d;

    std::vector<std::size_t> rows_g, cols_g;
    rows_g.reserve(op.nnz());
    cols_g.reserve(op.nnz());
    for (const auto& x : op.entries()) {
        rows_g.push_back(spread(x.row));
        cols_g.push_back(spread(x.col));
    }

    std::vector<Entry> e;
    e.reserve(op.nnz() * n_other);
    for (std::size_t o = 0; o < n_other; ++o) {
        std::size_t base = 0;
        std::size_t rem = o;
        for (std::size_t t = others.size(); t-- > 0;) {
            base += (rem % d) * stride[static_cast<std::size_t>(others[t])];
            rem /= d;
        }
        std::size_t i = 0;
        for (const auto& x : op.entries()) {
            e.push_back({base + rows_g[i], base + cols_g[i], x.value});
            ++i;
        }
    }
    return SparseOperator::from_triplets(space.dimension(), space.dimension(), std::move(e));
}

SparseOperator full_hamiltonian(const RateModel& rates, int n_sites, int cap, const BuildOptions& opt) {
    const TruncatedSpace space(n_sites, cap);
    if (space.dimension() > opt.dimension_limit) {
        std::ostringstream os;
        os << "state space dimension " << space.dimension() << " exceeds limit " << opt.dimension_limit;
        throw ResourceError(os.str());
    }
    SparseOperator h = embed(boundary_operator(rates, Side::Left, cap, opt.tol, opt.mode), {0}, space);
    h = h + embed(boundary_operator(rates, Side::Right, cap, opt.tol, opt.mode), {n_sites - 1}, space);
    if (n_sites > 1) {
        const SparseOperator bulk = bulk_density(rates, cap, opt.mode);
        for (int i = 0; i + 1 < n_sites; ++i) h = h + embed(bulk, {i, i + 1}, space);
    }
    return h;
}

SparseOperator full_hamiltonian(const ModelParams& p, int n_sites, int cap, const BuildOptions& opt) {
    return full_hamiltonian(QHahnRates(p), n_sites, cap, opt);
}

SparseOperator markov_generator(const SparseOperator& h) {
    if (!h.square()) throw DomainError("markov_generator: operator must be square");
    return scale(transpose(h), -1.0);
}

// ---- dump ----------------------------------------------------------------

void write_operator_dump(std::ostream& os, const SparseOperator& op,
                         const std::vector<std::pair<std::string, std::string>>& header) {
    for (const auto& [k, v] : header) os << "# " << k << ": " << v << '\n';
    os << "# rows: " << op.rows() << '\n' << "# cols: " << op.cols() << '\n';
    char buf[64];
    for (const auto& e : op.entries()) {
        std::snprintf(buf, sizeof buf, "%.17g", e.value);
        os << e.row << ' ' << e.col << ' ' << buf << '\n';
    }
}

OperatorDump read_operator_dump(std::istream& is) {
    OperatorDump out;
    std::vector<Entry> e;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line[0] == '#') {
            const auto colon = line.find(':');
            if (colon == std::string::npos) continue;
            auto trim = [](std::string s) {
                const auto b = s.find_first_not_of(' ');
                const auto f = s.find_last_not_of(' ');
                return b == std::string::npos ? std::string() : s.substr(b, f - b + 1);
            };
            out.header[trim(line.substr(1, colon - 1))] = trim(line.substr(colon + 1));
            continue;
        }
        std::istringstream ls(line);
        ls.imbue(std::locale::classic());
        Entry x{};
        if (!(ls >> x.row >> x.col >> x.value)) {
            throw DomainError("operator dump: malformed line " + std::to_string(lineno));
        }
        e.push_back(x);
    }
    const auto r = out.header.find("rows");
    const auto c = out.header.find("cols");
    if (r == out.header.end() || c == out.header.end()) throw DomainError("operator dump: missing rows/cols header");
    out.op = SparseOperator::from_triplets(std::stoull(r->second), std::stoull(c->second), std::move(e));
    return out;
}

}  // namespace qhahn
