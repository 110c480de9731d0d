#include "oracles.hpp"

#include "qhahn/errors.hpp"
#include "qhahn/fock.hpp"

#include <doctest.h>

#include <random>
#include <sstream>

using namespace qhahn;

namespace {

const ModelParams kParams = ModelParams::from_qs(0.6, 0.5, 0.2, 0.1);

SparseOperator random_sparse(std::mt19937_64& gen, std::size_t r, std::size_t c, double fill) {
    std::uniform_real_distribution<double> u(0, 1);
    std::vector<SparseOperator::Entry> e;
    for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) {
            if (u(gen) < fill) e.push_back({i, j, u(gen) - 0.5});
        }
    }
    return SparseOperator::from_triplets(r, c, e);
}

}  // namespace

TEST_CASE("index bijection") {
    for (int N = 1; N <= 4; ++N) {
        for (int cap = 1; cap <= 6; ++cap) {
            const TruncatedSpace sp(N, cap);
            std::size_t expect = 1;
            for (int i = 0; i < N; ++i) expect *= static_cast<std::size_t>(cap + 1);
            REQUIRE(sp.dimension() == expect);
            for (std::size_t i = 0; i < sp.dimension(); ++i) {
                const auto s = sp.decode(i);
                REQUIRE(sp.encode(s) == i);
                for (int site = 0; site < N; ++site) REQUIRE(sp.occupation(i, site) == s.occ[static_cast<std::size_t>(site)]);
            }
        }
    }
    const TruncatedSpace sp(3, 4);
    CHECK(sp.encode({{1, 0, 0}}) == 25);  // first site most significant
    CHECK(sp.encode({{0, 0, 1}}) == 1);
    CHECK_THROWS_AS(sp.encode({{5, 0, 0}}), DomainError);
    CHECK_THROWS_AS(TruncatedSpace(0, 3), DomainError);
    CHECK_THROWS_AS(TruncatedSpace(2, 0), DomainError);
}

TEST_CASE("sparse operator algebra") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const auto a = random_sparse(gen, 30, 40, 0.2);
        const auto b = random_sparse(gen, 40, 25, 0.2);
        const Eigen::MatrixXd ab = a.to_dense() * b.to_dense();
        CHECK((compose(a, b).to_dense() - ab).cwiseAbs().maxCoeff() < 1e-14);
        CHECK((transpose(compose(a, b)).to_dense() - compose(transpose(b), transpose(a)).to_dense()).cwiseAbs().maxCoeff() < 1e-14);
        const auto c = random_sparse(gen, 30, 30, 0.3);
        CHECK(commutator(c, c).nnz() == 0);
        CHECK(((a + a).to_dense() - 2 * a.to_dense()).cwiseAbs().maxCoeff() == 0.0);
        CHECK((a - a).nnz() == 0);
    }
    const auto k = kron(SparseOperator::identity(2), random_sparse(gen, 3, 3, 0.5));
    CHECK(k.rows() == 6);
    CHECK_THROWS_AS(compose(SparseOperator(2, 3), SparseOperator(2, 3)), DomainError);
    CHECK_THROWS_AS(add(SparseOperator(2, 3), SparseOperator(3, 2)), DomainError);
    // duplicates are summed and cancelling entries are not stored
    const auto z = SparseOperator::from_triplets(2, 2, {{0, 0, 1.0}, {0, 0, -1.0}, {1, 0, 2.0}});
    CHECK(z.nnz() == 1);
    CHECK(z.at(1, 0) == 2.0);
}

TEST_CASE("bulk density entries") {
    const int cap = 8;
    const auto h = bulk_density(kParams, cap);
    const std::size_t d = cap + 1;
    const double g = kParams.gamma(), mu = kParams.mu();
    CHECK(h.at(0, 0) == 0.0);
    const std::size_t c10 = 1 * d + 0, c01 = 0 * d + 1;
    CHECK(h.at(c10, c10) == doctest::Approx(1 / (1 - mu)));
    CHECK(h.at(c01, c10) == doctest::Approx(-1 / (1 - mu)));
    std::size_t offdiag = 0;
    for (const auto& e : h.entries()) {
        const int m = static_cast<int>(e.row / d), n = static_cast<int>(e.row % d);
        const int mp = static_cast<int>(e.col / d), np = static_cast<int>(e.col % d);
        CHECK(m + n == mp + np);
        CHECK(e.value == doctest::Approx(oracle::bulk(g, mu, m, n, mp, np)).epsilon(1e-12));
        if (e.row != e.col) ++offdiag;
    }
    // every infinite-space transition that stays inside the cap is present
    std::size_t expected = 0;
    for (int mp = 0; mp <= cap; ++mp)
        for (int np = 0; np <= cap; ++np)
            for (int m = 0; m <= cap; ++m) {
                const int n = mp + np - m;
                if (n >= 0 && n <= cap && m != mp) ++expected;
            }
    CHECK(offdiag == expected);
}

TEST_CASE("boundary operators") {
    const int cap = 8;
    const double tol = 1e-14;
    const auto bl = boundary_left(kParams, cap, tol);
    const auto br = boundary_right(kParams, cap, tol);
    const double g = kParams.gamma(), mu = kParams.mu();
    for (int m = 0; m <= cap; ++m) {
        for (int k = 1; k <= m; ++k) {
            CHECK(bl.at(m - k, m) == doctest::Approx(-oracle::beta_plus(g, mu, m, k)).epsilon(1e-12));
            CHECK(br.at(m - k, m) == doctest::Approx(-oracle::beta_minus(g, mu, m, k)).epsilon(1e-12));
        }
        for (int k = 1; m + k <= cap; ++k) {
            CHECK(bl.at(m + k, m) == doctest::Approx(-insertion_rate(0.2, g, k)).epsilon(1e-14));
            CHECK(br.at(m + k, m) == doctest::Approx(-insertion_rate(0.1, g, k)).epsilon(1e-14));
        }
        CHECK(bl.at(m, m) == doctest::Approx(oracle::alpha_plus(g, mu, m) + oracle::brute_insertion(0.2, g, 200)).epsilon(1e-12));
    }
    CHECK(br.at(0, 0) == doctest::Approx(insertion_series(0.1, g, tol).value));
    const auto closed = kParams.with_rho(0.0, 0.0);
    const auto bl0 = boundary_left(closed, cap, tol);
    for (std::size_t r = 0; r <= static_cast<std::size_t>(cap); ++r) CHECK(bl0.at(r, 0) == 0.0);
    const auto br0 = boundary_right(closed, cap, tol);
    for (const auto& e : br0.entries()) CHECK(e.row <= e.col);  // extraction only
    CHECK_THROWS_AS(boundary_left(kParams, 0, tol), DomainError);
}

TEST_CASE("embed") {
    const TruncatedSpace sp(3, 3);
    CHECK(embed(SparseOperator::identity(4), {1}, sp) == SparseOperator::identity(sp.dimension()));
    const auto bulk = bulk_density(kParams, 3);
    const TruncatedSpace two(2, 3);
    CHECK(embed(bulk, {0, 1}, two) == bulk);
    // reversed site order is the swap conjugate
    const auto rev = embed(bulk, {1, 0}, two);
    for (const auto& e : rev.entries()) {
        const std::size_t r = (e.row % 4) * 4 + e.row / 4, c = (e.col % 4) * 4 + e.col / 4;
        CHECK(bulk.at(r, c) == e.value);
    }
    const auto bl = boundary_left(kParams, 3, 1e-14);
    const auto a = embed(bl, {0}, sp), b = embed(bl, {2}, sp);
    CHECK(commutator(a, b).nnz() == 0);
    CHECK(max_abs_difference(embed(bl, {0}, sp), kron(kron(bl, SparseOperator::identity(4)), SparseOperator::identity(4))) == 0.0);
    CHECK_THROWS_AS(embed(bl, {3}, sp), DomainError);
    CHECK_THROWS_AS(embed(bulk, {0}, sp), DomainError);
}

TEST_CASE("full hamiltonian, stochasticized") {
    BuildOptions opt;
    opt.mode = Truncation::Stochasticized;
    const auto h = full_hamiltonian(kParams, 3, 8, opt);
    REQUIRE(h.rows() == 729);
    for (double c : h.column_sums()) CHECK(std::abs(c) <= 1e-12);
    for (const auto& e : h.entries()) {
        if (e.row != e.col) CHECK(e.value <= 0.0);
    }
    const auto m = markov_generator(h);
    for (double r : m.row_sums()) CHECK(std::abs(r) <= 1e-12);
    CHECK(markov_generator(markov_generator(h)) == scale(scale(h, -1.0), -1.0));
}

TEST_CASE("full hamiltonian, raw truncation error") {
    const int N = 3, cap = 6;
    BuildOptions opt;
    opt.tol = 1e-6;  // shallow series so the clipped tail is visible
    const auto h = full_hamiltonian(kParams, N, cap, opt);
    const TruncatedSpace sp(N, cap);
    const QHahnRates rates(kParams);
    const auto sums = h.column_sums();
    int interior = 0;
    for (std::size_t j = 0; j < sp.dimension(); ++j) {
        const auto s = sp.decode(j);
        bool clipped = false;
        for (int i = 0; i + 1 < N; ++i) clipped |= s.occ[i] + s.occ[i + 1] > cap;
        if (clipped) continue;
        ++interior;
        const int kl = insertion_depth(rates, Side::Left, s.occ.front(), cap, opt.tol);
        const int kr = insertion_depth(rates, Side::Right, s.occ.back(), cap, opt.tol);
        const double bound = rates.insertion_tail(Side::Left, kl) + rates.insertion_tail(Side::Right, kr);
        CHECK(sums[j] >= -1e-13);
        CHECK(sums[j] <= bound + 1e-13);
    }
    CHECK(interior > 50);
    const auto closed = full_hamiltonian(kParams.with_rho(0, 0), 2, 2);
    for (std::size_t r = 0; r < 9; ++r) CHECK(closed.at(r, 0) == 0.0);
}

TEST_CASE("full hamiltonian guards and N = 1") {
    BuildOptions opt;
    opt.dimension_limit = 100;
    CHECK_THROWS_AS(full_hamiltonian(kParams, 3, 8, opt), ResourceError);
    const auto h1 = full_hamiltonian(kParams, 1, 5);
    CHECK(h1 == boundary_left(kParams, 5, 1e-14) + boundary_right(kParams, 5, 1e-14));
    // harmonic rates go through the same builder
    const HarmonicRates hr(0.5, 0.2, 0.2);
    BuildOptions so;
    so.mode = Truncation::Stochasticized;
    for (double c : full_hamiltonian(hr, 2, 5, so).column_sums()) CHECK(std::abs(c) <= 1e-12);
}

TEST_CASE("dump round trip") {
    BuildOptions opt;
    opt.mode = Truncation::Stochasticized;
    const auto h = full_hamiltonian(kParams, 2, 4, opt);
    std::stringstream ss;
    write_operator_dump(ss, h, {{"N", "2"}, {"cap", "4"}, {"mode", "stochasticized"}});
    const auto back = read_operator_dump(ss);
    CHECK(back.op == h);
    CHECK(back.header.at("mode") == "stochasticized");
    std::stringstream bad("# rows: 2\n# cols: 2\n0 x 1\n");
    CHECK_THROWS_AS(read_operator_dump(bad), DomainError);
}
