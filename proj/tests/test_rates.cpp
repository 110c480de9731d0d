#include "oracles.hpp"

#include "qhahn/errors.hpp"
#include "qhahn/rates.hpp"

#include <doctest.h>

#include <cmath>

using namespace qhahn;

TEST_CASE("ModelParams construction") {
    const auto p = ModelParams::from_qs(0.6, 0.5, 0.2, 0.1);
    CHECK(p.gamma() == 0.36);
    CHECK(p.mu() == std::pow(0.6, 2.0));
    CHECK(p.has_deformation());
    const auto r = ModelParams::from_rates(0.25, 0.5, 0.2, 0.1);
    CHECK_FALSE(r.has_deformation());
    CHECK_THROWS_AS(r.q(), DomainError);
    CHECK_THROWS_WITH_AS(ModelParams::from_qs(1.2, 0.5, 0.2, 0.1), doctest::Contains("q must"), DomainError);
    CHECK_THROWS_WITH_AS(ModelParams::from_qs(0.6, -1, 0.2, 0.1), doctest::Contains("s must"), DomainError);
    CHECK_THROWS_WITH_AS(ModelParams::from_qs(0.6, 0.5, 1.0, 0.1), doctest::Contains("rho_L"), DomainError);
    CHECK_THROWS_WITH_AS(ModelParams::from_rates(0.3, 1.5, 0.2, 0.1), doctest::Contains("mu"), DomainError);
    CHECK_NOTHROW(ModelParams::from_qs(0.6, 0.5, 0.0, 0.0));
    const auto sh = ModelParams::from_qs(0.6, 0.5, 0.2, 0.1, true);
    CHECK(sh.rho_right() == doctest::Approx(0.1 * sh.mu()));
}

TEST_CASE("rate examples") {
    const double g = 0.36, mu = 0.2;
    CHECK(beta_plus(g, mu, 1, 1) == doctest::Approx(mu / (1 - mu)).epsilon(1e-14));
    CHECK(beta_plus(g, mu, 2, 1) == doctest::Approx(mu * (1 + g) / (1 - mu * g)).epsilon(1e-14));
    CHECK(beta_minus(g, mu, 1, 1) == doctest::Approx(1 / (1 - mu)).epsilon(1e-14));
    CHECK(beta_minus(g, mu, 2, 2) == doctest::Approx((1 - g) / ((1 - mu) * (1 - mu * g))).epsilon(1e-14));
    CHECK(alpha_plus(g, mu, 0) == 0.0);
    CHECK(alpha_plus(g, mu, 1) == doctest::Approx(mu / (1 - mu)).epsilon(1e-14));
    CHECK(alpha_minus(g, mu, 0) == 0.0);
    CHECK(alpha_minus(g, mu, 2) == doctest::Approx(1 / (1 - mu) + 1 / (1 - mu * g)).epsilon(1e-14));
    CHECK(alpha_minus(g, mu, 2) == doctest::Approx(beta_minus(g, mu, 2, 1) + beta_minus(g, mu, 2, 2)).epsilon(1e-14));
    CHECK_THROWS_AS(beta_plus(g, mu, 2, 3), DomainError);
    CHECK_THROWS_AS(beta_minus(g, mu, 2, 0), DomainError);
}

TEST_CASE("rates match the unsimplified Pochhammer ratios") {
    for (auto [g, mu] : {std::pair{0.25, 0.5}, {0.5, 0.3}, {0.81, 0.09}}) {
        for (int m = 1; m <= 25; ++m) {
            for (int k = 1; k <= m; ++k) {
                CHECK(beta_minus(g, mu, m, k) == doctest::Approx(oracle::beta_minus(g, mu, m, k)).epsilon(1e-12));
                CHECK(beta_plus(g, mu, m, k) == doctest::Approx(oracle::beta_plus(g, mu, m, k)).epsilon(1e-12));
                // asymmetry relation
                CHECK(std::abs(beta_plus(g, mu, m, k) - std::pow(mu, k) * beta_minus(g, mu, m, k)) <=
                      1e-14 * beta_plus(g, mu, m, k));
                CHECK(beta_plus(g, mu, m, k) > 0.0);
            }
        }
    }
}

TEST_CASE("sum rule") {
    for (auto [g, mu] : {std::pair{0.25, 0.5}, {0.5, 0.3}, {0.81, 0.09}}) {
        for (int m = 1; m <= 20; ++m) {
            double sp = 0, sm = 0;
            for (int k = 1; k <= m; ++k) {
                sp += beta_plus(g, mu, m, k);
                sm += beta_minus(g, mu, m, k);
            }
            CHECK(std::abs(alpha_plus(g, mu, m) - sp) <= 1e-12);
            CHECK(std::abs(alpha_minus(g, mu, m) - sm) <= 1e-12);
        }
    }
}

TEST_CASE("large occupations stay finite") {
    const double g = 0.98, mu = 0.5;
    for (int m : {50, 200, 1000}) {
        double s = 0;
        for (int k = 1; k <= m; ++k) s += beta_minus(g, mu, m, k);
        CHECK(std::isfinite(s));
        CHECK(s == doctest::Approx(alpha_minus(g, mu, m)).epsilon(1e-10));
    }
}

TEST_CASE("insertion series") {
    CHECK(insertion_rate(0.0, 0.25, 3) == 0.0);
    CHECK(insertion_rate(0.2, 0.25, 1) == doctest::Approx(0.2 / 0.75).epsilon(1e-15));
    for (int k = 1; k < 30; ++k) CHECK(insertion_rate(0.4, 0.3, k + 1) <= 0.4 * insertion_rate(0.4, 0.3, k));
    CHECK(insertion_series(0.0, 0.25, 1e-14).value == 0.0);
    const auto v = insertion_series(0.5, 0.25, 1e-15);
    CHECK(v.value >= 0.5 / 0.75);
    CHECK(std::abs(v.value - oracle::brute_insertion(0.5, 0.25, 1000000)) < 1e-12);
    CHECK(insertion_tail_bound(0.5, 0.25, v.terms_used) < 1e-15);
    CHECK_THROWS_AS(insertion_series(1.0, 0.25, 1e-14), DivergenceError);
}

TEST_CASE("mu -> 0 limit") {
    const double g = 0.4;
    double prev = 1e300;
    for (int j = 2; j <= 8; ++j) {
        const double mu = std::pow(10.0, -j);
        double worst = 0.0;
        for (int m = 1; m <= 10; ++m) {
            for (int k = 1; k <= m; ++k) {
                worst = std::max(worst, beta_plus(g, mu, m, k));
                const double tasep = oracle::poch(g, g, m) / ((1 - std::pow(g, k)) * oracle::poch(g, g, m - k));
                CHECK(beta_minus(g, mu, m, k) == doctest::Approx(tasep).epsilon(20 * mu));
            }
            CHECK(alpha_plus(g, mu, m) < 2 * m * mu);
        }
        CHECK(worst < prev);
        prev = worst;
    }
}

TEST_CASE("harmonic rates") {
    for (double s : {0.3, 0.5, 1.2}) {
        CHECK(harmonic_beta(s, 1, 1) == doctest::Approx(1 / (2 * s)));
        CHECK(harmonic_alpha(s, 0) == 0.0);
        CHECK(harmonic_alpha(s, 1) == doctest::Approx(1 / (2 * s)));
        for (int m = 1; m <= 15; ++m) {
            double sum = 0;
            for (int k = 1; k <= m; ++k) {
                CHECK(harmonic_beta(s, m, k) == doctest::Approx(oracle::harmonic_beta(s, m, k)).epsilon(1e-12));
                sum += harmonic_beta(s, m, k);
            }
            CHECK(sum == doctest::Approx(harmonic_alpha(s, m)).epsilon(1e-12));
        }
    }
    CHECK(harmonic_insertion(0.0, 2) == 0.0);
    CHECK(harmonic_insertion(0.3, 1) == 0.3);
}

TEST_CASE("q -> 1 limit converges monotonically") {
    const double s = 0.5, rho = 0.3;
    double prev_b = 1e300, prev_a = 1e300, prev_i = 1e300;
    for (int j = 2; j <= 4; ++j) {
        const double q = 1 - std::pow(10.0, -j);
        const auto p = ModelParams::from_qs(q, s, rho, rho);
        const double L = std::log(1 / (q * q));
        double eb = 0, ea = 0, ei = 0;
        for (int m = 1; m <= 10; ++m) {
            for (int k = 1; k <= m; ++k) {
                eb = std::max(eb, std::abs(L * beta_minus(p, m, k) - harmonic_beta(s, m, k)));
                eb = std::max(eb, std::abs(L * beta_plus(p, m, k) - harmonic_beta(s, m, k)));
            }
            ea = std::max(ea, std::abs(L * alpha_plus(p, m) - harmonic_alpha(s, m)));
            ea = std::max(ea, std::abs(L * alpha_minus(p, m) - harmonic_alpha(s, m)));
            ei = std::max(ei, std::abs(L * insertion_rate(rho, p.gamma(), m) - harmonic_insertion(rho, m)));
        }
        CHECK(eb < prev_b);
        CHECK(ea < prev_a);
        CHECK(ei < prev_i);
        prev_b = eb;
        prev_a = ea;
        prev_i = ei;
    }
    CHECK(prev_b < 1e-2);
}

TEST_CASE("RateModel implementations") {
    const auto p = ModelParams::from_qs(0.6, 0.5, 0.2, 0.1);
    const QHahnRates r(p);
    CHECK(r.beta_plus(3, 2) == beta_plus(p, 3, 2));
    CHECK(r.insertion(Side::Right, 2) == insertion_rate(0.1, 0.36, 2));
    CHECK(r.insertion_total(Side::Left, 1e-14).value == insertion_series(0.2, 0.36, 1e-14).value);
    const HarmonicRates h(0.5, 0.3, 0.0);
    CHECK(h.insertion_total(Side::Left, 1e-15).value == doctest::Approx(-std::log(0.7)).epsilon(1e-15));
    double direct = 0;
    for (int k = 1; k < 200; ++k) direct += h.insertion(Side::Left, k);
    CHECK(direct == doctest::Approx(h.insertion_total(Side::Left, 1e-15).value).epsilon(1e-14));
    CHECK(h.insertion_total(Side::Right, 1e-15).value == 0.0);
}
