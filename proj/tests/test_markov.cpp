#include "qhahn/errors.hpp"
#include "qhahn/markov.hpp"

#include <doctest.h>

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

using namespace qhahn;

namespace {

const ModelParams kParams = ModelParams::from_qs(0.6, 0.5, 0.2, 0.1);

SparseOperator generator(const RateModel& r, int N, int cap) {
    BuildOptions opt;
    opt.mode = Truncation::Stochasticized;
    return markov_generator(full_hamiltonian(r, N, cap, opt));
}

// Kolmogorov distribution tail P(K > x).
double kolmogorov_p(double x) {
    if (x < 0.2) return 1.0;
    double s = 0.0;
    for (int k = 1; k < 100; ++k) s += 2 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * x * x);
    return std::clamp(s, 0.0, 1.0);
}

}  // namespace

TEST_CASE("steady state, absorbing empty chain") {
    const auto m = generator(QHahnRates(kParams.with_rho(0, 0)), 1, 5);
    const auto ss = steady_state(m);
    CHECK(ss.pi.weights[0] == doctest::Approx(1.0));
    for (std::size_t i = 1; i < ss.pi.weights.size(); ++i) CHECK(ss.pi.weights[i] == doctest::Approx(0.0));
}

TEST_CASE("steady state vs dense null space") {
    const auto m = generator(QHahnRates(kParams), 1, 6);
    const auto ss = steady_state(m);
    // dense oracle: kernel of M^t via full-pivot LU
    const Eigen::MatrixXd mt = m.to_dense().transpose();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(mt);
    const Eigen::MatrixXd ker = lu.kernel();
    REQUIRE(ker.cols() == 1);
    const Eigen::VectorXd v = ker.col(0) / ker.col(0).sum();
    for (Eigen::Index i = 0; i < v.size(); ++i) CHECK(std::abs(v(i) - ss.pi.weights[static_cast<std::size_t>(i)]) < 1e-10);
    CHECK(ss.residual <= 1e-10);

    // invariance under exp(M^t t) through a truncated Taylor series
    Eigen::VectorXd pi = Eigen::Map<const Eigen::VectorXd>(ss.pi.weights.data(), v.size());
    Eigen::VectorXd term = pi, acc = pi;
    const double t = 0.1;
    for (int n = 1; n < 30; ++n) {
        term = mt * term * (t / n);
        acc += term;
    }
    CHECK((acc - pi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("steady state, larger chain and power iteration") {
    const auto m = generator(QHahnRates(kParams), 3, 6);
    const auto direct = steady_state(m);
    SteadyStateOptions opt;
    opt.direct_limit = 10;
    opt.tol = 1e-12;
    const auto power = steady_state(m, opt);
    CHECK(power.method == "power-iteration");
    double worst = 0.0;
    for (std::size_t i = 0; i < direct.pi.weights.size(); ++i)
        worst = std::max(worst, std::abs(direct.pi.weights[i] - power.pi.weights[i]));
    CHECK(worst < 1e-9);
    double s = 0.0;
    for (double w : direct.pi.weights) s += w;
    CHECK(std::abs(s - 1.0) < 1e-12);
}

TEST_CASE("steady state rejects non-generators") {
    CHECK_THROWS_AS(steady_state(full_hamiltonian(kParams, 1, 4)), DomainError);
    CHECK_THROWS_AS(steady_state(SparseOperator::from_triplets(2, 2, {{0, 1, -1.0}, {0, 0, 1.0}})), DomainError);
}

TEST_CASE("observables") {
    const TruncatedSpace sp(2, 6);
    ProbabilityVector empty{std::vector<double>(sp.dimension(), 0.0)};
    empty.weights[0] = 1.0;
    const QHahnRates rates(kParams);
    const auto o0 = observables(empty, sp, rates);
    CHECK(o0.density == std::vector<double>{0.0, 0.0});

    for (int N : {1, 2, 3}) {
        const TruncatedSpace s(N, 6);
        const auto ss = steady_state(generator(rates, N, 6));
        const auto o = observables(ss.pi, s, rates);
        CHECK(o.current == doctest::Approx(o.current_right).epsilon(1e-8));
        for (double d : o.density) CHECK((d >= 0.0 && d <= 6.0));
        CHECK(o.total_mass > 0.0);
    }
}

TEST_CASE("harmonic chain with equal reservoirs is reversal symmetric") {
    const HarmonicRates hr(0.5, 0.3, 0.3);
    const TruncatedSpace sp(3, 6);
    const auto ss = steady_state(generator(hr, 3, 6));
    const auto d = density_profile(ss.pi, sp);
    CHECK(std::abs(d[0] - d[2]) <= 1e-8);
}

TEST_CASE("insertion depth sampler") {
    const double rho = 0.5, g = 0.36;
    CHECK(sample_insertion_depth(rho, g, 0.0) == 1);
    CHECK(sample_insertion_depth(rho, g, std::nextafter(1.0, 0.0)) >= 1);
    const double total = insertion_series(rho, g, 1e-17).value;
    std::mt19937_64 gen(11);
    const int draws = 1000000;
    std::map<int, int> count;
    double mean = 0.0;
    for (int i = 0; i < draws; ++i) {
        const int k = sample_insertion_depth(rho, g, uniform01(gen()));
        ++count[k];
        mean += k;
    }
    mean /= draws;
    double expect_mean = 0.0, expect_sq = 0.0;
    for (int k = 1; k < 200; ++k) {
        const double p = insertion_rate(rho, g, k) / total;
        expect_mean += k * p;
        expect_sq += k * k * p;
        const double sigma = std::sqrt(draws * p * (1 - p));
        if (k <= 20) CHECK(std::abs(count[k] - draws * p) <= 4 * sigma + 1);
    }
    const double sd = std::sqrt((expect_sq - expect_mean * expect_mean) / draws);
    CHECK(std::abs(mean - expect_mean) <= 4 * sd);
}

TEST_CASE("gillespie basics") {
    GillespieOptions opt;
    opt.t_max = 100.0;
    const auto none = gillespie(kParams.with_rho(0, 0), 3, 1, opt);
    CHECK(none.size() == 0);
    CHECK(none.t_end == 100.0);

    const auto a = gillespie(kParams, 3, 42, opt);
    const auto b = gillespie(kParams, 3, 42, opt);
    const auto c = gillespie(kParams, 3, 43, opt);
    CHECK(a.size() > 10);
    CHECK(a.times == b.times);
    CHECK(a.occupancy == b.occupancy);
    CHECK(a.times != c.times);
    CHECK(a.algorithm == std::string("mt19937_64"));
    for (std::size_t i = 1; i < a.size(); ++i) CHECK(a.times[i] > a.times[i - 1]);
    // consecutive states differ by one block move
    std::vector<int> prev = a.initial;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto s = a.state(i);
        int changed = 0, net = 0;
        for (std::size_t j = 0; j < s.size(); ++j) {
            changed += s[j] != prev[j];
            net += s[j] - prev[j];
        }
        CHECK((changed == 1 || (changed == 2 && net == 0)));
        prev = s;
    }
    GillespieOptions bad = opt;
    bad.initial = {1, 2};
    CHECK_THROWS_AS(gillespie(kParams, 3, 1, bad), DomainError);
    GillespieOptions lim = opt;
    lim.hard_limit = 2;
    lim.t_max = 1e4;
    CHECK_THROWS_AS(gillespie(ModelParams::from_qs(0.6, 0.5, 0.9, 0.9), 1, 5, lim), ResourceError);
}

TEST_CASE("sojourn times are exponential") {
    const QHahnRates rates(kParams);
    GillespieOptions opt;
    opt.t_max = std::numeric_limits<double>::infinity();
    opt.max_events = 60000;
    const auto tr = gillespie(rates, 2, 2024, opt);
    const double rate = rates.insertion_total(Side::Left, 1e-14).value + rates.insertion_total(Side::Right, 1e-14).value;
    std::vector<double> sojourn;
    std::vector<int> cur = tr.initial;
    double since = 0.0;
    for (std::size_t i = 0; i < tr.size(); ++i) {
        if (cur == std::vector<int>{0, 0}) sojourn.push_back(tr.times[i] - since);
        since = tr.times[i];
        cur = tr.state(i);
    }
    REQUIRE(sojourn.size() >= 10000);
    sojourn.resize(10000);
    std::sort(sojourn.begin(), sojourn.end());
    double d = 0.0;
    const double n = static_cast<double>(sojourn.size());
    for (std::size_t i = 0; i < sojourn.size(); ++i) {
        const double f = 1 - std::exp(-rate * sojourn[i]);
        d = std::max({d, std::abs(f - i / n), std::abs(f - (i + 1) / n)});
    }
    CHECK(kolmogorov_p(std::sqrt(n) * d) > 0.01);
}

TEST_CASE("capped simulation reproduces the truncated steady state") {
    const QHahnRates rates(kParams);
    const TruncatedSpace sp(2, 6);
    const auto ss = steady_state(generator(rates, 2, 6));
    GillespieOptions opt;
    opt.cap = 6;
    opt.t_max = std::numeric_limits<double>::infinity();
    opt.max_events = 200000;
    const auto tr = gillespie(rates, 2, 7, opt);
    const auto freq = occupation_frequencies(tr, sp);
    CHECK(freq.outside == 0.0);
    CHECK(total_variation(freq.frequency, ss.pi.weights) < 0.05);
}
