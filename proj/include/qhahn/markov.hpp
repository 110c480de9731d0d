#pragma once

// Stationary law, observables and exact simulation of the open chain.

#include "qhahn/fock.hpp"
#include "qhahn/rates.hpp"
#include "qhahn/sparse_operator.hpp"

#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

namespace qhahn {

struct ProbabilityVector {
    std::vector<double> weights;
};

struct SteadyStateOptions {
    double tol = 1e-10;
    std::size_t direct_limit = 20000;  // direct sparse LU up to this dimension
    std::size_t max_power_iterations = 10'000'000;
};

struct SteadyState {
    ProbabilityVector pi;
    double residual = 0.0;  // ||pi M||_inf
    std::string method;
};

/// Throws DomainError unless M has non-negative off-diagonals and zero row sums
/// (relative to its largest entry).
void require_generator(const SparseOperator& m, double rel_tol = 1e-10);

/// Solves pi M = 0, sum pi = 1 for a generator in the row convention.
SteadyState steady_state(const SparseOperator& m, const SteadyStateOptions& opt = {});

struct Observables {
    std::vector<double> density;
    double total_mass = 0.0;
    double current = 0.0;        // net inflow through the left reservoir, particles per unit time
    double current_right = 0.0;  // net outflow through the right reservoir
};

/// Expectations under pi for the truncated chain built with the same rates, cap and tol.
Observables observables(const ProbabilityVector& pi, const TruncatedSpace& space, const RateModel& rates,
                        double tol = 1e-14);

/// Occupation profile only.
std::vector<double> density_profile(const ProbabilityVector& pi, const TruncatedSpace& space);

// ---- simulation ------------------------------------------------------------

inline constexpr const char* kRngAlgorithm = "mt19937_64";

struct GillespieOptions {
    double t_max = 1.0;
    std::size_t max_events = std::numeric_limits<std::size_t>::max();
    std::optional<int> cap;  // none: genuinely unbounded occupancies
    std::vector<int> initial;  // empty: all sites empty
    double tol = 1e-14;        // insertion series / depth cutoff when capped
    long long hard_limit = 1'000'000;
};

struct Trajectory {
    int n_sites = 0;
    std::uint64_t seed = 0;
    std::string algorithm = kRngAlgorithm;
    std::string params;
    std::vector<int> initial;
    std::vector<double> times;
    std::vector<int> occupancy;  // row-major, n_sites per event
    double t_end = 0.0;          // time at which the simulation stopped

    std::size_t size() const noexcept { return times.size(); }
    std::vector<int> state(std::size_t event) const;
};

/// Direct-method simulation. Every step enumerates all block moves of the
/// current configuration; insertion depths follow rho^k/(1-gamma^k).
Trajectory gillespie(const RateModel& rates, int n_sites, std::uint64_t seed, const GillespieOptions& opt,
                     const std::string& params_description = {});
Trajectory gillespie(const ModelParams& p, int n_sites, std::uint64_t seed, const GillespieOptions& opt);

/// Fraction of [0, t_end] spent in each state of `space`. Time spent outside
/// the space is returned separately.
struct OccupationFrequencies {
    std::vector<double> frequency;
    double outside = 0.0;
};
OccupationFrequencies occupation_frequencies(const Trajectory& traj, const TruncatedSpace& space);

double total_variation(const std::vector<double>& a, const std::vector<double>& b);

/// Uniform double in [0,1) from the top 53 bits of a 64-bit draw.
double uniform01(std::uint64_t bits);

/// Inverse CDF of k -> insertion_rate(rho,gamma,k) / insertion_series(rho,gamma).
int sample_insertion_depth(double rho, double gamma, double u);

}  // namespace qhahn
