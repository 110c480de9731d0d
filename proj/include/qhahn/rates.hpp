#pragma once

// Jump rates of the open q-Hahn process and their q -> 1 and mu -> 0 limits.

#include <optional>
#include <string>
#include <utility>

namespace qhahn {

enum class Side { Left, Right };

/// Parameter bundle. Built either from the deformation (q, s), which fixes
/// gamma = q^2 and mu = q^{4s}, or directly from (gamma, mu) for the Markov
/// process alone. Only the first kind is accepted by the integrability layer.
class ModelParams {
public:
    static ModelParams from_qs(double q, double s, double rho_left, double rho_right,
                               bool shift_rho_right = false);
    static ModelParams from_rates(double gamma, double mu, double rho_left, double rho_right,
                                  bool shift_rho_right = false);

    double gamma() const noexcept { return gamma_; }
    double mu() const noexcept { return mu_; }
    double rho(Side side) const noexcept { return side == Side::Left ? rho_left_ : rho_right_; }
    double rho_left() const noexcept { return rho_left_; }
    double rho_right() const noexcept { return rho_right_; }
    bool rho_right_shifted() const noexcept { return shifted_; }

    bool has_deformation() const noexcept { return q_.has_value(); }
    std::optional<double> q_opt() const noexcept { return q_; }
    std::optional<double> s_opt() const noexcept { return s_; }
    /// q and s; throw DomainError for rate-only parameters.
    double q() const;
    double s() const;

    /// Copy with the reservoir densities replaced (validated again).
    ModelParams with_rho(double rho_left, double rho_right) const;

    std::string describe() const;

private:
    ModelParams() = default;
    void validate() const;

    std::optional<double> q_;
    std::optional<double> s_;
    double gamma_ = 0.0;
    double mu_ = 0.0;
    double rho_left_ = 0.0;
    double rho_right_ = 0.0;
    bool shifted_ = false;
};

struct SeriesValue {
    double value = 0.0;
    int terms_used = 0;
};

// ---- q-Hahn rates --------------------------------------------------------

double beta_plus(const ModelParams& p, int m, int k);
double beta_minus(const ModelParams& p, int m, int k);
double alpha_plus(const ModelParams& p, int m);
double alpha_minus(const ModelParams& p, int m);

// Same, on raw (gamma, mu).
double beta_plus(double gamma, double mu, int m, int k);
double beta_minus(double gamma, double mu, int m, int k);
double alpha_plus(double gamma, double mu, int m);
double alpha_minus(double gamma, double mu, int m);

/// rho^k / (1 - gamma^k).
double insertion_rate(double rho, double gamma, int k);

/// sum_{k>=1} rho^k / (1 - gamma^k), stopped once the geometric tail bound
/// rho^{K+1} / ((1 - rho)(1 - gamma)) drops below tol.
SeriesValue insertion_series(double rho, double gamma, double tol);

/// Upper bound on sum_{k>K} rho^k / (1 - gamma^k).
double insertion_tail_bound(double rho, double gamma, int K);

// ---- q -> 1 limits (rates multiplied by log q^{-2}) -----------------------

/// (1/k) Gamma(m+1) Gamma(m-k+2s) / (Gamma(m-k+1) Gamma(m+2s)).
double harmonic_beta(double s, int m, int k);
/// sum_{k<m} 1/(k + 2s).
double harmonic_alpha(double s, int m);
/// rho^k / k.
double harmonic_insertion(double rho, int k);

// ---- rate source used by the operator builders and the simulator ---------

/// Rates of a two-directional block-hopping process with boundary
/// reservoirs. `beta_minus(m,k)` moves k of m particles one site to the
/// right, `beta_plus(m,k)` one site to the left.
class RateModel {
public:
    virtual ~RateModel() = default;

    virtual double beta_plus(int m, int k) const = 0;
    virtual double beta_minus(int m, int k) const = 0;
    virtual double alpha_plus(int m) const = 0;
    virtual double alpha_minus(int m) const = 0;

    /// Rate for inserting a block of k particles from the reservoir.
    virtual double insertion(Side side, int k) const = 0;
    /// Total insertion rate (the infinite series) at tolerance tol.
    virtual SeriesValue insertion_total(Side side, double tol) const = 0;
    /// Bound on the insertion rates with block sizes above K.
    virtual double insertion_tail(Side side, int K) const = 0;

    virtual double rho(Side side) const = 0;
};

class QHahnRates final : public RateModel {
public:
    explicit QHahnRates(ModelParams p) : p_(std::move(p)) {}

    double beta_plus(int m, int k) const override;
    double beta_minus(int m, int k) const override;
    double alpha_plus(int m) const override;
    double alpha_minus(int m) const override;
    double insertion(Side side, int k) const override;
    SeriesValue insertion_total(Side side, double tol) const override;
    double insertion_tail(Side side, int K) const override;
    double rho(Side side) const override { return p_.rho(side); }

    const ModelParams& params() const noexcept { return p_; }

private:
    ModelParams p_;
};

/// The symmetric harmonic process reached as q -> 1 (time rescaled by
/// log q^{-2}); both boundaries share the same extraction rates.
class HarmonicRates final : public RateModel {
public:
    HarmonicRates(double s, double rho_left, double rho_right);

    double beta_plus(int m, int k) const override { return harmonic_beta(s_, m, k); }
    double beta_minus(int m, int k) const override { return harmonic_beta(s_, m, k); }
    double alpha_plus(int m) const override { return harmonic_alpha(s_, m); }
    double alpha_minus(int m) const override { return harmonic_alpha(s_, m); }
    double insertion(Side side, int k) const override { return harmonic_insertion(rho(side), k); }
    SeriesValue insertion_total(Side side, double tol) const override;
    double insertion_tail(Side side, int K) const override;
    double rho(Side side) const override { return side == Side::Left ? rho_left_ : rho_right_; }

private:
    double s_;
    double rho_left_;
    double rho_right_;
};

}  // namespace qhahn
