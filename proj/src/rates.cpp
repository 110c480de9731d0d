#include "qhahn/rates.hpp"

#include "qhahn/errors.hpp"

#include <cmath>
#include <sstream>

namespace qhahn {

namespace {

void require_open_unit(double v, const char* name) {
    if (!(v > 0.0 && v < 1.0)) {
        std::ostringstream os;
        os << name << " must lie in (0,1), got " << v;
        throw DomainError(os.str());
    }
}

void require_reservoir(double rho, const char* name) {
    if (!(rho >= 0.0 && rho < 1.0)) {
        std::ostringstream os;
        os << name << " must lie in [0,1), got " << rho;
        throw DomainError(os.str());
    }
}

void require_block(int m, int k, const char* where) {
    if (m < 1 || k < 1 || k > m) {
        std::ostringstream os;
        os << where << ": need 1 <= k <= m, got m=" << m << " k=" << k;
        throw DomainError(os.str());
    }
}

// (gamma;gamma)_m (mu;gamma)_{m-k} / ((gamma;gamma)_{m-k} (mu;gamma)_m) as a
// k-factor telescoped product; each factor is O(1) so nothing underflows.
double block_weight(double gamma, double mu, int m, int k) {
    double r = 1.0;
    double gj = std::pow(gamma, m - k);
    for (int j = m - k; j < m; ++j, gj *= gamma) r *= (1.0 - gj * gamma) / (1.0 - mu * gj);
    return r;
}

}  // namespace

// ---- ModelParams ---------------------------------------------------------

ModelParams ModelParams::from_qs(double q, double s, double rho_left, double rho_right,
                                 bool shift_rho_right) {
    require_open_unit(q, "q");
    if (!(s > 0.0) || !std::isfinite(s)) {
        std::ostringstream os;
        os << "s must be positive, got " << s;
        throw DomainError(os.str());
    }
    ModelParams p;
    p.q_ = q;
    p.s_ = s;
    p.gamma_ = q * q;
    p.mu_ = std::pow(q, 4.0 * s);
    p.rho_left_ = rho_left;
    p.rho_right_ = shift_rho_right ? rho_right * p.mu_ : rho_right;
    p.shifted_ = shift_rho_right;
    p.validate();
    return p;
}

ModelParams ModelParams::from_rates(double gamma, double mu, double rho_left, double rho_right,
                                    bool shift_rho_right) {
    ModelParams p;
    p.gamma_ = gamma;
    p.mu_ = mu;
    p.rho_left_ = rho_left;
    p.rho_right_ = shift_rho_right ? rho_right * mu : rho_right;
    p.shifted_ = shift_rho_right;
    p.validate();
    return p;
}

void ModelParams::validate() const {
    require_open_unit(gamma_, "gamma");
    require_open_unit(mu_, "mu");
    require_reservoir(rho_left_, "rho_L");
    require_reservoir(rho_right_, "rho_R");
}

double ModelParams::q() const {
    if (!q_) throw DomainError("operation requires (q, s) parameters; got rate-only (gamma, mu)");
    return *q_;
}

double ModelParams::s() const {
    if (!s_) throw DomainError("operation requires (q, s) parameters; got rate-only (gamma, mu)");
    return *s_;
}

ModelParams ModelParams::with_rho(double rho_left, double rho_right) const {
    ModelParams p = *this;
    p.rho_left_ = rho_left;
    p.rho_right_ = rho_right;
    p.validate();
    return p;
}

std::string ModelParams::describe() const {
    std::ostringstream os;
    os.precision(17);
    if (q_) os << "q=" << *q_ << " s=" << *s_ << " ";
    os << "gamma=" << gamma_ << " mu=" << mu_ << " rho_L=" << rho_left_ << " rho_R=" << rho_right_;
    if (shifted_) os << " (rho_R shifted by mu)";
    return os.str();
}

// ---- q-Hahn rates --------------------------------------------------------

double beta_minus(double gamma, double mu, int m, int k) {
    require_block(m, k, "beta_minus");
    return block_weight(gamma, mu, m, k) / (1.0 - std::pow(gamma, k));
}

double beta_plus(double gamma, double mu, int m, int k) {
    require_block(m, k, "beta_plus");
    return std::pow(mu, k) * block_weight(gamma, mu, m, k) / (1.0 - std::pow(gamma, k));
}

double alpha_plus(double gamma, double mu, int m) {
    if (m < 0) throw DomainError("alpha_plus: negative occupation");
    double total = 0.0;
    double gk = 1.0;
    for (int k = 0; k < m; ++k, gk *= gamma) total += gk / (1.0 / mu - gk);
    return total;
}

double alpha_minus(double gamma, double mu, int m) {
    if (m < 0) throw DomainError("alpha_minus: negative occupation");
    double total = 0.0;
    double gk = 1.0;
    for (int k = 0; k < m; ++k, gk *= gamma) total += 1.0 / (1.0 - gk * mu);
    return total;
}

double beta_plus(const ModelParams& p, int m, int k) { return beta_plus(p.gamma(), p.mu(), m, k); }
double beta_minus(const ModelParams& p, int m, int k) { return beta_minus(p.gamma(), p.mu(), m, k); }
double alpha_plus(const ModelParams& p, int m) { return alpha_plus(p.gamma(), p.mu(), m); }
double alpha_minus(const ModelParams& p, int m) { return alpha_minus(p.gamma(), p.mu(), m); }

double insertion_rate(double rho, double gamma, int k) {
    if (k < 1) throw DomainError("insertion_rate: block size must be >= 1");
    if (!(rho >= 0.0 && rho < 1.0)) throw DomainError("insertion_rate: rho must lie in [0,1)");
    return std::pow(rho, k) / (1.0 - std::pow(gamma, k));
}

double insertion_tail_bound(double rho, double gamma, int K) {
    if (rho == 0.0) return 0.0;
    return std::pow(rho, K + 1) / ((1.0 - rho) * (1.0 - gamma));
}

SeriesValue insertion_series(double rho, double gamma, double tol) {
    if (!(rho < 1.0)) throw DivergenceError("insertion series diverges for rho >= 1");
    if (!(rho >= 0.0)) throw DomainError("insertion_series: rho must be non-negative");
    SeriesValue out;
    if (rho == 0.0) return out;
    double rk = 1.0;
    double gk = 1.0;
    for (int k = 1;; ++k) {
        rk *= rho;
        gk *= gamma;
        out.value += rk / (1.0 - gk);
        out.terms_used = k;
        if (insertion_tail_bound(rho, gamma, k) < tol) break;
        if (k > 10000000) throw DivergenceError("insertion series: tolerance unreachable");
    }
    return out;
}

// ---- q -> 1 limits -------------------------------------------------------

double harmonic_beta(double s, int m, int k) {
    require_block(m, k, "harmonic_beta");
    // Gamma(m+1)/Gamma(m-k+1) * Gamma(m-k+2s)/Gamma(m+2s) as a k-term product.
    double r = 1.0 / k;
    for (int i = 0; i < k; ++i) r *= (m - i) / (m - 1 - i + 2.0 * s);
    return r;
}

double harmonic_alpha(double s, int m) {
    if (m < 0) throw DomainError("harmonic_alpha: negative occupation");
    double total = 0.0;
    for (int k = 0; k < m; ++k) total += 1.0 / (k + 2.0 * s);
    return total;
}

double harmonic_insertion(double rho, int k) {
    if (k < 1) throw DomainError("harmonic_insertion: block size must be >= 1");
    return std::pow(rho, k) / k;
}

// ---- RateModel implementations ------------------------------------------

double QHahnRates::beta_plus(int m, int k) const { return qhahn::beta_plus(p_, m, k); }
double QHahnRates::beta_minus(int m, int k) const { return qhahn::beta_minus(p_, m, k); }
double QHahnRates::alpha_plus(int m) const { return qhahn::alpha_plus(p_, m); }
double QHahnRates::alpha_minus(int m) const { return qhahn::alpha_minus(p_, m); }
double QHahnRates::insertion(Side side, int k) const {
    return insertion_rate(p_.rho(side), p_.gamma(), k);
}
SeriesValue QHahnRates::insertion_total(Side side, double tol) const {
    return insertion_series(p_.rho(side), p_.gamma(), tol);
}
double QHahnRates::insertion_tail(Side side, int K) const {
    return insertion_tail_bound(p_.rho(side), p_.gamma(), K);
}

HarmonicRates::HarmonicRates(double s, double rho_left, double rho_right)
    : s_(s), rho_left_(rho_left), rho_right_(rho_right) {
    if (!(s > 0.0)) throw DomainError("HarmonicRates: s must be positive");
    require_reservoir(rho_left, "rho_L");
    require_reservoir(rho_right, "rho_R");
}

SeriesValue HarmonicRates::insertion_total(Side side, double tol) const {
    const double r = rho(side);
    SeriesValue out;
    if (r == 0.0) return out;
    // sum rho^k/k = -log(1 - rho); K is still reported for depth clipping.
    out.value = -std::log1p(-r);
    int K = 1;
    while (insertion_tail(side, K) >= tol) ++K;
    out.terms_used = K;
    return out;
}

double HarmonicRates::insertion_tail(Side side, int K) const {
    const double r = rho(side);
    if (r == 0.0) return 0.0;
    return std::pow(r, K + 1) / ((K + 1) * (1.0 - r));
}

}  // namespace qhahn
