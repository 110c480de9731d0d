#include "qhahn/yangbaxter.hpp"

#include "qhahn/errors.hpp"
#include "qhahn/qmath.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

namespace qhahn::yb {

using qmath::phi_weight;
using qmath::phi_weight_derivative;
using qmath::q_binomial;
using qmath::q_pochhammer;

namespace {

using Entry = SparseOperator::Entry;

void require_positive_point(double x, const char* where) {
    if (!(x > 0.0) || !std::isfinite(x)) {
        std::ostringstream os;
        os << where << ": spectral parameter must be positive, got " << x;
        throw DomainError(os.str());
    }
}

void require_off_zero(double v, const char* where) {
    if (std::abs(v) < kSpectralEpsilon) {
        std::ostringstream os;
        os << where << ": spectral point within " << kSpectralEpsilon << " of a pole";
        throw PoleError(os.str());
    }
}

double bracket(double X, double q) { return qmath::q_bracket(X, q); }

std::size_t pair_index(int m, int n, int cap) {
    return static_cast<std::size_t>(m) * (static_cast<std::size_t>(cap) + 1) + static_cast<std::size_t>(n);
}

double rel_residual(const Eigen::MatrixXd& diff, const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    const double scale = std::max({1.0, a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff()});
    return diff.cwiseAbs().maxCoeff() / scale;
}

// 2(cap+1) square dense form of a Lax operator, index i*(cap+1)+m.
Eigen::MatrixXd lax_dense(LaxKind kind, const ModelParams& p, double x, int cap) {
    return lax_operator(kind, p, x, cap).to_dense();
}

// swap of the auxiliary indices, blockwise
Eigen::MatrixXd transpose_box(const Eigen::MatrixXd& l, Eigen::Index d) {
    Eigen::MatrixXd t(l.rows(), l.cols());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) t.block(i * d, j * d, d, d) = l.block(j * d, i * d, d, d);
    return t;
}

// transpose inside every auxiliary block
Eigen::MatrixXd transpose_site(const Eigen::MatrixXd& l, Eigen::Index d) {
    Eigen::MatrixXd t(l.rows(), l.cols());
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) t.block(i * d, j * d, d, d) = l.block(i * d, j * d, d, d).transpose();
    return t;
}

std::vector<Eigen::Index> interior_aux_indices(Eigen::Index d, int cutoff) {
    std::vector<Eigen::Index> idx;
    for (int i = 0; i < 2; ++i)
        for (int m = 0; m <= cutoff; ++m) idx.push_back(i * d + m);
    return idx;
}

Eigen::MatrixXd restrict(const Eigen::MatrixXd& a, const std::vector<Eigen::Index>& idx) {
    Eigen::MatrixXd r(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(idx.size()));
    for (std::size_t i = 0; i < idx.size(); ++i)
        for (std::size_t j = 0; j < idx.size(); ++j)
            r(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = a(idx[i], idx[j]);
    return r;
}

}  // namespace

// ---- Lax matrices --------------------------------------------------------

Eigen::Matrix2d lax_box_a(const ModelParams& p, double x, int m, int mp) {
    return lax_entry(LaxKind::BoxA, p, x, m, mp);
}

Eigen::Matrix2d lax_a_box(const ModelParams& p, double x, int m, int mp) {
    return lax_entry(LaxKind::ABox, p, x, m, mp);
}

Eigen::Matrix2d lax_entry(LaxKind kind, const ModelParams& p, double x, int m, int mp) {
    const Deformation d(p);
    const double q = d.q, s = d.s;
    require_positive_point(x, "lax");
    if (m < 0 || mp < 0) throw DomainError("lax: negative occupation");
    const double X0 = x * std::pow(q, 0.5 - s);
    require_off_zero(X0 - 1.0 / X0, "lax");
    const double pre = 1.0 / bracket(X0, q);

    Eigen::Matrix2d a = Eigen::Matrix2d::Zero();
    if (kind == LaxKind::BoxA) {
        if (m == mp) {
            a(0, 0) = bracket(x * std::pow(q, 0.5 - s - m), q) * std::pow(q, m);
            a(1, 1) = bracket(x * std::pow(q, m + s + 0.5), q) * std::pow(q, m + 2 * s);
        }
        if (m == mp + 1) a(0, 1) = x * bracket(std::pow(q, 1 - 2 * s - m), q) * std::pow(q, m - 0.5 + s);
        if (m + 1 == mp) a(1, 0) = bracket(std::pow(q, m + 1), q) * std::pow(q, 0.5 + s + m) / x;
    } else {
        if (m == mp) {
            a(0, 0) = bracket(x * std::pow(q, 0.5 - s - m), q) * std::pow(q, -m);
            a(1, 1) = bracket(x * std::pow(q, m + s + 0.5), q) * std::pow(q, -m - 2 * s);
        }
        if (m == mp + 1) a(0, 1) = bracket(std::pow(q, 1 - 2 * s - m), q) * std::pow(q, -m - s + 0.5) / x;
        if (m + 1 == mp) a(1, 0) = x * bracket(std::pow(q, m + 1), q) * std::pow(q, -0.5 - s - m);
    }
    return pre * a;
}

SparseOperator lax_block(LaxKind kind, const ModelParams& p, double x, int i, int j, int cap) {
    const std::size_t d = local_dimension(cap);
    std::vector<Entry> e;
    for (int m = 0; m <= cap; ++m) {
        for (int mp = std::max(0, m - 1); mp <= std::min(cap, m + 1); ++mp) {
            const double v = lax_entry(kind, p, x, m, mp)(i, j);
            if (v != 0.0) e.push_back({static_cast<std::size_t>(m), static_cast<std::size_t>(mp), v});
        }
    }
    return SparseOperator::from_triplets(d, d, std::move(e));
}

SparseOperator lax_operator(LaxKind kind, const ModelParams& p, double x, int cap) {
    const std::size_t d = local_dimension(cap);
    std::vector<Entry> e;
    for (int m = 0; m <= cap; ++m) {
        for (int mp = std::max(0, m - 1); mp <= std::min(cap, m + 1); ++mp) {
            const Eigen::Matrix2d a = lax_entry(kind, p, x, m, mp);
            for (std::size_t i = 0; i < 2; ++i)
                for (std::size_t j = 0; j < 2; ++j) {
                    const double v = a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
                    if (v != 0.0) e.push_back({i * d + static_cast<std::size_t>(m), j * d + static_cast<std::size_t>(mp), v});
                }
        }
    }
    return SparseOperator::from_triplets(2 * d, 2 * d, std::move(e));
}

// ---- R matrix ------------------------------------------------------------

double r_matrix_hyp(const ModelParams& p, double x, int m, int n, int mp, int np) {
    const Deformation d(p);
    require_positive_point(x, "r_matrix_hyp");
    if (m < 0 || n < 0 || mp < 0 || np < 0) throw DomainError("r_matrix_hyp: negative occupation");
    if (m + n != mp + np) return 0.0;
    const double q = d.q, Q = q * q, mu = std::pow(q, 4 * d.s);
    const double X2 = x * x;

    const double lower = q_pochhammer(mu / X2, Q, m + n);
    require_off_zero(lower, "r_matrix_hyp");
    const double pre = std::pow(q, 4.0 * m * d.s) * q_binomial(m + n, m, Q) * q_pochhammer(mu, Q, n) /
                       (lower * q_pochhammer(mu, Q, np));

    // The (x^-2;q^2)_m (x^-2;q^2)_{n'} prefactor is cancelled against the
    // lower Pochhammers (x^2 q^{2-2m};q^2)_k (x^2 q^{2-2n'};q^2)_k termwise,
    // so the expression stays finite at x = 1.
    const std::array<double, 4> top{std::pow(q, -2 * m), std::pow(q, -2 * np), X2 * mu,
                                    X2 * std::pow(q, 2 - 4 * d.s - 2 * m - 2 * n)};
    const double bottom = std::pow(q, -2 * m - 2 * n);
    double total = 0.0;
    for (int k = 0; k <= std::min(m, np); ++k) {
        double t = q_pochhammer(1.0 / X2, Q, m - k) * q_pochhammer(1.0 / X2, Q, np - k);
        for (int i = m - k; i < m; ++i) t /= -X2 * std::pow(q, -2 * i);
        for (int i = np - k; i < np; ++i) t /= -X2 * std::pow(q, -2 * i);
        for (double a : top) t *= q_pochhammer(a, Q, k);
        t /= q_pochhammer(bottom, Q, k) * q_pochhammer(Q, Q, k);
        total += t * std::pow(Q, k);
    }
    return pre * total;
}

double r_matrix_fact(const ModelParams& p, double x, int m, int n, int mp, int np) {
    const Deformation d(p);
    require_positive_point(x, "r_matrix_fact");
    if (m < 0 || n < 0 || mp < 0 || np < 0) throw DomainError("r_matrix_fact: negative occupation");
    if (m + n != mp + np) return 0.0;
    const double Q = d.q * d.q, mu = std::pow(d.q, 4 * d.s);
    const double X = 1.0 / (x * x);
    double total = 0.0;
    for (int k = 0; k <= m; ++k) {
        total += phi_weight(k, k + n, X, X * mu, Q) * phi_weight(m - k, np, mu / X, mu, Q);
    }
    return total;
}

double r_matrix_derivative_at_1(const ModelParams& p, int m, int n, int mp, int np) {
    const Deformation d(p);
    if (m + n != mp + np) return 0.0;
    const double Q = d.q * d.q, mu = std::pow(d.q, 4 * d.s);
    // X = x^-2 and x^2 mu along x, at x = 1
    double total = 0.0;
    for (int k = 0; k <= m; ++k) {
        const double f1 = phi_weight(k, k + n, 1.0, mu, Q);
        const double d1 = phi_weight_derivative(k, k + n, 1.0, -2.0, mu, -2.0 * mu, Q);
        const double f2 = phi_weight(m - k, np, mu, mu, Q);
        const double d2 = phi_weight_derivative(m - k, np, mu, 2.0 * mu, mu, 0.0, Q);
        total += d1 * f2 + f1 * d2;
    }
    return total;
}

SparseOperator r_matrix_operator(const ModelParams& p, double x, int cap) {
    const std::size_t d = local_dimension(cap);
    std::vector<Entry> e;
    for (int m = 0; m <= cap; ++m)
        for (int n = 0; n <= cap; ++n)
            for (int mp = 0; mp <= cap; ++mp) {
                const int np = m + n - mp;
                if (np < 0 || np > cap) continue;
                e.push_back({pair_index(m, n, cap), pair_index(mp, np, cap), r_matrix_fact(p, x, m, n, mp, np)});
            }
    return SparseOperator::from_triplets(d * d, d * d, std::move(e));
}

SparseOperator permutation(int cap) {
    const std::size_t d = local_dimension(cap);
    std::vector<Entry> e;
    for (int m = 0; m <= cap; ++m)
        for (int n = 0; n <= cap; ++n) e.push_back({pair_index(n, m, cap), pair_index(m, n, cap), 1.0});
    return SparseOperator::from_triplets(d * d, d * d, std::move(e));
}

namespace {

template <class Deriv>
SparseOperator density_with(int cap, Deriv deriv) {
    const std::size_t d = local_dimension(cap);
    std::vector<Entry> e;
    // <m,n|R'P|m',n'> = <m,n|R'|n',m'>
    for (int m = 0; m <= cap; ++m)
        for (int n = 0; n <= cap; ++n)
            for (int mp = 0; mp <= cap; ++mp) {
                const int np = m + n - mp;
                if (np < 0 || np > cap) continue;
                e.push_back({pair_index(m, n, cap), pair_index(mp, np, cap), -0.5 * deriv(m, n, np, mp)});
            }
    return SparseOperator::from_triplets(d * d, d * d, std::move(e));
}

}  // namespace

SparseOperator density_from_r(const ModelParams& p, int cap) {
    return density_with(cap, [&](int a, int b, int c, int e) { return r_matrix_derivative_at_1(p, a, b, c, e); });
}

SparseOperator density_from_r_numeric(const ModelParams& p, int cap, double h) {
    return density_with(cap, [&](int a, int b, int c, int e) {
        return qmath::central_derivative([&](double x) { return r_matrix_fact(p, x, a, b, c, e); }, 1.0, h);
    });
}

// ---- crossing ------------------------------------------------------------

double g_crossing(const ModelParams& p, double x) {
    const Deformation d(p);
    require_positive_point(x, "g_crossing");
    const double q = d.q, q2s = std::pow(q, 2 * d.s), x2 = x * x;
    const double den1 = std::pow(q, 2 * d.s + 1) - x2;
    const double den2 = x2 * q2s - q * q * q;
    require_off_zero(den1, "g_crossing");
    require_off_zero(den2, "g_crossing");
    return (std::pow(q, 2 * d.s + 3) - x2) * (x2 * q2s - q) / (den1 * den2);
}

CrossingResidual crossing_check(const ModelParams& p, double x, int cutoff) {
    const Deformation def(p);
    const double q = def.q;
    const int cap = cutoff + 2;
    const Eigen::Index d = cap + 1;
    const double g = g_crossing(p, x);
    const auto idx = interior_aux_indices(d, cutoff);

    Eigen::VectorXd dbox(2 * d), ds(2 * d);
    for (int i = 0; i < 2; ++i)
        for (int m = 0; m <= cap; ++m) {
            dbox(i * d + m) = i == 0 ? 1.0 : q * q;
            ds(i * d + m) = std::pow(q, 2 * m);
        }
    auto invert = [](const Eigen::MatrixXd& a) {
        Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
        if (!lu.isInvertible()) throw NumericError("crossing_check: singular truncated block");
        return Eigen::MatrixXd(lu.inverse());
    };

    CrossingResidual out{};
    {
        const Eigen::MatrixXd lhs = invert(transpose_box(lax_dense(LaxKind::ABox, p, 1.0 / x, cap), d));
        const Eigen::MatrixXd rhs =
            g * dbox.asDiagonal() * transpose_box(lax_dense(LaxKind::BoxA, p, x / (q * q), cap), d) * dbox.cwiseInverse().asDiagonal();
        const auto a = restrict(lhs, idx), b = restrict(rhs, idx);
        out.box_transpose = rel_residual(a - b, a, b);
    }
    {
        const Eigen::MatrixXd lhs = invert(transpose_site(lax_dense(LaxKind::BoxA, p, 1.0 / x, cap), d));
        const Eigen::MatrixXd rhs =
            g * ds.asDiagonal() * transpose_site(lax_dense(LaxKind::ABox, p, x / (q * q), cap), d) * ds.cwiseInverse().asDiagonal();
        const auto a = restrict(lhs, idx), b = restrict(rhs, idx);
        out.site_transpose = rel_residual(a - b, a, b);
    }
    const Eigen::VectorXd dd = ds.cwiseProduct(dbox);
    for (LaxKind k : {LaxKind::ABox, LaxKind::BoxA}) {
        const Eigen::MatrixXd l = lax_dense(k, p, x, cap);
        const Eigen::MatrixXd c = dd.asDiagonal() * l - l * dd.asDiagonal();
        out.d_invariance = std::max(out.d_invariance, rel_residual(c, l, l));
    }
    return out;
}

double lax_unitarity_residual(const ModelParams& p, double x, int cutoff) {
    const int cap = cutoff + 1;
    const Eigen::Index d = cap + 1;
    const Eigen::MatrixXd a = lax_dense(LaxKind::ABox, p, x, cap);
    const Eigen::MatrixXd b = lax_dense(LaxKind::BoxA, p, 1.0 / x, cap);
    const auto idx = interior_aux_indices(d, cutoff);
    const Eigen::MatrixXd u = restrict(a * b, idx);
    const Eigen::MatrixXd id = Eigen::MatrixXd::Identity(u.rows(), u.cols());
    return rel_residual(u - id, restrict(a, idx), restrict(b, idx));
}

double r_symmetry_residual(const ModelParams& p, double x, int max_particles) {
    double worst = 0.0;
    for (int total = 0; total <= max_particles; ++total) {
        const int n = total + 1;
        Eigen::MatrixXd r(n, n), ri(n, n), perm = Eigen::MatrixXd::Zero(n, n);
        // basis (a, total - a), a = 0..total
        for (int a = 0; a <= total; ++a) {
            perm(total - a, a) = 1.0;
            for (int b = 0; b <= total; ++b) {
                r(a, b) = r_matrix_fact(p, x, a, total - a, b, total - b);
                ri(a, b) = r_matrix_fact(p, 1.0 / x, a, total - a, b, total - b);
            }
        }
        const Eigen::MatrixXd prod = r * perm * ri * perm;
        worst = std::max(worst, rel_residual(prod - Eigen::MatrixXd::Identity(n, n), r, ri));
    }
    return worst;
}

// ---- 2x2 reflection matrices ---------------------------------------------

void KBoxParams::validate() const {
    if (kappa == 0.0) throw DomainError("kappa must be nonzero");
    if (nu == 0.0) throw DomainError("nu must be nonzero");
}

Eigen::Matrix2d k_box(const KBoxParams& kp, const ModelParams& p, double x) {
    kp.validate();
    const Deformation d(p);
    require_positive_point(x, "k_box");
    const double q = d.q, x2 = x * x, xm2 = 1.0 / x2;
    const double base = kp.t_minus / (q * kp.nu) - q * kp.nu * kp.t_plus;
    Eigen::Matrix2d k;
    k << base + x2 * (kp.t_minus - kp.t_plus), kp.t_minus * (x2 - xm2) / kp.kappa,
        kp.kappa * kp.t_plus * (x2 - xm2), base + xm2 * (kp.t_minus - kp.t_plus);
    return k;
}

Eigen::Matrix2d kbar_box(const KBoxParams& kp_left, const ModelParams& p, double x) {
    const Deformation d(p);
    require_positive_point(x, "kbar_box");
    Eigen::Matrix2d dinv = Eigen::Matrix2d::Zero();
    dinv(0, 0) = 1.0;
    dinv(1, 1) = 1.0 / (d.q * d.q);
    return dinv * k_box(kp_left, p, 1.0 / (d.q * x));
}

double k_box_inverse_scalar(const KBoxParams& kp, const ModelParams& p, double y) {
    kp.validate();
    const double q = Deformation(p).q, y2 = y * y, nu = kp.nu;
    const double den = (q * nu + y2) * (q * nu * y2 + 1) * (q * kp.t_plus * nu - kp.t_minus * y2) *
                       (q * kp.t_plus * nu * y2 - kp.t_minus);
    require_off_zero(den, "k_box_inverse_scalar");
    return q * q * nu * nu * y2 * y2 / den;
}

// ---- infinite K solutions --------------------------------------------------

KBoxParams rank1_params(const ModelParams& p, double rho_right) {
    const Deformation d(p);
    return {-rho_right, 1.0, -std::pow(d.q, 2 * d.s - 2), 1.0};
}

KBoxParams identity_point_params(const ModelParams& p, double rho_right) {
    const Deformation d(p);
    return {-rho_right, 1.0, -std::pow(d.q, -2 * d.s), 1.0};
}

double bybe_residual(Bybe which, const KBoxParams& kp, const ModelParams& p, const KEntries& K, double y, int j, int l) {
    kp.validate();
    const Deformation d(p);
    const double q = d.q, s = d.s, tp = kp.t_plus, tm = kp.t_minus, nu = kp.nu, ka = kp.kappa;
    const double y2 = y * y, y4 = y2 * y2;
    auto Q = [q](double e) { return std::pow(q, e); };
    if (which == Bybe::Eq1) {
        return ka * tp * Q(2 - 4 * s) * (1 - Q(2 * (j + 2 * s))) * K(j, l + 1) +
               tm / ka * Q(-4 * s) * (1 - Q(2 + 2 * l)) * K(j + 1, l) +
               y2 * Q(2 - 2 * s) / nu * (Q(2 * j) - Q(2 * l)) * (tm - nu * nu * q * q * tp) * K(j + 1, l + 1) -
               ka * tp * y4 * Q(2 - 4 * s) * (1 - Q(2 * (1 + l + 2 * s))) * K(j + 1, l + 2) -
               tm / ka * y4 * Q(-4 * s) * (1 - Q(4 + 2 * j)) * K(j + 2, l + 1);
    }
    return ka * tp * Q(2 * (2 + l - 2 * s)) * (1 - Q(2 * (j + 2 * s))) * K(j, l + 1) +
           tm / ka * Q(2 * (1 + j - 2 * s)) * (1 - Q(2 + 2 * l)) * K(j + 1, l) +
           Q(2 - 4 * s) * (Q(2 * j) - Q(2 * l)) * (tp - tm) * K(j + 1, l + 1) -
           ka * tp * Q(2 * (1 + j - 2 * s)) * (1 - Q(2 * (1 + l + 2 * s))) * K(j + 1, l + 2) -
           tm / ka * Q(-4 * s + 2 * l) * (1 - Q(4 + 2 * j)) * K(j + 2, l + 1);
}

double bybe_derivative_residual(Bybe which, const ModelParams& p, double rho, const KEntries& K, int j, int l) {
    const Deformation d(p);
    const double q = d.q, s = d.s;
    auto Q = [q](double e) { return std::pow(q, e); };
    auto delta = [](int a, int b) { return a == b ? 1.0 : 0.0; };
    if (which == Bybe::Eq1) {
        return -rho * Q(2 - 4 * s) * (1 - Q(2 * (j + 2 * s))) * K(j, l + 1) +
               Q(-4 * s) * (1 - Q(2 + 2 * l)) * K(j + 1, l) -
               q * q * (Q(2 * j) - Q(2 * l)) * (1 + Q(2 - 4 * s) * rho) * (K(j + 1, l + 1) + 0.5 * delta(j + 1, l + 1)) +
               rho * Q(2 - 4 * s) * (1 - Q(2 * (1 + l + 2 * s))) * (K(j + 1, l + 2) + delta(j + 1, l + 2)) -
               Q(-4 * s) * (1 - Q(4 + 2 * j)) * (K(j + 2, l + 1) + delta(j + 2, l + 1));
    }
    return -rho * Q(2 * (2 + l)) * (1 - Q(2 * (j + 2 * s))) * K(j, l + 1) +
           Q(2 * (1 + j)) * (1 - Q(2 + 2 * l)) * K(j + 1, l) -
           q * q * (Q(2 * j) - Q(2 * l)) * (rho + 1) * K(j + 1, l + 1) +
           rho * Q(2 * (1 + j)) * (1 - Q(2 * (1 + l + 2 * s))) * K(j + 1, l + 2) -
           Q(2 * l) * (1 - Q(4 + 2 * j)) * K(j + 2, l + 1);
}

namespace {

// (q^{4s};q^2)_i / (q^2;q^2)_i as a running product
double trace_weight(double Q, double mu, int i) {
    double w = 1.0;
    double Qj = 1.0;
    for (int j = 0; j < i; ++j, Qj *= Q) w *= (1.0 - mu * Qj) / (1.0 - Qj * Q);
    return w;
}

}  // namespace

double k_rank1_at_qinv(const ModelParams& p, double rho_right, int i, int /*j*/) {
    const Deformation d(p);
    if (i < 0) throw DomainError("k_rank1_at_qinv: negative index");
    const double Q = d.q * d.q;
    return std::pow(Q * rho_right, i) * trace_weight(Q, std::pow(d.q, 4 * d.s), i);
}

double kbar_at_1(const ModelParams& p, double rho_left, int i, int /*j*/) {
    const Deformation d(p);
    if (i < 0) throw DomainError("kbar_at_1: negative index");
    const double Q = d.q * d.q;
    return std::pow(rho_left, i) * trace_weight(Q, std::pow(d.q, 4 * d.s), i);
}

TraceValue trace_kbar(const ModelParams& p, double rho, double tol) {
    const Deformation d(p);
    if (!(rho < 1.0)) throw DivergenceError("trace of Kbar(1) diverges for rho >= 1");
    if (!(rho >= 0.0)) throw DomainError("trace_kbar: rho must be non-negative");
    const double Q = d.q * d.q, mu = std::pow(d.q, 4 * d.s);
    TraceValue out{0.0, 0.0, 0};
    out.closed_form = qmath::q_pochhammer_inf(mu * rho, Q) / qmath::q_pochhammer_inf(rho, Q);
    double c = 1.0;
    for (int i = 0;; ++i) {
        out.direct += c;
        out.terms = i + 1;
        // every later ratio c_{k+1}/c_k is below rho / (1 - Q^{i+1})
        const double r = rho / (1.0 - std::pow(Q, i + 1));
        const double next = c * rho * (1.0 - mu * std::pow(Q, i)) / (1.0 - std::pow(Q, i + 1));
        if (r < 1.0 && next / (1.0 - r) < tol) break;
        if (i > 10000000) throw DivergenceError("trace_kbar: tolerance unreachable");
        c = next;
    }
    return out;
}

SparseOperator left_boundary_from_trace(const ModelParams& p, double rho, int cap, int aux_cutoff, double tol) {
    const Deformation d(p);
    if (!(rho >= 0.0 && rho < 1.0)) throw DivergenceError("left_boundary_from_trace: rho must lie in [0,1)");
    if (aux_cutoff < 1) throw DomainError("aux_cutoff must be >= 1");
    const double g = p.gamma(), mu = p.mu();
    const std::size_t dim = local_dimension(cap);

    std::vector<double> c(static_cast<std::size_t>(aux_cutoff));
    double trace = 0.0;
    for (int a = 0; a < aux_cutoff; ++a) {
        c[static_cast<std::size_t>(a)] = kbar_at_1(p, rho, a, 0);
        trace += c[static_cast<std::size_t>(a)];
    }

    // <b, m'| H |a, m> of the two-site term on the infinite space
    auto bulk = [&](int b, int mp, int a, int m) -> double {
        if (b + mp != a + m) return 0.0;
        if (b == a) return alpha_minus(g, mu, a) + alpha_plus(g, mu, m);
        if (a > b) return -beta_minus(g, mu, a, a - b);
        return -beta_plus(g, mu, m, m - mp);
    };

    std::vector<Entry> e;
    double worst_tail = 0.0;
    for (int m = 0; m <= cap; ++m) {
        for (int mp = 0; mp <= cap; ++mp) {
            double v = 0.0;
            double last = 0.0;
            for (int a = 0; a < aux_cutoff; ++a) {
                const int b = a + m - mp;
                if (b < 0) continue;
                last = c[static_cast<std::size_t>(a)] * bulk(b, mp, a, m);
                v += last;
            }
            // terms decay at least like r (a+1)/a with r = rho / (1 - q^{2A})
            const double A = aux_cutoff;
            const double r = rho / (1.0 - std::pow(g, A)) * (A + 1.0) / A;
            const double tail = r < 1.0 ? std::abs(last) * r / (1.0 - r) : std::numeric_limits<double>::infinity();
            worst_tail = std::max(worst_tail, tail / trace);
            e.push_back({static_cast<std::size_t>(mp), static_cast<std::size_t>(m), v / trace});
        }
    }
    // the trace itself is truncated too
    const double rA = rho / (1.0 - std::pow(g, aux_cutoff));
    const double trace_tail = rA < 1.0 ? c.back() * rA / (1.0 - rA) : std::numeric_limits<double>::infinity();
    worst_tail = std::max(worst_tail, trace_tail / trace);
    if (worst_tail > tol) {
        std::ostringstream os;
        os << "left_boundary_from_trace: auxiliary cutoff " << aux_cutoff << " leaves an estimated tail of "
           << worst_tail << " > tol " << tol;
        throw ToleranceError(os.str(), worst_tail);
    }
    return SparseOperator::from_triplets(dim, dim, std::move(e));
}

double k_prime_at_1(const ModelParams& p, double rho, int i, int j, double tol) {
    const Deformation d(p);
    if (i < 0 || j < 0) throw DomainError("k_prime_at_1: negative index");
    const double q = d.q, g = p.gamma(), mu = p.mu();
    if (i == j) {
        // sum_k rho^k / (q^{-2k} - 1) = sum_k (q^2 rho)^k / (1 - q^{2k})
        return -(alpha_minus(g, mu, i) + insertion_series(q * q * rho, g, tol).value);
    }
    if (i < j) return beta_minus(g, mu, j, j - i);
    return std::pow(rho, i - j) / (std::pow(q, -2.0 * (i - j)) - 1.0);
}

SparseOperator b_right_from_k_prime(const ModelParams& p, double rho_k, int cap, double tol) {
    const std::size_t dim = local_dimension(cap);
    const double k1 = 0.25;  // K(1) = I/4
    std::vector<Entry> e;
    for (int i = 0; i <= cap; ++i)
        for (int j = 0; j <= cap; ++j) {
            e.push_back({static_cast<std::size_t>(i), static_cast<std::size_t>(j), -k_prime_at_1(p, rho_k, i, j, tol) / (4.0 * k1)});
        }
    return SparseOperator::from_triplets(dim, dim, std::move(e));
}

// ---- transfer matrix -------------------------------------------------------

namespace {

struct OpMatrix2 {
    std::array<std::array<SparseOperator, 2>, 2> a;
};

OpMatrix2 operator*(const OpMatrix2& x, const OpMatrix2& y) {
    OpMatrix2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.a[i][j] = x.a[i][0] * y.a[0][j] + x.a[i][1] * y.a[1][j];
    return r;
}

OpMatrix2 scalar_matrix(const Eigen::Matrix2d& k, std::size_t dim) {
    OpMatrix2 r;
    const auto id = SparseOperator::identity(dim);
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.a[i][j] = k(i, j) * id;
    return r;
}

OpMatrix2 site_lax(LaxKind kind, const ModelParams& p, double x, int site, const TruncatedSpace& space) {
    OpMatrix2 r;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) r.a[i][j] = embed(lax_block(kind, p, x, i, j, space.cap()), {site}, space);
    return r;
}

}  // namespace

SparseOperator transfer_matrix_box(const ModelParams& p, const KBoxParams& kp_right, const KBoxParams& kp_left, double x,
                                   int n_sites, int cap, std::size_t dimension_limit) {
    const TruncatedSpace space(n_sites, cap);
    if (space.dimension() > dimension_limit) throw ResourceError("transfer_matrix_box: dimension above limit");
    OpMatrix2 m = scalar_matrix(kbar_box(kp_left, p, x), space.dimension());
    for (int i = 0; i < n_sites; ++i) m = m * site_lax(LaxKind::BoxA, p, x, i, space);
    m = m * scalar_matrix(k_box(kp_right, p, x), space.dimension());
    for (int i = n_sites - 1; i >= 0; --i) m = m * site_lax(LaxKind::ABox, p, x, i, space);
    return m.a[0][0] + m.a[1][1];
}

std::vector<std::size_t> interior_states(const TruncatedSpace& space, int bound) {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < space.dimension(); ++i) {
        bool ok = true;
        for (int s = 0; s < space.n_sites() && ok; ++s) ok = space.occupation(i, s) <= bound;
        if (ok) idx.push_back(i);
    }
    return idx;
}

double restricted_max_abs(const SparseOperator& a, const std::vector<std::size_t>& idx) {
    std::vector<char> in(a.rows(), 0);
    for (std::size_t i : idx) in[i] = 1;
    double m = 0.0;
    for (const auto& e : a.entries()) {
        if (in[e.row] && in[e.col]) m = std::max(m, std::abs(e.value));
    }
    return m;
}

double transfer_commutativity(const ModelParams& p, const KBoxParams& kp_right, const KBoxParams& kp_left, double x,
                              double y, int n_sites, int cap) {
    const TruncatedSpace space(n_sites, cap);
    const auto tx = transfer_matrix_box(p, kp_right, kp_left, x, n_sites, cap);
    const auto ty = transfer_matrix_box(p, kp_right, kp_left, y, n_sites, cap);
    const auto idx = interior_states(space, cap - 4);
    const double scale = restricted_max_abs(tx, idx) * restricted_max_abs(ty, idx);
    if (scale == 0.0) return 0.0;
    return restricted_max_abs(commutator(tx, ty), idx) / scale;
}

}  // namespace qhahn::yb
