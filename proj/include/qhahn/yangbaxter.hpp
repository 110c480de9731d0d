#pragma once

// Integrability data of the open chain: Lax and R matrices, crossing, the
// 2x2 reflection matrices, the special infinite K solutions with their
// reflection-equation residuals, trace identities and the double-row
// transfer matrix.

#include "qhahn/fock.hpp"
#include "qhahn/rates.hpp"
#include "qhahn/sparse_operator.hpp"

#include <Eigen/Dense>

#include <functional>

namespace qhahn::yb {

// Spectral points closer than this to a pole are rejected.
inline constexpr double kSpectralEpsilon = 1e-6;

/// (q, s) of the deformation; throws DomainError for rate-only parameters.
struct Deformation {
    double q;
    double s;
    explicit Deformation(const ModelParams& p) : q(p.q()), s(p.s()) {}
};

// ---- Lax matrices --------------------------------------------------------

enum class LaxKind {
    BoxA,  // L_{box,a}: auxiliary C^2 first
    ABox   // L_{a,box}
};

/// 2x2 auxiliary block <m| L(x) |m'>. Zero unless |m - m'| <= 1.
Eigen::Matrix2d lax_box_a(const ModelParams& p, double x, int m, int mp);
Eigen::Matrix2d lax_a_box(const ModelParams& p, double x, int m, int mp);
Eigen::Matrix2d lax_entry(LaxKind kind, const ModelParams& p, double x, int m, int mp);

/// Site operator in auxiliary slot (i, j), on occupancies 0..cap.
SparseOperator lax_block(LaxKind kind, const ModelParams& p, double x, int i, int j, int cap);

/// Full operator on C^2 (x) V, index i*(cap+1) + m.
SparseOperator lax_operator(LaxKind kind, const ModelParams& p, double x, int cap);

// ---- R matrix ------------------------------------------------------------

/// <m,n| R(x) |m',n'> from the terminating 4phi3 representation.
double r_matrix_hyp(const ModelParams& p, double x, int m, int n, int mp, int np);
/// The same element from the factorised sum over Phi weights.
double r_matrix_fact(const ModelParams& p, double x, int m, int n, int mp, int np);
/// d/dx <m,n| R(x) |m',n'> at x = 1, analytic.
double r_matrix_derivative_at_1(const ModelParams& p, int m, int n, int mp, int np);

/// R(x) on V (x) V restricted to occupancies <= cap (exact, R conserves m+n).
SparseOperator r_matrix_operator(const ModelParams& p, double x, int cap);
SparseOperator permutation(int cap);

/// -1/2 R'(1) P from the analytic derivative.
SparseOperator density_from_r(const ModelParams& p, int cap);
/// Same with a central difference of the factorised form.
SparseOperator density_from_r_numeric(const ModelParams& p, int cap, double h = 1e-5);

// ---- crossing ----------------------------------------------------------

double g_crossing(const ModelParams& p, double x);

struct CrossingResidual {
    double box_transpose;   // (L_{s,box}^{t_box}(1/x))^{-1} vs g D_box L_{box,s}^{t_box}(x q^-2) D_box^{-1}
    double site_transpose;  // (L_{box,s}^{t_s}(1/x))^{-1} vs g D_s L_{s,box}^{t_s}(x q^-2) D_s^{-1}
    double d_invariance;    // [D_s D_box, L(x)] for both orientations
};

/// Residuals on occupancies <= cutoff (operators are built two levels higher
/// so the truncated inverses are exact there), relative to the operator scale.
CrossingResidual crossing_check(const ModelParams& p, double x, int cutoff);

/// max |L_{a,box}(x) L_{box,a}(1/x) - I| on occupancies <= cutoff, relative.
double lax_unitarity_residual(const ModelParams& p, double x, int cutoff);

/// max |R(x) P R(1/x) P - I| over particle-number blocks <= max_particles.
double r_symmetry_residual(const ModelParams& p, double x, int max_particles);

// ---- 2x2 reflection matrices ---------------------------------------------

struct KBoxParams {
    double t_plus;
    double t_minus;
    double nu;
    double kappa;

    void validate() const;
};

Eigen::Matrix2d k_box(const KBoxParams& kp, const ModelParams& p, double x);
/// D_box^{-1} K_box(1/(q x)) with the left-boundary parameters.
Eigen::Matrix2d kbar_box(const KBoxParams& kp_left, const ModelParams& p, double x);
/// Scalar c(y) with K_box(1/y)^{-1} = c(y) K_box(y).
double k_box_inverse_scalar(const KBoxParams& kp, const ModelParams& p, double y);

// ---- infinite K solutions and reflection-equation residuals ------------

using KEntries = std::function<double(int, int)>;

enum class Bybe { Eq1, Eq2 };

/// Parameters of the rank-1 solution at y = 1/q: (t+, t-, kappa, nu) = (-rho, 1, 1, -q^{2s-2}).
KBoxParams rank1_params(const ModelParams& p, double rho_right);
/// Parameters identified at y = 1: (t+, t-, kappa, nu) = (-rho, 1, 1, -q^{-2s}).
KBoxParams identity_point_params(const ModelParams& p, double rho_right);

/// Left-hand side of a component reflection equation at (j, l, y).
double bybe_residual(Bybe which, const KBoxParams& kp, const ModelParams& p, const KEntries& k, double y, int j, int l);

/// Left-hand side of the reflection equation differentiated at y = 1 with
/// K(1) = I/4, for the derivative entries `k_prime`.
double bybe_derivative_residual(Bybe which, const ModelParams& p, double rho_right, const KEntries& k_prime, int j,
                                int l);

/// (q^2 rho)^i (q^{4s};q^2)_i / (q^2;q^2)_i, independent of j.
double k_rank1_at_qinv(const ModelParams& p, double rho_right, int i, int j);
/// rho^i (q^{4s};q^2)_i / (q^2;q^2)_i, independent of j.
double kbar_at_1(const ModelParams& p, double rho_left, int i, int j);

struct TraceValue {
    double direct;
    double closed_form;
    int terms;
};
/// tr Kbar(1) by tail-bounded summation and via (mu rho;q^2)_inf / (rho;q^2)_inf.
TraceValue trace_kbar(const ModelParams& p, double rho_left, double tol);

/// tr_a(Kbar_a(1) H_{a,1}) / tr Kbar(1) on occupancies <= cap, summing the
/// auxiliary occupancy up to aux_cutoff. Throws ToleranceError when the
/// estimated tail exceeds tol.
SparseOperator left_boundary_from_trace(const ModelParams& p, double rho_left, int cap, int aux_cutoff, double tol);

/// d/dy K_ij(y) at y = 1.
double k_prime_at_1(const ModelParams& p, double rho_right, int i, int j, double tol = 1e-16);

/// -K'(1) / (4 K(1)) on occupancies <= cap. Its lower triangle carries
/// (q^2 rho_K)^k / (1 - q^{2k}), so it equals B_R for reservoir density q^2 rho_K.
SparseOperator b_right_from_k_prime(const ModelParams& p, double rho_k, int cap, double tol = 1e-16);

// ---- double-row transfer matrix ------------------------------------------

/// tr_box Kbar(x) L_{box,1}(x)...L_{box,N}(x) K(x) L_{N,box}(x)...L_{1,box}(x)
/// on the truncated N-site space. The reverse monodromy is the inverse of the
/// forward one at 1/x by unitarity.
SparseOperator transfer_matrix_box(const ModelParams& p, const KBoxParams& kp_right, const KBoxParams& kp_left, double x,
                                   int n_sites, int cap, std::size_t dimension_limit = 2'000'000);

/// Indices of states with every occupancy <= bound.
std::vector<std::size_t> interior_states(const TruncatedSpace& space, int bound);

/// max |A_ij| over i, j in `rows` x `cols`.
double restricted_max_abs(const SparseOperator& a, const std::vector<std::size_t>& idx);

/// max|[T(x),T(y)]| / (max|T(x)| max|T(y)|) on states with occupancies <= cap-4.
double transfer_commutativity(const ModelParams& p, const KBoxParams& kp_right, const KBoxParams& kp_left, double x,
                              double y, int n_sites, int cap);

}  // namespace qhahn::yb
