#pragma once

// q-deformed special functions shared by the rate, operator and
// integrability layers. Everything here is a pure function of its arguments.

#include <array>
#include <functional>

namespace qhahn::qmath {

// Denominator factors closer than this to zero are treated as poles.
inline constexpr double kPoleEpsilon = 1e-6;

/// Additive q-number [x] = (q^x - q^{-x}) / (q - q^{-1}), q in (0,1).
double q_number(double x, double q);

/// Multiplicative bracket [X] = (X - X^{-1}) / (q - q^{-1}), so that
/// q_bracket(q^x, q) == q_number(x, q). The Lax matrices are written in
/// this form with X = x q^a for a spectral parameter x.
double q_bracket(double X, double q);

/// (a;q)_n = prod_{j<n} (1 - a q^j); the empty product (n = 0) is 1.
double q_pochhammer(double a, double q, int n);

/// (a;q)_inf, truncated once |a q^j| < tol. Requires 0 < q < 1.
double q_pochhammer_inf(double a, double q, double tol = 1e-16);

/// d/da (a;q)_n via the product rule -sum_p q^p prod_{j!=p}(1 - a q^j).
/// Division free, so it is exact at a = 1 where it reduces to -(q;q)_{n-1}.
double q_pochhammer_derivative(double a, double q, int n);

/// Gaussian binomial (q;q)_n / ((q;q)_{n-m} (q;q)_m); zero outside 0<=m<=n.
double q_binomial(int n, int m, double q);

/// Phi_q(m|n; x, y) = (y/x)^m (x;q)_m (y/x;q)_{n-m} / (y;q)_n * [n over m]_q.
/// Zero for m < 0 or m > n. Throws PoleError when (y;q)_n vanishes.
double phi_weight(int m, int n, double x, double y, double q);

/// Derivative of phi_weight along a curve (x(t), y(t)) given the values and
/// the derivatives dx = x'(t), dy = y'(t).
double phi_weight_derivative(int m, int n, double x, double dx, double y, double dy, double q);

/// Terminating 4phi3 with base q and argument z, summed for k = 0..terminate_at.
/// Throws PoleError if a lower Pochhammer factor vanishes before termination.
double hyper_4phi3(const std::array<double, 4>& top, const std::array<double, 3>& bottom, double q,
                   double z, int terminate_at);

/// (f(x0 + h) - f(x0 - h)) / (2h).
double central_derivative(const std::function<double(double)>& f, double x0, double h);

}  // namespace qhahn::qmath
