#include "qhahn/qmath.hpp"

#include "qhahn/errors.hpp"

#include <cmath>
#include <string>

namespace qhahn::qmath {

namespace {

void require_unit_interval(double q, const char* where) {
    if (!(q > 0.0 && q < 1.0)) {
        throw DomainError(std::string(where) + ": q must lie in (0,1), got " + std::to_string(q));
    }
}

void require_nonnegative(int n, const char* where) {
    if (n < 0) throw DomainError(std::string(where) + ": negative length " + std::to_string(n));
}

// (a;q)_n with every factor checked against the pole guard.
double guarded_pochhammer(double a, double q, int n, const char* where) {
    double prod = 1.0;
    double aq = a;
    for (int j = 0; j < n; ++j, aq *= q) {
        const double f = 1.0 - aq;
        if (std::abs(f) < kPoleEpsilon) {
            throw PoleError(std::string(where) + ": vanishing denominator factor at j=" + std::to_string(j));
        }
        prod *= f;
    }
    return prod;
}

}  // namespace

double q_number(double x, double q) {
    require_unit_interval(q, "q_number");
    return (std::pow(q, x) - std::pow(q, -x)) / (q - 1.0 / q);
}

double q_bracket(double X, double q) {
    return (X - 1.0 / X) / (q - 1.0 / q);
}

double q_pochhammer(double a, double q, int n) {
    require_nonnegative(n, "q_pochhammer");
    double prod = 1.0;
    double aq = a;
    for (int j = 0; j < n; ++j, aq *= q) prod *= 1.0 - aq;
    return prod;
}

double q_pochhammer_inf(double a, double q, double tol) {
    require_unit_interval(q, "q_pochhammer_inf");
    if (!(tol > 0.0)) throw DomainError("q_pochhammer_inf: tol must be positive");
    double prod = 1.0;
    double aq = a;
    // |a q^j| decays geometrically; the cap only guards against absurd tol.
    for (int j = 0; j < 100000; ++j, aq *= q) {
        if (std::abs(aq) < tol) return prod;
        prod *= 1.0 - aq;
    }
    throw DomainError("q_pochhammer_inf: product did not converge");
}

double q_pochhammer_derivative(double a, double q, int n) {
    require_nonnegative(n, "q_pochhammer_derivative");
    double total = 0.0;
    double qp = 1.0;
    for (int p = 0; p < n; ++p, qp *= q) {
        double rest = 1.0;
        double aq = a;
        for (int j = 0; j < n; ++j, aq *= q) {
            if (j != p) rest *= 1.0 - aq;
        }
        total -= qp * rest;
    }
    return total;
}

double q_binomial(int n, int m, double q) {
    if (m < 0 || m > n) return 0.0;
    // prod_{j=1}^{m} (1 - q^{n-m+j}) / (1 - q^j) avoids forming (q;q)_n.
    double r = 1.0;
    for (int j = 1; j <= m; ++j) {
        r *= (1.0 - std::pow(q, n - m + j)) / (1.0 - std::pow(q, j));
    }
    return r;
}

double phi_weight(int m, int n, double x, double y, double q) {
    if (m < 0 || m > n) return 0.0;
    const double denom = guarded_pochhammer(y, q, n, "phi_weight");
    const double ratio = y / x;
    return std::pow(ratio, m) * q_pochhammer(x, q, m) * q_pochhammer(ratio, q, n - m) / denom *
           q_binomial(n, m, q);
}

double phi_weight_derivative(int m, int n, double x, double dx, double y, double dy, double q) {
    if (m < 0 || m > n) return 0.0;
    const double ratio = y / x;
    const double dratio = (dy * x - y * dx) / (x * x);

    const double f1 = std::pow(ratio, m);
    const double f2 = q_pochhammer(x, q, m);
    const double f3 = q_pochhammer(ratio, q, n - m);
    const double yn = guarded_pochhammer(y, q, n, "phi_weight_derivative");
    const double f4 = 1.0 / yn;

    const double d1 = m == 0 ? 0.0 : m * std::pow(ratio, m - 1) * dratio;
    const double d2 = q_pochhammer_derivative(x, q, m) * dx;
    const double d3 = q_pochhammer_derivative(ratio, q, n - m) * dratio;
    const double d4 = -q_pochhammer_derivative(y, q, n) * dy / (yn * yn);

    const double sum = d1 * f2 * f3 * f4 + f1 * d2 * f3 * f4 + f1 * f2 * d3 * f4 + f1 * f2 * f3 * d4;
    return q_binomial(n, m, q) * sum;
}

double hyper_4phi3(const std::array<double, 4>& top, const std::array<double, 3>& bottom, double q,
                   double z, int terminate_at) {
    require_nonnegative(terminate_at, "hyper_4phi3");
    double total = 1.0;
    double term = 1.0;
    double qk = 1.0;
    for (int k = 0; k < terminate_at; ++k, qk *= q) {
        // term_{k+1} / term_k
        double num = z;
        for (double a : top) num *= 1.0 - a * qk;
        double den = 1.0 - q * qk;
        for (double b : bottom) {
            const double f = 1.0 - b * qk;
            if (std::abs(f) < kPoleEpsilon) {
                throw PoleError("hyper_4phi3: lower parameter pole at k=" + std::to_string(k));
            }
            den *= f;
        }
        term *= num / den;
        total += term;
    }
    return total;
}

double central_derivative(const std::function<double(double)>& f, double x0, double h) {
    return (f(x0 + h) - f(x0 - h)) / (2.0 * h);
}

}  // namespace qhahn::qmath
