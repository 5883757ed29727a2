#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <utility>
#include <vector>

#include "expdet/divdiff.hpp"
#include "expdet/expdet.hpp"
#include "expdet/nodes.hpp"

namespace expdet {

struct QuadratureConfig {
    int order = 24;    // points per dimension
    int max_dims = 4;  // 4 is a hard cap regardless of this setting
};

// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
// Legendre recurrence.  Exact for polynomials up to degree 2*order - 1.
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int order) {
    if (order < 2)
        throw ValidationError("InvalidOrder", "quadrature order must be at least 2");
    std::vector<double> x(order), w(order);
    const int half = (order + 1) / 2;
    for (int i = 0; i < half; ++i) {
        double z = std::cos(M_PI * (i + 0.75) / (order + 0.5));
        double p0 = 0.0, p1 = 0.0, deriv = 0.0;
        for (int it = 0; it < 100; ++it) {
            p0 = 1.0;
            p1 = 0.0;
            for (int j = 0; j < order; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            deriv = order * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / deriv;
            z -= dz;
            if (std::abs(dz) < 1e-15)
                break;
        }
        x[i] = -z;
        x[order - 1 - i] = z;
        w[i] = w[order - 1 - i] = 2.0 / ((1.0 - z * z) * deriv * deriv);
    }
    return {std::move(x), std::move(w)};
}

// Integrand selector for nested_integral: V(t) alone, or V(t) exp(c s(t)).
class Integrand {
public:
    static Integrand vandermonde() { return Integrand(false, 0.0); }
    static Integrand vandermonde_times_exp(double c) { return Integrand(true, c); }

    double operator()(std::span<const double> t) const {
        double v = 1.0;
        for (std::size_t i = 0; i < t.size(); ++i)
            for (std::size_t j = i + 1; j < t.size(); ++j)
                v *= t[j] - t[i];
        if (with_exp_) {
            CompensatedSum s;
            for (double ti : t)
                s.add(ti);
            v *= std::exp(scale_ * s.value());
        }
        return v;
    }

    bool with_exp() const { return with_exp_; }
    double scale() const { return scale_; }

private:
    Integrand(bool with_exp, double scale) : with_exp_(with_exp), scale_(scale) {}
    bool with_exp_;
    double scale_;
};

namespace detail {

// Tensor-product Gauss-Legendre over the box
// [x_1,x_2] x [x_2,x_3] x ... x [x_{n-1},x_n].  Evaluation order follows the
// ascending flat node index, so results are bitwise deterministic.
inline double tensor_quad(const NodeVector& x, const std::function<double(std::span<const double>)>& g,
                          const QuadratureConfig& cfg) {
    const int n = static_cast<int>(x.size());
    if (n < 2)
        throw ValidationError("InvalidArgument", "nested integration requires n >= 2");
    const int dims = n - 1;
    const int cap = std::min(cfg.max_dims, 4);
    if (dims > cap)
        throw ValidationError("TooManyDims",
                              "integration over " + std::to_string(dims) +
                                  " dimensions exceeds the cap of " + std::to_string(cap));
    const auto [xi, wi] = gauss_legendre(cfg.order);
    const int order = cfg.order;

    std::vector<std::vector<double>> nodes(dims), weights(dims);
    for (int d = 0; d < dims; ++d) {
        const double mid = 0.5 * (x[d] + x[d + 1]);
        const double hw = 0.5 * (x[d + 1] - x[d]);
        nodes[d].resize(order);
        weights[d].resize(order);
        for (int i = 0; i < order; ++i) {
            nodes[d][i] = mid + hw * xi[i];
            weights[d][i] = hw * wi[i];
        }
    }

    long total = 1;
    for (int d = 0; d < dims; ++d)
        total *= order;
    std::vector<double> t(dims);
    CompensatedSum acc;
    for (long flat = 0; flat < total; ++flat) {
        long rem = flat;
        double wprod = 1.0;
        for (int d = 0; d < dims; ++d) {
            const int i = static_cast<int>(rem % order);
            rem /= order;
            t[d] = nodes[d][i];
            wprod *= weights[d][i];
        }
        acc.add(wprod * g(t));
    }
    return acc.value();
}

} // namespace detail

inline double nested_integral(const NodeVector& x, const Integrand& g,
                              const QuadratureConfig& cfg = {}) {
    return detail::tensor_quad(x, std::cref(g), cfg);
}

// Checks  integral of V(t) over the box  ==  V(x) / (n-1)!.
// The integrand is polynomial, so Gauss-Legendre at order >= 24 is exact up
// to rounding; the returned relative residual should sit at noise level.
inline double check_corollary_identity(const NodeVector& x, const QuadratureConfig& cfg = {}) {
    const int n = static_cast<int>(x.size());
    const double quad = nested_integral(x, Integrand::vandermonde(), cfg);
    const double ref = std::exp(log_vandermonde(x)) / detail::factorial(n - 1);
    return std::abs(quad - ref) / ref;
}

// Checks  integral of V(t) exp(c s(t))  ==  V(x) [p_1,...,p_n]f  with
// c = u_sum/(n-1) and f = exp(c a)/c^(n-1), whose (n-1)-th derivative is
// exactly exp(c a).
inline double check_theorem_identity(const NodeVector& x, double u_sum,
                                     const QuadratureConfig& cfg = {},
                                     const PrecisionConfig& pcfg = {}) {
    const int n = static_cast<int>(x.size());
    if (n < 2)
        throw ValidationError("InvalidArgument", "check_theorem_identity requires n >= 2");
    if (!(u_sum > 0.0) || !std::isfinite(u_sum))
        throw ValidationError("InvalidUSum", "u_sum must be positive and finite");
    const double c = u_sum / static_cast<double>(n - 1);
    const double quad = nested_integral(x, Integrand::vandermonde_times_exp(c), cfg);
    const SmoothExpFamily f(c, n - 1);
    const double rhs =
        std::exp(log_vandermonde(x)) * divided_difference(p_vector(x), f, pcfg).value;
    return std::abs(quad - rhs) / std::abs(rhs);
}

namespace detail {

// det [exp(t_i u_j)] of order 2 or 3 by cofactor expansion in double.
inline double small_exp_det(std::span<const double> t, std::span<const double> u) {
    if (t.size() == 2) {
        return std::exp(t[0] * u[0] + t[1] * u[1]) - std::exp(t[0] * u[1] + t[1] * u[0]);
    }
    const double m00 = std::exp(t[1] * u[1] + t[2] * u[2]) - std::exp(t[1] * u[2] + t[2] * u[1]);
    const double m01 = std::exp(t[1] * u[0] + t[2] * u[2]) - std::exp(t[1] * u[2] + t[2] * u[0]);
    const double m02 = std::exp(t[1] * u[0] + t[2] * u[1]) - std::exp(t[1] * u[1] + t[2] * u[0]);
    return std::exp(t[0] * u[0]) * m00 - std::exp(t[0] * u[1]) * m01 +
           std::exp(t[0] * u[2]) * m02;
}

} // namespace detail

// Verifies the order-reduction identity
//   det(A) = exp(s(x) y_1) u_1...u_{n-1} * integral of det(B(t, u))
// with u_j = y_{j+1} - y_1, against the high-precision oracle.  Restricted to
// n = 3 or 4 where det(B) admits a small cofactor expansion; comparison is
// done in log domain so neither side is ever exponentiated whole.
inline double check_lemma1_reduction(const ExpMatrixSpec& spec, const QuadratureConfig& cfg = {},
                                     const PrecisionConfig& pcfg = {}) {
    const int n = spec.n();
    if (n < 3 || n > 4)
        throw ValidationError("UnsupportedN", "check_lemma1_reduction requires n = 3 or 4");
    const NodeVector& x = spec.x();
    const NodeVector& y = spec.y();
    std::vector<double> u(n - 1);
    for (int j = 0; j < n - 1; ++j)
        u[j] = y[j + 1] - y[0];

    // Exponent budget guard: the inner determinant is evaluated in plain
    // double, which caps |t_i u_j| sums near 300 in natural log.
    double budget = 0.0;
    const double xmax = std::max(std::abs(x.front()), std::abs(x.back()));
    for (double uj : u)
        budget += xmax * uj;
    if (budget > 300.0)
        throw ValidationError("ExponentBudget",
                              "instance exceeds the double-precision exponent budget");

    const double inner = detail::tensor_quad(
        x, [&](std::span<const double> t) { return detail::small_exp_det(t, u); }, cfg);
    CompensatedSum log_u;
    for (double uj : u)
        log_u.add(std::log(uj));
    const double log_rhs = node_sum(x) * y[0] + log_u.value() + std::log(inner);
    const double log_lhs = logdet_exp(spec, pcfg).log_abs;
    return std::abs(std::expm1(log_rhs - log_lhs));
}

} // namespace expdet
