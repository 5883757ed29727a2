#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <utility>
#include <vector>

#include "expdet/highprec.hpp"
#include "expdet/nodes.hpp"

namespace expdet {

namespace detail {

// c^e for integer e of either sign; avoids pow() corner cases for negative
// bases.
inline double int_pow(double c, int e) {
    double r = 1.0;
    const int k = e < 0 ? -e : e;
    for (int i = 0; i < k; ++i)
        r *= c;
    return e < 0 ? 1.0 / r : r;
}

inline double factorial(int k) {
    double r = 1.0;
    for (int i = 2; i <= k; ++i)
        r *= static_cast<double>(i);
    return r;
}

} // namespace detail

// The function family alpha -> exp(c * alpha) / c^m, closed under
// differentiation: the k-th derivative is c^(k-m) exp(c * alpha).
// Derivatives are always taken from this analytic form, never by numerical
// differentiation.
class SmoothExpFamily {
public:
    explicit SmoothExpFamily(double scale, int prefactor_power = 0)
        : scale_(scale), prefactor_power_(prefactor_power) {
        if (!std::isfinite(scale))
            throw ValidationError("InvalidScale", "scale must be finite");
        if (prefactor_power < 0)
            throw ValidationError("InvalidScale", "prefactor power must be nonnegative");
        if (scale == 0.0 && prefactor_power > 0)
            throw ValidationError("InvalidScale", "scale must be nonzero when m > 0");
    }

    double scale() const { return scale_; }
    int prefactor_power() const { return prefactor_power_; }

    double operator()(double a) const { return derivative(0, a); }

    double derivative(int k, double a) const {
        return detail::int_pow(scale_, k - prefactor_power_) * std::exp(scale_ * a);
    }

private:
    double scale_;
    int prefactor_power_;
};

// Newton table in lower-triangular row form: row i holds
// [v_{i-j},...,v_i]f for j = 0..i, so the final diagonal entry is the full
// divided difference.  error_estimate is a running first-order bound on the
// accumulated rounding error of `value`.
struct DividedDiffResult {
    double value = 0.0;
    std::vector<std::vector<double>> table;
    double error_estimate = 0.0;
};

namespace detail {

template <typename F>
DividedDiffResult newton_table(std::span<const double> v, F&& f) {
    const std::size_t n = v.size();
    const double eps = std::numeric_limits<double>::epsilon();
    DividedDiffResult r;
    r.table.resize(n);
    std::vector<std::vector<double>> err(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.table[i].resize(i + 1);
        err[i].resize(i + 1);
        r.table[i][0] = f(v[i]);
        err[i][0] = eps * std::abs(r.table[i][0]);
    }
    for (std::size_t i = 1; i < n; ++i) {
        for (std::size_t j = 1; j <= i; ++j) {
            const double den = v[i] - v[i - j];
            const double hi = r.table[i][j - 1];
            const double lo = r.table[i - 1][j - 1];
            r.table[i][j] = (hi - lo) / den;
            err[i][j] = (err[i][j - 1] + err[i - 1][j - 1] + eps * (std::abs(hi) + std::abs(lo))) /
                            std::abs(den) +
                        eps * std::abs(r.table[i][j]);
        }
    }
    r.value = r.table[n - 1][n - 1];
    r.error_estimate = err[n - 1][n - 1];
    return r;
}

// Same recursion at `bits` of precision, for instances the double table
// cannot certify.  Only the exp family is representable here.
inline DividedDiffResult newton_table_precise(std::span<const double> v,
                                              const SmoothExpFamily& f, int bits) {
    const std::size_t n = v.size();
    BigFloat c(f.scale(), bits), cm(bits), tmp(bits);
    mpfr_pow_si(cm.raw(), c.raw(), f.prefactor_power(), MPFR_RNDN);

    std::vector<std::vector<BigFloat>> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        t[i].reserve(i + 1);
        tmp.set(v[i]);
        mpfr_mul(tmp.raw(), tmp.raw(), c.raw(), MPFR_RNDN);
        mpfr_exp(tmp.raw(), tmp.raw(), MPFR_RNDN);
        mpfr_div(tmp.raw(), tmp.raw(), cm.raw(), MPFR_RNDN);
        t[i].emplace_back(tmp);
        for (std::size_t j = 1; j <= i; ++j)
            t[i].emplace_back(bits);
    }
    BigFloat den(bits);
    for (std::size_t i = 1; i < n; ++i)
        for (std::size_t j = 1; j <= i; ++j) {
            den.set(v[i]);
            tmp.set(v[i - j]);
            mpfr_sub(den.raw(), den.raw(), tmp.raw(), MPFR_RNDN);
            mpfr_sub(t[i][j].raw(), t[i][j - 1].raw(), t[i - 1][j - 1].raw(), MPFR_RNDN);
            mpfr_div(t[i][j].raw(), t[i][j].raw(), den.raw(), MPFR_RNDN);
        }

    DividedDiffResult r;
    r.table.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.table[i].resize(i + 1);
        for (std::size_t j = 0; j <= i; ++j)
            r.table[i][j] = t[i][j].to_double();
    }
    r.value = r.table[n - 1][n - 1];
    r.error_estimate = 0.0;
    return r;
}

} // namespace detail

// [v_1,...,v_n]f by the standard recursion
//   [v_i..v_j]f = ([v_{i+1}..v_j]f - [v_i..v_{j-1}]f) / (v_j - v_i),
// base case f(v_i).
template <typename F>
DividedDiffResult divided_difference(const NodeVector& v, F&& f) {
    return detail::newton_table(std::span<const double>(v.values()), std::forward<F>(f));
}

// Exp-family instances recompute at configurable precision whenever the
// double table cannot certify ~12 digits: clustered nodes amplify
// cancellation like the product of inverse gaps, which overall spread alone
// does not control.
inline DividedDiffResult divided_difference(const NodeVector& v, const SmoothExpFamily& f,
                                            const PrecisionConfig& cfg = {}) {
    DividedDiffResult r = detail::newton_table(std::span<const double>(v.values()), f);
    if (r.error_estimate > 1e-12 * std::max(1.0, std::abs(r.value))) {
        check_precision_config(cfg);
        r = detail::newton_table_precise(std::span<const double>(v.values()), f,
                                         cfg.mantissa_bits);
    }
    return r;
}

// Accepts nodes in any order (distinct, finite); sorts into canonical
// increasing order before the recursion.  The divided difference is a
// symmetric function of its nodes, so the value is order-independent.
template <typename F>
DividedDiffResult divided_difference(std::span<const double> unsorted, F&& f) {
    std::vector<double> v(unsorted.begin(), unsorted.end());
    for (std::size_t i = 0; i < v.size(); ++i)
        if (!std::isfinite(v[i]))
            throw ValidationError("NonFinite", "node at position " + std::to_string(i),
                                  static_cast<long>(i));
    std::sort(v.begin(), v.end());
    const NodeVector nodes = validate_nodes(v);
    return divided_difference(nodes, std::forward<F>(f));
}

// First term of the error formula: f^(n-1)(mean(v)) / (n-1)!.
inline double mean_derivative_approx(const NodeVector& v, const SmoothExpFamily& f) {
    const int n = static_cast<int>(v.size());
    const double mean = centered_moments(v).mean;
    return f.derivative(n - 1, mean) / detail::factorial(n - 1);
}

struct ResidualBounds {
    double residual = 0.0;
    double lo = 0.0;
    double hi = 0.0;
};

// residual = [v]f - f^(n-1)(mean)/(n-1)! and the sandwich
//   (S/2) min f^(n+1) / (n+1)!  <=  residual  <=  (S/2) max f^(n+1) / (n+1)!
// with min/max over [v_1, v_n].  f^(n+1) is monotone for the exp family, so
// the extrema sit at the endpoints.
inline ResidualBounds lemma2_residual_bounds(const NodeVector& v, const SmoothExpFamily& f,
                                             const PrecisionConfig& cfg = {}) {
    const int n = static_cast<int>(v.size());
    const double dd = divided_difference(v, f, cfg).value;
    const double approx = mean_derivative_approx(v, f);
    const double s = centered_moments(v).sum_sq;
    const double d_lo = f.derivative(n + 1, v.front());
    const double d_hi = f.derivative(n + 1, v.back());
    const double denom = detail::factorial(n + 1);
    return {dd - approx, 0.5 * s * std::min(d_lo, d_hi) / denom,
            0.5 * s * std::max(d_lo, d_hi) / denom};
}

// p_i = s(x) - x_{n+1-i}; strictly increasing because x is, and
// sum_i p_i = (n-1) s(x).
inline NodeVector p_vector(const NodeVector& x) {
    const double s = node_sum(x);
    const std::size_t n = x.size();
    std::vector<double> p(n);
    for (std::size_t i = 0; i < n; ++i)
        p[i] = s - x[n - 1 - i];
    return validate_nodes(p);
}

struct DdLowerBound {
    double dd = 0.0;
    double bound = 0.0;
};

// The inequality behind the determinant lower bound: with
// f = exp(c alpha)/c^(n-1), c = u_sum/(n-1), the divided difference at the
// p-vector dominates its mean-derivative approximation because f^(n+1) > 0.
// For n = 1 both sides degenerate to f(p_1).
inline DdLowerBound dd_lower_bound_check(const NodeVector& x, double u_sum,
                                         const PrecisionConfig& cfg = {}) {
    if (!(u_sum > 0.0) || !std::isfinite(u_sum))
        throw ValidationError("InvalidUSum", "u_sum must be positive and finite");
    const int n = static_cast<int>(x.size());
    const SmoothExpFamily f =
        n == 1 ? SmoothExpFamily(u_sum, 0)
               : SmoothExpFamily(u_sum / static_cast<double>(n - 1), n - 1);
    const NodeVector p = p_vector(x);
    return {divided_difference(p, f, cfg).value, mean_derivative_approx(p, f)};
}

} // namespace expdet
