#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "expdet/highprec.hpp"
#include "expdet/nodes.hpp"

namespace expdet {

// The pair (x, y) defining A = [exp(x_i y_j)].
class ExpMatrixSpec {
public:
    ExpMatrixSpec(NodeVector x, NodeVector y) : x_(std::move(x)), y_(std::move(y)) {
        if (x_.size() != y_.size())
            throw ValidationError("DimensionMismatch", "x and y must have equal length");
    }

    const NodeVector& x() const { return x_; }
    const NodeVector& y() const { return y_; }
    int n() const { return static_cast<int>(x_.size()); }

private:
    NodeVector x_;
    NodeVector y_;
};

// A (log_lower, log_upper) certificate for a log-determinant.
struct LogBounds {
    double log_lower = 0.0;
    double log_upper = 0.0;
};

// Entry (i,j) = exp(x_i * y_j), the product rounded once at `bits` and the
// exponential correctly rounded there.  The entries are the only data; their
// error floor bounds everything the oracle produces.
inline PrecMatrix build_matrix(const ExpMatrixSpec& spec, int bits) {
    const int n = spec.n();
    PrecMatrix a(n, n, bits);
    BigFloat xi(bits), yj(bits);
    for (int i = 0; i < n; ++i) {
        xi.set(spec.x()[i]);
        for (int j = 0; j < n; ++j) {
            yj.set(spec.y()[j]);
            mpfr_mul(a.at(i, j).raw(), xi.raw(), yj.raw(), MPFR_RNDN);
            mpfr_exp(a.at(i, j).raw(), a.at(i, j).raw(), MPFR_RNDN);
        }
    }
    return a;
}

inline PrecMatrix build_matrix(const ExpMatrixSpec& spec, const PrecisionConfig& cfg) {
    check_precision_config(cfg);
    return build_matrix(spec, cfg.mantissa_bits);
}

// High-precision ln det(A) with escalation.  det(A) > 0 for every valid spec;
// any other sign after escalation is an arithmetic defect, not a math
// outcome.
inline EscalationResult logdet_exp_report(const ExpMatrixSpec& spec,
                                          const PrecisionConfig& cfg = {}) {
    EscalationResult r =
        escalate([&](int bits) { return lu_logdet(build_matrix(spec, bits)); }, cfg);
    if (r.value.sign != +1)
        throw CheckFailure("PositivityViolated",
                           "determinant of an exponential matrix came out nonpositive");
    return r;
}

inline LogNumber logdet_exp(const ExpMatrixSpec& spec, const PrecisionConfig& cfg = {}) {
    return logdet_exp_report(spec, cfg).value;
}

inline double dot_product(const NodeVector& a, const NodeVector& b) {
    CompensatedSum acc;
    for (std::size_t i = 0; i < a.size(); ++i)
        acc.add(a[i] * b[i]);
    return acc.value();
}

// Hadamard bound for totally positive matrices: det(A) <= prod of diagonal
// entries, i.e. ln det(A) <= sum_i x_i y_i.
inline double hadamard_log_upper(const ExpMatrixSpec& spec) {
    return dot_product(spec.x(), spec.y());
}

// Certificate
//   log_lower = ln V(x) + ln V(y) - ln c_n + s(x) s(y) / n
//   log_upper = ln V(x) + ln V(y) - ln c_n + sum_i x_i y_i
// For n = 1 every term but the diagonal sum vanishes and both collapse to
// x_1 y_1.  Evaluated in double: these are short, well-conditioned sums of
// logs; only the oracle needs extended precision.
inline LogBounds theorem_bounds(const ExpMatrixSpec& spec) {
    const double n = static_cast<double>(spec.n());
    const double base = log_vandermonde(spec.x()) + log_vandermonde(spec.y()) -
                        log_superfactorial(spec.n());
    const double lower = base + node_sum(spec.x()) * node_sum(spec.y()) / n;
    const double upper = base + dot_product(spec.x(), spec.y());
    return {lower, upper};
}

struct TotalPositivityReport {
    double min_log_minor = 0.0;
    std::vector<int> witness_rows;
    std::vector<int> witness_cols;
    long minors_checked = 0;
};

namespace detail {

inline std::vector<int> mask_to_indices(unsigned mask) {
    std::vector<int> idx;
    for (int b = 0; mask != 0; ++b, mask >>= 1)
        if (mask & 1u)
            idx.push_back(b);
    return idx;
}

} // namespace detail

// Enumerates every square submatrix (all equal-size row/column subsets) and
// checks each minor's sign via lu_logdet at cfg.mantissa_bits.  The count is
// sum_k C(n,k)^2 = C(2n,n) - 1, hence the max_n guard.
inline TotalPositivityReport total_positivity_check(const ExpMatrixSpec& spec,
                                                    const PrecisionConfig& cfg = {},
                                                    int max_n = 6) {
    check_precision_config(cfg);
    const int n = spec.n();
    if (n > max_n)
        throw ValidationError("NTooLarge",
                              "total_positivity_check supports n <= " + std::to_string(max_n));
    const PrecMatrix full = build_matrix(spec, cfg.mantissa_bits);

    TotalPositivityReport report;
    bool have_min = false;
    const unsigned limit = 1u << n;
    for (unsigned rmask = 1; rmask < limit; ++rmask) {
        const std::vector<int> rows = detail::mask_to_indices(rmask);
        for (unsigned cmask = 1; cmask < limit; ++cmask) {
            if (__builtin_popcount(cmask) != static_cast<int>(rows.size()))
                continue;
            const std::vector<int> cols = detail::mask_to_indices(cmask);
            const int k = static_cast<int>(rows.size());
            PrecMatrix sub(k, k, cfg.mantissa_bits);
            for (int i = 0; i < k; ++i)
                for (int j = 0; j < k; ++j)
                    sub.at(i, j) = full.at(rows[i], cols[j]);
            const LogNumber minor = lu_logdet(std::move(sub));
            ++report.minors_checked;
            if (minor.sign != +1)
                throw CheckFailure("PositivityViolated",
                                   "minor with nonpositive sign at row set {" +
                                       std::to_string(rmask) + "}, col set {" +
                                       std::to_string(cmask) + "}");
            if (!have_min || minor.log_abs < report.min_log_minor) {
                have_min = true;
                report.min_log_minor = minor.log_abs;
                report.witness_rows = rows;
                report.witness_cols = cols;
            }
        }
    }
    return report;
}

} // namespace expdet
