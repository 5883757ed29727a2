#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "expdet/expdet.hpp"
#include "expdet/highprec.hpp"
#include "expdet/nodes.hpp"

namespace expdet {

// Nodes t plus shape parameter lambda > 0 defining B = [exp(-l (t_j-t_i)^2/2)].
// Input nodes may arrive unsorted (the determinant is invariant under
// simultaneous row/column permutation); they are sorted on ingestion and
// duplicates are rejected.
class GaussianModel {
public:
    GaussianModel(std::span<const double> t_raw, double lambda) : lambda_(lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ValidationError("InvalidLambda", "lambda must be positive and finite");
        std::vector<double> t(t_raw.begin(), t_raw.end());
        for (std::size_t i = 0; i < t.size(); ++i)
            if (!std::isfinite(t[i]))
                throw ValidationError("NonFinite",
                                      "node at position " + std::to_string(i) + " is not finite",
                                      static_cast<long>(i));
        std::sort(t.begin(), t.end());
        nodes_.emplace(validate_nodes(t));
    }

    GaussianModel(NodeVector t, double lambda) : lambda_(lambda) {
        if (!(lambda > 0.0) || !std::isfinite(lambda))
            throw ValidationError("InvalidLambda", "lambda must be positive and finite");
        nodes_.emplace(std::move(t));
    }

    const NodeVector& nodes() const { return *nodes_; }
    double lambda() const { return lambda_; }
    int n() const { return static_cast<int>(nodes_->size()); }

private:
    std::optional<NodeVector> nodes_;
    double lambda_;
};

// Symmetric with unit diagonal; every entry in (0, 1].
inline PrecMatrix build_gaussian(const GaussianModel& model, int bits) {
    const int n = model.n();
    const NodeVector& t = model.nodes();
    PrecMatrix b(n, n, bits);
    BigFloat diff(bits), lam(model.lambda(), bits);
    for (int i = 0; i < n; ++i) {
        b.set(i, i, 1.0);
        for (int j = i + 1; j < n; ++j) {
            diff.set(t[j]);
            mpfr_sub_d(diff.raw(), diff.raw(), t[i], MPFR_RNDN);
            mpfr_sqr(diff.raw(), diff.raw(), MPFR_RNDN);
            mpfr_mul(diff.raw(), diff.raw(), lam.raw(), MPFR_RNDN);
            mpfr_div_2ui(diff.raw(), diff.raw(), 1, MPFR_RNDN);
            mpfr_neg(diff.raw(), diff.raw(), MPFR_RNDN);
            mpfr_exp(b.at(i, j).raw(), diff.raw(), MPFR_RNDN);
            b.at(j, i) = b.at(i, j);
        }
    }
    return b;
}

inline PrecMatrix build_gaussian(const GaussianModel& model, const PrecisionConfig& cfg) {
    check_precision_config(cfg);
    return build_gaussian(model, cfg.mantissa_bits);
}

// det(B) > 0: B is a diagonal scaling of an exponential matrix, so a
// nonpositive sign after escalation is an arithmetic defect.
inline EscalationResult logdet_gaussian_report(const GaussianModel& model,
                                               const PrecisionConfig& cfg = {}) {
    EscalationResult r =
        escalate([&](int bits) { return lu_logdet(build_gaussian(model, bits)); }, cfg);
    if (r.value.sign != +1)
        throw CheckFailure("PositivityViolated",
                           "determinant of a Gaussian kernel matrix came out nonpositive");
    return r;
}

inline LogNumber logdet_gaussian(const GaussianModel& model, const PrecisionConfig& cfg = {}) {
    return logdet_gaussian_report(model, cfg).value;
}

// Certificate
//   log_upper = N ln(lambda) - ln c_n + 2 ln V(t)
//   log_lower = log_upper - lambda S
// with N = n(n-1)/2 and S the centered second moment of the nodes.  For
// n = 1 both collapse to 0 = ln det([1]).
inline LogBounds gaussian_bounds(const GaussianModel& model) {
    const int n = model.n();
    const double big_n = 0.5 * n * (n - 1);
    const double s = centered_moments(model.nodes()).sum_sq;
    const double upper = big_n * std::log(model.lambda()) - log_superfactorial(n) +
                         2.0 * log_vandermonde(model.nodes());
    return {upper - model.lambda() * s, upper};
}

// ln f(lambda) = N ln(lambda) - lambda S, the log of the lower-bound factor
// the shape selection maximizes.
inline double shape_objective(const NodeVector& t, double lambda) {
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ValidationError("InvalidLambda", "lambda must be positive and finite");
    const int n = static_cast<int>(t.size());
    if (n < 2)
        throw ValidationError("DegenerateNodes", "shape objective requires n >= 2");
    const double big_n = 0.5 * n * (n - 1);
    return big_n * std::log(lambda) - lambda * centered_moments(t).sum_sq;
}

// lambda* = N / S, the unique stationary point of lambda^N exp(-lambda S).
// Scales like inverse squared distances among the nodes.
inline double select_shape(const NodeVector& t) {
    const int n = static_cast<int>(t.size());
    if (n < 2)
        throw ValidationError("DegenerateNodes",
                              "shape selection needs n >= 2 (S = 0 has no finite maximizer)");
    const double big_n = 0.5 * n * (n - 1);
    return big_n / centered_moments(t).sum_sq;
}

struct InterpolationResult {
    std::vector<double> coefficients;
    double lambda = 0.0;
    double residual_inf = 0.0;
    int bits_used = 0;
};

namespace detail {

inline double gaussian_entry(double lambda, double a, double b) {
    const double d = a - b;
    return std::exp(-0.5 * lambda * d * d);
}

inline void check_values(std::span<const double> values) {
    for (std::size_t i = 0; i < values.size(); ++i)
        if (!std::isfinite(values[i]))
            throw ValidationError("NonFinite",
                                  "value at position " + std::to_string(i) + " is not finite",
                                  static_cast<long>(i));
}

} // namespace detail

// Solves B c = values at working precision, escalating until the delivered
// double coefficients reproduce the data to 1e-8 relative in the infinity
// norm.  Near-singular B (tiny lambda * spread^2) exhausts escalation
// instead of returning garbage.
inline InterpolationResult interpolate(const NodeVector& t, std::span<const double> values,
                                       std::optional<double> lambda_opt,
                                       const PrecisionConfig& cfg = {}) {
    if (values.size() != t.size())
        throw ValidationError("DimensionMismatch", "values length must match node count");
    detail::check_values(values);
    check_precision_config(cfg);
    const double lambda = lambda_opt ? *lambda_opt : select_shape(t);
    const GaussianModel model(t, lambda);

    double vnorm = 0.0;
    for (double v : values)
        vnorm = std::max(vnorm, std::abs(v));

    int bits = cfg.mantissa_bits;
    double last_residual = 0.0;
    for (int attempt = 0; attempt <= cfg.max_escalations; ++attempt, bits *= 2) {
        const LuFactorization lu(build_gaussian(model, bits));
        if (lu.singular()) {
            last_residual = std::numeric_limits<double>::infinity();
            continue;
        }
        std::vector<double> c = lu.solve(values);
        double residual = 0.0;
        for (std::size_t i = 0; i < t.size(); ++i) {
            CompensatedSum row;
            for (std::size_t j = 0; j < t.size(); ++j)
                row.add(detail::gaussian_entry(lambda, t[i], t[j]) * c[j]);
            residual = std::max(residual, std::abs(row.value() - values[i]));
        }
        if (residual <= 1e-8 * vnorm)
            return {std::move(c), lambda, residual, bits};
        last_residual = residual;
    }
    char detail[64];
    std::snprintf(detail, sizeof(detail), "%.3e", last_residual);
    throw PrecisionExhausted("interpolation residual stayed above 1e-8 * ||values|| "
                             "(last residual " +
                             std::string(detail) + "); system is near singular");
}

// s(q) = sum_j c_j exp(-lambda (q - t_j)^2 / 2).
inline std::vector<double> evaluate(const NodeVector& t, std::span<const double> coefficients,
                                    double lambda, std::span<const double> queries) {
    if (coefficients.size() != t.size())
        throw ValidationError("DimensionMismatch", "coefficient length must match node count");
    if (!(lambda > 0.0) || !std::isfinite(lambda))
        throw ValidationError("InvalidLambda", "lambda must be positive and finite");
    std::vector<double> out;
    out.reserve(queries.size());
    for (double q : queries) {
        CompensatedSum acc;
        for (std::size_t j = 0; j < t.size(); ++j)
            acc.add(coefficients[j] * detail::gaussian_entry(lambda, q, t[j]));
        out.push_back(acc.value());
    }
    return out;
}

// Leave-one-out residuals by the closed form e_k = c_k / (B^{-1})_{kk},
// returned as a root mean square.  One factorization serves the data solve
// and the n unit-vector solves for the inverse diagonal.
inline double loocv_error(const NodeVector& t, std::span<const double> values, double lambda,
                          const PrecisionConfig& cfg = {}) {
    const int n = static_cast<int>(t.size());
    if (n < 2)
        throw ValidationError("DegenerateNodes", "leave-one-out needs n >= 2");
    if (values.size() != t.size())
        throw ValidationError("DimensionMismatch", "values length must match node count");
    detail::check_values(values);
    check_precision_config(cfg);
    const GaussianModel model(t, lambda);

    int bits = cfg.mantissa_bits;
    for (int attempt = 0; attempt <= cfg.max_escalations; ++attempt, bits *= 2) {
        const LuFactorization lu(build_gaussian(model, bits));
        if (lu.singular())
            continue;
        const std::vector<double> c = lu.solve(values);
        std::vector<double> unit(n, 0.0);
        CompensatedSum sq;
        bool ok = true;
        for (int k = 0; k < n && ok; ++k) {
            unit[k] = 1.0;
            const double dkk = lu.solve(unit)[k];
            unit[k] = 0.0;
            if (dkk == 0.0 || !std::isfinite(dkk)) {
                ok = false;
                break;
            }
            const double ek = c[k] / dkk;
            sq.add(ek * ek);
        }
        if (ok)
            return std::sqrt(sq.value() / n);
    }
    throw PrecisionExhausted("leave-one-out diagonal could not be resolved; "
                             "system is near singular");
}

// One sweep row per lambda.  A failing row carries the error code and leaves
// the sweep running; emission order always matches grid order.
struct SweepRow {
    double lambda = 0.0;
    double log_f_objective = 0.0;
    double log_lower = 0.0;
    double log_det = 0.0;
    double log_upper = 0.0;
    std::optional<double> loocv_error;
    bool ok = false;
    std::string error;
};

inline std::vector<SweepRow> sweep(const NodeVector& t, std::span<const double> lambda_grid,
                                   const std::optional<std::vector<double>>& values = {},
                                   const PrecisionConfig& cfg = {}) {
    if (lambda_grid.empty())
        throw ValidationError("InvalidLambda", "lambda grid is empty");
    for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
        if (!(lambda_grid[i] > 0.0) || !std::isfinite(lambda_grid[i]))
            throw ValidationError("InvalidLambda", "grid lambda must be positive and finite",
                                  static_cast<long>(i));
        if (i > 0 && !(lambda_grid[i - 1] < lambda_grid[i]))
            throw ValidationError("InvalidLambda", "lambda grid must be strictly ascending",
                                  static_cast<long>(i));
    }
    std::vector<SweepRow> rows;
    rows.reserve(lambda_grid.size());
    for (double lambda : lambda_grid) {
        SweepRow row;
        row.lambda = lambda;
        try {
            row.log_f_objective = shape_objective(t, lambda);
            const GaussianModel model(t, lambda);
            const LogBounds b = gaussian_bounds(model);
            row.log_lower = b.log_lower;
            row.log_upper = b.log_upper;
            row.log_det = logdet_gaussian(model, cfg).log_abs;
            if (values)
                row.loocv_error = loocv_error(t, *values, lambda, cfg);
            row.ok = true;
        } catch (const Error& e) {
            row.ok = false;
            row.error = e.code();
        }
        rows.push_back(std::move(row));
    }
    return rows;
}

} // namespace expdet
