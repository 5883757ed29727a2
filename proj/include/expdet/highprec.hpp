#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <mpfr.h>

#include "expdet/errors.hpp"

namespace expdet {

// Working-precision policy for the determinant oracles.  agree_tol is the
// relative agreement required between two consecutive precision levels before
// a value is accepted.
struct PrecisionConfig {
    int mantissa_bits = 256;
    int max_escalations = 4;
    double agree_tol = 1e-20;
};

inline void check_precision_config(const PrecisionConfig& cfg) {
    if (cfg.mantissa_bits < 64)
        throw ValidationError("InvalidPrecision", "mantissa_bits must be at least 64");
    if (cfg.max_escalations < 1)
        throw ValidationError("InvalidPrecision", "max_escalations must be at least 1");
    if (!(cfg.agree_tol > 0.0))
        throw ValidationError("InvalidPrecision", "agree_tol must be positive");
}

// Sign + natural log of magnitude.  sign == 0 represents exactly zero and
// leaves log_abs meaningless.  Every determinant and bound in the library
// lives in this form; exponentiation happens only at the presentation layer.
struct LogNumber {
    int sign = 0;
    double log_abs = 0.0;
};

class PrecisionExhausted : public Error {
public:
    PrecisionExhausted(const std::string& message, LogNumber coarse = {}, LogNumber fine = {})
        : Error("PrecisionExhausted", message), coarse_(coarse), fine_(fine) {}

    LogNumber coarse() const { return coarse_; }
    LogNumber fine() const { return fine_; }

private:
    LogNumber coarse_;
    LogNumber fine_;
};

// Value-semantics wrapper over mpfr_t.  Precision is carried per value and
// passed explicitly by every constructor; there is no ambient default.
class BigFloat {
public:
    explicit BigFloat(int bits) {
        mpfr_init2(v_, bits);
        mpfr_set_zero(v_, +1);
    }
    BigFloat(double value, int bits) {
        mpfr_init2(v_, bits);
        mpfr_set_d(v_, value, MPFR_RNDN);
    }
    BigFloat(const BigFloat& o) {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_set(v_, o.v_, MPFR_RNDN);
    }
    BigFloat(BigFloat&& o) noexcept {
        mpfr_init2(v_, mpfr_get_prec(o.v_));
        mpfr_swap(v_, o.v_);
    }
    BigFloat& operator=(const BigFloat& o) {
        if (this != &o) {
            mpfr_set_prec(v_, mpfr_get_prec(o.v_));
            mpfr_set(v_, o.v_, MPFR_RNDN);
        }
        return *this;
    }
    BigFloat& operator=(BigFloat&& o) noexcept {
        if (this != &o)
            mpfr_swap(v_, o.v_);
        return *this;
    }
    ~BigFloat() { mpfr_clear(v_); }

    int precision_bits() const { return static_cast<int>(mpfr_get_prec(v_)); }
    double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }
    bool is_zero() const { return mpfr_zero_p(v_) != 0; }
    int sign() const { return mpfr_sgn(v_); }

    void set(double x) { mpfr_set_d(v_, x, MPFR_RNDN); }

    mpfr_ptr raw() { return v_; }
    mpfr_srcptr raw() const { return v_; }

    friend BigFloat operator+(const BigFloat& a, const BigFloat& b) {
        BigFloat r(std::max(a.precision_bits(), b.precision_bits()));
        mpfr_add(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator-(const BigFloat& a, const BigFloat& b) {
        BigFloat r(std::max(a.precision_bits(), b.precision_bits()));
        mpfr_sub(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator*(const BigFloat& a, const BigFloat& b) {
        BigFloat r(std::max(a.precision_bits(), b.precision_bits()));
        mpfr_mul(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }
    friend BigFloat operator/(const BigFloat& a, const BigFloat& b) {
        BigFloat r(std::max(a.precision_bits(), b.precision_bits()));
        mpfr_div(r.v_, a.v_, b.v_, MPFR_RNDN);
        return r;
    }

    static BigFloat exp_of(const BigFloat& a) {
        BigFloat r(a.precision_bits());
        mpfr_exp(r.v_, a.v_, MPFR_RNDN);
        return r;
    }
    // ln |a|; caller guarantees a != 0.
    static BigFloat log_abs_of(const BigFloat& a) {
        BigFloat r(a.precision_bits());
        mpfr_abs(r.v_, a.v_, MPFR_RNDN);
        mpfr_log(r.v_, r.v_, MPFR_RNDN);
        return r;
    }
    static int cmp_abs(const BigFloat& a, const BigFloat& b) {
        return mpfr_cmpabs(a.v_, b.v_);
    }

private:
    mpfr_t v_;
};

// Dense matrix of BigFloat entries, all at one precision.
class PrecMatrix {
public:
    PrecMatrix(int rows, int cols, int bits)
        : rows_(rows), cols_(cols), bits_(bits), data_() {
        if (rows < 1 || cols < 1)
            throw ValidationError("InvalidArgument", "matrix dimensions must be positive");
        data_.reserve(static_cast<std::size_t>(rows) * cols);
        for (long i = 0; i < static_cast<long>(rows) * cols; ++i)
            data_.emplace_back(bits);
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    int precision_bits() const { return bits_; }

    BigFloat& at(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    const BigFloat& at(int i, int j) const {
        return data_[static_cast<std::size_t>(i) * cols_ + j];
    }

    void set(int i, int j, double v) { at(i, j).set(v); }

    void swap_rows(int a, int b) {
        for (int j = 0; j < cols_; ++j)
            std::swap(at(a, j), at(b, j));
    }

private:
    int rows_, cols_, bits_;
    std::vector<BigFloat> data_;
};

// Row-pivoted LU carried out entirely at the matrix's precision.  Partial
// pivoting by magnitude; an exactly zero pivot column marks the matrix
// singular (determinant sign 0).
class LuFactorization {
public:
    explicit LuFactorization(PrecMatrix a) : a_(std::move(a)) {
        if (a_.rows() != a_.cols())
            throw ValidationError("DimensionMismatch", "lu_logdet requires a square matrix");
        const int n = a_.rows();
        const int bits = a_.precision_bits();
        perm_.resize(n);
        std::iota(perm_.begin(), perm_.end(), 0);

        BigFloat ratio(bits), tmp(bits);
        int parity = +1;
        for (int k = 0; k < n; ++k) {
            int p = k;
            for (int i = k + 1; i < n; ++i)
                if (BigFloat::cmp_abs(a_.at(i, k), a_.at(p, k)) > 0)
                    p = i;
            if (a_.at(p, k).is_zero()) {
                singular_ = true;
                logdet_ = LogNumber{0, 0.0};
                return;
            }
            if (p != k) {
                a_.swap_rows(p, k);
                std::swap(perm_[p], perm_[k]);
                parity = -parity;
            }
            for (int i = k + 1; i < n; ++i) {
                if (a_.at(i, k).is_zero())
                    continue;
                mpfr_div(ratio.raw(), a_.at(i, k).raw(), a_.at(k, k).raw(), MPFR_RNDN);
                mpfr_set(a_.at(i, k).raw(), ratio.raw(), MPFR_RNDN); // keep multiplier for solves
                for (int j = k + 1; j < n; ++j) {
                    mpfr_mul(tmp.raw(), ratio.raw(), a_.at(k, j).raw(), MPFR_RNDN);
                    mpfr_sub(a_.at(i, j).raw(), a_.at(i, j).raw(), tmp.raw(), MPFR_RNDN);
                }
            }
        }

        int sign = parity;
        BigFloat logabs(bits);
        for (int k = 0; k < n; ++k) {
            const BigFloat& piv = a_.at(k, k);
            if (piv.sign() < 0)
                sign = -sign;
            tmp = BigFloat::log_abs_of(piv);
            mpfr_add(logabs.raw(), logabs.raw(), tmp.raw(), MPFR_RNDN);
        }
        logdet_ = LogNumber{sign, logabs.to_double()};
    }

    bool singular() const { return singular_; }
    LogNumber logdet() const { return logdet_; }

    // Solves A x = rhs using the stored factors; the whole substitution runs
    // at the factorization precision and is rounded to double on exit.
    std::vector<double> solve(std::span<const double> rhs) const {
        const int n = a_.rows();
        if (static_cast<int>(rhs.size()) != n)
            throw ValidationError("DimensionMismatch", "rhs length does not match matrix order");
        if (singular_)
            throw CheckFailure("SingularMatrix", "cannot solve with a singular factorization");
        const int bits = a_.precision_bits();
        std::vector<BigFloat> y;
        y.reserve(n);
        for (int i = 0; i < n; ++i)
            y.emplace_back(rhs[perm_[i]], bits);
        BigFloat tmp(bits);
        for (int i = 1; i < n; ++i)
            for (int k = 0; k < i; ++k) {
                mpfr_mul(tmp.raw(), a_.at(i, k).raw(), y[k].raw(), MPFR_RNDN);
                mpfr_sub(y[i].raw(), y[i].raw(), tmp.raw(), MPFR_RNDN);
            }
        for (int i = n - 1; i >= 0; --i) {
            for (int k = i + 1; k < n; ++k) {
                mpfr_mul(tmp.raw(), a_.at(i, k).raw(), y[k].raw(), MPFR_RNDN);
                mpfr_sub(y[i].raw(), y[i].raw(), tmp.raw(), MPFR_RNDN);
            }
            mpfr_div(y[i].raw(), y[i].raw(), a_.at(i, i).raw(), MPFR_RNDN);
        }
        std::vector<double> out(n);
        for (int i = 0; i < n; ++i)
            out[i] = y[i].to_double();
        return out;
    }

private:
    PrecMatrix a_;
    std::vector<int> perm_;
    bool singular_ = false;
    LogNumber logdet_{};
};

inline LogNumber lu_logdet(PrecMatrix a) { return LuFactorization(std::move(a)).logdet(); }

struct EscalationResult {
    LogNumber value{};
    double achieved_rel_tol = 0.0;
    int bits_used = 0;
};

// Runs `compute` at cfg.mantissa_bits and at twice that; accepts the
// higher-precision value once two consecutive levels agree in sign and in
// log_abs to agree_tol (relative, floored at scale 1).  Otherwise keeps
// doubling, up to max_escalations comparisons.
template <typename Compute>
EscalationResult escalate(Compute&& compute, const PrecisionConfig& cfg) {
    check_precision_config(cfg);
    int bits = cfg.mantissa_bits;
    LogNumber coarse = compute(bits);
    for (int step = 0; step < cfg.max_escalations; ++step) {
        const LogNumber fine = compute(2 * bits);
        if (coarse.sign == fine.sign) {
            if (coarse.sign == 0)
                return {fine, 0.0, 2 * bits};
            const double diff = std::abs(coarse.log_abs - fine.log_abs);
            const double scale =
                std::max({1.0, std::abs(coarse.log_abs), std::abs(fine.log_abs)});
            if (diff <= cfg.agree_tol * scale)
                return {fine, diff / scale, 2 * bits};
        }
        if (step == cfg.max_escalations - 1)
            throw PrecisionExhausted(
                "values failed to agree after " + std::to_string(cfg.max_escalations) +
                    " precision doublings (last at " + std::to_string(2 * bits) + " bits)",
                coarse, fine);
        coarse = fine;
        bits *= 2;
    }
    throw PrecisionExhausted("unreachable"); // max_escalations >= 1 guarantees the loop throws
}

} // namespace expdet
