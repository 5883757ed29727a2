#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "expdet/errors.hpp"

namespace expdet {

// Neumaier's variant of compensated summation.  Sums that feed exponents
// (node sums, centered second moments) go through this so cancellation does
// not leak into bound certificates.
class CompensatedSum {
public:
    void add(double x) {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            comp_ += (sum_ - t) + x;
        else
            comp_ += (x - t) + sum_;
        sum_ = t;
    }

    double value() const { return sum_ + comp_; }

private:
    double sum_ = 0.0;
    double comp_ = 0.0;
};

// A finite, strictly increasing sequence of reals.  Houses every node set in
// the library (x, y, t, v, u, p).  Construction goes through validate_nodes;
// an instance is immutable afterwards.
class NodeVector {
public:
    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t i) const { return values_[i]; }
    double front() const { return values_.front(); }
    double back() const { return values_.back(); }
    const std::vector<double>& values() const { return values_; }

    auto begin() const { return values_.begin(); }
    auto end() const { return values_.end(); }

    friend NodeVector validate_nodes(std::span<const double> raw);

private:
    explicit NodeVector(std::vector<double> v) : values_(std::move(v)) {}
    std::vector<double> values_;
};

// Errors name the offending position.  Ties are rejected, never perturbed:
// every formula downstream assumes strict ordering.
inline NodeVector validate_nodes(std::span<const double> raw) {
    if (raw.empty())
        throw ValidationError("Empty", "node list is empty");
    std::vector<double> v(raw.begin(), raw.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i]))
            throw ValidationError("NonFinite",
                                  "node at position " + std::to_string(i) + " is not finite",
                                  static_cast<long>(i));
    }
    for (std::size_t i = 1; i < v.size(); ++i) {
        if (!(v[i - 1] < v[i]))
            throw ValidationError("NotStrictlyIncreasing",
                                  "node at position " + std::to_string(i) +
                                      " does not exceed its predecessor",
                                  static_cast<long>(i));
    }
    return NodeVector(std::move(v));
}

// ln prod_{i<j} (x_j - x_i).  Factors are positive by strict ordering; the
// empty product (n = 1) gives 0.
inline double log_vandermonde(const NodeVector& nodes) {
    CompensatedSum acc;
    const std::size_t n = nodes.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            acc.add(std::log(nodes[j] - nodes[i]));
    return acc.value();
}

// ln prod_{i=1}^{n-1} i! ; n = 1 gives the empty product.
inline double log_superfactorial(int n) {
    if (n < 1)
        throw ValidationError("InvalidArgument", "log_superfactorial requires n >= 1");
    CompensatedSum acc;
    for (int i = 1; i <= n - 1; ++i)
        acc.add(std::lgamma(static_cast<double>(i) + 1.0));
    return acc.value();
}

inline double node_sum(const NodeVector& nodes) {
    CompensatedSum acc;
    for (double v : nodes)
        acc.add(v);
    return acc.value();
}

struct CenteredMoments {
    double mean = 0.0;
    double sum_sq = 0.0; // S = sum_i (v_i - mean)^2
};

// Two-pass centered formula; S enters exponents, so both passes are
// compensated.
inline CenteredMoments centered_moments(const NodeVector& nodes) {
    const double n = static_cast<double>(nodes.size());
    const double mean = node_sum(nodes) / n;
    CompensatedSum acc;
    for (double v : nodes) {
        const double d = v - mean;
        acc.add(d * d);
    }
    return {mean, acc.value()};
}

} // namespace expdet
