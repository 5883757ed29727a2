#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "expdet/errors.hpp"

namespace expdet {

// Deterministic, platform-independent generator for the randomized
// verification harnesses.  splitmix64 core; doubles are built from the top
// 53 bits so the stream never depends on library distribution internals.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [lo, hi).
    double uniform(double lo, double hi) {
        const double u = static_cast<double>(next() >> 11) * 0x1.0p-53;
        return lo + (hi - lo) * u;
    }

    // Uniform integer in [lo, hi], inclusive.
    int uniform_int(int lo, int hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<int>(next() % span);
    }

private:
    std::uint64_t state_;
};

// n sorted nodes uniform in [lo, hi] with every adjacent gap at least
// min_gap, by rejection.  The acceptance probability is near 1 for the
// ranges the harnesses use; the attempt cap only guards against impossible
// requests.
inline std::vector<double> sample_nodes(SplitMix64& rng, int n, double lo, double hi,
                                        double min_gap) {
    if (n < 1)
        throw ValidationError("InvalidArgument", "node count must be positive");
    if (!(hi - lo > (n - 1) * min_gap))
        throw ValidationError("InvalidArgument", "range cannot hold n nodes at min_gap spacing");
    std::vector<double> v(n);
    for (int attempt = 0; attempt < 100000; ++attempt) {
        for (int i = 0; i < n; ++i)
            v[i] = rng.uniform(lo, hi);
        std::sort(v.begin(), v.end());
        bool ok = true;
        for (int i = 1; i < n; ++i)
            if (!(v[i] - v[i - 1] >= min_gap)) {
                ok = false;
                break;
            }
        if (ok)
            return v;
    }
    throw ValidationError("InvalidArgument", "node sampling failed to satisfy min_gap");
}

} // namespace expdet
