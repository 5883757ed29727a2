#include "doctest.h"

#include <cmath>
#include <limits>
#include <vector>

#include "expdet/nodes.hpp"
#include "expdet/random.hpp"

using namespace expdet;

TEST_CASE("validate_nodes accepts strictly increasing finite input") {
    const NodeVector v = validate_nodes(std::vector<double>{0.0, 1.0, 2.0});
    CHECK(v.size() == 3);
    CHECK(v[0] == 0.0);
    CHECK(v[2] == 2.0);
}

TEST_CASE("validate_nodes rejects ties, empties, and non-finite entries") {
    CHECK_THROWS_WITH_AS(validate_nodes(std::vector<double>{}), doctest::Contains("empty"),
                         ValidationError);
    try {
        validate_nodes(std::vector<double>{1.0, 1.0});
        FAIL("tie not rejected");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "NotStrictlyIncreasing");
        CHECK(e.index() == 1);
    }
    try {
        validate_nodes(std::vector<double>{2.0, 1.0});
        FAIL("descending not rejected");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "NotStrictlyIncreasing");
    }
    try {
        validate_nodes(std::vector<double>{0.0, std::numeric_limits<double>::quiet_NaN(), 2.0});
        FAIL("NaN not rejected");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "NonFinite");
        CHECK(e.index() == 1);
    }
    try {
        validate_nodes(std::vector<double>{});
        FAIL("empty not rejected");
    } catch (const ValidationError& e) {
        CHECK(e.code() == "Empty");
    }
}

TEST_CASE("validate_nodes is idempotent on its own output") {
    SplitMix64 rng(7);
    for (int trial = 0; trial < 50; ++trial) {
        const auto raw = sample_nodes(rng, rng.uniform_int(1, 8), -5.0, 5.0, 1e-4);
        const NodeVector once = validate_nodes(raw);
        const NodeVector twice = validate_nodes(once.values());
        CHECK(once.values() == twice.values());
    }
}

TEST_CASE("log_vandermonde on fixtures") {
    CHECK(log_vandermonde(validate_nodes(std::vector<double>{0.0, 1.0})) == doctest::Approx(0.0).epsilon(1e-15));
    CHECK(log_vandermonde(validate_nodes(std::vector<double>{1.0, 2.0, 3.0})) ==
          doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(log_vandermonde(validate_nodes(std::vector<double>{5.0})) == 0.0);
}

TEST_CASE("log_vandermonde translation and scaling laws") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.uniform_int(2, 7);
        const auto raw = sample_nodes(rng, n, -3.0, 3.0, 1e-3);
        const double base = log_vandermonde(validate_nodes(raw));

        const double shift = rng.uniform(-20.0, 20.0);
        std::vector<double> shifted = raw;
        for (double& v : shifted)
            v += shift;
        CHECK(log_vandermonde(validate_nodes(shifted)) == doctest::Approx(base).epsilon(1e-12));

        const double a = std::exp(rng.uniform(-1.5, 1.5));
        std::vector<double> scaled = raw;
        for (double& v : scaled)
            v *= a;
        const double pairs = 0.5 * n * (n - 1);
        CHECK(log_vandermonde(validate_nodes(scaled)) ==
              doctest::Approx(base + pairs * std::log(a)).epsilon(1e-11));
    }
}

TEST_CASE("log_superfactorial fixtures") {
    CHECK(log_superfactorial(1) == 0.0);
    CHECK(log_superfactorial(3) == doctest::Approx(std::log(2.0)).epsilon(1e-15));
    CHECK(log_superfactorial(5) == doctest::Approx(std::log(288.0)).epsilon(1e-15));
}

TEST_CASE("node_sum fixtures") {
    CHECK(node_sum(validate_nodes(std::vector<double>{0.0, 1.0, 2.0})) == 3.0);
    CHECK(node_sum(validate_nodes(std::vector<double>{-1.0, 1.0})) == 0.0);
    const double s = node_sum(validate_nodes(std::vector<double>{0.1, 0.2, 0.3}));
    CHECK(std::abs(s - 0.6) <= std::ldexp(1.0, -53)); // within 1 ulp of 0.6
}

TEST_CASE("centered_moments fixtures") {
    const auto m2 = centered_moments(validate_nodes(std::vector<double>{0.0, 1.0}));
    CHECK(m2.mean == doctest::Approx(0.5).epsilon(1e-15));
    CHECK(m2.sum_sq == doctest::Approx(0.5).epsilon(1e-15));

    const auto m3 = centered_moments(validate_nodes(std::vector<double>{0.0, 1.0, 2.0}));
    CHECK(m3.mean == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m3.sum_sq == doctest::Approx(2.0).epsilon(1e-15));

    const auto m1 = centered_moments(validate_nodes(std::vector<double>{-4.25}));
    CHECK(m1.mean == -4.25);
    CHECK(m1.sum_sq == 0.0);
}

TEST_CASE("centered second moment is translation invariant and scales as a^2") {
    SplitMix64 rng(13);
    for (int trial = 0; trial < 100; ++trial) {
        const int n = rng.uniform_int(2, 7);
        const auto raw = sample_nodes(rng, n, -3.0, 3.0, 1e-3);
        const double s = centered_moments(validate_nodes(raw)).sum_sq;

        std::vector<double> shifted = raw;
        const double shift = rng.uniform(-10.0, 10.0);
        for (double& v : shifted)
            v += shift;
        CHECK(centered_moments(validate_nodes(shifted)).sum_sq ==
              doctest::Approx(s).epsilon(1e-12));

        const double a = std::exp(rng.uniform(-1.0, 1.0));
        std::vector<double> scaled = raw;
        for (double& v : scaled)
            v *= a;
        CHECK(centered_moments(validate_nodes(scaled)).sum_sq ==
              doctest::Approx(a * a * s).epsilon(1e-12));
    }
}
