// Acceptance suite: runs every acceptance criterion at its stated tolerance
// and prints one PASS/FAIL line per criterion.  Exit code is the number of
// failed criteria.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include "expdet/divdiff.hpp"
#include "expdet/expdet.hpp"
#include "expdet/gaussrbf.hpp"
#include "expdet/highprec.hpp"
#include "expdet/nodes.hpp"
#include "expdet/quadcheck.hpp"
#include "expdet/random.hpp"

using namespace expdet;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

int failures = 0;

void report(int id, const std::string& name, const Outcome& outcome) {
    std::printf("[%s] criterion %d: %s — %s\n", outcome.pass ? "PASS" : "FAIL", id, name.c_str(),
                outcome.detail.c_str());
    std::fflush(stdout);
    if (!outcome.pass)
        ++failures;
}

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

// --------------------------------------------------------------------------
// Criteria 1 and 9 share the same 1000 trials.

struct SandwichData {
    Outcome sandwich;
    Outcome hadamard;
};

SandwichData run_theorem_sandwich() {
    const PrecisionConfig prec; // 256-bit oracle
    SplitMix64 seeder(0);
    const auto start = std::chrono::steady_clock::now();

    long violations = 0, hadamard_violations = 0;
    double min_slack = 1e300, min_h_slack = 1e300;
    double gap_min = 1e300, gap_max = -1e300; // theorem upper minus Hadamard
    for (int trial = 0; trial < 1000; ++trial) {
        SplitMix64 rng(0x51D0ull ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(1, 7);
        const NodeVector x = validate_nodes(sample_nodes(rng, n, -3.0, 3.0, 1e-3));
        const NodeVector y = validate_nodes(sample_nodes(rng, n, -3.0, 3.0, 1e-3));
        const ExpMatrixSpec spec(x, y);
        const LogBounds b = theorem_bounds(spec);
        const double log_det = logdet_exp(spec, prec).log_abs;

        const double slack = std::min(log_det - b.log_lower, b.log_upper - log_det);
        min_slack = std::min(min_slack, slack);
        if (slack < -1e-9)
            ++violations;

        const double h = hadamard_log_upper(spec);
        const double h_slack = h - log_det;
        min_h_slack = std::min(min_h_slack, h_slack);
        if (h_slack < -1e-9)
            ++hadamard_violations;
        gap_min = std::min(gap_min, b.log_upper - h);
        gap_max = std::max(gap_max, b.log_upper - h);
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    SandwichData out;
    out.sandwich.pass = violations == 0 && seconds < 60.0;
    out.sandwich.detail = "1000 trials, n in 1..7, violations " + std::to_string(violations) +
                          ", min slack " + fmt(min_slack) + ", runtime " + fmt(seconds) + " s";
    out.hadamard.pass = hadamard_violations == 0;
    out.hadamard.detail = "violations " + std::to_string(hadamard_violations) + ", min slack " +
                          fmt(min_h_slack) + "; theorem-upper minus Hadamard spans [" +
                          fmt(gap_min) + ", " + fmt(gap_max) + "] (no dominance)";
    return out;
}

Outcome run_n2_closed_form() {
    const PrecisionConfig prec;
    long bad = 0;
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        SplitMix64 rng(0xA2ull ^ static_cast<std::uint64_t>(trial));
        const std::vector<double> xs = sample_nodes(rng, 2, -3.0, 3.0, 1e-3);
        const std::vector<double> ys = sample_nodes(rng, 2, -3.0, 3.0, 1e-3);
        const double log_det =
            logdet_exp(ExpMatrixSpec(validate_nodes(xs), validate_nodes(ys)), prec).log_abs;
        const double b = xs[0] * ys[0] + xs[1] * ys[1];
        const double a = xs[0] * ys[1] + xs[1] * ys[0];
        const double closed = b + std::log1p(-std::exp(a - b));
        const double err = std::abs(log_det - closed) / std::max(1.0, std::abs(closed));
        worst = std::max(worst, err);
        if (err > 1e-12)
            ++bad;
    }
    return {bad == 0, "100 two-node specs, worst relative error " + fmt(worst)};
}

Outcome run_generalized_vandermonde() {
    const PrecisionConfig prec;
    long bad = 0;
    double worst = 0.0;
    int trials = 0;
    for (int n = 1; n <= 6; ++n) {
        for (int rep = 0; rep < 20; ++rep, ++trials) {
            SplitMix64 rng(0x6Eull ^ static_cast<std::uint64_t>(n * 100 + rep));
            const std::vector<double> xs = sample_nodes(rng, n, -2.0, 2.0, 1e-3);
            std::vector<double> ys(n), zs(n);
            for (int i = 0; i < n; ++i) {
                ys[i] = static_cast<double>(i);
                zs[i] = std::exp(xs[i]);
            }
            const double log_det =
                logdet_exp(ExpMatrixSpec(validate_nodes(xs), validate_nodes(ys)), prec).log_abs;
            const double ref = log_vandermonde(validate_nodes(zs));
            const double err = std::abs(log_det - ref) / std::max(1.0, std::abs(ref));
            worst = std::max(worst, err);
            if (err > 1e-10)
                ++bad;
        }
    }
    return {bad == 0, std::to_string(trials) + " trials up to n = 6, worst relative error " +
                          fmt(worst)};
}

Outcome run_integral_identities() {
    const PrecisionConfig prec;
    const QuadratureConfig qcfg; // order 24
    long bad = 0;
    double worst_cor = 0.0, worst_thm = 0.0, worst_lem = 0.0;
    for (int trial = 0; trial < 50; ++trial) {
        SplitMix64 rng(0x1Dull ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(2, 4);
        const NodeVector x = validate_nodes(sample_nodes(rng, n, -2.0, 2.0, 1e-2));
        const double u_sum = rng.uniform(0.5, 3.0);

        const double cor = check_corollary_identity(x, qcfg);
        worst_cor = std::max(worst_cor, cor);
        if (cor > 1e-10)
            ++bad;

        const double thm = check_theorem_identity(x, u_sum, qcfg, prec);
        worst_thm = std::max(worst_thm, thm);
        if (thm > 1e-8)
            ++bad;

        const NodeVector x3 = validate_nodes(sample_nodes(rng, 3, -2.0, 2.0, 1e-2));
        const NodeVector y3 = validate_nodes(sample_nodes(rng, 3, -2.0, 2.0, 1e-2));
        const double lem = check_lemma1_reduction(ExpMatrixSpec(x3, y3), qcfg, prec);
        worst_lem = std::max(worst_lem, lem);
        if (lem > 1e-8)
            ++bad;
    }
    return {bad == 0, "50 node sets: worst corollary " + fmt(worst_cor) + " (<= 1e-10), theorem " +
                          fmt(worst_thm) + " (<= 1e-8), reduction " + fmt(worst_lem) +
                          " (<= 1e-8)"};
}

Outcome run_residual_sandwich() {
    long bad = 0;
    double worst_margin = 1e300, worst_dd = 1e300;
    for (int trial = 0; trial < 1000; ++trial) {
        SplitMix64 rng(0x1E44A2ull ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(2, 6);
        const NodeVector v = validate_nodes(sample_nodes(rng, n, -2.0, 2.0, 1e-3));
        const SmoothExpFamily f(rng.uniform(0.2, 2.0));
        const ResidualBounds r = lemma2_residual_bounds(v, f);
        worst_margin = std::min({worst_margin, r.residual - r.lo, r.hi - r.residual});
        if (!(r.lo <= r.residual && r.residual <= r.hi))
            ++bad;

        const double u_sum = rng.uniform(0.2, 2.0) * (n - 1);
        const DdLowerBound d = dd_lower_bound_check(v, u_sum);
        worst_dd = std::min(worst_dd, d.dd - d.bound);
        if (d.dd < d.bound - 1e-12)
            ++bad;
    }
    return {bad == 0, "1000 node sets, n in 2..6: violations " + std::to_string(bad) +
                          ", thinnest sandwich margin " + fmt(worst_margin) +
                          ", min dd-bound gap " + fmt(worst_dd)};
}

Outcome run_gaussian_sandwich() {
    const PrecisionConfig prec;
    long bad = 0;
    double min_slack = 1e300;
    for (int trial = 0; trial < 1000; ++trial) {
        SplitMix64 rng(0x6A55ull ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(1, 7);
        const std::vector<double> t = sample_nodes(rng, n, -3.0, 3.0, 1e-3);
        const double lambda = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));
        const GaussianModel model(t, lambda);
        const LogBounds b = gaussian_bounds(model);
        const double log_det = logdet_gaussian(model, prec).log_abs;
        const double slack = std::min(log_det - b.log_lower, b.log_upper - log_det);
        min_slack = std::min(min_slack, slack);
        if (slack < -1e-9)
            ++bad;
    }
    return {bad == 0, "1000 (t, lambda) trials, n in 1..7, lambda in [0.1, 10]: violations " +
                          std::to_string(bad) + ", min slack " + fmt(min_slack)};
}

Outcome run_shape_selection() {
    long bad = 0;
    double worst_gap = 1e300, worst_deriv = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        SplitMix64 rng(0x5E1Full ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(2, 8);
        const NodeVector t = validate_nodes(sample_nodes(rng, n, -3.0, 3.0, 1e-3));
        const double star = select_shape(t);
        const double peak = shape_objective(t, star);
        for (int i = 0; i < 100; ++i) {
            const double lambda = (star / 10.0) * std::pow(100.0, i / 99.0);
            const double gap = peak - shape_objective(t, lambda);
            worst_gap = std::min(worst_gap, gap);
            if (gap < -1e-12)
                ++bad;
        }
        const double big_n = 0.5 * n * (n - 1);
        const double s = centered_moments(t).sum_sq;
        const double deriv = std::abs(big_n / star - s) / std::max(1.0, s);
        worst_deriv = std::max(worst_deriv, deriv);
        if (deriv > 1e-12)
            ++bad;
    }
    return {bad == 0, "100 node sets x 100 grid points: violations " + std::to_string(bad) +
                          ", min peak margin " + fmt(worst_gap) + ", worst derivative residual " +
                          fmt(worst_deriv)};
}

Outcome run_total_positivity() {
    const PrecisionConfig prec;
    long minors = 0;
    double global_min = 1e300;
    for (int trial = 0; trial < 50; ++trial) {
        SplitMix64 rng(0x79ull ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(1, 5);
        const NodeVector x = validate_nodes(sample_nodes(rng, n, -2.0, 2.0, 1e-3));
        const NodeVector y = validate_nodes(sample_nodes(rng, n, -2.0, 2.0, 1e-3));
        try {
            const TotalPositivityReport rep = total_positivity_check(ExpMatrixSpec(x, y), prec);
            minors += rep.minors_checked;
            if (!std::isfinite(rep.min_log_minor))
                return {false, "non-finite minimum log-minor"};
            global_min = std::min(global_min, rep.min_log_minor);
        } catch (const CheckFailure& e) {
            return {false, std::string("sign violation: ") + e.what()};
        }
    }
    return {true, "50 specs, " + std::to_string(minors) +
                      " minors checked, zero sign violations, min log-minor " + fmt(global_min)};
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

Outcome run_determinism() {
    const std::string args = "verify --n 2..5 --trials 40 --seed 42";
    std::string outputs[2];
    int codes[2] = {-1, -1};
    for (int i = 0; i < 2; ++i) {
        const std::string path = "/tmp/expdet_acceptance_" + std::to_string(getpid()) + "_" +
                                 std::to_string(i) + ".json";
        const std::string cmd =
            std::string("\"") + EXPDET_CLI_PATH + "\" " + args + " >" + path + " 2>/dev/null";
        const int status = std::system(cmd.c_str());
        codes[i] = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
        outputs[i] = slurp(path);
        std::remove(path.c_str());
    }
    const bool pass = codes[0] == 0 && codes[1] == 0 && !outputs[0].empty() &&
                      outputs[0] == outputs[1];
    return {pass, "two `verify --seed 42` runs: exit codes " + std::to_string(codes[0]) + "/" +
                      std::to_string(codes[1]) + ", byte-identical: " +
                      (outputs[0] == outputs[1] ? "yes" : "no") + " (" +
                      std::to_string(outputs[0].size()) + " bytes)"};
}

} // namespace

int main() {
    const SandwichData sd = run_theorem_sandwich();
    report(1, "theorem sandwich at 1e-9 slack, under 60 s", sd.sandwich);
    report(2, "n = 2 closed form to 1e-12", run_n2_closed_form());
    report(3, "generalized Vandermonde structure to 1e-10", run_generalized_vandermonde());
    report(4, "integral identities at order 24", run_integral_identities());
    report(5, "divided-difference residual sandwich and lower-bound inequality",
           run_residual_sandwich());
    report(6, "Gaussian determinant sandwich at 1e-9 slack", run_gaussian_sandwich());
    report(7, "shape selection maximizes the objective, derivative vanishes",
           run_shape_selection());
    report(8, "total positivity of all minors, n <= 5", run_total_positivity());
    report(9, "Hadamard inequality on every sandwich trial", sd.hadamard);
    report(10, "verify command is byte-deterministic for a fixed seed", run_determinism());

    if (failures == 0)
        std::printf("all 10 criteria passed\n");
    else
        std::printf("%d criterion(s) FAILED\n", failures);
    return failures;
}
