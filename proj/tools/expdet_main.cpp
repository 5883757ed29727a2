// Command-line surface for the determinant-bound library: certified bounds
// for exponential and Gaussian kernel matrices, randomized verification, and
// shape-parameter selection.  JSON on stdout for single computations, CSV for
// sweeps, errors as JSON on stderr.
//
// Exit codes: 0 success, 1 check failure, 2 invalid input, 3 precision
// exhausted.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "expdet/divdiff.hpp"
#include "expdet/expdet.hpp"
#include "expdet/gaussrbf.hpp"
#include "expdet/highprec.hpp"
#include "expdet/nodes.hpp"
#include "expdet/quadcheck.hpp"
#include "expdet/random.hpp"

namespace {

using nlohmann::json;
using namespace expdet;

constexpr double kSandwichSlack = 1e-9;

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::vector<double> parse_inline_reals(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t");
        const auto e = tok.find_last_not_of(" \t");
        if (b == std::string::npos)
            throw ValidationError("InvalidArgument", "empty element in list '" + s + "'");
        tok = tok.substr(b, e - b + 1);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw ValidationError("InvalidArgument", "cannot parse real '" + tok + "'");
        out.push_back(v);
    }
    if (out.empty())
        throw ValidationError("InvalidArgument", "empty list '" + s + "'");
    return out;
}

std::vector<double> parse_node_file(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw ValidationError("InvalidArgument", "cannot open node file '" + path + "'");
    std::vector<double> out;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos)
            line = line.substr(0, hash);
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos)
            continue;
        const auto e = line.find_last_not_of(" \t\r");
        const std::string tok = line.substr(b, e - b + 1);
        char* end = nullptr;
        const double v = std::strtod(tok.c_str(), &end);
        if (end == tok.c_str() || *end != '\0')
            throw ValidationError("InvalidArgument", "cannot parse real '" + tok + "' at " +
                                                         path + ":" + std::to_string(lineno));
        out.push_back(v);
    }
    if (out.empty())
        throw ValidationError("Empty", "node file '" + path + "' holds no values");
    return out;
}

// Inline comma list or @file with one real per line ('#' comments).
std::vector<double> parse_node_arg(const std::string& s) {
    if (!s.empty() && s[0] == '@')
        return parse_node_file(s.substr(1));
    return parse_inline_reals(s);
}

// min:max:count, geometrically spaced.
std::vector<double> parse_lambda_grid(const std::string& s) {
    double lo = 0, hi = 0;
    long count = 0;
    char extra = 0;
    if (std::sscanf(s.c_str(), "%lf:%lf:%ld%c", &lo, &hi, &count, &extra) != 3)
        throw ValidationError("InvalidArgument", "grid must be min:max:count, got '" + s + "'");
    if (!(lo > 0.0) || !(hi > lo))
        throw ValidationError("InvalidLambda", "grid needs 0 < min < max");
    if (count < 2)
        throw ValidationError("InvalidArgument", "grid count must be at least 2");
    std::vector<double> grid(count);
    const double step = std::log(hi / lo) / static_cast<double>(count - 1);
    for (long i = 0; i < count; ++i)
        grid[i] = lo * std::exp(step * static_cast<double>(i));
    grid.front() = lo;
    grid.back() = hi;
    return grid;
}

std::pair<int, int> parse_int_range(const std::string& s) {
    const auto dots = s.find("..");
    if (dots == std::string::npos) {
        const int v = std::stoi(s);
        return {v, v};
    }
    return {std::stoi(s.substr(0, dots)), std::stoi(s.substr(dots + 2))};
}

void emit_error(const Error& e) {
    json err = {{"error", {{"code", e.code()}, {"message", e.what()}}}};
    if (e.index() >= 0)
        err["error"]["index"] = e.index();
    std::cerr << err.dump() << "\n";
}

void attach_det_if_representable(json& report, double log_det) {
    if (std::abs(log_det) < 700.0)
        report["det_if_representable"] = std::exp(log_det);
}

// Flat json object -> two-line CSV (sorted keys).
void print_csv_flat(const json& report) {
    std::string header, row;
    for (auto it = report.begin(); it != report.end(); ++it) {
        if (it.value().is_object() || it.value().is_array())
            continue;
        if (!header.empty()) {
            header += ',';
            row += ',';
        }
        header += it.key();
        if (it.value().is_number_float())
            row += fmt(it.value().get<double>());
        else
            row += it.value().dump();
    }
    std::cout << header << "\n" << row << "\n";
}

void print_report(const json& report, const std::string& format) {
    if (format == "csv")
        print_csv_flat(report);
    else
        std::cout << report.dump(2) << "\n";
}

// ---------------------------------------------------------------------------
// bounds

int run_bounds(const std::string& x_arg, const std::string& y_arg, const PrecisionConfig& prec,
               const std::string& format) {
    const NodeVector x = validate_nodes(parse_node_arg(x_arg));
    const NodeVector y = validate_nodes(parse_node_arg(y_arg));
    const ExpMatrixSpec spec(x, y);
    const LogBounds bounds = theorem_bounds(spec);
    const double hadamard = hadamard_log_upper(spec);
    const EscalationResult det = logdet_exp_report(spec, prec);

    json report;
    report["command"] = "bounds";
    report["input"] = {{"x", x.values()},
                       {"y", y.values()},
                       {"precision_bits", prec.mantissa_bits}};
    report["n"] = spec.n();
    report["log_lower"] = bounds.log_lower;
    report["log_det"] = det.value.log_abs;
    report["log_upper"] = bounds.log_upper;
    report["log_hadamard"] = hadamard;
    report["log_effective_upper"] = std::min(bounds.log_upper, hadamard);
    report["lower_gap"] = det.value.log_abs - bounds.log_lower;
    report["upper_gap"] = bounds.log_upper - det.value.log_abs;
    report["theorem_upper_minus_hadamard"] = bounds.log_upper - hadamard;
    report["precision_achieved"] = det.achieved_rel_tol;
    report["precision_bits_used"] = det.bits_used;
    attach_det_if_representable(report, det.value.log_abs);
    print_report(report, format);
    return 0;
}

// ---------------------------------------------------------------------------
// verify

struct CheckStats {
    long pass = 0;
    long fail = 0;
    std::map<std::string, long> skipped; // reason -> count
    double min_slack = std::numeric_limits<double>::infinity();
    json worst;

    void record(bool ok, double slack, const json& instance) {
        ok ? ++pass : ++fail;
        if (slack < min_slack) {
            min_slack = slack;
            worst = instance;
        }
    }

    void skip(const std::string& reason) { ++skipped[reason]; }

    json to_json() const {
        long skipped_total = 0;
        for (const auto& [reason, count] : skipped)
            skipped_total += count;
        json j = {{"pass", pass},
                  {"fail", fail},
                  {"skipped", skipped_total},
                  {"skipped_reasons", json(skipped)}};
        if (pass + fail > 0) {
            j["min_slack"] = min_slack;
            j["worst_instance"] = worst;
        } else {
            j["min_slack"] = nullptr;
            j["worst_instance"] = nullptr;
        }
        return j;
    }
};

int run_verify(const std::string& n_range, long trials, std::uint64_t seed,
               const std::string& node_range, double min_gap, const PrecisionConfig& prec,
               const std::string& format) {
    const auto [n_lo, n_hi] = parse_int_range(n_range);
    if (n_lo < 1 || n_hi < n_lo)
        throw ValidationError("InvalidArgument", "bad n range");
    if (trials < 1)
        throw ValidationError("InvalidArgument", "trials must be at least 1");
    const std::vector<double> range = parse_inline_reals(node_range);
    if (range.size() != 2 || !(range[0] < range[1]))
        throw ValidationError("InvalidArgument", "node range must be lo,hi with lo < hi");

    CheckStats theorem, hadamard, gaussian, total_positivity;

    for (long trial = 0; trial < trials; ++trial) {
        SplitMix64 rng(seed ^ static_cast<std::uint64_t>(trial));
        const int n = rng.uniform_int(n_lo, n_hi);
        const std::vector<double> xs = sample_nodes(rng, n, range[0], range[1], min_gap);
        const std::vector<double> ys = sample_nodes(rng, n, range[0], range[1], min_gap);
        const std::vector<double> ts = sample_nodes(rng, n, range[0], range[1], min_gap);
        const double lambda = std::exp(rng.uniform(std::log(0.1), std::log(10.0)));

        const json exp_instance = {{"trial", trial}, {"n", n}, {"x", xs}, {"y", ys}};
        const ExpMatrixSpec spec(validate_nodes(xs), validate_nodes(ys));
        try {
            const LogBounds b = theorem_bounds(spec);
            const double log_det = logdet_exp(spec, prec).log_abs;
            const double slack = std::min(log_det - b.log_lower, b.log_upper - log_det);
            theorem.record(slack >= -kSandwichSlack, slack, exp_instance);
            const double h_slack = hadamard_log_upper(spec) - log_det;
            hadamard.record(h_slack >= -kSandwichSlack, h_slack, exp_instance);
        } catch (const PrecisionExhausted&) {
            theorem.skip("PrecisionExhausted");
            hadamard.skip("PrecisionExhausted");
        }

        const json gauss_instance = {{"trial", trial}, {"n", n}, {"t", ts}, {"lambda", lambda}};
        try {
            const GaussianModel model(ts, lambda);
            const LogBounds b = gaussian_bounds(model);
            const double log_det = logdet_gaussian(model, prec).log_abs;
            const double slack = std::min(log_det - b.log_lower, b.log_upper - log_det);
            gaussian.record(slack >= -kSandwichSlack, slack, gauss_instance);
        } catch (const PrecisionExhausted&) {
            gaussian.skip("PrecisionExhausted");
        }

        if (n <= 5) {
            try {
                const TotalPositivityReport rep = total_positivity_check(spec, prec);
                total_positivity.record(true, rep.min_log_minor, exp_instance);
            } catch (const CheckFailure&) {
                total_positivity.record(false, -std::numeric_limits<double>::infinity(),
                                        exp_instance);
            } catch (const PrecisionExhausted&) {
                total_positivity.skip("PrecisionExhausted");
            }
        } else {
            total_positivity.skip("n exceeds the minor-enumeration cap of 5");
        }
    }

    const long failures = theorem.fail + hadamard.fail + gaussian.fail + total_positivity.fail;
    json report;
    report["command"] = "verify";
    report["input"] = {{"n_min", n_lo},         {"n_max", n_hi},
                       {"trials", trials},      {"seed", seed},
                       {"node_range", range},   {"min_gap", min_gap},
                       {"precision_bits", prec.mantissa_bits},
                       {"slack_tolerance", kSandwichSlack}};
    report["checks"] = {{"theorem_sandwich", theorem.to_json()},
                        {"hadamard", hadamard.to_json()},
                        {"gaussian_sandwich", gaussian.to_json()},
                        {"total_positivity", total_positivity.to_json()}};
    report["failures"] = failures;
    print_report(report, format);
    return failures == 0 ? 0 : 1;
}

// ---------------------------------------------------------------------------
// identity

int run_identity(const std::string& x_arg, const std::optional<double>& u_sum,
                 const std::optional<std::string>& y_arg, int order, int max_dims,
                 const PrecisionConfig& prec, const std::string& format) {
    const NodeVector x = validate_nodes(parse_node_arg(x_arg));
    const QuadratureConfig qcfg{order, max_dims};

    json checks;
    bool all_pass = true;
    {
        const double residual = check_corollary_identity(x, qcfg);
        const bool pass = residual <= 1e-10;
        all_pass &= pass;
        checks["corollary"] = {{"residual", residual}, {"threshold", 1e-10}, {"pass", pass}};
    }
    if (u_sum) {
        const double residual = check_theorem_identity(x, *u_sum, qcfg, prec);
        const bool pass = residual <= 1e-8;
        all_pass &= pass;
        checks["theorem"] = {{"residual", residual}, {"threshold", 1e-8}, {"pass", pass}};
    }
    if (y_arg) {
        const NodeVector y = validate_nodes(parse_node_arg(*y_arg));
        const double residual = check_lemma1_reduction(ExpMatrixSpec(x, y), qcfg, prec);
        const bool pass = residual <= 1e-8;
        all_pass &= pass;
        checks["lemma1"] = {{"residual", residual}, {"threshold", 1e-8}, {"pass", pass}};
    }

    json report;
    report["command"] = "identity";
    report["input"] = {{"x", x.values()},
                       {"u_sum", u_sum ? json(*u_sum) : json(nullptr)},
                       {"y", y_arg ? json(parse_node_arg(*y_arg)) : json(nullptr)},
                       {"order", order},
                       {"max_dims", max_dims},
                       {"precision_bits", prec.mantissa_bits}};
    report["checks"] = checks;
    report["pass"] = all_pass;
    print_report(report, format);
    return all_pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// gauss subcommands

std::pair<double, std::string> resolve_lambda(const std::string& lambda_arg,
                                              const NodeVector& t) {
    if (lambda_arg == "auto")
        return {select_shape(t), "auto"};
    char* end = nullptr;
    const double v = std::strtod(lambda_arg.c_str(), &end);
    if (end == lambda_arg.c_str() || *end != '\0')
        throw ValidationError("InvalidLambda", "lambda must be a real or 'auto'");
    return {v, "explicit"};
}

int run_gauss_bounds(const std::string& t_arg, const std::string& lambda_arg,
                     const PrecisionConfig& prec, const std::string& format) {
    const NodeVector t = validate_nodes(parse_node_arg(t_arg));
    const auto [lambda, mode] = resolve_lambda(lambda_arg, t);
    const GaussianModel model(t, lambda);
    const LogBounds b = gaussian_bounds(model);
    const EscalationResult det = logdet_gaussian_report(model, prec);
    const CenteredMoments m = centered_moments(model.nodes());

    json report;
    report["command"] = "gauss bounds";
    report["input"] = {{"t", model.nodes().values()},
                       {"lambda", lambda},
                       {"lambda_mode", mode},
                       {"precision_bits", prec.mantissa_bits}};
    report["n"] = model.n();
    report["N"] = 0.5 * model.n() * (model.n() - 1);
    report["S"] = m.sum_sq;
    report["log_lower"] = b.log_lower;
    report["log_det"] = det.value.log_abs;
    report["log_upper"] = b.log_upper;
    report["lower_gap"] = det.value.log_abs - b.log_lower;
    report["upper_gap"] = b.log_upper - det.value.log_abs;
    report["precision_achieved"] = det.achieved_rel_tol;
    report["precision_bits_used"] = det.bits_used;
    attach_det_if_representable(report, det.value.log_abs);
    print_report(report, format);
    return 0;
}

int run_gauss_select(const std::string& t_arg, const std::string& format) {
    const NodeVector t = validate_nodes(parse_node_arg(t_arg));
    const double lambda_star = select_shape(t);
    const CenteredMoments m = centered_moments(t);

    json report;
    report["command"] = "gauss select";
    report["input"] = {{"t", t.values()}};
    report["n"] = static_cast<int>(t.size());
    report["N"] = 0.5 * t.size() * (t.size() - 1);
    report["S"] = m.sum_sq;
    report["lambda_star"] = lambda_star;
    print_report(report, format);
    return 0;
}

int run_gauss_sweep(const std::string& t_arg, const std::string& grid_arg,
                    const std::optional<std::string>& values_arg, bool with_loocv,
                    const PrecisionConfig& prec, const std::string& format) {
    const NodeVector t = validate_nodes(parse_node_arg(t_arg));
    const std::vector<double> grid = parse_lambda_grid(grid_arg);
    std::optional<std::vector<double>> values;
    if (with_loocv) {
        if (!values_arg)
            throw ValidationError("InvalidArgument", "--loocv requires --values");
        values = parse_inline_reals(*values_arg);
    }
    const std::vector<SweepRow> rows = sweep(t, grid, values, prec);

    bool any_failed = false;
    if (format == "json") {
        json arr = json::array();
        for (const SweepRow& r : rows) {
            json row = {{"lambda", r.lambda}, {"ok", r.ok}};
            if (r.ok) {
                row["log_f"] = r.log_f_objective;
                row["log_lower"] = r.log_lower;
                row["log_det"] = r.log_det;
                row["log_upper"] = r.log_upper;
                if (r.loocv_error)
                    row["loocv"] = *r.loocv_error;
            } else {
                row["error"] = r.error;
                any_failed = true;
            }
            arr.push_back(row);
        }
        json report = {{"command", "gauss sweep"},
                       {"input",
                        {{"t", t.values()},
                         {"grid", grid},
                         {"precision_bits", prec.mantissa_bits}}},
                       {"rows", arr}};
        std::cout << report.dump(2) << "\n";
    } else {
        std::cout << "lambda,log_f,log_lower,log_det,log_upper" << (with_loocv ? ",loocv" : "")
                  << "\n";
        for (const SweepRow& r : rows) {
            if (r.ok) {
                std::cout << fmt(r.lambda) << ',' << fmt(r.log_f_objective) << ','
                          << fmt(r.log_lower) << ',' << fmt(r.log_det) << ','
                          << fmt(r.log_upper);
                if (with_loocv)
                    std::cout << ',' << (r.loocv_error ? fmt(*r.loocv_error) : "nan");
            } else {
                any_failed = true;
                std::cout << fmt(r.lambda) << ",nan,nan,nan,nan";
                if (with_loocv)
                    std::cout << ",nan";
            }
            std::cout << "\n";
        }
    }
    return any_failed ? 1 : 0;
}

int run_gauss_interp(const std::string& t_arg, const std::string& values_arg,
                     const std::string& lambda_arg, const PrecisionConfig& prec,
                     const std::string& format) {
    const NodeVector t = validate_nodes(parse_node_arg(t_arg));
    const std::vector<double> values = parse_inline_reals(values_arg);
    const auto [lambda, mode] = resolve_lambda(lambda_arg, t);
    const InterpolationResult r = interpolate(t, values, lambda, prec);

    json report;
    report["command"] = "gauss interp";
    report["input"] = {{"t", t.values()},
                       {"values", values},
                       {"lambda", r.lambda},
                       {"lambda_mode", mode},
                       {"precision_bits", prec.mantissa_bits}};
    report["coefficients"] = r.coefficients;
    report["residual_inf"] = r.residual_inf;
    report["precision_bits_used"] = r.bits_used;
    print_report(report, format);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Certified determinant bounds for exponential and Gaussian kernel matrices"};
    app.require_subcommand(1);
    app.fallthrough();

    int precision_bits = 256;
    app.add_option("--precision", precision_bits, "oracle mantissa bits (>= 64)")
        ->envname("EXPDET_PREC");
    std::string format;
    app.add_option("--format", format, "output format")
        ->check(CLI::IsMember({"json", "csv"}));

    // bounds
    auto* bounds_cmd = app.add_subcommand("bounds", "Theorem bound certificate vs oracle");
    std::string bx, by;
    bounds_cmd->add_option("--x", bx, "x nodes, comma list or @file")->required();
    bounds_cmd->add_option("--y", by, "y nodes, comma list or @file")->required();

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "Randomized sandwich harness");
    std::string vn = "2..5";
    long trials = 100;
    std::uint64_t seed = 0;
    std::string node_range = "-3,3";
    double min_gap = 1e-3;
    verify_cmd->add_option("--n", vn, "matrix order range, e.g. 2..5");
    verify_cmd->add_option("--trials", trials, "number of random trials")->check(CLI::PositiveNumber);
    verify_cmd->add_option("--seed", seed, "master seed");
    verify_cmd->add_option("--node-range", node_range, "node interval lo,hi");
    verify_cmd->add_option("--min-gap", min_gap, "minimum adjacent node gap");

    // identity
    auto* identity_cmd = app.add_subcommand("identity", "Integral identity residuals");
    std::string ix;
    std::optional<double> u_sum;
    std::optional<std::string> iy;
    int order = 24;
    int max_dims = 3;
    identity_cmd->add_option("--x", ix, "x nodes, comma list or @file")->required();
    identity_cmd->add_option("--u-sum", u_sum, "positive u-sum for the exponential identity");
    identity_cmd->add_option("--y", iy, "y nodes; enables the order-reduction check (n = 3 or 4)");
    identity_cmd->add_option("--order", order, "quadrature points per dimension");
    identity_cmd->add_option("--max-dims", max_dims, "dimension cap (hard limit 4)");

    // gauss
    auto* gauss_cmd = app.add_subcommand("gauss", "Gaussian kernel matrix tools");
    gauss_cmd->require_subcommand(1);
    gauss_cmd->fallthrough();

    auto* gbounds = gauss_cmd->add_subcommand("bounds", "Corollary bounds vs oracle");
    std::string gt, glambda = "auto";
    gbounds->add_option("--t", gt, "nodes, comma list or @file")->required();
    gbounds->add_option("--lambda", glambda, "shape parameter or 'auto'");

    auto* gselect = gauss_cmd->add_subcommand("select", "Shape parameter lambda* = N/S");
    std::string st;
    gselect->add_option("--t", st, "nodes, comma list or @file")->required();

    auto* gsweep = gauss_cmd->add_subcommand("sweep", "Lambda sweep diagnostic (CSV)");
    std::string wt, wgrid;
    std::optional<std::string> wvalues;
    bool with_loocv = false;
    gsweep->add_option("--t", wt, "nodes, comma list or @file")->required();
    gsweep->add_option("--lambda", wgrid, "geometric grid min:max:count")->required();
    gsweep->add_option("--values", wvalues, "data values for the leave-one-out column");
    gsweep->add_flag("--loocv", with_loocv, "add leave-one-out comparator column");

    auto* ginterp = gauss_cmd->add_subcommand("interp", "Solve the interpolation system");
    std::string pt, pvalues, plambda = "auto";
    ginterp->add_option("--t", pt, "nodes, comma list or @file")->required();
    ginterp->add_option("--values", pvalues, "data values, comma list")->required();
    ginterp->add_option("--lambda", plambda, "shape parameter or 'auto'");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
            return app.exit(e);
        std::cerr << json{{"error", {{"code", "InvalidArguments"}, {"message", e.what()}}}}.dump()
                  << "\n";
        return 2;
    }

    try {
        PrecisionConfig prec;
        prec.mantissa_bits = precision_bits;
        check_precision_config(prec);

        if (*bounds_cmd)
            return run_bounds(bx, by, prec, format);
        if (*verify_cmd)
            return run_verify(vn, trials, seed, node_range, min_gap, prec, format);
        if (*identity_cmd)
            return run_identity(ix, u_sum, iy, order, max_dims, prec, format);
        if (*gbounds)
            return run_gauss_bounds(gt, glambda, prec, format);
        if (*gselect)
            return run_gauss_select(st, format);
        if (*gsweep)
            return run_gauss_sweep(wt, wgrid, wvalues, with_loocv, prec, format);
        if (*ginterp)
            return run_gauss_interp(pt, pvalues, plambda, prec, format);
        return 2;
    } catch (const ValidationError& e) {
        emit_error(e);
        return 2;
    } catch (const PrecisionExhausted& e) {
        emit_error(e);
        return 3;
    } catch (const CheckFailure& e) {
        emit_error(e);
        return 1;
    } catch (const Error& e) {
        emit_error(e);
        return 2;
    }
}
