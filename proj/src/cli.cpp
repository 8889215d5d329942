#include "ir/cli.hpp"

#include "ir/cones.hpp"
#include "ir/diagnostics.hpp"
#include "ir/map_core.hpp"
#include "ir/mesh.hpp"
#include "ir/response.hpp"
#include "ir/rng.hpp"
#include "ir/transfer.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace ir::cli {

using nlohmann::json;

const std::vector<std::string>& commands() {
    static const std::vector<std::string> c = {"density",     "response",    "ladder",     "trajectory",
                                               "tails",       "memory-loss", "correlation", "cone-check",
                                               "distortion",  "expansion",   "weighted"};
    return c;
}

namespace {

std::optional<ParamBox> config_box(const RunConfig& c) {
    if (!c.alpha_hi && !c.beta_hi && !c.alpha_lo) return std::nullopt;
    const double hi = c.alpha_hi.value_or(c.alpha);
    const double lo = c.alpha_lo.value_or(std::min(c.alpha, hi));
    return ParamBox(lo, hi, c.beta_hi.value_or(c.beta));
}

int default_nmax(const std::string& cmd) {
    static const std::map<std::string, int> d = {{"ladder", 10000},     {"trajectory", 10000}, {"tails", 10000},
                                                 {"memory-loss", 500},  {"correlation", 1000}, {"distortion", 1000},
                                                 {"expansion", 1000},   {"weighted", 200}};
    const auto it = d.find(cmd);
    return it == d.end() ? 0 : it->second;
}

struct Sweep {
    double a0, a1, b0, b1;
    int na, nb;
};

Sweep parse_sweep(const std::string& s) {
    // a0:a1:na,b0:b1:nb
    Sweep w{};
    char c1, c2, c3, c4, c5;
    std::istringstream is(s);
    if (!(is >> w.a0 >> c1 >> w.a1 >> c2 >> w.na >> c3 >> w.b0 >> c4 >> w.b1 >> c5 >> w.nb) || c1 != ':' ||
        c2 != ':' || c3 != ',' || c4 != ':' || c5 != ':' || w.na < 1 || w.nb < 1)
        throw ConfigError("--sweep expects a0:a1:na,b0:b1:nb");
    std::string rest;
    if (is >> rest) throw ConfigError("--sweep has trailing characters");
    return w;
}

double grid_point(double lo, double hi, int n, int k) { return n == 1 ? lo : lo + (hi - lo) * k / (n - 1); }

} // namespace

void RunConfig::validate() const {
    if (std::find(commands().begin(), commands().end(), command) == commands().end())
        throw ConfigError("unknown command '" + command + "'");
    if (sweep.empty() && !ParamPoint::admissible(alpha, beta))
        throw ConfigError("parameters outside the admissible domain: need 0 < alpha < 1, beta >= 1, alpha*beta < 1");
    if (cells < 4) throw ConfigError("--cells must be at least 4");
    if (!(grading >= 1.0) || !std::isfinite(grading)) throw ConfigError("--grading must be >= 1");
    if (kmax < 1) throw ConfigError("--kmax must be positive");
    if (!(tol > 0.0)) throw ConfigError("--tol must be positive");
    if (!(delta > 0.0)) throw ConfigError("--delta must be positive");
    if (samples < 1) throw ConfigError("--samples must be positive");
    if (command == "tails" && samples < 1000000) throw ConfigError("tails requires --samples >= 1000000");
    if (nmax && *nmax < 1) throw ConfigError("--nmax must be positive");
    if (ell < 1) throw ConfigError("--ell must be positive");
    if (trials < 1) throw ConfigError("--trials must be positive");
    if (format != "json" && format != "csv") throw ConfigError("--format must be json or csv");
    if (method != "direct" && method != "power") throw ConfigError("--method must be direct or power");
    if (x0 && !(*x0 >= 0.0 && *x0 <= 1.0)) throw ConfigError("--x0 must lie in [0,1]");
    try {
        (void)Observable::parse(obs);
        (void)Observable::parse(obs2);
    } catch (const std::exception& e) {
        throw ConfigError(e.what());
    }
    if (!sweep.empty()) (void)parse_sweep(sweep);
    try {
        if (auto box = config_box(*this); box && sweep.empty() && !box->contains(ParamPoint(alpha, beta)))
            throw ConfigError("(alpha, beta) must lie in the box given by --alpha-lo/--alpha-hi/--beta-hi");
    } catch (const DomainError& e) {
        throw ConfigError(e.what());
    }
}

json RunConfig::echo() const {
    auto opt = [](const auto& o) -> json {
        if (o) return *o;
        return nullptr;
    };
    return {{"command", command},   {"alpha", alpha},       {"beta", beta},         {"alpha_lo", opt(alpha_lo)},
            {"alpha_hi", opt(alpha_hi)}, {"beta_hi", opt(beta_hi)}, {"cells", cells}, {"grading", grading},
            {"kmax", kmax},         {"tol", tol},           {"obs", obs},           {"obs2", obs2},
            {"delta", delta},       {"samples", samples},   {"nmax", nmax.value_or(default_nmax(command))},
            {"seed", seed},         {"x0", opt(x0)},        {"ell", ell},           {"trials", trials},
            {"method", method},     {"out", out},           {"format", format},     {"validate_fd", validate_fd},
            {"sweep", sweep}};
}

RunConfig parse_args(int argc, const char* const* argv) {
    RunConfig c;
    CLI::App app{"Intermittent map transfer operators, linear response and diagnostics"};
    app.set_config("--config", "", "key=value configuration file; command-line flags take precedence");
    app.allow_config_extras(false);
    app.add_option("command", c.command, "Subcommand")->required()->check(CLI::IsMember(commands()));
    app.add_option("--alpha", c.alpha, "alpha in (0,1)");
    app.add_option("--beta", c.beta, "beta >= 1");
    app.add_option("--alpha-lo", c.alpha_lo, "lower alpha of the parameter box");
    app.add_option("--alpha-hi", c.alpha_hi, "upper alpha of the parameter box");
    app.add_option("--beta-hi", c.beta_hi, "upper beta of the parameter box");
    app.add_option("--cells", c.cells, "mesh cells");
    app.add_option("--grading", c.grading, "mesh grading exponent");
    app.add_option("--kmax", c.kmax, "maximum number of series terms");
    app.add_option("--tol", c.tol, "series term tolerance");
    app.add_option("--obs", c.obs, "observable: x, x^k, poly:..., pow:s[,c], indicator:a,b, table:<csv>");
    app.add_option("--obs2", c.obs2, "second observable (correlation)");
    app.add_option("--delta", c.delta, "finite-difference step");
    app.add_option("--samples", c.samples, "Monte Carlo samples");
    app.add_option("--nmax,-n", c.nmax, "iteration / ladder length");
    app.add_option("--seed", c.seed, "random seed");
    app.add_option("--x0", c.x0, "initial point for trajectory");
    app.add_option("--ell", c.ell, "ladder index for the laminar threshold b_ell");
    app.add_option("--trials", c.trials, "random trials (cone-check)");
    app.add_option("--method", c.method, "density solver: direct or power");
    app.add_option("--out", c.out, "output prefix (writes PREFIX.json and PREFIX.csv)");
    app.add_option("--format", c.format, "stdout format when --out is absent: json or csv");
    app.add_flag("--validate-fd", c.validate_fd, "cross-check the response series against finite differences");
    app.add_option("--sweep", c.sweep, "grid a0:a1:na,b0:b1:nb over (alpha, beta)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        throw HelpRequested(app.help());
    } catch (const CLI::ParseError& e) {
        throw ConfigError(e.what());
    }
    c.validate();
    return c;
}

namespace {

struct Check {
    std::string name;
    bool passed;
    json detail;
};

struct Outcome {
    json result;
    std::vector<Check> checks;
    std::string csv;
    std::string binary;
};

json checks_json(const std::vector<Check>& checks) {
    json a = json::array();
    for (const auto& c : checks) a.push_back({{"name", c.name}, {"passed", c.passed}, {"detail", c.detail}});
    return a;
}

bool all_passed(const std::vector<Check>& checks) {
    return std::all_of(checks.begin(), checks.end(), [](const Check& c) { return c.passed; });
}

DensityOptions density_options(const RunConfig& c) {
    DensityOptions o;
    o.method = c.method == "power" ? DensityMethod::power : DensityMethod::direct;
    return o;
}

int nmax_of(const RunConfig& c) { return c.nmax.value_or(default_nmax(c.command)); }

Outcome cmd_density(const RunConfig& c, const ParamPoint& p) {
    const auto mesh = build_mesh(c.cells, c.grading);
    const auto U = assemble_ulam(p, mesh);
    const auto res = invariant_density(U, density_options(c));
    const auto& h = res.density;
    std::vector<double> xc, hv;
    bool nonneg = true;
    for (int j = 0; j < mesh->cells(); ++j) {
        xc.push_back(0.5 * (mesh->node(j) + mesh->node(j + 1)));
        hv.push_back(h[static_cast<std::size_t>(j)]);
        nonneg = nonneg && h[static_cast<std::size_t>(j)] >= 0.0;
    }
    const int n90 = static_cast<int>(0.9 * mesh->cells());
    bool decreasing = true;
    for (int j = 0; j + 1 < n90; ++j) decreasing = decreasing && hv[static_cast<std::size_t>(j) + 1] <= hv[static_cast<std::size_t>(j)];
    const double expected = p.density_exponent();
    Outcome o;
    o.result["ulam"] = ulam_summary(U);
    o.result["convergence"] = to_json(res.report);
    o.result["expected_exponent"] = expected;
    o.result["mass"] = integrate(h);
    try {
        const auto fit = fit_power_law(xc, hv, 1e-5, 1e-2);
        o.result["fit"] = to_json(fit);
        o.checks.push_back({"slope_lower_bound", fit.exponent >= expected - 0.1,
                            {{"slope", fit.exponent}, {"bound", expected - 0.1}}});
        if (p.beta() == 1.0)
            o.checks.push_back({"slope_two_sided", std::abs(fit.exponent - expected) <= 0.07,
                                {{"slope", fit.exponent}, {"expected", expected}, {"tolerance", 0.07}}});
    } catch (const std::runtime_error& e) {
        o.checks.push_back({"slope_fit", false, e.what()});
    }
    o.checks.push_back({"nonnegative", nonneg, nullptr});
    o.checks.push_back({"decreasing_first_90pct", decreasing, nullptr});
    o.checks.push_back({"unit_mass", std::abs(integrate(h) - 1.0) <= 1e-12, integrate(h)});
    std::ostringstream csv;
    write_csv(csv, h);
    o.csv = csv.str();
    std::ostringstream bin;
    write_ulam_binary(bin, U);
    o.binary = bin.str();
    return o;
}

Outcome cmd_response(const RunConfig& c, const ParamPoint& p) {
    const auto mesh = build_mesh(c.cells, c.grading);
    const auto phi = Observable::parse(c.obs);
    ResponseOptions ro;
    ro.k_max = c.kmax;
    ro.tol = c.tol;
    ro.density = density_options(c);
    auto est = response_series(p, phi, mesh, ro);
    Outcome o;
    if (c.validate_fd) {
        const auto fd = response_fd(p, phi, c.delta, mesh, ro.density);
        auto rel = [](double D, double d) { return std::abs(D - d) / std::max(std::abs(d), 1e-6); };
        est.fd_cross_check = FdCrossCheck{c.delta, fd.d1, fd.d2, rel(est.D1, fd.d1), rel(est.D2, fd.d2)};
        o.checks.push_back({"fd_gap_1", est.fd_cross_check->rel_err1 <= 0.05, est.fd_cross_check->rel_err1});
        o.checks.push_back({"fd_gap_2", est.fd_cross_check->rel_err2 <= 0.05, est.fd_cross_check->rel_err2});
    }
    o.result = to_json(est);
    std::ostringstream csv;
    csv.precision(17);
    csv << "k,t1,t2\n";
    for (std::size_t k = 0; k < est.terms[0].size(); ++k)
        csv << k << ',' << est.terms[0][k] << ',' << est.terms[1][k] << '\n';
    o.csv = csv.str();
    return o;
}

Outcome cmd_ladder(const RunConfig& c, const ParamPoint& p) {
    const auto L = preimage_ladder(p, nmax_of(c));
    Outcome o;
    auto rep = [](const LadderEnvelopeReport& r) {
        return json{{"lower_violations", r.lower_violations},
                    {"upper_violations", r.upper_violations},
                    {"hat_lower_violations", r.hat_lower_violations},
                    {"hat_upper_violations", r.hat_upper_violations},
                    {"first_lower_violation", r.first_lower_violation},
                    {"first_upper_violation", r.first_upper_violation}};
    };
    o.result = {{"count", nmax_of(c)},
                {"stated_envelopes", rep(L.stated)},
                {"sharp_envelopes", rep(L.sharp)},
                {"monotone", L.monotone},
                {"max_relation_residual", L.max_relation_residual},
                {"gap_constants", {L.gap_const_lo, L.gap_const_hi}},
                {"hat_gap_constants", {L.hat_gap_const_lo, L.hat_gap_const_hi}}};
    o.checks.push_back({"lower_envelope", L.stated.lower_violations == 0, L.stated.lower_violations});
    o.checks.push_back({"upper_envelope", L.stated.upper_violations == 0, L.stated.upper_violations});
    o.checks.push_back({"hat_lower_envelope", L.stated.hat_lower_violations == 0, L.stated.hat_lower_violations});
    o.checks.push_back({"hat_upper_envelope", L.stated.hat_upper_violations == 0, L.stated.hat_upper_violations});
    o.checks.push_back({"monotone", L.monotone, nullptr});
    o.checks.push_back({"relation_residual", L.max_relation_residual <= 1e-8, L.max_relation_residual});
    std::ostringstream csv;
    write_ladder_csv(csv, L);
    o.csv = csv.str();
    return o;
}

Outcome cmd_trajectory(const RunConfig& c, const ParamPoint& p) {
    const auto r = simulate(p, c.x0, nmax_of(c), c.seed, c.ell);
    Outcome o;
    o.result = orbit_summary(r);
    // Re-evaluate 10 indices by composing T from x0.
    bool ok = true;
    CounterRng rng(c.seed, 1);
    for (int t = 0; t < 10; ++t) {
        const auto k = rng.next_u64() % r.points.size();
        double x = r.x0;
        for (std::uint64_t s = 0; s < k; ++s) x = map_eval(p, x);
        ok = ok && x == r.points[k];
    }
    o.checks.push_back({"orbit_identity", ok, nullptr});
    std::ostringstream csv;
    write_orbit_csv(csv, r);
    o.csv = csv.str();
    return o;
}

Outcome cmd_tails(const RunConfig& c, const ParamPoint& p) {
    const auto r = return_time_tail(p, c.samples, nmax_of(c), c.seed);
    const double expected = -1.0 / (p.alpha() * p.beta());
    bool mono = std::is_sorted(r.survival.rbegin(), r.survival.rend());
    Outcome o;
    o.result = to_json(r);
    o.result["expected_exponent"] = expected;
    o.checks.push_back({"tail_exponent", std::abs(r.fit.exponent - expected) <= 0.15,
                        {{"exponent", r.fit.exponent}, {"expected", expected}, {"tolerance", 0.15}}});
    o.checks.push_back({"survival_monotone", mono, nullptr});
    std::ostringstream csv;
    write_tail_csv(csv, r);
    o.csv = csv.str();
    return o;
}

Check rate_check(const std::string& name, double exponent, double expected, bool two_sided, double tol) {
    const bool ok = two_sided ? std::abs(exponent - expected) <= tol : exponent <= expected + tol;
    return {name, ok,
            {{"exponent", exponent}, {"expected", expected}, {"tolerance", tol}, {"two_sided", two_sided}}};
}

Outcome cmd_memory_loss(const RunConfig& c, const ParamPoint& p) {
    const auto mesh = build_mesh(c.cells, c.grading);
    const auto U = assemble_ulam(p, mesh);
    const auto h = invariant_density(U, density_options(c)).density;
    const auto curve = memory_loss_curve(U, GridFunction::constant(mesh, 1.0, GridKind::cell_average), h, nmax_of(c));
    bool mono = true;
    for (std::size_t k = 1; k < curve.values.size(); ++k)
        mono = mono && curve.values[k] <= curve.values[k - 1] * (1.0 + 1e-12);
    const double expected = 1.0 - 1.0 / (p.alpha() * p.beta());
    Outcome o;
    o.result = to_json(curve);
    o.result["expected_exponent"] = expected;
    o.checks.push_back(rate_check("decay_rate", curve.fit.exponent, expected, p.beta() == 1.0, 0.15));
    o.checks.push_back({"nonincreasing", mono, nullptr});
    std::ostringstream csv;
    write_curve_csv(csv, curve, "l1_norm");
    o.csv = csv.str();
    return o;
}

Outcome cmd_correlation(const RunConfig& c, const ParamPoint& p) {
    const auto mesh = build_mesh(c.cells, c.grading);
    const auto U = assemble_ulam(p, mesh);
    const auto h = invariant_density(U, density_options(c)).density;
    const auto curve = correlation_decay(U, Observable::parse(c.obs), Observable::parse(c.obs2), h, nmax_of(c));
    const double expected = 1.0 - 1.0 / (p.alpha() * p.beta());
    Outcome o;
    o.result = to_json(curve);
    o.result["expected_exponent"] = expected;
    o.checks.push_back(rate_check("decay_rate", curve.fit.exponent, expected, p.beta() == 1.0, 0.2));
    std::ostringstream csv;
    write_curve_csv(csv, curve, "correlation");
    o.csv = csv.str();
    return o;
}

Outcome cmd_cone_check(const RunConfig& c, const ParamPoint& p) {
    const ParamPoint gu(c.alpha_hi.value_or(p.alpha()), c.beta_hi.value_or(p.beta()));
    if (!(p <= gu)) throw DomainError("cone-check: (alpha, beta) must not exceed (alpha-hi, beta-hi)");
    const auto mesh = build_mesh(c.cells, c.grading);
    const auto U = assemble_ulam(p, mesh);
    const ConeParams cp(a0(gu), gu);
    const auto both = verify_cone_invariance(cp, U, c.trials, c.seed);
    const auto left = verify_cone_invariance(cp, U, std::min(c.trials, 20), c.seed, Branch::left);
    const auto right = verify_cone_invariance(cp, U, std::min(c.trials, 20), c.seed, Branch::right);
    const auto h = invariant_density(U, density_options(c)).density;
    const auto hrep = check_Ca(h, cp);
    Outcome o;
    o.result = {{"gamma_u", {gu.alpha(), gu.beta()}}, {"a", cp.a},          {"push", to_json(both)},
                {"left_branch", to_json(left)},       {"right_branch", to_json(right)},
                {"density", to_json(hrep)}};
    o.checks.push_back({"pushed_mixtures", both.all_passed(), both.passed});
    o.checks.push_back({"left_branch_mixtures", left.all_passed(), left.passed});
    o.checks.push_back({"right_branch_mixtures", right.all_passed(), right.passed});
    o.checks.push_back({"density_in_cone", hrep.passed, nullptr});
    std::ostringstream csv;
    csv << "trial,passed\n";
    for (int k = 0; k < both.trials; ++k) {
        const bool failed = std::find(both.failed_trials.begin(), both.failed_trials.end(), k) != both.failed_trials.end();
        csv << k << ',' << (failed ? 0 : 1) << '\n';
    }
    o.csv = csv.str();
    return o;
}

Outcome cmd_distortion(const RunConfig& c, const ParamPoint& p) {
    const int nmax = nmax_of(c);
    if (nmax < 100) throw DomainError("distortion: --nmax must be at least 100");
    std::vector<int> ns;
    for (int dec = 1; dec <= nmax; dec *= 10)
        for (int m : {1, 2, 5})
            if (m * dec <= nmax) ns.push_back(m * dec);
    ns.push_back(nmax);
    const auto r = distortion_check(p, ns, 200, c.seed, c.ell);
    auto max_at = [&](int n) {
        for (std::size_t k = 0; k < r.n_list.size(); ++k)
            if (r.n_list[k] == n) return r.max_ratio[k];
        return std::numeric_limits<double>::quiet_NaN();
    };
    auto max_over = [&](int lo, int hi) {
        double m = 0.0;
        for (std::size_t k = 0; k < r.n_list.size(); ++k)
            if (r.n_list[k] >= lo && r.n_list[k] <= hi) m = std::max(m, r.max_ratio[k]);
        return m;
    };
    Outcome o;
    o.result = to_json(r);
    const double m10 = max_at(10), mlast = max_at(nmax);
    o.checks.push_back({"last_vs_n10", mlast <= 1.2 * m10, {{"n", nmax}, {"max_last", mlast}, {"max_n10", m10}}});
    const double lo_dec = max_over(10, 100), hi_dec = max_over(100, 1000);
    o.checks.push_back({"decade_maxima", hi_dec <= 1.2 * lo_dec, {{"max_10_100", lo_dec}, {"max_100_1000", hi_dec}}});
    o.checks.push_back({"first_return_exponent", r.first_return_fit.exponent <= r.predicted_exponent + 0.2,
                        {{"exponent", r.first_return_fit.exponent}, {"bound", r.predicted_exponent + 0.2}}});
    std::ostringstream csv;
    write_distortion_csv(csv, r);
    o.csv = csv.str();
    return o;
}

Outcome cmd_expansion(const RunConfig& c, const ParamPoint& p) {
    const auto r = expansion_check(p, nmax_of(c));
    Outcome o;
    o.result = to_json(r);
    o.checks.push_back({"min_derivative", r.passed, r.global_min});
    std::ostringstream csv;
    csv.precision(17);
    csv << "n,min_derivative\n";
    for (std::size_t n = 0; n < r.min_derivative.size(); ++n) csv << n << ',' << r.min_derivative[n] << '\n';
    o.csv = csv.str();
    return o;
}

Outcome cmd_weighted(const RunConfig& c, const ParamPoint& p) {
    const auto box = config_box(c).value_or(ParamBox(p.alpha(), p.alpha(), p.beta()));
    if (!box.contains(p)) throw DomainError("weighted: (alpha, beta) outside the box");
    const auto mesh = build_mesh(c.cells, c.grading);
    const WeightedOperatorContext ctx(box, mesh);
    const auto U = assemble_ulam(p, mesh);
    const double a = a0(box.upper());
    const int trials = std::min(c.trials, 20);
    double worst = 0.0;
    std::ostringstream csv;
    csv.precision(17);
    csv << "trial,sup_phi,max_sup_iterate,ratio\n";
    for (int t = 0; t < trials; ++t) {
        const auto phi = random_bounded_function(mesh, c.seed, static_cast<std::uint64_t>(t));
        double sup_phi = 0.0;
        for (double v : phi.values()) sup_phi = std::max(sup_phi, std::abs(v));
        const auto hist = weighted_sup_history(ctx, U, phi, nmax_of(c));
        const double mx = *std::max_element(hist.begin(), hist.end());
        const double ratio = mx / (a * sup_phi);
        worst = std::max(worst, ratio);
        csv << t << ',' << sup_phi << ',' << mx << ',' << ratio << '\n';
    }
    Outcome o;
    o.result = {{"a0_upper", a}, {"weight_exponent", ctx.exponent()}, {"trials", trials}, {"worst_ratio", worst}};
    o.checks.push_back({"sup_bound", worst <= 1.05, worst});
    o.csv = csv.str();
    return o;
}

Outcome dispatch(const RunConfig& c, const ParamPoint& p) {
    static const std::map<std::string, std::function<Outcome(const RunConfig&, const ParamPoint&)>> table = {
        {"density", cmd_density},         {"response", cmd_response},       {"ladder", cmd_ladder},
        {"trajectory", cmd_trajectory},   {"tails", cmd_tails},             {"memory-loss", cmd_memory_loss},
        {"correlation", cmd_correlation}, {"cone-check", cmd_cone_check},   {"distortion", cmd_distortion},
        {"expansion", cmd_expansion},     {"weighted", cmd_weighted}};
    return table.at(c.command)(c, p);
}

void write_file(const std::string& path, const std::string& data) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path + " for writing");
    f << data;
    if (!f) throw std::runtime_error("write to " + path + " failed");
}

} // namespace

int run(const RunConfig& c, std::ostream& out) {
    json summary;
    summary["command"] = c.command;
    summary["config"] = c.echo();
    bool passed = true;
    std::string csv;
    if (c.sweep.empty()) {
        auto o = dispatch(c, ParamPoint(c.alpha, c.beta));
        passed = all_passed(o.checks);
        summary["result"] = std::move(o.result);
        summary["checks"] = checks_json(o.checks);
        csv = std::move(o.csv);
        if (!c.out.empty() && !o.binary.empty()) write_file(c.out + ".ulam", o.binary);
    } else {
        const auto w = parse_sweep(c.sweep);
        json points = json::array();
        int index = 0;
        for (int i = 0; i < w.na; ++i) {
            for (int j = 0; j < w.nb; ++j) {
                const double a = grid_point(w.a0, w.a1, w.na, i), b = grid_point(w.b0, w.b1, w.nb, j);
                if (!ParamPoint::admissible(a, b)) continue;
                auto o = dispatch(c, ParamPoint(a, b));
                const bool ok = all_passed(o.checks);
                passed = passed && ok;
                points.push_back({{"alpha", a}, {"beta", b}, {"result", std::move(o.result)},
                                  {"checks", checks_json(o.checks)}, {"passed", ok}});
                if (!c.out.empty()) write_file(c.out + "_" + std::to_string(index) + ".csv", o.csv);
                ++index;
            }
        }
        summary["sweep"] = std::move(points);
    }
    summary["passed"] = passed;
    const std::string text = summary.dump(2) + "\n";
    if (!c.out.empty()) {
        write_file(c.out + ".json", text);
        if (!csv.empty()) write_file(c.out + ".csv", csv);
    } else if (c.format == "csv" && c.sweep.empty()) {
        out << csv;
    } else {
        out << text;
    }
    return passed ? 0 : 1;
}

int main_entry(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    RunConfig c;
    try {
        c = parse_args(argc, argv);
    } catch (const HelpRequested& h) {
        out << h.what();
        return 0;
    } catch (const ConfigError& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "configuration error: " << e.what() << '\n';
        return 2;
    }
    try {
        return run(c, out);
    } catch (const DomainError& e) {
        err << "invalid configuration: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

} // namespace ir::cli
