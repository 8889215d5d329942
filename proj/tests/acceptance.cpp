// Acceptance runner: one PASS/FAIL line per criterion.
//   acceptance          run all twelve
//   acceptance 3 7      run a subset
#include "ir/cli.hpp"
#include "ir/cones.hpp"
#include "ir/response.hpp"
#include "ir/transfer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

using namespace ir;
using nlohmann::json;

namespace {

struct Verdict {
    bool passed = true;
    std::ostringstream detail;

    void require(bool ok, const std::string& what) {
        if (!ok) {
            passed = false;
            detail << " [fail: " << what << "]";
        }
    }
};

json run_cli(std::vector<std::string> args, int* status = nullptr) {
    args.insert(args.begin(), "ir");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int s = cli::main_entry(static_cast<int>(argv.size()), argv.data(), out, err);
    if (status) *status = s;
    if (s == 2) throw std::runtime_error("configuration rejected: " + err.str());
    if (out.str().empty()) return json{};
    return json::parse(out.str());
}

const json& check_named(const json& summary, const std::string& name) {
    for (const auto& c : summary.at("checks"))
        if (c.at("name") == name) return c;
    throw std::runtime_error("missing check " + name);
}

std::string gamma_tag(double a, double b) {
    std::ostringstream s;
    s << '(' << a << ',' << b << ')';
    return s.str();
}

std::vector<std::string> at(double a, double b, std::vector<std::string> rest) {
    std::vector<std::string> v = {"--alpha", std::to_string(a), "--beta", std::to_string(b)};
    v.insert(v.end(), rest.begin(), rest.end());
    return v;
}

std::vector<std::string> cmd(const std::string& name, std::vector<std::string> rest) {
    rest.insert(rest.begin(), name);
    return rest;
}

// -------------------------------------------------------------- criteria

void density_exponent(Verdict& v) {
    const auto s1 = run_cli(cmd("density", at(0.5, 1.0, {"--cells", "16384", "--grading", "3"})));
    const auto& c1 = check_named(s1, "slope_two_sided");
    v.detail << "slope(0.5,1.0)=" << c1.at("detail").at("slope").get<double>();
    v.require(c1.at("passed"), "two-sided slope at (0.5,1.0)");
    const auto s2 = run_cli(cmd("density", at(0.5, 1.5, {"--cells", "16384", "--grading", "3"})));
    const auto& c2 = check_named(s2, "slope_lower_bound");
    v.detail << " slope(0.5,1.5)=" << c2.at("detail").at("slope").get<double>() << " >= "
             << c2.at("detail").at("bound").get<double>();
    v.require(c2.at("passed"), "one-sided slope at (0.5,1.5)");
}

void memory_loss(Verdict& v) {
    const auto s = run_cli(cmd("memory-loss", at(0.5, 1.0, {"--nmax", "500"})));
    const auto& c = check_named(s, "decay_rate");
    v.detail << "exponent=" << c.at("detail").at("exponent").get<double>() << " expected -1 +- 0.15";
    v.require(c.at("passed"), "decay rate");
    v.require(check_named(s, "nonincreasing").at("passed"), "contraction");
}

void return_tail(Verdict& v) {
    for (auto [a, b] : {std::pair{0.5, 1.0}, std::pair{0.5, 1.5}}) {
        const auto s = run_cli(cmd("tails", at(a, b, {"--samples", "10000000", "--seed", "1"})));
        const auto& c = check_named(s, "tail_exponent");
        v.detail << gamma_tag(a, b) << ' ' << c.at("detail").at("exponent").get<double>() << " vs "
                 << c.at("detail").at("expected").get<double>() << "; ";
        v.require(c.at("passed"), "tail exponent at " + gamma_tag(a, b));
    }
}

void response_vs_fd(Verdict& v) {
    const auto s = run_cli(cmd("response", at(0.2, 1.2, {"--obs", "x", "--delta", "1e-3", "--validate-fd"})));
    const auto& f = s.at("result").at("fd_cross_check");
    v.detail << "D=(" << s.at("result").at("D1").get<double>() << ',' << s.at("result").at("D2").get<double>()
             << ") fd=(" << f.at("d1").get<double>() << ',' << f.at("d2").get<double>() << ") rel=("
             << f.at("rel_err1").get<double>() << ',' << f.at("rel_err2").get<double>() << ')';
    v.require(check_named(s, "fd_gap_1").at("passed"), "D1");
    v.require(check_named(s, "fd_gap_2").at("passed"), "D2");
}

double L_at(double a, double b, double x) {
    return apply_pointwise(ParamPoint(a, b), [](double y) { return 1.0 + y * y; }, x);
}

void first_derivative(Verdict& v) {
    const double h = 1e-6;
    double worst = 0.0;
    for (auto [a, b] : {std::pair{0.3, 1.2}, std::pair{0.5, 1.5}}) {
        const ParamPoint p(a, b);
        for (int i : {1, 2}) {
            for (int k = 0; k < 100; ++k) {
                const double x = (k + 0.5) / 100.0;
                const double fd = i == 1 ? (L_at(a + h, b, x) - L_at(a - h, b, x)) / (2 * h)
                                         : (L_at(a, b + h, x) - L_at(a, b - h, x)) / (2 * h);
                const double an = partial_L_pointwise(p, i, [](double y) { return 1.0 + y * y; },
                                                      [](double y) { return 2.0 * y; }, x);
                worst = std::max(worst, std::abs(an - fd) / std::abs(fd));
            }
            const auto mesh = build_mesh(1 << 14, 3.0);
            const auto r = partial_L(p, i, GridFunction::sample(mesh, [](double y) { return 1.0 + y * y; }));
            v.detail << "mean" << i << gamma_tag(a, b) << '=' << r.raw_mean << ' ';
            v.require(std::abs(r.raw_mean) <= 1e-6, "quadrature mean");
        }
    }
    v.detail << "max rel err=" << worst;
    v.require(worst <= 1e-3, "pointwise identity");
}

void second_derivative(Verdict& v) {
    const double h = 1e-4;
    const Phi2 phi{[](double y) { return 1.0 + y * y; }, [](double y) { return 2.0 * y; }, [](double) { return 2.0; }};
    double worst = 0.0;
    for (auto [a, b] : {std::pair{0.3, 1.2}, std::pair{0.5, 1.5}}) {
        const ParamPoint p(a, b);
        for (int i : {1, 2}) {
            for (int k = 0; k < 10; ++k) {
                const double x = (k + 0.5) / 10.0;
                const double mid = L_at(a, b, x);
                const double fd = i == 1 ? (L_at(a + h, b, x) - 2 * mid + L_at(a - h, b, x)) / (h * h)
                                         : (L_at(a, b + h, x) - 2 * mid + L_at(a, b - h, x)) / (h * h);
                worst = std::max(worst, std::abs(second_partial_L(p, i, phi, x) - fd) / std::abs(fd));
            }
            const auto mesh = build_mesh(1 << 14, 3.0);
            const double mean = integrate_function(*mesh, [&](double x) { return x > 0.0 ? second_partial_L(p, i, phi, x) : 0.0; });
            v.detail << "mean" << i << gamma_tag(a, b) << '=' << mean << ' ';
            v.require(std::abs(mean) <= 1e-4, "quadrature mean");
        }
    }
    v.detail << "max rel err=" << worst;
    v.require(worst <= 1e-2, "pointwise identity");
}

void cone_invariance(Verdict& v) {
    const std::pair<ParamPoint, ParamPoint> pairs[] = {
        {ParamPoint(0.3, 1.2), ParamPoint(0.5, 1.5)},
        {ParamPoint(0.5, 1.0), ParamPoint(0.5, 1.0)},
        {ParamPoint(0.2, 1.1), ParamPoint(0.4, 1.3)},
        {ParamPoint(0.6, 1.2), ParamPoint(0.7, 1.3)},
    };
    const auto mesh = build_mesh(1 << 12, 3.0);
    for (const auto& [g, gu] : pairs) {
        const ConeParams cp(a0(gu), gu);
        const auto U = assemble_ulam(g, mesh);
        const auto r = verify_cone_invariance(cp, U, 100, 1, Branch::both, 1e-3);
        const bool h_in = check_Ca(invariant_density(U).density, cp).passed;
        v.detail << gamma_tag(g.alpha(), g.beta()) << "->" << gamma_tag(gu.alpha(), gu.beta()) << ' ' << r.passed
                 << "/100" << (h_in ? " h ok; " : " h out; ");
        v.require(r.all_passed() && r.trials == 100, "pushed mixtures");
        v.require(h_in, "density in cone");
    }
}

void ladder_bounds(Verdict& v) {
    for (auto [a, b] : {std::pair{0.1, 1.0}, std::pair{0.3, 1.5}, std::pair{0.5, 1.5}, std::pair{0.8, 1.2},
                        std::pair{0.95, 1.0}}) {
        const auto s = run_cli(cmd("ladder", at(a, b, {"--nmax", "10000"})));
        const auto& e = s.at("result").at("stated_envelopes");
        const int lo = e.at("lower_violations"), up = e.at("upper_violations");
        const int hlo = e.at("hat_lower_violations"), hup = e.at("hat_upper_violations");
        v.detail << gamma_tag(a, b) << " violations lo/up/hat_lo/hat_up=" << lo << '/' << up << '/' << hlo << '/' << hup
                 << "; ";
        v.require(lo + up + hlo + hup == 0, "envelopes at " + gamma_tag(a, b));
        v.require(check_named(s, "monotone").at("passed"), "monotone");
    }
}

void expansion(Verdict& v) {
    for (auto [a, b] : {std::pair{0.5, 1.0}, std::pair{0.5, 1.5}, std::pair{0.9, 1.05}}) {
        const auto s = run_cli(cmd("expansion", at(a, b, {"--nmax", "1000"})));
        const auto& c = check_named(s, "min_derivative");
        v.detail << gamma_tag(a, b) << " min=" << c.at("detail").get<double>() << "; ";
        v.require(c.at("passed"), "min derivative at " + gamma_tag(a, b));
    }
}

void weighted_bound(Verdict& v) {
    const auto s = run_cli(cmd("weighted", at(0.3, 1.2, {"--alpha-lo", "0.1", "--alpha-hi", "0.5", "--beta-hi", "1.5",
                                                          "--nmax", "200", "--trials", "20"})));
    const auto& c = check_named(s, "sup_bound");
    v.detail << "worst ratio=" << c.at("detail").get<double>() << " (bound 1.05)";
    v.require(c.at("passed"), "sup bound");
}

void distortion(Verdict& v) {
    for (auto [a, b] : {std::pair{0.5, 1.0}, std::pair{0.5, 1.2}, std::pair{0.3, 1.5}}) {
        const auto s = run_cli(cmd("distortion", at(a, b, {"--nmax", "1000"})));
        const auto& l = check_named(s, "last_vs_n10");
        const auto& f = check_named(s, "first_return_exponent");
        v.detail << gamma_tag(a, b) << " max(1000)=" << l.at("detail").at("max_last").get<double>()
                 << " max(10)=" << l.at("detail").at("max_n10").get<double>()
                 << " exponent=" << f.at("detail").at("exponent").get<double>() << "<="
                 << f.at("detail").at("bound").get<double>() << "; ";
        v.require(l.at("passed"), "non-growing at " + gamma_tag(a, b));
        v.require(check_named(s, "decade_maxima").at("passed"), "decade maxima at " + gamma_tag(a, b));
        v.require(f.at("passed"), "first-return exponent at " + gamma_tag(a, b));
    }
}

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void determinism(Verdict& v) {
    namespace fs = std::filesystem;
    const auto dir = fs::temp_directory_path() / "ir_acceptance";
    fs::create_directories(dir);
    const std::string pre = (dir / "run").string();
    const std::vector<std::vector<std::string>> runs = {
        cmd("density", at(0.3, 1.2, {"--cells", "4096"})),
        cmd("tails", at(0.5, 1.5, {"--samples", "1000000", "--seed", "7"})),
        cmd("trajectory", at(0.5, 1.5, {"--nmax", "5000", "--seed", "3"})),
        cmd("memory-loss", at(0.4, 1.1, {"--cells", "2048", "--nmax", "200"})),
        cmd("response", at(0.3, 1.2, {"--cells", "2048"})),
        cmd("cone-check", at(0.3, 1.2, {"--cells", "2048", "--alpha-hi", "0.5", "--beta-hi", "1.5", "--trials", "20"})),
    };
    int compared = 0;
    for (const auto& base : runs) {
        std::vector<std::string> reference;
        for (const char* threads : {"1", "4", "1"}) {
            setenv("IR_THREADS", threads, 1);
            auto args = base;
            args.insert(args.end(), {"--out", pre});
            run_cli(args);
            std::vector<std::string> files;
            for (const char* ext : {".json", ".csv", ".ulam"})
                if (fs::exists(pre + ext)) {
                    files.push_back(slurp(pre + ext));
                    fs::remove(pre + ext);
                }
            if (reference.empty()) reference = files;
            else {
                ++compared;
                v.require(files == reference, base.front() + " differs with IR_THREADS=" + threads);
            }
        }
    }
    unsetenv("IR_THREADS");
    v.detail << compared << " repeated runs compared byte-for-byte across worker counts 1 and 4";
}

struct Criterion {
    int id;
    const char* name;
    double limit_s;
    std::function<void(Verdict&)> body;
};

} // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {1, "density singularity exponent", 120, density_exponent},
        {2, "memory-loss rate", 180, memory_loss},
        {3, "return-time tail", 120, return_tail},
        {4, "linear response vs finite differences", 600, response_vs_fd},
        {5, "first-derivative operator identity", 30, first_derivative},
        {6, "second-derivative identity", 30, second_derivative},
        {7, "cone invariance", 60, cone_invariance},
        {8, "ladder envelopes", 5, ladder_bounds},
        {9, "induced-map expansion", 30, expansion},
        {10, "weighted-operator sup bound", 60, weighted_bound},
        {11, "distortion boundedness", 120, distortion},
        {12, "determinism", 600, determinism},
    };
    std::vector<int> wanted;
    for (int k = 1; k < argc; ++k) wanted.push_back(std::atoi(argv[k]));
    int failures = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.id) == wanted.end()) continue;
        Verdict v;
        const auto t0 = std::chrono::steady_clock::now();
        try {
            c.body(v);
        } catch (const std::exception& e) {
            v.passed = false;
            v.detail << " [exception: " << e.what() << "]";
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (secs > c.limit_s) {
            v.passed = false;
            v.detail << " [fail: runtime over " << c.limit_s << " s]";
        }
        if (!v.passed) ++failures;
        std::cout << (v.passed ? "PASS" : "FAIL") << "  criterion " << c.id << " (" << c.name << ", "
                  << std::round(secs * 10) / 10 << " s): " << v.detail.str() << std::endl;
    }
    return failures == 0 ? 0 : 1;
}
