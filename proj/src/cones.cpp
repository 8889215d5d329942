#include "ir/cones.hpp"

#include "ir/parallel.hpp"
#include "ir/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ir {

double a0(const ParamPoint& g) {
    const double a = g.alpha(), b = g.beta();
    return std::pow(2.0, b + 1.0) * std::pow(1.0 + std::pow(2.0, a), 1.0 + a - 1.0 / b) / (1.0 / b - a);
}

ConeParams::ConeParams(double a_, ParamPoint gamma_) : a(a_), gamma(gamma_) {
    if (!(a_ > 0.0) || !std::isfinite(a_)) throw DomainError("ConeParams: a must be positive and finite");
}

C3Params::C3Params(double b1_, double b2_, double b3_) : b1(b1_), b2(b2_), b3(b3_) {
    if (!(b1 >= 1.0) || !(b2 >= b1) || !(b3 >= b1) || !std::isfinite(b3))
        throw DomainError("C3Params: need b1 >= 1, b2 >= b1, b3 >= b1");
}

C3Params C3Params::sufficient(const ParamPoint& gu) {
    const double b1 = gu.alpha() + 1.0;
    return {b1, 12.0 * b1, 103.0 * 12.0 * b1};
}

bool C3Params::meets_invariance_thresholds(const ParamPoint& gu) const {
    return b1 >= gu.alpha() + 1.0 && b2 >= 12.0 * b1 && b3 >= 103.0 * b2;
}

double ConeReport::margin(const std::string& condition) const {
    for (const auto& [name, m] : margins)
        if (name == condition) return m;
    throw std::out_of_range("ConeReport: unknown condition " + condition);
}

nlohmann::json to_json(const ConeReport& r) {
    nlohmann::json j;
    j["passed"] = r.passed;
    if (r.first_violation) {
        j["first_violation"] = {{"condition", r.first_violation->condition},
                                {"x", r.first_violation->x},
                                {"margin", r.first_violation->margin}};
    } else {
        j["first_violation"] = nullptr;
    }
    nlohmann::json m = nlohmann::json::object();
    for (const auto& [name, v] : r.margins) m[name] = v;
    j["margins"] = m;
    j["min_normalized"] = r.min_normalized;
    return j;
}

namespace {

// Tracks per-condition minimum relative margins and the first violation in
// order of position.
class MarginTracker {
public:
    explicit MarginTracker(std::vector<std::string> names) {
        for (auto& n : names) margins_.emplace_back(std::move(n), std::numeric_limits<double>::infinity());
    }

    // Records lhs <= rhs at position x.
    void le(std::size_t cond, double x, double lhs, double rhs, double tol) {
        const double scale = std::max({std::abs(lhs), std::abs(rhs), std::numeric_limits<double>::min()});
        const double m = (rhs - lhs) / scale;
        auto& slot = margins_[cond].second;
        slot = std::min(slot, m);
        if (m < -tol && (!first_ || x < first_->x)) first_ = ConeViolation{margins_[cond].first, x, m};
    }

    ConeReport finish(double min_normalized) {
        ConeReport r;
        r.first_violation = first_;
        r.passed = !first_.has_value();
        for (auto& [n, m] : margins_)
            if (std::isinf(m)) m = 0.0;
        r.margins = margins_;
        r.min_normalized = min_normalized;
        return r;
    }

private:
    std::vector<std::pair<std::string, double>> margins_;
    std::optional<ConeViolation> first_;
};

enum Cond : std::size_t { kNonneg, kDecreasing, kWeighted, kIntegral };

} // namespace

ConeReport check_Ca(const GridFunction& f, const ConeParams& cp, const ConeCheckOptions& opts) {
    const auto& m = f.mesh();
    const auto n = static_cast<std::size_t>(m.cells());
    const auto x = m.nodes();
    const double al = cp.gamma.alpha();
    const double q = 1.0 / cp.gamma.beta() - al;
    const double tol = opts.rel_tol;
    MarginTracker t({"nonnegative", "decreasing", "weighted_increasing", "integral"});

    std::vector<double> cum(n + 1, 0.0);
    double sup = 0.0;
    double fmin = std::numeric_limits<double>::infinity();

    if (f.kind() == GridKind::cell_average) {
        for (std::size_t j = 0; j < n; ++j) {
            cum[j + 1] = cum[j] + f[j] * m.width(static_cast<int>(j));
            sup = std::max(sup, std::abs(f[j]));
            fmin = std::min(fmin, f[j]);
        }
        const double mass = cum[n];
        if (!(mass > 0.0)) throw DomainError("check_Ca: function must have positive integral");
        for (std::size_t j = 0; j < n; ++j) t.le(kNonneg, x[j], 0.0, f[j] / sup, tol);
        // Averages of a decreasing function decrease; for x^{alpha+1} f
        // increasing, x_j^{alpha+1} avg_j <= H(x_{j+1}) <= x_{j+2}^{alpha+1} avg_{j+1}.
        for (std::size_t j = 0; j + 1 < n; ++j) {
            t.le(kDecreasing, x[j + 1], f[j + 1], f[j], tol);
            t.le(kWeighted, x[j + 1], std::pow(x[j], al + 1.0) * f[j], std::pow(x[j + 2], al + 1.0) * f[j + 1], tol);
        }
        for (std::size_t j = 1; j <= n; ++j)
            t.le(kIntegral, x[j], cum[j], cp.a * std::pow(x[j], q) * mass * (1.0 + opts.integral_slack),
                 tol);
        return t.finish(fmin / mass);
    }

    // Nodal samples; a non-finite value at the origin is treated as an
    // integrable power singularity fitted from the next two nodes.
    const std::size_t j0 = std::isfinite(f[0]) ? 0 : 1;
    if (j0 == 0) {
        cum[1] = 0.5 * (f[0] + f[1]) * x[1];
    } else {
        double s = 0.0;
        if (f[1] > 0.0 && f[2] > 0.0) s = std::log(f[2] / f[1]) / std::log(x[2] / x[1]);
        if (!(s > -1.0)) throw DomainError("check_Ca: non-integrable singularity at the origin");
        cum[1] = f[1] * x[1] / (s + 1.0);
    }
    for (std::size_t j = 1; j < n; ++j) cum[j + 1] = cum[j] + 0.5 * (f[j] + f[j + 1]) * (x[j + 1] - x[j]);
    const double mass = cum[n];
    if (!(mass > 0.0)) throw DomainError("check_Ca: function must have positive integral");
    for (std::size_t j = j0; j <= n; ++j) {
        sup = std::max(sup, std::abs(f[j]));
        fmin = std::min(fmin, f[j]);
    }
    for (std::size_t j = j0; j <= n; ++j) t.le(kNonneg, x[j], 0.0, f[j] / sup, tol);
    for (std::size_t j = j0; j < n; ++j) {
        t.le(kDecreasing, x[j + 1], f[j + 1], f[j], tol);
        t.le(kWeighted, x[j + 1], std::pow(x[j], al + 1.0) * f[j], std::pow(x[j + 1], al + 1.0) * f[j + 1], tol);
    }
    for (std::size_t j = 1; j <= n; ++j)
        t.le(kIntegral, x[j], cum[j], cp.a * std::pow(x[j], q) * mass * (1.0 + opts.integral_slack), tol);
    return t.finish(fmin / mass);
}

ConeReport check_C3(const std::function<Derivs3(double)>& f, const C3Params& c3, int sample_count) {
    if (sample_count < 2) throw std::invalid_argument("check_C3: need at least two samples");
    MarginTracker t({"positive", "first_derivative", "second_derivative", "third_derivative"});
    const double lo = std::log(1e-8);
    double fmin = std::numeric_limits<double>::infinity();
    constexpr double tol = 1e-9;
    for (int k = 0; k < sample_count; ++k) {
        const double x = std::exp(lo - lo * k / (sample_count - 1));
        const auto d = f(x);
        fmin = std::min(fmin, d.f);
        if (!(d.f > 0.0) || !std::isfinite(d.d1) || !std::isfinite(d.d2) || !std::isfinite(d.d3)) {
            t.le(0, x, 1.0, 0.0, tol);
            continue;
        }
        t.le(1, x, std::abs(d.d1) * x, c3.b1 * d.f, tol);
        t.le(2, x, std::abs(d.d2) * x * x, c3.b2 * d.f, tol);
        t.le(3, x, std::abs(d.d3) * x * x * x, c3.b3 * d.f, tol);
    }
    return t.finish(fmin);
}

double lambda_shift(double C0, double C1, double delta, const ConeParams& cp) {
    const double al = cp.gamma.alpha(), be = cp.gamma.beta();
    const double room = 1.0 + al - 1.0 / be;
    if (!(cp.a >= 2.0)) throw DomainError("lambda_shift: requires a >= 2");
    if (!(delta > 0.0 && delta < room)) throw DomainError("lambda_shift: delta out of range");
    if (!(C0 >= 1.0 && C1 >= 1.0)) throw DomainError("lambda_shift: constants must be at least 1");
    const double m = std::max({1.0 / room, 4.0, 2.0 * (1.0 / be - al) / (1.0 - delta)});
    return cp.a * (C0 + C1) * m;
}

MixtureElement random_cone_mixture(MeshPtr mesh, const ParamPoint& gu, std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(seed, index);
    const double room = 1.0 + gu.alpha() - 1.0 / gu.beta();
    const int k = 1 + static_cast<int>(rng.next_u64() % 4);
    MixtureElement e{{}, {}, GridFunction::constant(mesh, 0.0, GridKind::cell_average)};
    for (int i = 0; i < k; ++i) {
        e.weights.push_back(rng.uniform_open());
        e.exponents.push_back(room * rng.uniform());
    }
    auto& v = e.averages.mutable_values();
    for (int j = 0; j < mesh->cells(); ++j) {
        const double a = mesh->node(j), b = mesh->node(j + 1);
        double s = 0.0;
        for (int i = 0; i < k; ++i) {
            const double p = 1.0 - e.exponents[static_cast<std::size_t>(i)];
            s += e.weights[static_cast<std::size_t>(i)] * (std::pow(b, p) - std::pow(a, p)) / p;
        }
        v[static_cast<std::size_t>(j)] = s / (b - a);
    }
    return e;
}

nlohmann::json to_json(const InvarianceReport& r) {
    return {{"trials", r.trials},
            {"passed", r.passed},
            {"worst_margin", r.worst_margin},
            {"min_normalized", r.min_normalized},
            {"failed_trials", r.failed_trials}};
}

InvarianceReport verify_cone_invariance(const ConeParams& cp, const UlamOperator& U, int trials,
                                        std::uint64_t seed, Branch branch, double integral_slack) {
    if (!(U.params() <= cp.gamma)) throw DomainError("verify_cone_invariance: operator parameters exceed gamma_u");
    if (trials < 0) throw std::invalid_argument("verify_cone_invariance: negative trial count");
    std::vector<ConeReport> reports(static_cast<std::size_t>(trials));
    parallel_for(reports.size(), [&](std::size_t k) {
        const auto e = random_cone_mixture(U.mesh_ptr(), cp.gamma, seed, k);
        const auto pushed = push_density(U, e.averages, branch);
        reports[k] = check_Ca(pushed, cp, {1e-9, integral_slack});
    });
    InvarianceReport r;
    r.trials = trials;
    r.worst_margin = std::numeric_limits<double>::infinity();
    r.min_normalized = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < reports.size(); ++k) {
        const auto& c = reports[k];
        if (c.passed) ++r.passed;
        else r.failed_trials.push_back(static_cast<int>(k));
        for (const auto& [name, m] : c.margins) r.worst_margin = std::min(r.worst_margin, m);
        r.min_normalized = std::min(r.min_normalized, c.min_normalized);
    }
    if (trials == 0) r.worst_margin = r.min_normalized = 0.0;
    return r;
}

} // namespace ir
