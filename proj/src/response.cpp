#include "ir/response.hpp"

#include "ir/fit.hpp"
#include "ir/map_core.hpp"
#include "ir/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ir {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::vector<double> parse_list(const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t used = 0;
        double v;
        try {
            v = std::stod(item, &used);
        } catch (const std::exception&) {
            throw std::invalid_argument("Observable: bad number '" + item + "'");
        }
        if (item.find_first_not_of(" \t", used) != std::string::npos)
            throw std::invalid_argument("Observable: bad number '" + item + "'");
        out.push_back(v);
    }
    return out;
}

} // namespace

// ------------------------------------------------------------- Observable

Observable Observable::polynomial(std::vector<double> coeffs) {
    if (coeffs.empty()) coeffs.push_back(0.0);
    Observable o;
    o.kind_ = Kind::polynomial;
    o.params_ = std::move(coeffs);
    std::ostringstream os;
    os.precision(17);
    os << "poly:";
    for (std::size_t k = 0; k < o.params_.size(); ++k) os << (k ? "," : "") << o.params_[k];
    o.text_ = os.str();
    return o;
}

Observable Observable::power(double s, double c) {
    if (!std::isfinite(s) || !std::isfinite(c)) throw std::invalid_argument("Observable: non-finite power parameters");
    Observable o;
    o.kind_ = Kind::power;
    o.params_ = {s, c};
    std::ostringstream os;
    os.precision(17);
    os << "pow:" << s << "," << c;
    o.text_ = os.str();
    return o;
}

Observable Observable::indicator(double a, double b) {
    if (!(a >= 0.0 && b <= 1.0 && a < b)) throw std::invalid_argument("Observable: indicator needs 0 <= a < b <= 1");
    Observable o;
    o.kind_ = Kind::indicator;
    o.params_ = {a, b};
    std::ostringstream os;
    os.precision(17);
    os << "indicator:" << a << "," << b;
    o.text_ = os.str();
    return o;
}

Observable Observable::table(std::vector<double> x, std::vector<double> y) {
    if (x.size() != y.size() || x.size() < 2) throw std::invalid_argument("Observable: table needs matching columns");
    for (std::size_t k = 1; k < x.size(); ++k)
        if (!(x[k] > x[k - 1])) throw std::invalid_argument("Observable: table abscissae must increase");
    if (x.front() > 0.0 || x.back() < 1.0) throw std::invalid_argument("Observable: table must cover [0,1]");
    for (double v : y)
        if (!std::isfinite(v)) throw std::invalid_argument("Observable: table values must be finite");
    Observable o;
    o.kind_ = Kind::table;
    o.xs_ = std::move(x);
    o.ys_ = std::move(y);
    o.text_ = "table:" + std::to_string(o.xs_.size()) + " points";
    return o;
}

Observable Observable::parse(const std::string& text) {
    if (text == "x") return polynomial({0.0, 1.0});
    if (text.rfind("x^", 0) == 0) {
        const auto v = parse_list(text.substr(2));
        const double k = v.at(0);
        if (k < 0 || k != std::floor(k) || k > 64) throw std::invalid_argument("Observable: x^k needs integer k in [0,64]");
        std::vector<double> c(static_cast<std::size_t>(k) + 1, 0.0);
        c.back() = 1.0;
        return polynomial(c);
    }
    const auto colon = text.find(':');
    if (colon == std::string::npos) {
        const auto v = parse_list(text);
        if (v.size() != 1) throw std::invalid_argument("Observable: cannot parse '" + text + "'");
        return polynomial(v);
    }
    const std::string head = text.substr(0, colon);
    const std::string rest = text.substr(colon + 1);
    if (head == "poly") return polynomial(parse_list(rest));
    if (head == "pow") {
        const auto v = parse_list(rest);
        if (v.empty() || v.size() > 2) throw std::invalid_argument("Observable: pow:s[,c]");
        return power(v[0], v.size() == 2 ? v[1] : 1.0);
    }
    if (head == "indicator") {
        const auto v = parse_list(rest);
        if (v.size() != 2) throw std::invalid_argument("Observable: indicator:a,b");
        return indicator(v[0], v[1]);
    }
    if (head == "table") {
        std::ifstream in(rest);
        if (!in) throw std::invalid_argument("Observable: cannot open table " + rest);
        std::vector<double> xs, ys;
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty() || line[0] == '#') continue;
            if (line.find_first_of("0123456789.-") != 0) continue; // header
            const auto v = parse_list(line);
            if (v.size() != 2) throw std::invalid_argument("Observable: table rows need x,value");
            xs.push_back(v[0]);
            ys.push_back(v[1]);
        }
        auto o = table(std::move(xs), std::move(ys));
        o.text_ = text;
        return o;
    }
    throw std::invalid_argument("Observable: unknown kind '" + head + "'");
}

double Observable::operator()(double x) const {
    switch (kind_) {
    case Kind::polynomial: {
        double s = 0.0;
        for (auto it = params_.rbegin(); it != params_.rend(); ++it) s = s * x + *it;
        return s;
    }
    case Kind::power:
        return params_[1] * std::pow(x, -params_[0]);
    case Kind::indicator:
        return (x >= params_[0] && x <= params_[1]) ? 1.0 : 0.0;
    case Kind::table: {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        if (it == xs_.begin()) return ys_.front();
        if (it == xs_.end()) return ys_.back();
        const auto k = static_cast<std::size_t>(it - xs_.begin());
        const double t = (x - xs_[k - 1]) / (xs_[k] - xs_[k - 1]);
        return ys_[k - 1] + t * (ys_[k] - ys_[k - 1]);
    }
    }
    return kNaN;
}

double Observable::deriv(double x) const {
    switch (kind_) {
    case Kind::polynomial: {
        double s = 0.0;
        for (std::size_t k = params_.size(); k-- > 1;) s = s * x + static_cast<double>(k) * params_[k];
        return s;
    }
    case Kind::power:
        return -params_[0] * params_[1] * std::pow(x, -params_[0] - 1.0);
    case Kind::indicator:
        return 0.0;
    case Kind::table: {
        auto it = std::upper_bound(xs_.begin(), xs_.end(), x);
        if (it == xs_.begin() || it == xs_.end()) return 0.0;
        const auto k = static_cast<std::size_t>(it - xs_.begin());
        return (ys_[k] - ys_[k - 1]) / (xs_[k] - xs_[k - 1]);
    }
    }
    return kNaN;
}

double Observable::second_deriv(double x) const {
    switch (kind_) {
    case Kind::polynomial: {
        double s = 0.0;
        for (std::size_t k = params_.size(); k-- > 2;)
            s = s * x + static_cast<double>(k) * static_cast<double>(k - 1) * params_[k];
        return s;
    }
    case Kind::power:
        return params_[0] * (params_[0] + 1.0) * params_[1] * std::pow(x, -params_[0] - 2.0);
    default:
        return 0.0;
    }
}

double Observable::integral(double a, double b) const {
    if (!(a <= b)) throw std::invalid_argument("Observable::integral: a > b");
    switch (kind_) {
    case Kind::polynomial: {
        double sa = 0.0, sb = 0.0;
        for (std::size_t k = params_.size(); k-- > 0;) {
            const double c = params_[k] / static_cast<double>(k + 1);
            sa = sa * a + c;
            sb = sb * b + c;
        }
        return sb * b - sa * a;
    }
    case Kind::power: {
        const double s = params_[0];
        if (s == 1.0) {
            if (a == 0.0) throw DomainError("Observable::integral: x^{-1} is not integrable at 0");
            return params_[1] * std::log(b / a);
        }
        if (s > 1.0 && a == 0.0) throw DomainError("Observable::integral: power not integrable at 0");
        return params_[1] * (std::pow(b, 1.0 - s) - std::pow(a, 1.0 - s)) / (1.0 - s);
    }
    case Kind::indicator:
        return std::max(0.0, std::min(b, params_[1]) - std::max(a, params_[0]));
    case Kind::table: {
        // Exact for the piecewise-linear interpolant.
        double s = 0.0;
        auto lin = [&](double u, double v) { return 0.5 * ((*this)(u) + (*this)(v)) * (v - u); };
        double cur = a;
        for (double xk : xs_) {
            if (xk <= cur) continue;
            if (xk >= b) break;
            s += lin(cur, xk);
            cur = xk;
        }
        return s + lin(cur, b);
    }
    }
    return kNaN;
}

// ---------------------------------------------------- parameter derivatives

double partial_L_pointwise(const ParamPoint& p, int i, const std::function<double(double)>& phi,
                           const std::function<double(double)>& dphi, double x) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("partial_L_pointwise: x must lie in (0,1)");
    const auto g = inverse_branch_deriv(p, i, x);
    const auto X = x_field_derivs(p, i, x);
    const double pg = phi(g.g);
    return -(X.d1 * g.d1 * pg + X.value * (g.d2 * pg + g.d1 * g.d1 * dphi(g.g)));
}

PartialLResult partial_L(const ParamPoint& p, int i, const GridFunction& phi) {
    if (phi.kind() != GridKind::nodal) throw std::invalid_argument("partial_L: nodal input required");
    const auto dphi = differentiate(phi);
    const auto& m = phi.mesh();
    std::vector<double> v(static_cast<std::size_t>(m.cells()) + 1);
    for (int j = 0; j <= m.cells(); ++j) {
        const double x = m.node(j);
        if (x == 0.0) {
            // X_1 vanishes fast enough to kill g_1''; the i = 2 value diverges
            // logarithmically and is left undefined.
            v[0] = i == 1 ? 0.0 : kNaN;
            continue;
        }
        const auto g = inverse_branch_deriv(p, i, x);
        const auto X = x_field_derivs(p, i, x);
        const double pg = evaluate(phi, g.g);
        const double dpg = evaluate(dphi, g.g);
        v[static_cast<std::size_t>(j)] = -(X.d1 * g.d1 * pg + X.value * (g.d2 * pg + g.d1 * g.d1 * dpg));
    }
    GridFunction out(phi.mesh_ptr(), std::move(v), GridKind::nodal);
    const double mean = integrate(out, i == 2 ? EndpointRule::singular() : EndpointRule{});
    for (auto& val : out.mutable_values())
        if (std::isfinite(val)) val -= mean;
    return {std::move(out), mean};
}

double second_partial_L(const ParamPoint& p, int i, const Phi2& phi, double x) {
    if (!(x > 0.0 && x < 1.0)) throw DomainError("second_partial_L: x must lie in (0,1)");
    const auto g = inverse_branch_deriv(p, i, x);
    const auto X = x_field_derivs(p, i, x);
    const auto dX = x_field_param_derivs(p, i, x);
    const double f0 = phi.f(g.g), f1 = phi.d1(g.g), f2 = phi.d2(g.g);
    const double N = g.d1 * f0;
    const double N1 = g.d2 * f0 + g.d1 * g.d1 * f1;
    const double N2 = g.d3 * f0 + 3.0 * g.d1 * g.d2 * f1 + g.d1 * g.d1 * g.d1 * f2;
    const double F1 = X.d1 * N + X.value * N1;
    const double F2 = X.d2 * N + 2.0 * X.d1 * N1 + X.value * N2;
    return -(dX.d1 * N + dX.value * N1) + X.d1 * F1 + X.value * F2;
}

FluxMasses response_source(const ParamPoint& p, int i, const GridFunction& h) {
    if (h.kind() != GridKind::cell_average) throw std::invalid_argument("response_source: expected cell averages");
    const auto& m = h.mesh();
    const int n = m.cells();
    std::vector<double> F(static_cast<std::size_t>(n) + 1, 0.0);
    for (int j = 1; j <= n; ++j) {
        const double x = m.node(j);
        const auto g = inverse_branch_deriv(p, i, x);
        const double X = x_field(p, i, x).value;
        F[static_cast<std::size_t>(j)] = X * g.d1 * evaluate(h, g.g);
    }
    FluxMasses out;
    out.masses.resize(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (std::size_t j = 0; j < out.masses.size(); ++j) {
        out.masses[j] = F[j + 1] - F[j];
        sum += out.masses[j];
    }
    out.raw_sum = sum;
    for (int j = 0; j < n; ++j) out.masses[static_cast<std::size_t>(j)] -= sum * m.width(j);
    return out;
}

// ------------------------------------------------------------------ series

double observable_mean(const Observable& phi, const GridFunction& h) {
    if (h.kind() != GridKind::cell_average) throw std::invalid_argument("observable_mean: expected cell averages");
    const auto& m = h.mesh();
    double s = 0.0;
    for (int j = 0; j < m.cells(); ++j) s += h[static_cast<std::size_t>(j)] * phi.integral(m.node(j), m.node(j + 1));
    return s;
}

namespace {

struct SeriesCore {
    double D1, D2;
    int K;
    std::array<std::vector<double>, 2> terms;
    std::array<double, 2> raw;
    bool converged;
};

SeriesCore run_series(const ParamPoint& p, const Observable& phi, const MeshPtr& mesh, const ResponseOptions& opts) {
    const auto U = assemble_ulam(p, mesh);
    const auto h = invariant_density(U, opts.density).density;
    const auto& m = *mesh;
    std::vector<double> pbar(static_cast<std::size_t>(m.cells()));
    for (int j = 0; j < m.cells(); ++j)
        pbar[static_cast<std::size_t>(j)] = phi.integral(m.node(j), m.node(j + 1)) / m.width(j);

    SeriesCore c{0.0, 0.0, 0, {}, {}, false};
    std::array<std::vector<double>, 2> mu;
    for (int i = 0; i < 2; ++i) {
        auto src = response_source(p, i + 1, h);
        mu[static_cast<std::size_t>(i)] = std::move(src.masses);
        c.raw[static_cast<std::size_t>(i)] = src.raw_sum;
    }
    int quiet = 0;
    for (int k = 0; k < opts.k_max; ++k) {
        bool small = true;
        for (std::size_t i = 0; i < 2; ++i) {
            double t = 0.0;
            for (std::size_t j = 0; j < pbar.size(); ++j) t += pbar[j] * mu[i][j];
            c.terms[i].push_back(t);
            small = small && std::abs(t) < opts.tol;
        }
        c.K = k + 1;
        quiet = small ? quiet + 1 : 0;
        if (quiet >= opts.consecutive) {
            c.converged = true;
            break;
        }
        if (k + 1 < opts.k_max)
            for (auto& v : mu) v = U.push_masses(v);
    }
    double s1 = 0.0, s2 = 0.0;
    for (double t : c.terms[0]) s1 += t;
    for (double t : c.terms[1]) s2 += t;
    c.D1 = -s1;
    c.D2 = -s2;
    return c;
}

} // namespace

ResponseEstimate response_series(const ParamPoint& p, const Observable& phi, MeshPtr mesh, const ResponseOptions& opts) {
    if (!mesh) throw std::invalid_argument("response_series: null mesh");
    if (opts.k_max < 1 || !(opts.tol > 0.0) || opts.consecutive < 1)
        throw std::invalid_argument("response_series: bad options");
    if (!phi.bounded()) {
        const ParamBox box(p.alpha(), p.alpha(), p.beta());
        const double q = phi.q_exponent.value_or(1.0 / (1.0 - p.alpha() * p.beta()) * 1.0001);
        if (!lq_admissible(phi, q, box)) throw DomainError("response_series: observable not admissible");
    }
    ResponseEstimate e{p, phi.description()};
    auto core = run_series(p, phi, mesh, opts);
    e.D1 = core.D1;
    e.D2 = core.D2;
    e.K = core.K;
    e.raw_means = core.raw;
    e.converged = core.converged;
    e.terms = std::move(core.terms);

    bool summable = true;
    for (std::size_t i = 0; i < 2; ++i) {
        const auto& t = e.terms[i];
        std::vector<double> ks, at;
        for (std::size_t k = 1; k < t.size(); ++k) {
            ks.push_back(static_cast<double>(k));
            at.push_back(std::abs(t[k]));
        }
        const double k_lo = std::max(1.0, static_cast<double>(e.K) / 4.0);
        try {
            const auto fit = fit_power_law(ks, at, k_lo, static_cast<double>(e.K));
            e.decay_exponents[i] = fit.exponent;
            if (fit.exponent < -1.0) {
                const double K = static_cast<double>(e.K);
                e.tail_bounds[i] = fit.prefactor * std::pow(K, fit.exponent + 1.0) / (-fit.exponent - 1.0);
            } else {
                e.tail_bounds[i] = std::numeric_limits<double>::infinity();
                summable = false;
            }
        } catch (const std::runtime_error&) {
            e.decay_exponents[i] = -std::numeric_limits<double>::infinity();
            e.tail_bounds[i] = 0.0;
        }
    }
    e.tail_bound = std::max(e.tail_bounds[0], e.tail_bounds[1]);
    if (!summable) e.status = "warning: fitted term decay not summable";
    else if (!e.converged) e.status = "warning: truncated at k_max";

    if (opts.coarse_check && mesh->cells() >= 8) {
        auto coarse_opts = opts;
        coarse_opts.coarse_check = false;
        const auto cm = build_mesh(mesh->cells() / 2, mesh->grading());
        const auto c = run_series(p, phi, cm, coarse_opts);
        e.coarse = std::array<double, 2>{c.D1, c.D2};
    }
    return e;
}

FdResult response_fd(const ParamPoint& p, const Observable& phi, double delta, MeshPtr mesh,
                     const DensityOptions& opts) {
    if (!(delta > 0.0)) throw std::invalid_argument("response_fd: delta must be positive");
    const std::array<double, 4> da = {delta, -delta, 0.0, 0.0};
    const std::array<double, 4> db = {0.0, 0.0, delta, -delta};
    for (int k = 0; k < 4; ++k)
        if (!ParamPoint::admissible(p.alpha() + da[static_cast<std::size_t>(k)], p.beta() + db[static_cast<std::size_t>(k)]))
            throw DomainError("response_fd: perturbed parameters leave the admissible domain");
    FdResult r{};
    parallel_for(4, [&](std::size_t k) {
        const ParamPoint q(p.alpha() + da[k], p.beta() + db[k]);
        auto res = invariant_density(q, mesh, opts);
        r.R[k] = observable_mean(phi, res.density);
        r.reports[k] = std::move(res.report);
    });
    r.d1 = (r.R[0] - r.R[1]) / (2.0 * delta);
    r.d2 = (r.R[2] - r.R[3]) / (2.0 * delta);
    return r;
}

double directional_derivative(const ResponseEstimate& est, std::array<double, 2> v) {
    const double norm = std::hypot(v[0], v[1]);
    if (std::abs(norm - 1.0) > 1e-12) throw std::invalid_argument("directional_derivative: v must be a unit vector");
    return v[0] * est.D1 + v[1] * est.D2;
}

bool lq_admissible(const Observable& phi, double q, const ParamBox& box) {
    if (!(q > 1.0)) throw std::invalid_argument("lq_admissible: q must exceed 1");
    const double au = box.alpha_hi(), bu = box.beta_hi();
    if (!(q > 1.0 / (1.0 - au * bu))) return false;
    if (phi.bounded()) return true;
    return phi.power_exponent() * q < 1.0 / bu - au;
}

nlohmann::json to_json(const ResponseEstimate& e) {
    auto finite_or_null = [](double v) -> nlohmann::json {
        if (std::isfinite(v)) return v;
        return nullptr;
    };
    nlohmann::json j;
    j["gamma"] = {{"alpha", e.gamma.alpha()}, {"beta", e.gamma.beta()}};
    j["observable"] = e.observable;
    j["D1"] = e.D1;
    j["D2"] = e.D2;
    j["K"] = e.K;
    j["terms"] = {{"1", e.terms[0]}, {"2", e.terms[1]}};
    j["tail_bound"] = finite_or_null(e.tail_bound);
    j["tail_bounds"] = {finite_or_null(e.tail_bounds[0]), finite_or_null(e.tail_bounds[1])};
    j["decay_exponents"] = {finite_or_null(e.decay_exponents[0]), finite_or_null(e.decay_exponents[1])};
    j["raw_means"] = e.raw_means;
    j["converged"] = e.converged;
    j["status"] = e.status;
    j["sign_convention"] = "D_i = d/dt R(gamma + t e_i); the derivative toward gamma - v is -(v1 D1 + v2 D2)";
    if (e.coarse) {
        j["coarse_mesh"] = {{"D1", (*e.coarse)[0]},
                            {"D2", (*e.coarse)[1]},
                            {"diff1", e.D1 - (*e.coarse)[0]},
                            {"diff2", e.D2 - (*e.coarse)[1]}};
    }
    if (e.fd_cross_check) {
        const auto& f = *e.fd_cross_check;
        j["fd_cross_check"] = {{"delta", f.delta}, {"d1", f.d1}, {"d2", f.d2},
                               {"rel_err1", f.rel_err1}, {"rel_err2", f.rel_err2}};
    } else {
        j["fd_cross_check"] = nullptr;
    }
    return j;
}

} // namespace ir
