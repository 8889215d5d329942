#include "ir/diagnostics.hpp"

#include "ir/map_core.hpp"
#include "ir/parallel.hpp"
#include "ir/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ir {

namespace {

double left_log_deriv(double alpha, double y) { return std::log1p((1.0 + alpha) * std::pow(2.0 * y, alpha)); }

// log T'(g_2(y)) = log(2 beta) + (1 - 1/beta) log y
double right_log_deriv_at_preimage(double beta, double y) {
    return std::log(2.0 * beta) + (1.0 - 1.0 / beta) * std::log(y);
}

std::vector<double> log_spaced(double lo, double hi, int count) {
    std::vector<double> out;
    const double a = std::log(lo), b = std::log(hi);
    for (int k = 0; k < count; ++k) {
        const double v = std::round(std::exp(a + (b - a) * k / std::max(1, count - 1)));
        if (out.empty() || v > out.back()) out.push_back(v);
    }
    return out;
}

nlohmann::json finite_or_null(double v) {
    if (std::isfinite(v)) return v;
    return nullptr;
}

} // namespace

// ------------------------------------------------------------------ orbits

std::int64_t OrbitRecord::longest_episode() const {
    std::int64_t m = 0;
    for (const auto& e : laminar_episodes) m = std::max(m, e.length);
    return m;
}

OrbitRecord simulate(const ParamPoint& p, std::optional<double> x0, std::int64_t n_steps, std::uint64_t seed, int ell) {
    if (n_steps < 0) throw std::invalid_argument("simulate: negative step count");
    if (ell < 0) throw std::invalid_argument("simulate: ell must be nonnegative");
    OrbitRecord r;
    r.x0 = x0 ? *x0 : CounterRng(seed, 0).uniform_open();
    if (!(r.x0 >= 0.0 && r.x0 <= 1.0)) throw DomainError("simulate: x0 outside [0,1]");
    r.ell = ell;
    r.threshold = preimage_ladder(p, std::max(ell, 1)).b[static_cast<std::size_t>(ell)];
    r.points.reserve(static_cast<std::size_t>(n_steps) + 1);
    double x = r.x0;
    r.points.push_back(x);
    for (std::int64_t k = 0; k < n_steps; ++k) {
        x = map_eval(p, x);
        r.points.push_back(x);
    }
    std::int64_t start = -1;
    for (std::size_t k = 0; k <= r.points.size(); ++k) {
        const bool below = k < r.points.size() && r.points[k] < r.threshold;
        if (below && start < 0) start = static_cast<std::int64_t>(k);
        if (!below && start >= 0) {
            r.laminar_episodes.push_back({start, static_cast<std::int64_t>(k) - start});
            start = -1;
        }
    }
    return r;
}

void write_orbit_csv(std::ostream& os, const OrbitRecord& r) {
    const auto old = os.precision(17);
    os << "k,x_k\n";
    for (std::size_t k = 0; k < r.points.size(); ++k) os << k << ',' << r.points[k] << '\n';
    os.precision(old);
}

nlohmann::json orbit_summary(const OrbitRecord& r) {
    nlohmann::json eps = nlohmann::json::array();
    for (const auto& e : r.laminar_episodes) eps.push_back({e.start, e.length});
    return {{"x0", r.x0},
            {"steps", r.points.empty() ? 0 : static_cast<std::int64_t>(r.points.size()) - 1},
            {"ell", r.ell},
            {"threshold", r.threshold},
            {"episodes", r.laminar_episodes.size()},
            {"longest_episode", r.longest_episode()},
            {"laminar_episodes", eps}};
}

// ------------------------------------------------------------ return times

double TailResult::survival_fraction(int n) const {
    return static_cast<double>(survival.at(static_cast<std::size_t>(n))) / static_cast<double>(samples);
}

TailResult return_time_tail(const ParamPoint& p, std::int64_t samples, int n_max, std::uint64_t seed) {
    if (samples < 1) throw std::invalid_argument("return_time_tail: need at least one sample");
    if (n_max < 100) throw std::invalid_argument("return_time_tail: n_max must be at least 100");
    constexpr std::int64_t kBlock = 1 << 16;
    const auto blocks = static_cast<std::size_t>((samples + kBlock - 1) / kBlock);
    const auto width = static_cast<std::size_t>(n_max) + 1;
    std::vector<std::vector<std::uint64_t>> hist(blocks);
    parallel_for(blocks, [&](std::size_t b) {
        auto& h = hist[b];
        h.assign(width, 0);
        CounterRng rng(seed, b);
        const std::int64_t lo = static_cast<std::int64_t>(b) * kBlock;
        const std::int64_t hi = std::min(samples, lo + kBlock);
        for (std::int64_t s = lo; s < hi; ++s) {
            const double x = 0.5 + 0.5 * rng.uniform();
            double y = map_eval(p, x);
            int tau = 1;
            while (y < 0.5 && tau < n_max) {
                y = map_eval(p, y);
                ++tau;
            }
            ++h[static_cast<std::size_t>(tau)];
        }
    });
    TailResult r;
    r.samples = samples;
    r.n_max = n_max;
    r.seed = seed;
    std::vector<std::uint64_t> total(width, 0);
    for (const auto& h : hist)
        for (std::size_t t = 0; t < width; ++t) total[t] += h[t];
    r.survival.assign(width, 0);
    std::uint64_t acc = 0;
    for (std::size_t t = width; t-- > 1;) {
        acc += total[t];
        r.survival[t] = acc;
    }
    r.survival[0] = acc;

    double lo = 20.0, hi = n_max / 5.0;
    constexpr std::uint64_t kMinCount = 100;
    if (r.survival[static_cast<std::size_t>(hi)] < kMinCount) {
        int n = static_cast<int>(hi);
        while (n > 40 && r.survival[static_cast<std::size_t>(n)] < kMinCount) --n;
        r.warning = "insufficient tail mass; fit window upper end moved from " + std::to_string(static_cast<int>(hi)) +
                    " to " + std::to_string(n);
        hi = n;
    }
    const auto ns = log_spaced(lo, hi, 40);
    std::vector<double> ys;
    for (double n : ns) ys.push_back(r.survival_fraction(static_cast<int>(n)));
    r.fit = fit_power_law(ns, ys, lo, hi);
    r.fit_lo = lo;
    r.fit_hi = hi;
    return r;
}

void write_tail_csv(std::ostream& os, const TailResult& r) {
    const auto old = os.precision(17);
    os << "n,count_tau_ge_n,fraction\n";
    for (int n = 1; n <= r.n_max; ++n)
        os << n << ',' << r.survival[static_cast<std::size_t>(n)] << ',' << r.survival_fraction(n) << '\n';
    os.precision(old);
}

nlohmann::json to_json(const TailResult& r) {
    return {{"samples", r.samples}, {"n_max", r.n_max},   {"seed", r.seed},
            {"fit", to_json(r.fit)}, {"window", {r.fit_lo, r.fit_hi}}, {"warning", r.warning}};
}

// ------------------------------------------------------------- expansion

ExpansionReport expansion_check(const ParamPoint& p, int n_max, int samples_per_interval) {
    if (n_max < 0) throw std::invalid_argument("expansion_check: n_max must be nonnegative");
    if (samples_per_interval < 2) throw std::invalid_argument("expansion_check: need at least two samples");
    const double a = p.alpha(), b = p.beta();
    const auto M = static_cast<std::size_t>(samples_per_interval);
    // x = g_2(g_1^n(u)) sweeps J_n as u sweeps [1/2, 1]; u = 1/2 gives bhat_{n+1}.
    std::vector<double> y(M), logprod(M, 0.0);
    for (std::size_t k = 0; k < M; ++k) y[k] = 0.5 + 0.5 * static_cast<double>(k) / static_cast<double>(M - 1);
    ExpansionReport r;
    r.min_derivative.resize(static_cast<std::size_t>(n_max) + 1);
    r.global_min = std::numeric_limits<double>::infinity();
    for (int n = 0; n <= n_max; ++n) {
        if (n > 0) {
            for (std::size_t k = 0; k < M; ++k) {
                y[k] = inverse_branch(p, 1, y[k]);
                logprod[k] += left_log_deriv(a, y[k]);
            }
        }
        double mn = std::numeric_limits<double>::infinity();
        std::size_t arg = 0;
        for (std::size_t k = 0; k < M; ++k) {
            const double d = std::exp(logprod[k] + right_log_deriv_at_preimage(b, y[k]));
            if (d < mn) {
                mn = d;
                arg = k;
            }
        }
        r.min_derivative[static_cast<std::size_t>(n)] = mn;
        if (arg != 0) r.left_endpoint_minimal = false;
        if (mn < r.global_min) {
            r.global_min = mn;
            r.argmin = n;
        }
    }
    r.passed = r.global_min >= 1.5;
    return r;
}

nlohmann::json to_json(const ExpansionReport& r) {
    return {{"n_max", static_cast<int>(r.min_derivative.size()) - 1},
            {"global_min", r.global_min},
            {"argmin_n", r.argmin},
            {"left_endpoint_minimal", r.left_endpoint_minimal},
            {"threshold", 1.5},
            {"passed", r.passed}};
}

// ------------------------------------------------------------ distortion

DistortionReport distortion_check(const ParamPoint& p, const std::vector<int>& n_list, int pairs_per_n,
                                  std::uint64_t seed, int ell) {
    if (pairs_per_n < 1) throw std::invalid_argument("distortion_check: need at least one pair");
    if (ell < 1) throw std::invalid_argument("distortion_check: ell must be positive");
    DistortionReport r;
    r.n_list = n_list;
    std::sort(r.n_list.begin(), r.n_list.end());
    r.n_list.erase(std::unique(r.n_list.begin(), r.n_list.end()), r.n_list.end());
    if (r.n_list.empty() || r.n_list.front() < 1) throw std::invalid_argument("distortion_check: n must be >= 1");
    const double a = p.alpha(), b = p.beta();

    // The same pairs of endpoints u in (1/2, 1) are used for every n, so the
    // per-n maxima are directly comparable.
    const auto P = static_cast<std::size_t>(pairs_per_n);
    std::vector<double> u(2 * P);
    for (std::size_t k = 0; k < P; ++k) {
        CounterRng rng(seed, k);
        u[2 * k] = 0.5 + 0.5 * rng.uniform_open();
        u[2 * k + 1] = 0.5 + 0.5 * rng.uniform_open();
        if (u[2 * k] == u[2 * k + 1]) u[2 * k + 1] = std::nextafter(u[2 * k], 1.0);
    }
    // y_k = g_1^k(u), S_k = sum_{j=1..k} log T'(y_j) = log (T^k)'(y_k)
    std::vector<double> y(u), S(u.size(), 0.0);
    int level = 0;
    for (int n : r.n_list) {
        // family (bhat_n, bhat_{n-1}): x = g_2(y_{n-1}), log (T^n)'(x) = S_{n-1} + log T'(x)
        while (level < n - 1) {
            for (std::size_t k = 0; k < y.size(); ++k) {
                y[k] = inverse_branch(p, 1, y[k]);
                S[k] += left_log_deriv(a, y[k]);
            }
            ++level;
        }
        double mr = 0.0;
        for (std::size_t k = 0; k < P; ++k) {
            const double sa = S[2 * k] + right_log_deriv_at_preimage(b, y[2 * k]);
            const double sb = S[2 * k + 1] + right_log_deriv_at_preimage(b, y[2 * k + 1]);
            mr = std::max(mr, std::abs(sb - sa) / std::abs(u[2 * k + 1] - u[2 * k]));
        }
        // family (b_n, b_{n-1}): x = y_n, log (T^n)'(x) = S_n
        for (std::size_t k = 0; k < y.size(); ++k) {
            y[k] = inverse_branch(p, 1, y[k]);
            S[k] += left_log_deriv(a, y[k]);
        }
        ++level;
        double ml = 0.0;
        for (std::size_t k = 0; k < P; ++k)
            ml = std::max(ml, std::abs(S[2 * k + 1] - S[2 * k]) / std::abs(u[2 * k + 1] - u[2 * k]));
        r.max_left.push_back(ml);
        r.max_right.push_back(mr);
        r.max_ratio.push_back(std::max(ml, mr));
    }

    // sup over u in [b_ell, 1] of 1/(T^m)'(g_2(g_1^{m-1}(u)))
    const double b_ell = preimage_ladder(p, ell).b[static_cast<std::size_t>(ell)];
    constexpr int kGrid = 64;
    std::vector<double> yy(kGrid), SS(kGrid, 0.0);
    for (int k = 0; k < kGrid; ++k) yy[static_cast<std::size_t>(k)] = b_ell + (1.0 - b_ell) * k / (kGrid - 1);
    const auto ms = log_spaced(1.0, 1000.0, 31);
    int m_level = 1;
    for (double md : ms) {
        const int m = static_cast<int>(md);
        while (m_level < m) {
            for (std::size_t k = 0; k < yy.size(); ++k) {
                yy[k] = inverse_branch(p, 1, yy[k]);
                SS[k] += left_log_deriv(a, yy[k]);
            }
            ++m_level;
        }
        double sup = 0.0;
        for (std::size_t k = 0; k < yy.size(); ++k)
            sup = std::max(sup, std::exp(-(SS[k] + right_log_deriv_at_preimage(b, yy[k]))));
        r.m_list.push_back(m);
        r.inverse_derivative_sup.push_back(sup);
    }
    std::vector<double> mx(r.m_list.begin(), r.m_list.end());
    // upper decade only: for small alpha the local slope is still drifting at m ~ 100
    r.first_return_fit = fit_power_law(mx, r.inverse_derivative_sup, 100.0, 1000.0);
    r.predicted_exponent = -1.0 - 1.0 / (a * b);
    return r;
}

nlohmann::json to_json(const DistortionReport& r) {
    return {{"n", r.n_list},
            {"max_left", r.max_left},
            {"max_right", r.max_right},
            {"max_ratio", r.max_ratio},
            {"m", r.m_list},
            {"inverse_derivative_sup", r.inverse_derivative_sup},
            {"first_return_fit", to_json(r.first_return_fit)},
            {"predicted_exponent", r.predicted_exponent}};
}

void write_distortion_csv(std::ostream& os, const DistortionReport& r) {
    const auto old = os.precision(17);
    os << "n,max_left,max_right,max_ratio\n";
    for (std::size_t k = 0; k < r.n_list.size(); ++k)
        os << r.n_list[k] << ',' << r.max_left[k] << ',' << r.max_right[k] << ',' << r.max_ratio[k] << '\n';
    os.precision(old);
}

// ------------------------------------------------- memory loss, correlations

namespace {

PowerLawFit fit_curve(const std::vector<double>& v, double lo, double hi) {
    std::vector<double> n(v.size()), a(v.size());
    for (std::size_t k = 0; k < v.size(); ++k) {
        n[k] = static_cast<double>(k);
        a[k] = std::abs(v[k]);
    }
    // a curve that is identically zero in the window has no exponent
    std::size_t usable = 0;
    for (std::size_t k = 0; k < v.size(); ++k)
        if (n[k] >= lo && n[k] <= hi && n[k] > 0.0 && a[k] > 0.0) ++usable;
    if (usable < 2) {
        PowerLawFit f;
        f.exponent = f.prefactor = f.r_squared = std::numeric_limits<double>::quiet_NaN();
        f.x_lo = lo;
        f.x_hi = hi;
        return f;
    }
    return fit_power_law(n, a, lo, hi);
}

} // namespace

DecayCurve memory_loss_curve(const UlamOperator& U, const GridFunction& d1, const GridFunction& d2, int n_max,
                             std::optional<std::pair<double, double>> window) {
    if (n_max < 10) throw std::invalid_argument("memory_loss_curve: n_max must be at least 10");
    const auto m1 = cell_masses(d1);
    const auto m2 = cell_masses(d2);
    if (m1.size() != static_cast<std::size_t>(U.size()) || m2.size() != m1.size())
        throw std::invalid_argument("memory_loss_curve: mesh mismatch");
    double s1 = 0.0, s2 = 0.0;
    std::vector<double> diff(m1.size());
    for (std::size_t j = 0; j < m1.size(); ++j) {
        s1 += m1[j];
        s2 += m2[j];
        diff[j] = m1[j] - m2[j];
    }
    if (std::abs(s1 - s2) > 1e-9 * std::max(1.0, std::abs(s1)))
        throw std::invalid_argument("memory_loss_curve: densities must have equal integrals");
    DecayCurve c;
    c.values.reserve(static_cast<std::size_t>(n_max) + 1);
    for (int n = 0; n <= n_max; ++n) {
        double norm = 0.0;
        for (double v : diff) norm += std::abs(v);
        c.values.push_back(norm);
        if (n < n_max) diff = U.push_masses(diff);
    }
    c.fit_lo = window ? window->first : n_max / 10.0;
    c.fit_hi = window ? window->second : static_cast<double>(n_max);
    c.fit = fit_curve(c.values, c.fit_lo, c.fit_hi);
    return c;
}

DecayCurve correlation_decay(const UlamOperator& U, const Observable& phi, const Observable& psi,
                             const GridFunction& h, int n_max) {
    if (n_max < 20) throw std::invalid_argument("correlation_decay: n_max must be at least 20");
    if (!phi.bounded() || !psi.bounded()) throw DomainError("correlation_decay: observables must be bounded");
    const auto& m = U.mesh();
    if (!(h.mesh() == m)) throw std::invalid_argument("correlation_decay: mesh mismatch");
    const auto n = static_cast<std::size_t>(m.cells());
    std::vector<double> mass(n), psibar(n);
    double mphi = 0.0, mpsi = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
        const double lo = m.node(static_cast<int>(j)), hi = m.node(static_cast<int>(j) + 1);
        mass[j] = h[j] * phi.integral(lo, hi);
        psibar[j] = psi.integral(lo, hi) / (hi - lo);
        mphi += mass[j];
        mpsi += h[j] * psi.integral(lo, hi);
    }
    DecayCurve c;
    for (int k = 0; k <= n_max; ++k) {
        double s = 0.0;
        for (std::size_t j = 0; j < n; ++j) s += psibar[j] * mass[j];
        c.values.push_back(s - mphi * mpsi);
        if (k < n_max) mass = U.push_masses(mass);
    }
    c.fit_lo = n_max / 10.0;
    c.fit_hi = 0.95 * n_max;
    c.fit = fit_curve(c.values, c.fit_lo, c.fit_hi);
    return c;
}

void write_curve_csv(std::ostream& os, const DecayCurve& c, const std::string& column) {
    const auto old = os.precision(17);
    os << "n," << column << '\n';
    for (std::size_t k = 0; k < c.values.size(); ++k) os << k << ',' << c.values[k] << '\n';
    os.precision(old);
}

GridFunction random_bounded_function(MeshPtr mesh, std::uint64_t seed, std::uint64_t index) {
    CounterRng rng(seed, index);
    const double c0 = 2.0 * rng.uniform() - 1.0;
    const double c1 = 2.0 * rng.uniform() - 1.0;
    const double c2 = 2.0 * rng.uniform() - 1.0;
    const double f = static_cast<double>(1 + rng.next_u64() % 8);
    return GridFunction::sample(std::move(mesh), [=](double x) {
        return c0 + c1 * x + c2 * std::cos(2.0 * 3.141592653589793 * f * x);
    });
}

nlohmann::json to_json(const DecayCurve& c) {
    return {{"n_max", static_cast<int>(c.values.size()) - 1},
            {"fit", to_json(c.fit)},
            {"window", {c.fit_lo, c.fit_hi}},
            {"final_value", finite_or_null(c.values.empty() ? 0.0 : c.values.back())}};
}

} // namespace ir
