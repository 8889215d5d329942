#include "ir/map_core.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

namespace ir {

namespace {

constexpr double kUnitTolerance = 1e-12;
constexpr double kInf = std::numeric_limits<double>::infinity();

double check_unit(double x, const char* what) {
    if (!(x >= -kUnitTolerance && x <= 1.0 + kUnitTolerance)) {
        throw DomainError(std::string(what) + ": argument " + std::to_string(x) +
                          " outside [0,1]");
    }
    return std::clamp(x, 0.0, 1.0);
}

void check_branch(int i) {
    if (i != 1 && i != 2) throw DomainError("branch index must be 1 or 2");
}

// f_1(y) = y (1 + (2y)^alpha); Newton on the convex increasing residual,
// kept inside the bracket [x/2, x].
double solve_left_inverse(double alpha, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 0.5;

    double lo = 0.5 * x;
    double hi = x;
    double y = x * (1.0 - std::pow(2.0 * x, alpha));
    if (!(y > lo && y < hi)) y = 0.5 * (lo + hi);

    for (int it = 0; it < 200; ++it) {
        const double t = std::pow(2.0 * y, alpha);
        const double r = y * (1.0 + t) - x;
        if (r == 0.0) return y;
        if (r > 0.0)
            hi = y;
        else
            lo = y;
        const double df = 1.0 + (1.0 + alpha) * t;
        double next = y - r / df;
        if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
        if (std::abs(next - y) <= 2.0 * std::numeric_limits<double>::epsilon() * y) {
            y = next;
            break;
        }
        y = next;
        if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) break;
    }
    return y;
}

} // namespace

double map_eval(const ParamPoint& p, double x) {
    x = check_unit(x, "map_eval");
    double r;
    if (x < 0.5)
        r = x * (1.0 + std::pow(2.0 * x, p.alpha()));
    else
        r = std::pow(2.0 * x - 1.0, p.beta());
    return std::clamp(r, 0.0, 1.0);
}

double map_deriv(const ParamPoint& p, double x) {
    x = check_unit(x, "map_deriv");
    const double a = p.alpha();
    const double b = p.beta();
    if (x < 0.5) return 1.0 + (1.0 + a) * std::pow(2.0 * x, a);
    if (b == 1.0) return 2.0;
    return 2.0 * b * std::pow(2.0 * x - 1.0, b - 1.0);
}

double map_second_deriv(const ParamPoint& p, double x) {
    x = check_unit(x, "map_second_deriv");
    const double a = p.alpha();
    const double b = p.beta();
    if (x < 0.5) {
        if (x == 0.0) throw SingularityError("map_second_deriv: left-branch curvature diverges at 0");
        return 2.0 * a * (1.0 + a) * std::pow(2.0 * x, a - 1.0);
    }
    if (b == 1.0) return 0.0;
    const double s = 2.0 * x - 1.0;
    if (s == 0.0) {
        if (b < 2.0) throw SingularityError("map_second_deriv: critical point at 1/2");
        return b == 2.0 ? 8.0 : 0.0;
    }
    return 4.0 * b * (b - 1.0) * std::pow(s, b - 2.0);
}

double branch_eval(const ParamPoint& p, int i, double y) {
    check_branch(i);
    if (i == 1) return y * (1.0 + std::pow(2.0 * y, p.alpha()));
    return std::pow(2.0 * y - 1.0, p.beta());
}

BranchDerivs branch_derivs(const ParamPoint& p, int i, double y) {
    check_branch(i);
    if (i == 1) {
        const double a = p.alpha();
        const double u = 2.0 * y;
        if (u == 0.0) return {1.0, kInf, -kInf};
        const double t = std::pow(u, a);
        return {1.0 + (1.0 + a) * t, 2.0 * a * (1.0 + a) * t / u,
                4.0 * a * (1.0 + a) * (a - 1.0) * t / (u * u)};
    }
    const double b = p.beta();
    const double s = 2.0 * y - 1.0;
    if (b == 1.0) return {2.0, 0.0, 0.0};
    const double d1 = 2.0 * b * std::pow(s, b - 1.0);
    const double d2 = 4.0 * b * (b - 1.0) * std::pow(s, b - 2.0);
    const double d3 = b == 2.0 ? 0.0 : 8.0 * b * (b - 1.0) * (b - 2.0) * std::pow(s, b - 3.0);
    return {d1, d2, d3};
}

double inverse_branch(const ParamPoint& p, int i, double x) {
    check_branch(i);
    x = check_unit(x, "inverse_branch");
    if (i == 2) return 0.5 * (std::pow(x, 1.0 / p.beta()) + 1.0);
    return solve_left_inverse(p.alpha(), x);
}

InverseBranchDerivs inverse_branch_deriv(const ParamPoint& p, int i, double x) {
    check_branch(i);
    x = check_unit(x, "inverse_branch_deriv");
    InverseBranchDerivs out{};
    if (i == 2) {
        const double s = 1.0 / p.beta();
        out.g = 0.5 * (std::pow(x, s) + 1.0);
        if (p.beta() == 1.0) {
            out.d1 = 0.5;
            out.d2 = 0.0;
            out.d3 = 0.0;
            return out;
        }
        if (x == 0.0) {
            out.d1 = kInf;
            out.d2 = -kInf;
            out.d3 = kInf;
            out.flag = LimitFlag::integrable_singularity;
            return out;
        }
        const double c = 0.5 * s * std::pow(x, s - 1.0);
        out.d1 = c;
        out.d2 = c * (s - 1.0) / x;
        out.d3 = c * (s - 1.0) * (s - 2.0) / (x * x);
        return out;
    }
    out.g = solve_left_inverse(p.alpha(), x);
    if (out.g == 0.0) {
        out.d1 = 1.0;
        out.d2 = -kInf;
        out.d3 = kInf;
        out.flag = LimitFlag::integrable_singularity;
        return out;
    }
    const BranchDerivs f = branch_derivs(p, 1, out.g);
    const double g1 = 1.0 / f.d1;
    const double g1sq = g1 * g1;
    out.d1 = g1;
    out.d2 = -f.d2 * g1sq * g1;
    out.d3 = -f.d3 * g1sq * g1sq + 3.0 * f.d2 * f.d2 * g1sq * g1sq * g1;
    return out;
}

FieldValue x_field(const ParamPoint& p, int i, double x) {
    check_branch(i);
    x = check_unit(x, "x_field");
    if (x == 0.0) return {0.0, LimitFlag::removable};
    if (i == 2) return {x * std::log(x) / p.beta()};
    const double y = solve_left_inverse(p.alpha(), x);
    const double u = 2.0 * y;
    return {y * std::pow(u, p.alpha()) * std::log(u)};
}

FieldDerivs x_field_derivs(const ParamPoint& p, int i, double x) {
    check_branch(i);
    x = check_unit(x, "x_field_derivs");
    if (i == 2) {
        const double b = p.beta();
        if (x == 0.0) return {0.0, -kInf, kInf, LimitFlag::integrable_singularity};
        const double lx = std::log(x);
        return {x * lx / b, (lx + 1.0) / b, 1.0 / (b * x)};
    }
    const double a = p.alpha();
    const InverseBranchDerivs g = inverse_branch_deriv(p, 1, x);
    if (g.g == 0.0) return {0.0, 0.0, -kInf, LimitFlag::integrable_singularity};
    const double y = g.g;
    const double u = 2.0 * y;
    const double t = std::pow(u, a);
    const double L = std::log(u);
    const double v1p = t * ((1.0 + a) * L + 1.0);
    const double v1pp = t / y * (a * (1.0 + a) * L + 1.0 + 2.0 * a);
    return {y * t * L, v1p * g.d1, v1pp * g.d1 * g.d1 + v1p * g.d2};
}

FieldParamDerivs x_field_param_derivs(const ParamPoint& p, int i, double x) {
    check_branch(i);
    x = check_unit(x, "x_field_param_derivs");
    if (i == 2) {
        const double b2 = p.beta() * p.beta();
        if (x == 0.0) return {0.0, kInf, LimitFlag::integrable_singularity};
        const double lx = std::log(x);
        return {-x * lx / b2, -(lx + 1.0) / b2};
    }
    const double a = p.alpha();
    const InverseBranchDerivs g = inverse_branch_deriv(p, 1, x);
    if (g.g == 0.0) return {0.0, 0.0, LimitFlag::removable};
    const double y = g.g;
    const double u = 2.0 * y;
    const double t = std::pow(u, a);
    const double L = std::log(u);
    const double X = y * t * L;
    const double v1p = t * ((1.0 + a) * L + 1.0);
    const double v1pp = t / y * (a * (1.0 + a) * L + 1.0 + 2.0 * a);
    const double Xp = v1p * g.d1;
    // d_alpha v_1(y) = y (2y)^alpha log(2y)^2, and d_alpha g = -X g'.
    const double w = y * t * L * L;
    const double wp = t * L * ((1.0 + a) * L + 2.0);
    const double value = w - v1p * X * g.d1;
    const double d1 = wp * g.d1 - (v1pp * g.d1 * g.d1 * X + v1p * Xp * g.d1 + v1p * X * g.d2);
    return {value, d1};
}

namespace {

void check_envelope(LadderEnvelopeReport& rep, const std::vector<double>& b,
                    const std::vector<double>& bhat_offset, const std::vector<double>& lo,
                    const std::vector<double>& hi, double beta) {
    const std::size_t n_total = b.size();
    for (std::size_t n = 1; n < n_total; ++n) {
        if (!(b[n] >= lo[n])) {
            if (rep.first_lower_violation < 0) rep.first_lower_violation = static_cast<int>(n);
            ++rep.lower_violations;
        }
        if (!(b[n] <= hi[n])) {
            if (rep.first_upper_violation < 0) rep.first_upper_violation = static_cast<int>(n);
            ++rep.upper_violations;
        }
        if (n + 1 < n_total) {
            const double d = bhat_offset[n + 1];
            if (!(d >= 0.5 * std::pow(lo[n], 1.0 / beta))) ++rep.hat_lower_violations;
            if (!(d <= 0.5 * std::pow(hi[n], 1.0 / beta))) ++rep.hat_upper_violations;
        }
    }
}

} // namespace

PreimageLadder preimage_ladder(const ParamPoint& p, int count) {
    if (count < 1) throw DomainError("preimage_ladder: count must be >= 1");
    const double a = p.alpha();
    const double beta = p.beta();
    const std::size_t size = static_cast<std::size_t>(count) + 1;

    PreimageLadder L{p, {}, {}, {}, {}, {}, {}, {}, {}, false, 0.0, 0.0, 0.0, 0.0, 0.0};
    L.b.resize(size);
    L.bhat.resize(size);
    L.bhat_offset.resize(size);
    L.lower_env.resize(size);
    L.upper_env.resize(size);
    L.sharp_lower_env.resize(size);

    L.b[0] = 0.5;
    L.bhat[0] = 1.0;
    L.bhat_offset[0] = 0.5;
    for (std::size_t n = 1; n < size; ++n) {
        L.b[n] = solve_left_inverse(a, L.b[n - 1]);
        L.bhat_offset[n] = 0.5 * std::pow(L.b[n - 1], 1.0 / beta);
        L.bhat[n] = 0.5 + L.bhat_offset[n];
    }

    const double two_a = std::pow(2.0, a);
    for (std::size_t n = 0; n < size; ++n) {
        const double nd = static_cast<double>(n);
        L.lower_env[n] = std::pow(1.0 / (two_a + nd * a * two_a * 0.5), 1.0 / a);
        L.upper_env[n] = std::pow(1.0 / (two_a + nd * a * (1.0 - a) * two_a * 0.5), 1.0 / a);
        L.sharp_lower_env[n] = std::pow(1.0 / (two_a + nd * a * two_a), 1.0 / a);
    }

    check_envelope(L.stated, L.b, L.bhat_offset, L.lower_env, L.upper_env, beta);
    check_envelope(L.sharp, L.b, L.bhat_offset, L.sharp_lower_env, L.upper_env, beta);

    bool mono = true;
    for (std::size_t n = 1; n < size; ++n) {
        mono = mono && L.b[n] < L.b[n - 1] && L.b[n] > 0.0 && L.bhat_offset[n] < L.bhat_offset[n - 1] &&
               L.bhat_offset[n] > 0.0;
    }
    L.monotone = mono;

    double resid = 0.0;
    for (std::size_t n = 0; n + 1 < size; ++n) {
        // right branch written in the offset d = bhat - 1/2: T = (2d)^beta
        const double back = std::pow(2.0 * L.bhat_offset[n + 1], beta);
        resid = std::max(resid, std::abs(back - L.b[n]) / L.b[n]);
    }
    L.max_relation_residual = resid;

    double lo = kInf, hi = 0.0, hlo = kInf, hhi = 0.0;
    for (std::size_t n = 1; n + 1 < size; ++n) {
        const double nd = static_cast<double>(n);
        const double r = (L.b[n] - L.b[n + 1]) / std::pow(nd, -1.0 / a - 1.0);
        const double rh = (L.bhat_offset[n] - L.bhat_offset[n + 1]) / std::pow(nd, -1.0 / (a * beta) - 1.0);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
        hlo = std::min(hlo, rh);
        hhi = std::max(hhi, rh);
    }
    if (size > 2) {
        L.gap_const_lo = lo;
        L.gap_const_hi = hi;
        L.hat_gap_const_lo = hlo;
        L.hat_gap_const_hi = hhi;
    }
    return L;
}

void write_ladder_csv(std::ostream& os, const PreimageLadder& ladder) {
    const auto old_prec = os.precision(17);
    os << "n,b_n,bhat_n,lower_env,upper_env,bhat_minus_half\n";
    for (std::size_t n = 0; n < ladder.size(); ++n) {
        os << n << ',' << ladder.b[n] << ',' << ladder.bhat[n] << ',' << ladder.lower_env[n] << ','
           << ladder.upper_env[n] << ',' << ladder.bhat_offset[n] << '\n';
    }
    os.precision(old_prec);
}

} // namespace ir
