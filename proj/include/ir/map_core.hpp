#pragma once

#include "ir/params.hpp"

#include <iosfwd>
#include <vector>

namespace ir {

// Map family T(x) = x(1 + (2x)^alpha) on [0, 1/2), 2^beta (x - 1/2)^beta on [1/2, 1].
// Branch 1 is the left (neutral) branch, branch 2 the right (critical) branch.

double map_eval(const ParamPoint& p, double x);
double map_deriv(const ParamPoint& p, double x);

/// Throws SingularityError at x = 1/2 when 1 < beta < 2 (critical point) and
/// at x = 0 (left branch curvature diverges).
double map_second_deriv(const ParamPoint& p, double x);

/// Branch i evaluated on its own closed domain (no branch selection).
double branch_eval(const ParamPoint& p, int i, double y);

struct BranchDerivs {
    double d1;
    double d2;
    double d3;
};
BranchDerivs branch_derivs(const ParamPoint& p, int i, double y);

/// g_i = f_i^{-1}: [0,1] -> [0,1/2] (i=1) or [1/2,1] (i=2).
double inverse_branch(const ParamPoint& p, int i, double x);

struct InverseBranchDerivs {
    double g;
    double d1; ///< g'
    double d2; ///< g''
    double d3; ///< g'''
    LimitFlag flag = LimitFlag::none;
};

/// g and its first three spatial derivatives.  At x = 0 the divergent
/// derivatives are returned as signed infinities with an
/// integrable_singularity flag instead of failing.
InverseBranchDerivs inverse_branch_deriv(const ParamPoint& p, int i, double x);

struct FieldValue {
    double value;
    LimitFlag flag = LimitFlag::none;
};

/// X_i = (d/d gamma_i T) o g_i:
///   X_1(x) = g(2g)^alpha log(2g),  X_2(x) = x log(x) / beta.
FieldValue x_field(const ParamPoint& p, int i, double x);

struct FieldDerivs {
    double value;
    double d1;
    double d2;
    LimitFlag flag = LimitFlag::none;
};
FieldDerivs x_field_derivs(const ParamPoint& p, int i, double x);

/// Derivative of X_i with respect to its own parameter (alpha for i=1, beta
/// for i=2) at fixed x, together with the spatial derivative of that.
struct FieldParamDerivs {
    double value; ///< d_i X_i
    double d1;    ///< (d_i X_i)'
    LimitFlag flag = LimitFlag::none;
};
FieldParamDerivs x_field_param_derivs(const ParamPoint& p, int i, double x);

/// Preimage ladders b_n = f_1^{-n}(1/2) and bhat_n (bhat_0 = 1,
/// bhat_{n+1} = 1/2 + b_n^{1/beta}/2), with their two-sided power envelopes.
struct LadderEnvelopeReport {
    int lower_violations = 0;  ///< b_n below the lower envelope (n >= 1)
    int upper_violations = 0;
    int hat_lower_violations = 0; ///< bhat_{n+1} - 1/2 below its lower envelope
    int hat_upper_violations = 0;
    int first_lower_violation = -1;
    int first_upper_violation = -1;
    bool passed() const {
        return lower_violations == 0 && upper_violations == 0 && hat_lower_violations == 0 &&
               hat_upper_violations == 0;
    }
};

struct PreimageLadder {
    ParamPoint params;
    std::vector<double> b;    ///< b_0..b_N
    std::vector<double> bhat; ///< bhat_0..bhat_N
    /// bhat_n - 1/2 kept separately; it underflows relative to 1/2 for small alpha.
    std::vector<double> bhat_offset;

    std::vector<double> lower_env; ///< [1/(2^a + n a 2^{a-1})]^{1/a}
    std::vector<double> upper_env; ///< [1/(2^a + n a (1-a) 2^{a-1})]^{1/a}
    /// Lower envelope implied by c_n = b_n^{-alpha} having increments at most
    /// alpha 2^alpha: [1/(2^a + n a 2^a)]^{1/a}.
    std::vector<double> sharp_lower_env;

    LadderEnvelopeReport stated;   ///< against lower_env / upper_env
    LadderEnvelopeReport sharp;    ///< against sharp_lower_env / upper_env
    bool monotone = false;         ///< b and bhat - 1/2 strictly decreasing and positive
    double max_relation_residual = 0.0; ///< max |T(bhat_{n+1}) - b_n| / b_n
    /// Empirical constants in C_lo n^{-1/a-1} <= b_n - b_{n+1} <= C_hi n^{-1/a-1}.
    double gap_const_lo = 0.0;
    double gap_const_hi = 0.0;
    /// Same for bhat_n - bhat_{n+1} against n^{-1/(a b)-1}.
    double hat_gap_const_lo = 0.0;
    double hat_gap_const_hi = 0.0;

    std::size_t size() const { return b.size(); }
    /// Ladder invariants with the stated envelopes.
    bool valid() const { return monotone && stated.passed() && max_relation_residual <= 1e-8; }
};

PreimageLadder preimage_ladder(const ParamPoint& p, int count);

/// CSV with columns n,b_n,bhat_n,lower_env,upper_env,bhat_minus_half.
void write_ladder_csv(std::ostream& os, const PreimageLadder& ladder);

} // namespace ir
