#pragma once

#include "ir/mesh.hpp"
#include "ir/params.hpp"
#include "ir/transfer.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ir {

/// a_0(gamma) = 2^{beta+1} (1 + 2^alpha)^{1 + alpha - 1/beta} / (1/beta - alpha).
double a0(const ParamPoint& gamma);

/// Cone C_a(gamma): f >= 0, f decreasing, x^{alpha+1} f increasing,
/// int_0^x f <= a x^{1/beta - alpha} m(f).
struct ConeParams {
    double a;
    ParamPoint gamma;

    ConeParams(double a, ParamPoint gamma);
    /// True when a >= a_0(gamma), the threshold for invariance.
    bool invariance_threshold_met() const { return a >= a0(gamma); }
};

/// Constants of the higher-derivative cone
/// |f'| <= b1 f / x, |f''| <= b2 f / x^2, |f'''| <= b3 f / x^3.
struct C3Params {
    double b1;
    double b2;
    double b3;

    C3Params(double b1, double b2, double b3);
    /// Constants large enough for invariance over a box with upper corner
    /// gamma_u: b1 = alpha_u + 1, b2 = 12 b1, b3 = 103 b2.
    static C3Params sufficient(const ParamPoint& gamma_u);
    /// Whether these constants meet the sufficient invariance thresholds.
    bool meets_invariance_thresholds(const ParamPoint& gamma_u) const;
};

struct ConeViolation {
    std::string condition;
    double x;
    double margin; ///< signed, negative beyond tolerance
};

struct ConeReport {
    bool passed = true;
    std::optional<ConeViolation> first_violation;
    /// Minimum relative margin per condition (negative means violated).
    std::vector<std::pair<std::string, double>> margins;
    /// min f / m(f) over the grid; the empirical lower bound of the cone element.
    double min_normalized = 0.0;

    double margin(const std::string& condition) const;
};

nlohmann::json to_json(const ConeReport& r);

struct ConeCheckOptions {
    double rel_tol = 1e-9;
    /// Relative slack on the integral condition (discretized pushes).
    double integral_slack = 0.0;
};

/// Cell averages are checked with conditions every cell-averaged cone
/// element must satisfy; nodal data directly at the nodes.
ConeReport check_Ca(const GridFunction& f, const ConeParams& cp, const ConeCheckOptions& opts = {});

struct Derivs3 {
    double f, d1, d2, d3;
};

/// Derivative-ratio conditions on sample_count log-spaced points in [1e-8, 1].
ConeReport check_C3(const std::function<Derivs3(double)>& f, const C3Params& c3, int sample_count = 1000);

/// lambda = a (C0 + C1) max{1/(1+alpha-1/beta), 4, 2(1/beta-alpha)/(1-delta)}.
double lambda_shift(double C0, double C1, double delta, const ConeParams& cp);

/// Random element sum_k c_k x^{-delta_k}, as exact cell averages.
struct MixtureElement {
    std::vector<double> weights;
    std::vector<double> exponents;
    GridFunction averages;
};

MixtureElement random_cone_mixture(MeshPtr mesh, const ParamPoint& gamma_u, std::uint64_t seed,
                                   std::uint64_t index);

struct InvarianceReport {
    int trials = 0;
    int passed = 0;
    double worst_margin = 0.0; ///< minimum over trials and conditions
    double min_normalized = 0.0; ///< empirical lower bound of pushed elements
    std::vector<int> failed_trials;
    bool all_passed() const { return passed == trials; }
};

nlohmann::json to_json(const InvarianceReport& r);

/// Pushes random mixtures once through U (optionally one branch only) and
/// re-checks membership in C_a(gamma_u).
InvarianceReport verify_cone_invariance(const ConeParams& cp, const UlamOperator& U, int trials,
                                        std::uint64_t seed = 1, Branch branch = Branch::both,
                                        double integral_slack = 1e-3);

} // namespace ir
