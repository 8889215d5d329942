#pragma once

#include "ir/mesh.hpp"
#include "ir/params.hpp"
#include "ir/transfer.hpp"

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ir {

/// Observable phi on [0,1].
class Observable {
public:
    enum class Kind { polynomial, power, indicator, table };

    /// sum_k c_k x^k
    static Observable polynomial(std::vector<double> coeffs);
    /// c x^{-s}
    static Observable power(double s, double c = 1.0);
    /// 1 on [a, b]
    static Observable indicator(double a, double b);
    /// Piecewise-linear interpolation of (x, value) pairs covering [0,1].
    static Observable table(std::vector<double> x, std::vector<double> y);

    /// Accepts "x", "1", "x^k", "poly:c0,c1,...", "pow:s[,c]",
    /// "indicator:a,b" and "table:<csv path>".
    static Observable parse(const std::string& text);

    Kind kind() const { return kind_; }
    double operator()(double x) const;
    /// First two derivatives (zero where undefined for indicators).
    double deriv(double x) const;
    double second_deriv(double x) const;
    /// Exact integral over [a,b] where a closed form exists.
    double integral(double a, double b) const;
    bool bounded() const { return kind_ != Kind::power || params_[0] <= 0.0; }
    const std::string& description() const { return text_; }
    std::optional<double> q_exponent;
    /// Exponent s of a power observable.
    double power_exponent() const { return kind_ == Kind::power ? params_[0] : 0.0; }

private:
    Kind kind_ = Kind::polynomial;
    std::vector<double> params_;
    std::vector<double> xs_, ys_;
    std::string text_;
};

/// Pointwise -(X_i N_i phi)'(x) from closed-form branch data and the
/// callable's derivative.
double partial_L_pointwise(const ParamPoint& p, int i, const std::function<double(double)>& phi,
                           const std::function<double(double)>& dphi, double x);

struct PartialLResult {
    GridFunction value; ///< nodal samples of the (mean-forced) derivative
    double raw_mean;    ///< mean before forcing
};

/// Nodal -(X_i N_i phi)' with phi' from grid differentiation; the mean is
/// forced to zero and the raw mean reported.
PartialLResult partial_L(const ParamPoint& p, int i, const GridFunction& phi);

struct Phi2 {
    std::function<double(double)> f, d1, d2;
};

/// Second parameter derivative of L phi at x:
/// -(d_i X_i N_i phi)' + X_i' (X_i N_i phi)' + X_i (X_i N_i phi)''.
double second_partial_L(const ParamPoint& p, int i, const Phi2& phi, double x);

/// Cell masses of (X_i N_i h)' for cell-averaged h: the flux X_i g_i' h(g_i)
/// differenced across each cell.
struct FluxMasses {
    std::vector<double> masses;
    double raw_sum; ///< before mean forcing
};
FluxMasses response_source(const ParamPoint& p, int i, const GridFunction& h);

struct ResponseOptions {
    int k_max = 100000;
    double tol = 1e-12;
    int consecutive = 5;
    bool coarse_check = true; ///< recompute on the half-size mesh as an error proxy
    DensityOptions density;
};

struct FdCrossCheck {
    double delta;
    double d1, d2;
    double rel_err1, rel_err2;
};

struct ResponseEstimate {
    ParamPoint gamma;
    std::string observable;
    double D1 = 0.0, D2 = 0.0;
    int K = 0;
    std::array<std::vector<double>, 2> terms;
    std::array<double, 2> tail_bounds{0.0, 0.0};
    std::array<double, 2> decay_exponents{0.0, 0.0};
    double tail_bound = 0.0;
    std::array<double, 2> raw_means{0.0, 0.0};
    bool converged = false;
    std::string status = "ok";
    std::optional<std::array<double, 2>> coarse; ///< D on the half-size mesh
    std::optional<FdCrossCheck> fd_cross_check;
};

ResponseEstimate response_series(const ParamPoint& p, const Observable& phi, MeshPtr mesh,
                                 const ResponseOptions& opts = {});

struct FdResult {
    double d1, d2;
    std::array<double, 4> R; ///< R at gamma + d e1, gamma - d e1, gamma + d e2, gamma - d e2
    std::array<ConvergenceReport, 4> reports;
};

/// Central differences of R(gamma) = int phi h_gamma from four independent density solves.
FdResult response_fd(const ParamPoint& p, const Observable& phi, double delta, MeshPtr mesh,
                     const DensityOptions& opts = {});

/// R(gamma) = int phi h_gamma on the mesh.
double observable_mean(const Observable& phi, const GridFunction& h);

/// d/dt R(gamma + t v) at t = 0 for a unit vector v.
double directional_derivative(const ResponseEstimate& est, std::array<double, 2> v);

/// q > 1/(1 - alpha_u beta_u) and int |phi|^q x^{1/beta_u - alpha_u - 1} < inf.
bool lq_admissible(const Observable& phi, double q, const ParamBox& box);

nlohmann::json to_json(const ResponseEstimate& e);

} // namespace ir
