#pragma once

#include <stdexcept>
#include <string>

namespace ir {

/// Raised when an input lies outside the admissible parameter domain or the
/// unit interval.
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Raised when a formula is evaluated at a genuine singularity.
class SingularityError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Tags attached to values that were replaced by an analytic limit.
enum class LimitFlag {
    none,
    removable,              ///< finite analytic limit substituted (e.g. x log x at 0)
    integrable_singularity, ///< value diverges but integrably; returned as +inf or a cap
    critical_point          ///< T'(1/2+) = 0 for beta > 1
};

const char* to_string(LimitFlag f);

/// gamma = (alpha, beta) with 0 < alpha < 1, beta >= 1, alpha*beta < 1.
class ParamPoint {
public:
    ParamPoint(double alpha, double beta);

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }

    /// Exponent 1/beta - alpha - 1 of the density singularity at the origin.
    double density_exponent() const { return 1.0 / beta_ - alpha_ - 1.0; }

    /// Shifted copy along one coordinate; i = 1 moves alpha, i = 2 moves beta.
    ParamPoint shifted(int i, double delta) const;

    static bool admissible(double alpha, double beta);

    /// Partial order of the parameter plane (componentwise).
    friend bool operator<=(const ParamPoint& a, const ParamPoint& b) {
        return a.alpha_ <= b.alpha_ && a.beta_ <= b.beta_;
    }
    friend bool operator==(const ParamPoint& a, const ParamPoint& b) = default;

private:
    double alpha_;
    double beta_;
};

/// B = [alpha_lo, alpha_hi] x [1, beta_hi], contained in the admissible domain.
class ParamBox {
public:
    ParamBox(double alpha_lo, double alpha_hi, double beta_hi);

    double alpha_lo() const { return alpha_lo_; }
    double alpha_hi() const { return alpha_hi_; }
    double beta_hi() const { return beta_hi_; }

    /// Upper corner gamma_u = (alpha_hi, beta_hi).
    ParamPoint upper() const { return {alpha_hi_, beta_hi_}; }
    bool contains(const ParamPoint& p) const;

private:
    double alpha_lo_;
    double alpha_hi_;
    double beta_hi_;
};

std::string describe(const ParamPoint& p);

} // namespace ir
