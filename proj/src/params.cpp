#include "ir/params.hpp"

#include <cmath>
#include <sstream>

namespace ir {

const char* to_string(LimitFlag f) {
    switch (f) {
    case LimitFlag::none: return "none";
    case LimitFlag::removable: return "removable";
    case LimitFlag::integrable_singularity: return "integrable_singularity";
    case LimitFlag::critical_point: return "critical_point";
    }
    return "unknown";
}

bool ParamPoint::admissible(double alpha, double beta) {
    return std::isfinite(alpha) && std::isfinite(beta) && alpha > 0.0 && alpha < 1.0 &&
           beta >= 1.0 && alpha * beta < 1.0;
}

ParamPoint::ParamPoint(double alpha, double beta) : alpha_(alpha), beta_(beta) {
    if (!admissible(alpha, beta)) {
        throw DomainError("parameter (" + std::to_string(alpha) + ", " + std::to_string(beta) +
                          ") outside admissible domain 0<alpha<1, beta>=1, alpha*beta<1");
    }
}

ParamPoint ParamPoint::shifted(int i, double delta) const {
    if (i == 1) return {alpha_ + delta, beta_};
    if (i == 2) return {alpha_, beta_ + delta};
    throw DomainError("parameter index must be 1 or 2");
}

ParamBox::ParamBox(double alpha_lo, double alpha_hi, double beta_hi)
    : alpha_lo_(alpha_lo), alpha_hi_(alpha_hi), beta_hi_(beta_hi) {
    if (!(alpha_lo > 0.0 && alpha_lo <= alpha_hi && alpha_hi < 1.0 && beta_hi >= 1.0 &&
          alpha_hi * beta_hi < 1.0)) {
        throw DomainError("parameter box outside admissible domain");
    }
}

bool ParamBox::contains(const ParamPoint& p) const {
    return p.alpha() >= alpha_lo_ && p.alpha() <= alpha_hi_ && p.beta() >= 1.0 &&
           p.beta() <= beta_hi_;
}

std::string describe(const ParamPoint& p) {
    std::ostringstream os;
    os.precision(17);
    os << "(" << p.alpha() << ", " << p.beta() << ")";
    return os.str();
}

} // namespace ir
