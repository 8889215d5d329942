#include "ir/fit.hpp"

#include <cmath>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace ir {

PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y, double x_lo, double x_hi) {
    if (x.size() != y.size()) throw std::invalid_argument("fit_power_law: size mismatch");
    double sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
    int n = 0;
    PowerLawFit f;
    f.x_lo = x_hi;
    f.x_hi = x_lo;
    for (std::size_t k = 0; k < x.size(); ++k) {
        if (!(x[k] >= x_lo && x[k] <= x_hi && x[k] > 0.0 && y[k] > 0.0) || !std::isfinite(y[k])) continue;
        const double u = std::log(x[k]), v = std::log(y[k]);
        sx += u;
        sy += v;
        sxx += u * u;
        sxy += u * v;
        syy += v * v;
        ++n;
        f.x_lo = std::min(f.x_lo, x[k]);
        f.x_hi = std::max(f.x_hi, x[k]);
    }
    if (n < 2) throw std::runtime_error("fit_power_law: fewer than two usable points");
    const double cxx = sxx - sx * sx / n;
    const double cxy = sxy - sx * sy / n;
    const double cyy = syy - sy * sy / n;
    if (!(cxx > 0.0)) throw std::runtime_error("fit_power_law: degenerate abscissae");
    f.exponent = cxy / cxx;
    f.prefactor = std::exp((sy - f.exponent * sx) / n);
    f.r_squared = cyy > 0.0 ? cxy * cxy / (cxx * cyy) : 1.0;
    f.points = n;
    return f;
}

nlohmann::json to_json(const PowerLawFit& f) {
    return {{"exponent", f.exponent}, {"prefactor", f.prefactor}, {"r_squared", f.r_squared},
            {"points", f.points},     {"x_lo", f.x_lo},           {"x_hi", f.x_hi}};
}

} // namespace ir
