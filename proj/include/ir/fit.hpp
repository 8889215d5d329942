#pragma once

#include <span>

#include <nlohmann/json_fwd.hpp>

namespace ir {

/// y ~ prefactor * x^exponent by least squares in log-log coordinates.
struct PowerLawFit {
    double exponent = 0.0;
    double prefactor = 0.0;
    double r_squared = 0.0;
    int points = 0;
    double x_lo = 0.0;
    double x_hi = 0.0;
};

/// Uses pairs with x in [x_lo, x_hi] and x, y > 0; throws with fewer than
/// two usable points.
PowerLawFit fit_power_law(std::span<const double> x, std::span<const double> y, double x_lo,
                          double x_hi);

nlohmann::json to_json(const PowerLawFit& f);

} // namespace ir
