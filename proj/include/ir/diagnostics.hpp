#pragma once

#include "ir/fit.hpp"
#include "ir/mesh.hpp"
#include "ir/params.hpp"
#include "ir/response.hpp"
#include "ir/transfer.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace ir {

struct LaminarEpisode {
    std::int64_t start;
    std::int64_t length;
};

struct OrbitRecord {
    double x0 = 0.0;
    double threshold = 0.0; ///< b_ell
    int ell = 5;
    std::vector<double> points; ///< T^k(x0), k = 0..n_steps
    std::vector<LaminarEpisode> laminar_episodes; ///< maximal runs below the threshold
    std::int64_t longest_episode() const;
};

/// Iterates T from x0; with no x0 a starting point is drawn from the seed.
OrbitRecord simulate(const ParamPoint& p, std::optional<double> x0, std::int64_t n_steps,
                     std::uint64_t seed = 1, int ell = 5);

void write_orbit_csv(std::ostream& os, const OrbitRecord& r);
nlohmann::json orbit_summary(const OrbitRecord& r);

struct TailResult {
    std::int64_t samples = 0;
    int n_max = 0;
    std::uint64_t seed = 0;
    std::vector<std::uint64_t> survival; ///< count of tau >= n, n = 0..n_max
    PowerLawFit fit;
    double fit_lo = 0.0, fit_hi = 0.0;
    std::string warning;
    double survival_fraction(int n) const;
};

/// First return time to Y = [1/2, 1] of x uniform on Y; empirical survival
/// m(tau >= n) and a power-law fit on log-spaced n in [20, n_max/5].
TailResult return_time_tail(const ParamPoint& p, std::int64_t samples, int n_max, std::uint64_t seed);

void write_tail_csv(std::ostream& os, const TailResult& r);
nlohmann::json to_json(const TailResult& r);

struct ExpansionReport {
    std::vector<double> min_derivative; ///< min over J_n of (T^{n+1})', n = 0..n_max
    double global_min = 0.0;
    int argmin = 0;
    bool left_endpoint_minimal = true; ///< minimum attained at the sample nearest bhat_{n+1}
    bool passed = false;               ///< global_min >= 3/2
};

ExpansionReport expansion_check(const ParamPoint& p, int n_max, int samples_per_interval = 33);
nlohmann::json to_json(const ExpansionReport& r);

struct DistortionReport {
    std::vector<int> n_list;
    std::vector<double> max_left;  ///< pairs in (b_n, b_{n-1})
    std::vector<double> max_right; ///< pairs in (bhat_n, bhat_{n-1})
    std::vector<double> max_ratio; ///< larger of the two
    // sup 1/(T^m)' over x = g_2(g_1^{m-1}(u)), u in [b_ell, 1]
    std::vector<int> m_list;
    std::vector<double> inverse_derivative_sup;
    PowerLawFit first_return_fit;
    double predicted_exponent = 0.0; ///< -1 - 1/(alpha beta)
};

DistortionReport distortion_check(const ParamPoint& p, const std::vector<int>& n_list, int pairs_per_n,
                                  std::uint64_t seed = 1, int ell = 5);
nlohmann::json to_json(const DistortionReport& r);
void write_distortion_csv(std::ostream& os, const DistortionReport& r);

struct DecayCurve {
    std::vector<double> values; ///< index n = 0..n_max
    PowerLawFit fit;
    double fit_lo = 0.0, fit_hi = 0.0;
};

/// ||push^n (d1 - d2)||_1 with a fit on [n_max/10, n_max] unless a window is given.
DecayCurve memory_loss_curve(const UlamOperator& U, const GridFunction& d1, const GridFunction& d2, int n_max,
                             std::optional<std::pair<double, double>> window = std::nullopt);

/// Cor_n = int psi push^n(phi h) - int phi h int psi h, fit of |Cor_n| on
/// [n_max/10, 0.95 n_max].
DecayCurve correlation_decay(const UlamOperator& U, const Observable& phi, const Observable& psi,
                             const GridFunction& h, int n_max);

void write_curve_csv(std::ostream& os, const DecayCurve& c, const std::string& column);

/// Nodal samples of c0 + c1 x + c2 cos(2 pi f x) with c_k uniform in [-1,1]
/// and f in 1..8, drawn from (seed, index).
GridFunction random_bounded_function(MeshPtr mesh, std::uint64_t seed, std::uint64_t index);
nlohmann::json to_json(const DecayCurve& c);

} // namespace ir
