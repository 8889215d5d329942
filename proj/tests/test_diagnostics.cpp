#include "ir/diagnostics.hpp"
#include "ir/map_core.hpp"
#include "ir/rng.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

using namespace ir;

TEST_SUITE("diagnostics") {

TEST_CASE("counter rng") {
    CounterRng a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    for (int k = 0; k < 100; ++k) {
        const auto va = a.next_u64();
        CHECK(va == b.next_u64());
        CHECK(va != c.next_u64());
        CHECK(va != d.next_u64());
    }
    CHECK(a.counter() == 100);
    CounterRng u(1, 1);
    double lo = 1, hi = 0, sum = 0;
    for (int k = 0; k < 100000; ++k) {
        const double v = u.uniform_open();
        lo = std::min(lo, v);
        hi = std::max(hi, v);
        sum += v;
    }
    CHECK(lo > 0.0);
    CHECK(hi < 1.0);
    CHECK(sum / 100000 == doctest::Approx(0.5).epsilon(0.01));
}

TEST_CASE("fit_power_law") {
    std::vector<double> x, y;
    for (int n = 1; n <= 100; ++n) {
        x.push_back(n);
        y.push_back(3.0 * std::pow(n, -1.5));
    }
    const auto f = fit_power_law(x, y, 1, 100);
    CHECK(f.exponent == doctest::Approx(-1.5).epsilon(1e-12));
    CHECK(f.prefactor == doctest::Approx(3.0).epsilon(1e-12));
    CHECK(f.r_squared == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(f.points == 100);
    CHECK(fit_power_law(x, y, 10, 20).points == 11);
    // zeros and negatives are skipped
    y[5] = 0.0;
    y[6] = -1.0;
    CHECK(fit_power_law(x, y, 1, 100).points == 98);
    CHECK_THROWS_AS(fit_power_law(x, y, 6, 7), std::runtime_error);

    // multiplicative noise around n^{-4/3}
    CounterRng rng(11, 0);
    std::vector<double> nx, ny;
    for (int n = 10; n <= 10000; n += 10) {
        nx.push_back(n);
        ny.push_back(std::pow(n, -4.0 / 3.0) * std::exp(0.1 * (rng.uniform() - 0.5)));
    }
    CHECK(std::abs(fit_power_law(nx, ny, 10, 10000).exponent + 4.0 / 3.0) <= 0.05);
    CHECK(nlohmann::json::parse(to_json(f).dump()).at("exponent") == doctest::Approx(-1.5));
}

TEST_CASE("simulate") {
    const ParamPoint p(0.5, 1.5);
    const auto z = simulate(p, 0.0, 100);
    REQUIRE(z.points.size() == 101);
    for (double v : z.points) CHECK(v == 0.0);
    const auto one = simulate(p, 1.0, 100);
    for (double v : one.points) CHECK(v == 1.0);

    const auto r = simulate(p, 0.7, 200000, 3);
    CHECK(r.threshold == doctest::Approx(preimage_ladder(p, 5).b[5]).epsilon(1e-14));
    CHECK(r.longest_episode() >= 50);
    for (const auto& e : r.laminar_episodes) {
        REQUIRE(e.length >= 1);
        REQUIRE(r.points[static_cast<std::size_t>(e.start)] < r.threshold);
    }
    // property: the record is an orbit
    CounterRng pick(5, 0);
    for (int t = 0; t < 20; ++t) {
        const auto k = static_cast<std::size_t>(pick.uniform() * (r.points.size() - 1));
        REQUIRE(r.points[k + 1] == map_eval(p, r.points[k]));
    }
    // seeded starting points are reproducible
    CHECK(simulate(p, std::nullopt, 10, 9).points == simulate(p, std::nullopt, 10, 9).points);
    CHECK(simulate(p, std::nullopt, 10, 9).x0 != simulate(p, std::nullopt, 10, 10).x0);

    std::ostringstream os;
    write_orbit_csv(os, simulate(p, 0.7, 5));
    CHECK(os.str().find('\n') != std::string::npos);
    CHECK(orbit_summary(r).contains("longest_episode"));
}

TEST_CASE("return-time tail") {
    const ParamPoint p(0.5, 1.0);
    const auto t = return_time_tail(p, 200000, 2000, 4);
    REQUIRE(t.survival.size() == 2001);
    CHECK(t.survival[0] == 200000);
    CHECK(t.survival[1] == 200000);
    for (std::size_t n = 1; n < t.survival.size(); ++n) REQUIRE(t.survival[n] <= t.survival[n - 1]);
    CHECK(t.survival_fraction(0) == 1.0);
    // tail exponent -1/(alpha beta) = -2
    CHECK(std::abs(t.fit.exponent + 2.0) <= 0.3);
    const auto t2 = return_time_tail(p, 200000, 2000, 4);
    CHECK(t2.survival == t.survival);
}

TEST_CASE("expansion") {
    const auto r = expansion_check(ParamPoint(0.5, 1.2), 10);
    REQUIRE(r.min_derivative.size() == 11);
    CHECK(r.passed);
    CHECK(r.global_min >= 1.5);
    CHECK(r.left_endpoint_minimal);
    CHECK(nlohmann::json::parse(to_json(r).dump()).at("passed") == true);
}

TEST_CASE("distortion") {
    const auto r = distortion_check(ParamPoint(0.5, 1.2), {1, 2, 5, 10}, 20);
    REQUIRE(r.max_ratio.size() == 4);
    for (double v : r.max_ratio) {
        CHECK(std::isfinite(v));
        CHECK(v >= 0.0);
    }
    CHECK(r.predicted_exponent == doctest::Approx(-1.0 - 1.0 / 0.6));
    std::ostringstream os;
    write_distortion_csv(os, r);
    CHECK_FALSE(os.str().empty());
}

TEST_CASE("memory loss") {
    const auto mesh = build_mesh(1 << 10, 3.0);
    const auto U = assemble_ulam(ParamPoint(0.3, 1.2), mesh);
    const auto d = GridFunction::constant(mesh, 1.0, GridKind::cell_average);
    const auto same = memory_loss_curve(U, d, d, 50);
    for (double v : same.values) CHECK(v == 0.0);
    CHECK(same.fit.points == 0);
    CHECK(std::isnan(same.fit.exponent));
    const auto d2 = GridFunction::cell_average_of(mesh, [](double x) { return 2.0 * x; });
    const auto c = memory_loss_curve(U, d, d2, 200);
    REQUIRE(c.values.size() == 201);
    for (std::size_t n = 1; n < c.values.size(); ++n) REQUIRE(c.values[n] <= c.values[n - 1] * (1 + 1e-12) + 1e-15);
    CHECK(c.values[0] == doctest::Approx(0.5).epsilon(1e-3));
    CHECK(c.values.back() < 0.1 * c.values[0]);
}

TEST_CASE("correlations") {
    const auto mesh = build_mesh(1 << 10, 3.0);
    const auto U = assemble_ulam(ParamPoint(0.3, 1.2), mesh);
    const auto h = invariant_density(U).density;
    const auto z = correlation_decay(U, Observable::parse("x"), Observable::parse("1"), h, 100);
    for (double v : z.values) CHECK(std::abs(v) <= 1e-12);
    const auto c = correlation_decay(U, Observable::parse("x"), Observable::parse("x"), h, 100);
    CHECK(c.values[0] > 0.0); // variance of x
    CHECK(std::abs(c.values[100]) < 0.1 * c.values[0]);
}

TEST_CASE("random bounded functions are reproducible") {
    const auto mesh = build_mesh(64, 1.0);
    const auto a = random_bounded_function(mesh, 3, 7);
    const auto b = random_bounded_function(mesh, 3, 7);
    const auto c = random_bounded_function(mesh, 3, 8);
    CHECK(std::ranges::equal(a.values(), b.values()));
    CHECK_FALSE(std::ranges::equal(a.values(), c.values()));
    for (double v : a.values()) CHECK(std::abs(v) <= 3.0);
}

} // TEST_SUITE
