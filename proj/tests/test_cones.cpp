#include "ir/cones.hpp"

#include <doctest.h>

#include <cmath>
#include <numbers>

#include <nlohmann/json.hpp>

using namespace ir;

namespace {

GridFunction power_averages(MeshPtr mesh, double e) {
    return GridFunction::from_antiderivative(mesh, [e](double x) { return std::pow(x, e + 1) / (e + 1); });
}

} // namespace

TEST_SUITE("cones") {

TEST_CASE("a0 values") {
    // direct evaluation in 40-digit arithmetic (tests/oracles/oracles.py)
    CHECK(a0(ParamPoint(0.5, 1.0)) == doctest::Approx(12.430191792240298).epsilon(1e-14));
    CHECK(a0(ParamPoint(0.25, 1.0)) == doctest::Approx(6.4873964775955757).epsilon(1e-14));
    CHECK(a0(ParamPoint(0.5, 1.5)) == doctest::Approx(70.746665863656368).epsilon(1e-14));
}

TEST_CASE("property: a0 monotone in the partial order") {
    std::vector<ParamPoint> grid;
    for (int i = 1; i <= 10; ++i)
        for (int j = 0; j < 10; ++j) {
            const double a = 0.05 * i, b = 1.0 + 0.09 * j;
            if (ParamPoint::admissible(a, b)) grid.emplace_back(a, b);
        }
    int pairs = 0;
    for (const auto& p : grid)
        for (const auto& q : grid)
            if (p <= q) {
                ++pairs;
                REQUIRE(a0(p) <= a0(q));
            }
    CHECK(pairs > 1000);
}

TEST_CASE("check_Ca examples") {
    const auto mesh = build_mesh(4096, 3.0);
    for (const auto& g : {ParamPoint(0.5, 1.0), ParamPoint(0.3, 1.5)}) {
        const ConeParams cp(1.0, g);
        CHECK(check_Ca(power_averages(mesh, g.density_exponent()), cp).passed);
        CHECK(check_Ca(GridFunction::constant(mesh, 1.0, GridKind::cell_average), cp).passed);
        CHECK(check_Ca(GridFunction::constant(mesh, 1.0, GridKind::nodal), cp).passed);
    }
    const ConeParams cp(12.0, ParamPoint(0.5, 1.0));
    const auto inc = check_Ca(GridFunction::sample(mesh, [](double x) { return x + 0.1; }), cp);
    CHECK_FALSE(inc.passed);
    REQUIRE(inc.first_violation);
    CHECK(inc.first_violation->condition == "decreasing");
    CHECK(inc.margin("decreasing") < 0);
    CHECK_THROWS_AS(inc.margin("nope"), std::out_of_range);

    // negative control: a < 1 with f = 1 breaks x <= a x^{1/2} for x > a^2
    const auto neg = check_Ca(GridFunction::constant(mesh, 1.0, GridKind::cell_average), ConeParams(0.8, ParamPoint(0.5, 1.0)));
    CHECK_FALSE(neg.passed);
    CHECK(neg.first_violation->condition == "integral");
    CHECK(neg.first_violation->x > 0.64);
    CHECK(neg.first_violation->x < 0.6405);

    // x^{alpha+1} f must increase: f = x^{-2} fails for alpha < 1
    const auto steep = check_Ca(GridFunction::sample(mesh, [](double x) { return 1.0 / ((x + 1e-3) * (x + 1e-3)); }), cp);
    CHECK_FALSE(steep.passed);
    CHECK(steep.margin("weighted_increasing") < 0);

    CHECK_THROWS_AS(ConeParams(0.0, ParamPoint(0.5, 1.0)), DomainError);
    CHECK(nlohmann::json::parse(to_json(inc).dump()).at("passed") == false);
}

TEST_CASE("check_C3 examples") {
    const C3Params c3 = C3Params::sufficient(ParamPoint(0.5, 1.5));
    CHECK(c3.b1 == 1.5);
    CHECK(c3.b2 == 18.0);
    CHECK(c3.b3 == 103.0 * 18.0);
    CHECK(c3.meets_invariance_thresholds(ParamPoint(0.5, 1.5)));
    CHECK_FALSE(C3Params(1.2, 18, 2000).meets_invariance_thresholds(ParamPoint(0.5, 1.5)));
    CHECK_THROWS_AS(C3Params(0.5, 1, 1), DomainError);

    const double d = 0.8;
    auto pw = [d](double x) {
        const double f = std::pow(x, -d);
        return Derivs3{f, -d * f / x, d * (d + 1) * f / (x * x), -d * (d + 1) * (d + 2) * f / (x * x * x)};
    };
    CHECK(check_C3(pw, c3).passed);
    CHECK(check_C3([](double) { return Derivs3{1, 0, 0, 0}; }, C3Params(1, 1, 1)).passed);
    auto blow = [](double x) {
        const double f = std::exp(std::min(1.0 / x, 700.0));
        const double x2 = x * x;
        return Derivs3{f, -f / x2, f * (1 / (x2 * x2) + 2 / (x2 * x)), -f * (1 / (x2 * x2 * x2) + 6 / (x2 * x2 * x) + 6 / (x2 * x2))};
    };
    const auto r = check_C3(blow, c3);
    CHECK_FALSE(r.passed);
    // f = x^{-d} with d just above b1 fails the first condition
    const double big = 1.6;
    auto over = [big](double x) {
        const double f = std::pow(x, -big);
        return Derivs3{f, -big * f / x, big * (big + 1) * f / (x * x), -big * (big + 1) * (big + 2) * f / (x * x * x)};
    };
    CHECK_FALSE(check_C3(over, c3).passed);
}

TEST_CASE("lambda_shift") {
    CHECK(lambda_shift(1, 1, 0.25, ConeParams(2.0, ParamPoint(0.5, 1.0))) == doctest::Approx(16.0).epsilon(1e-15));
    for (double C0 : {1.0, 2.5})
        for (double C1 : {1.0, 3.0})
            for (double d : {0.1, 0.4}) {
                const ConeParams cp(3.0, ParamPoint(0.6, 1.1));
                const double lam = lambda_shift(C0, C1, d, cp);
                CHECK(lam >= 4 * cp.a * (C0 + C1));
                const double room = 1 + 0.6 - 1 / 1.1;
                const double expect = cp.a * (C0 + C1) * std::max({1 / room, 4.0, 2 * (1 / 1.1 - 0.6) / (1 - d)});
                CHECK(lam == doctest::Approx(expect).epsilon(1e-15));
            }
    CHECK_THROWS_AS(lambda_shift(1, 1, 0.25, ConeParams(1.5, ParamPoint(0.5, 1.0))), DomainError);
    CHECK_THROWS_AS(lambda_shift(1, 1, 0.5, ConeParams(2.0, ParamPoint(0.5, 1.0))), DomainError);
    CHECK_THROWS_AS(lambda_shift(0.5, 1, 0.25, ConeParams(2.0, ParamPoint(0.5, 1.0))), DomainError);
}

TEST_CASE("lambda shift of a zero-mean function lands in the cone") {
    const ParamPoint g(0.5, 1.0);
    const ConeParams cp(2.0, g);
    const double d = 0.25;
    const double pi2 = 2 * std::numbers::pi;
    const auto mesh = build_mesh(1 << 13, 3.0);
    auto raw = [&](double x) { return std::sin(pi2 * x) * std::pow(x, -d); };
    const double c = integrate_function(*mesh, raw);
    // |F| <= (1+|c|) x^{-d}, |F'| <= (2 pi + d) x^{-d-1}
    const double C0 = std::max(1.0, (1 + std::abs(c)) / cp.a);
    const double C1 = std::max(1.0, (pi2 + d) / cp.a);
    const double lam = lambda_shift(C0, C1, d, cp);
    const auto F = GridFunction::cell_average_of(mesh, [&](double x) { return raw(x) - c; });
    const auto base = power_averages(mesh, g.density_exponent());
    std::vector<double> v(F.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = F[j] + lam * base[j];
    const auto r = check_Ca(GridFunction(mesh, v, GridKind::cell_average), cp);
    CHECK(r.passed);
}

TEST_CASE("property: cone invariance under one push") {
    const auto mesh = build_mesh(1 << 12, 3.0);
    const ParamPoint gu(0.5, 1.5);
    const ConeParams cp(a0(gu), gu);
    CHECK(cp.invariance_threshold_met());
    const auto U = assemble_ulam(ParamPoint(0.3, 1.2), mesh);
    const auto r = verify_cone_invariance(cp, U, 100);
    CHECK(r.trials == 100);
    CHECK(r.all_passed());
    CHECK(r.min_normalized > 0.0);
    // single branches
    for (auto br : {Branch::left, Branch::right}) CHECK(verify_cone_invariance(cp, U, 30, 7, br).all_passed());
    CHECK_THROWS_AS(verify_cone_invariance(ConeParams(a0(ParamPoint(0.2, 1.1)), ParamPoint(0.2, 1.1)), U, 1), DomainError);
    // the fixed point is in the cone with no slack
    const auto h = invariant_density(U).density;
    CHECK(check_Ca(h, cp).passed);
    CHECK(check_Ca(h, ConeParams(a0(ParamPoint(0.3, 1.2)), ParamPoint(0.3, 1.2))).passed);
}

TEST_CASE("property: cone nesting along the partial order") {
    const auto mesh = build_mesh(2048, 3.0);
    const ParamPoint g1(0.3, 1.2), g2(0.5, 1.5);
    const double a = a0(g1);
    int members = 0;
    for (std::uint64_t k = 0; k < 50; ++k) {
        const auto e = random_cone_mixture(mesh, g1, 11, k);
        if (check_Ca(e.averages, ConeParams(a, g1)).passed) {
            ++members;
            REQUIRE(check_Ca(e.averages, ConeParams(a, g2)).passed);
        }
    }
    CHECK(members == 50);
}

TEST_CASE("mixtures are deterministic in (seed, index)") {
    const auto mesh = build_mesh(256, 3.0);
    const auto a = random_cone_mixture(mesh, ParamPoint(0.5, 1.5), 3, 9);
    const auto b = random_cone_mixture(mesh, ParamPoint(0.5, 1.5), 3, 9);
    const auto c = random_cone_mixture(mesh, ParamPoint(0.5, 1.5), 3, 10);
    CHECK(a.weights == b.weights);
    CHECK(a.exponents == b.exponents);
    CHECK(a.weights != c.weights);
    CHECK(a.weights.size() >= 1);
    CHECK(a.weights.size() <= 4);
    for (double e : a.exponents) CHECK(e < 1 + 0.5 - 1 / 1.5);
}

} // TEST_SUITE
