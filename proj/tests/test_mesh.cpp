#include "ir/mesh.hpp"
#include "ir/params.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

using namespace ir;

TEST_SUITE("mesh") {

TEST_CASE("build_mesh nodes") {
    const auto u = build_mesh(4, 1.0);
    REQUIRE(u->cells() == 4);
    CHECK(u->node(0) == 0.0);
    CHECK(u->node(1) == 0.25);
    CHECK(u->node(2) == 0.5);
    CHECK(u->node(3) == 0.75);
    CHECK(u->node(4) == 1.0);
    CHECK(u->half_index() == 2);

    const auto g = build_mesh(4, 2.0);
    CHECK(g->node(1) == 1.0 / 16);
    CHECK(g->node(2) == 0.25);
    CHECK(g->node(3) == 0.5); // 9/16 snapped
    CHECK(g->node(4) == 1.0);

    const auto f = build_mesh(1 << 14, 3.0);
    CHECK(f->node(1) == std::ldexp(1.0, -42));
    CHECK(f->node(f->half_index()) == 0.5);
    for (int i = 0; i < f->cells(); ++i) REQUIRE(f->node(i) < f->node(i + 1));
    // away from the snapped node, nodes are (i/N)^3
    CHECK(f->node(100) == doctest::Approx(std::pow(100.0 / (1 << 14), 3.0)).epsilon(1e-15));

    CHECK_THROWS_AS(build_mesh(1, 1.0), DomainError);
    CHECK_THROWS_AS(build_mesh(8, 0.5), DomainError);
    CHECK(f->locate(0.0) == 0);
    CHECK(f->locate(1.0) == f->cells() - 1);
    CHECK(f->locate(0.5) == f->half_index());
}

TEST_CASE("integration") {
    const auto m = build_mesh(64, 3.0);
    CHECK(integrate(GridFunction::constant(m, 1.0, GridKind::cell_average)) == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(integrate(GridFunction::constant(m, 1.0, GridKind::nodal)) == doctest::Approx(1.0).epsilon(1e-15));
    const auto u = build_mesh(16, 1.0);
    CHECK(integrate(GridFunction::sample(u, [](double x) { return x; })) == 0.5);

    // x^{-1/2}: closed form integral 2
    const auto g = build_mesh(1 << 12, 3.0);
    auto inv_sqrt = [](double x) { return x > 0 ? 1.0 / std::sqrt(x) : INFINITY; };
    const auto s = GridFunction::sample(g, inv_sqrt);
    CHECK(std::abs(integrate(s, EndpointRule::singular()) - 2.0) <= 1e-3);
    CHECK(std::abs(integrate(s, EndpointRule::singular(-0.5)) - 2.0) <= 1e-3);

    CHECK(integrate_function(*g, [](double x) { return x * x; }) == doctest::Approx(1.0 / 3).epsilon(1e-14));
    const auto one = GridFunction::constant(g, 1.0, GridKind::cell_average);
    CHECK(integrate_against(one, [](double x) { return std::cos(x); }) == doctest::Approx(std::sin(1.0)).epsilon(1e-13));
    const auto cum = cumulative_integral(GridFunction::sample(u, [](double x) { return 2 * x; }));
    CHECK(cum.size() == 17);
    CHECK(cum.back() == doctest::Approx(1.0));
    CHECK(cum[8] == doctest::Approx(0.25));
}

TEST_CASE("property: refinement on x^{-1/2}") {
    auto err = [](int n) {
        const auto m = build_mesh(n, 3.0);
        const auto s = GridFunction::sample(m, [](double x) { return x > 0 ? 1.0 / std::sqrt(x) : INFINITY; });
        return std::abs(integrate(s, EndpointRule::singular()) - 2.0);
    };
    for (int n : {256, 1024}) CHECK(err(n) / err(2 * n) >= 1.8);
}

TEST_CASE("property: linearity and monotonicity of integrate") {
    const auto m = build_mesh(128, 2.0);
    const auto f = GridFunction::sample(m, [](double x) { return std::sin(3 * x) + 1.0; });
    const auto g = GridFunction::sample(m, [](double x) { return std::sin(3 * x) + 1.5 + x; });
    std::vector<double> comb(f.size());
    for (std::size_t i = 0; i < comb.size(); ++i) comb[i] = 2.0 * f[i] - 3.0 * g[i];
    CHECK(integrate(GridFunction(m, comb, GridKind::nodal)) ==
          doctest::Approx(2.0 * integrate(f) - 3.0 * integrate(g)).epsilon(1e-13));
    CHECK(integrate(f) <= integrate(g));
}

TEST_CASE("differentiation") {
    const auto u = build_mesh(32, 1.0);
    const auto d = differentiate(GridFunction::sample(u, [](double x) { return x * x; }));
    for (int i = 1; i < u->cells(); ++i) CHECK(std::abs(d[static_cast<std::size_t>(i)] - 2 * u->node(i)) <= 1e-8);
    const auto z = differentiate(GridFunction::constant(u, 3.0, GridKind::nodal));
    for (double v : z.values()) CHECK(v == 0.0);

    const auto g = build_mesh(1 << 14, 3.0);
    const auto c = differentiate(GridFunction::sample(g, [](double x) { return x > 0 ? std::cbrt(1.0 / x) : 0.0; }));
    double worst = 0;
    for (int i = 1; i < g->cells(); ++i) {
        const double x = g->node(i);
        if (x < 1e-4) continue;
        const double exact = -std::pow(x, -4.0 / 3.0) / 3.0;
        worst = std::max(worst, std::abs(c[static_cast<std::size_t>(i)] - exact) / std::abs(exact));
    }
    CHECK(worst <= 1e-3);
    CHECK_THROWS_AS(differentiate(GridFunction::constant(u, 1.0, GridKind::cell_average)), DomainError);
}

TEST_CASE("property: differentiate inverts cumulative integral") {
    auto err = [](int n) {
        const auto m = build_mesh(n, 1.0);
        const auto f = GridFunction::sample(m, [](double x) { return std::exp(x); });
        const auto F = GridFunction(m, cumulative_integral(f), GridKind::nodal);
        const auto d = differentiate(F);
        double e = 0;
        for (int i = n / 4; i <= 3 * n / 4; ++i)
            e = std::max(e, std::abs(d[static_cast<std::size_t>(i)] - f[static_cast<std::size_t>(i)]));
        return e;
    };
    // second order on the uniform interior
    CHECK(err(64) / err(128) > 3.5);
}

TEST_CASE("evaluate") {
    const auto u = build_mesh(10, 1.0);
    CHECK(evaluate(GridFunction::sample(u, [](double x) { return x; }), 0.3) == doctest::Approx(0.3).epsilon(1e-15));
    const auto g = build_mesh(100, 3.0);
    CHECK(evaluate(GridFunction::constant(g, 1.0, GridKind::cell_average), 0.123) == 1.0);
    const auto sq = GridFunction::sample(g, [](double x) { return x * x; });
    for (int j : {10, 50, 90}) {
        const double w = g->width(j), mid = g->node(j) + 0.5 * w;
        CHECK(std::abs(evaluate(sq, mid) - mid * mid) <= w * w);
    }
    CHECK_THROWS_AS(evaluate(sq, 1.5), DomainError);
}

TEST_CASE("cell averages and conversion") {
    const auto g = build_mesh(50, 2.0);
    const auto a = GridFunction::from_antiderivative(g, [](double x) { return x * x * x; });
    for (int j = 0; j < g->cells(); ++j) {
        const double l = g->node(j), r = g->node(j + 1);
        CHECK(a[static_cast<std::size_t>(j)] == doctest::Approx((r * r * r - l * l * l) / (r - l)).epsilon(1e-13));
    }
    const auto q = GridFunction::cell_average_of(g, [](double x) { return 3 * x * x; });
    for (int j = 0; j < g->cells(); ++j)
        CHECK(q[static_cast<std::size_t>(j)] == doctest::Approx(a[static_cast<std::size_t>(j)]).epsilon(1e-13));
    const auto n = to_nodal(a);
    CHECK(n.kind() == GridKind::nodal);
    CHECK(n.size() == 51);
    CHECK_THROWS(GridFunction(g, std::vector<double>(7, 1.0), GridKind::nodal));
    CHECK_THROWS(GridFunction(g, std::vector<double>(50, NAN), GridKind::cell_average));
}

TEST_CASE("serialization is bit-faithful") {
    const auto g = build_mesh(40, 3.0);
    const auto f = GridFunction::sample(g, [](double x) { return std::exp(-x) / 3.0; });
    std::stringstream ss;
    write_csv(ss, f);
    const auto back = read_csv(ss);
    CHECK(back.kind() == f.kind());
    CHECK(back.mesh() == f.mesh());
    for (std::size_t i = 0; i < f.size(); ++i) CHECK(back[i] == f[i]);

    const auto c = GridFunction::cell_average_of(g, [](double x) { return 1.0 / (1.0 + x); });
    const auto j = grid_function_from_json(nlohmann::json::parse(to_json(c).dump()));
    CHECK(j.kind() == GridKind::cell_average);
    for (std::size_t i = 0; i < c.size(); ++i) CHECK(j[i] == c[i]);
}

} // TEST_SUITE
