#include "nlcfem/mesh.hpp"
#include "nlcfem/quadrature.hpp"
#include "oracle.hpp"

#include <catch2/catch_amalgamated.hpp>

#include <cmath>

using namespace nlcfem;

namespace {

TriMesh reference_triangle() {
    return TriMesh({Eigen::Vector2d(0.0, 0.0), Eigen::Vector2d(1.0, 0.0),
                    Eigen::Vector2d(0.0, 1.0)},
                   {{0, 1, 2}});
}

TriMesh skewed_triangle() {
    return TriMesh({Eigen::Vector2d(-0.3, 0.2), Eigen::Vector2d(1.1, -0.4),
                    Eigen::Vector2d(0.5, 1.3)},
                   {{0, 1, 2}});
}

template <class F>
double integrate(const TriMesh& mesh, int e, int order, F f) {
    const auto& t = mesh.tri(e);
    double total = 0.0;
    for (const auto& q : quadrature_rule(order)) {
        const Eigen::Vector2d p =
            q.l0 * mesh.vertex(t[0]) + q.l1 * mesh.vertex(t[1]) + q.l2 * mesh.vertex(t[2]);
        total += mesh.area(e) * q.w * f(p.x(), p.y());
    }
    return total;
}

// Exact integral of x^a y^b over the reference triangle: a! b! / (a+b+2)!.
double monomial_integral(int a, int b) {
    auto fact = [](int n) {
        double r = 1.0;
        for (int i = 2; i <= n; ++i) r *= i;
        return r;
    };
    return fact(a) * fact(b) / fact(a + b + 2);
}

} // namespace

TEST_CASE("quadrature rules have unit weight sums and valid barycentric points") {
    for (int order : {1, 2, 4}) {
        double wsum = 0.0;
        for (const auto& q : quadrature_rule(order)) {
            wsum += q.w;
            REQUIRE(q.l0 >= 0.0);
            REQUIRE(q.l1 >= 0.0);
            REQUIRE(q.l2 >= 0.0);
            REQUIRE(std::abs(q.l0 + q.l1 + q.l2 - 1.0) < 1e-15);
        }
        REQUIRE(std::abs(wsum - 1.0) < 1e-14);
    }
}

TEST_CASE("order-1 rule is the single centroid point") {
    const auto rule = quadrature_rule(1);
    REQUIRE(rule.size() == 1);
    REQUIRE(rule[0].l0 == Catch::Approx(1.0 / 3.0).margin(1e-16));
    REQUIRE(rule[0].l1 == Catch::Approx(1.0 / 3.0).margin(1e-16));
    REQUIRE(rule[0].w == 1.0);
}

TEST_CASE("order-4 weights are positive") {
    // The penalty-force energy argument sums a pointwise inequality over
    // these nodes and needs every weight nonnegative.
    for (const auto& q : quadrature_rule(4)) REQUIRE(q.w > 0.0);
}

TEST_CASE("rules integrate monomials exactly up to their stated degree") {
    const TriMesh ref = reference_triangle();
    for (int order : {1, 2, 4}) {
        for (int a = 0; a + 0 <= order; ++a) {
            for (int b = 0; a + b <= order; ++b) {
                const double got = integrate(ref, 0, order, [&](double x, double y) {
                    return std::pow(x, a) * std::pow(y, b);
                });
                REQUIRE(got == Catch::Approx(monomial_integral(a, b)).epsilon(1e-14));
            }
        }
    }
    // Spot values: the degree-1 and the full degree-4 monomial.
    REQUIRE(integrate(ref, 0, 2, [](double x, double) { return x; }) ==
            Catch::Approx(1.0 / 6.0).epsilon(1e-14));
    REQUIRE(integrate(ref, 0, 4, [](double x, double y) { return x * x * y * y; }) ==
            Catch::Approx(1.0 / 180.0).epsilon(1e-14));
}

TEST_CASE("unsupported order is rejected") {
    REQUIRE_THROWS_AS(quadrature_rule(3), std::invalid_argument);
    REQUIRE_THROWS_AS(quadrature_rule(0), std::invalid_argument);
    REQUIRE_THROWS_AS(quadrature_rule(5), std::invalid_argument);
}

TEST_CASE("library rules agree with the tensor-product oracle on a skewed element") {
    const TriMesh mesh = skewed_triangle();
    const oracle::ElemQuad oq = oracle::element_quadrature(mesh, 0);

    auto oracle_integrate = [&](auto f) {
        double total = 0.0;
        for (std::size_t i = 0; i < oq.pts.size(); ++i)
            total += oq.w[i] * f(oq.pts[i].x(), oq.pts[i].y());
        return total;
    };

    auto quartic = [](double x, double y) {
        return 0.7 + x - 2.0 * y + 0.5 * x * y - x * x + y * y * y - 0.25 * x * x * y * y;
    };
    REQUIRE(integrate(mesh, 0, 4, quartic) ==
            Catch::Approx(oracle_integrate(quartic)).epsilon(1e-14));

    auto quadratic = [](double x, double y) { return 1.0 - 3.0 * x * y + y * y; };
    REQUIRE(integrate(mesh, 0, 2, quadratic) ==
            Catch::Approx(oracle_integrate(quadratic)).epsilon(1e-14));

    // The oracle rule reproduces the element area.
    double area = 0.0;
    for (double w : oq.w) area += w;
    REQUIRE(area == Catch::Approx(mesh.area(0)).epsilon(1e-14));
}
