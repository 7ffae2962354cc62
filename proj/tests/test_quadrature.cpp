#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <doctest.h>

#include "cornerlab/quadrature.hpp"

using namespace cornerlab;

namespace {
// exact integral of x^a y^b over the reference triangle {x,y>0, x+y<1}
double ref_tri_monomial(int a, int b) {
    // a! b! / (a+b+2)!
    double v = 1.0;
    for (int k = 1; k <= a; ++k) v *= k;
    for (int k = 1; k <= b; ++k) v *= k;
    for (int k = 1; k <= a + b + 2; ++k) v /= k;
    return v;
}
}  // namespace

TEST_CASE("gauss nodes integrate polynomials to machine precision") {
    for (int n : {2, 4, 8, 16}) {
        const Gauss1D& g = gauss_legendre(n);
        double wsum = 0.0;
        for (double w : g.w) wsum += w;
        CHECK(wsum == doctest::Approx(2.0).epsilon(1e-14));
        // highest exactly integrated degree is 2n-1
        int k = 2 * n - 2;  // even degree: nonzero integral
        double val = 0.0;
        for (std::size_t i = 0; i < g.x.size(); ++i) val += g.w[i] * std::pow(g.x[i], k);
        CHECK(val == doctest::Approx(2.0 / (k + 1)).epsilon(1e-13));
    }
}

TEST_CASE("1d helpers") {
    double s = integrate_1d([](double x) { return std::sin(x); }, 0.0, M_PI, 12);
    CHECK(s == doctest::Approx(2.0).epsilon(1e-14));
    double e = integrate_1d_composite([](double x) { return std::exp(x); }, 0.0, 1.0, 8, 8);
    CHECK(e == doctest::Approx(std::exp(1.0) - 1.0).epsilon(1e-14));
}

TEST_CASE("graded radial panels absorb an algebraic endpoint singularity") {
    // int_0^1 r^(lam-1) dr = 1/lam, integrable but steep for small lam
    for (double lam : {1.0 / 3.0, 0.5, 0.9}) {
        double v = integrate_radial_graded([&](double r) { return std::pow(r, lam - 1.0); }, 1.0);
        CHECK(v == doctest::Approx(1.0 / lam).epsilon(1e-10));
    }
}

TEST_CASE("triangle rules hit their stated degree") {
    for (int deg : {1, 2, 4, 5}) {
        const TriRule& rule = tri_rule(deg);
        double wsum = 0.0;
        for (double w : rule.w) wsum += w;
        CHECK(wsum == doctest::Approx(0.5).epsilon(1e-14));
        for (int a = 0; a + 0 <= deg; ++a)
            for (int b = 0; a + b <= deg; ++b) {
                double v = 0.0;
                for (std::size_t i = 0; i < rule.w.size(); ++i)
                    v += rule.w[i] * std::pow(rule.pts[i].x, a) * std::pow(rule.pts[i].y, b);
                CAPTURE(deg);
                CAPTURE(a);
                CAPTURE(b);
                CHECK(v == doctest::Approx(ref_tri_monomial(a, b)).epsilon(1e-13));
            }
    }
}

TEST_CASE("collapsed tensor rule reaches high degree") {
    TriRule rule = tri_rule_duffy(8);
    for (int a = 0; a <= 10; ++a)
        for (int b = 0; a + b <= 10; ++b) {
            double v = 0.0;
            for (std::size_t i = 0; i < rule.w.size(); ++i)
                v += rule.w[i] * std::pow(rule.pts[i].x, a) * std::pow(rule.pts[i].y, b);
            CHECK(v == doctest::Approx(ref_tri_monomial(a, b)).epsilon(1e-12));
        }
}

TEST_CASE("physical-triangle integration") {
    Vec2 a{1.0, 1.0}, b{3.0, 1.5}, c{1.5, 4.0};
    double area = 0.5 * cross(b - a, c - a);
    double one = integrate_tri([](Vec2) { return 1.0; }, a, b, c, tri_rule(2));
    CHECK(one == doctest::Approx(area).epsilon(1e-14));
    Vec2 cen = (a + b + c) / 3.0;
    double lin = integrate_tri([](Vec2 p) { return 2.0 * p.x - 0.7 * p.y + 1.0; }, a, b, c,
                               tri_rule(2));
    CHECK(lin == doctest::Approx(area * (2.0 * cen.x - 0.7 * cen.y + 1.0)).epsilon(1e-14));
}
