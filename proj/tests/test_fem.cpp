#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>
#include <random>

#include "cornerlab/errors.hpp"
#include "cornerlab/fem.hpp"
#include "cornerlab/quadrature.hpp"
#include "cornerlab/spectral.hpp"
#include "doctest.h"

using namespace cornerlab;

namespace {

const double kPi = 3.14159265358979323846;

Mesh unit_square(double h) {
    TriangulateOptions opt;
    opt.h_max = h;
    return triangulate_polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}, opt);
}

// reentrant corner at the origin, edges along +x and -y, opening 3*pi/2
Mesh lshape(double h, int layers) {
    TriangulateOptions opt;
    opt.h_max = h;
    opt.grading.push_back({{0.0, 0.0}, 0.5, layers, 0.2});
    return triangulate_polygon({{0, 0}, {1, 0}, {1, 1}, {-1, 1}, {-1, -1}, {0, -1}}, opt);
}

double fit_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double xm = 0, ym = 0;
    for (std::size_t i = 0; i < x.size(); ++i) xm += x[i], ym += y[i];
    xm /= x.size(), ym /= y.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - xm) * (y[i] - ym);
        den += (x[i] - xm) * (x[i] - xm);
    }
    return num / den;
}

// independent smooth cutoff for reference solutions: 1 inside a, 0 outside b
double cutoff(double r, double a, double b) {
    if (r <= a) return 1.0;
    if (r >= b) return 0.0;
    double t = (r - a) / (b - a);
    return 1.0 - t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

}  // namespace

TEST_CASE("corner mode driver matches a stencil laplacian of the cut mode") {
    SectorFrame fr{{0.0, 0.0}, 1.5 * kPi, 0.0};
    RhsSpec rhs = RhsSpec::corner_mode_driver(fr, 1, 0.5);
    SingularExponent e1 = exponents_sector(fr.omega, 1)[0];
    auto u0 = [&](Vec2 p) { return cutoff(fr.radius(p), 0.25, 0.5) * h_plus(e1, fr, p); };

    // inside r_lo and outside r_hi the driver vanishes identically
    CHECK(rhs(fr.at(0.20, 2.0)) == 0.0);
    CHECK(rhs(fr.at(0.24999, 1.0)) == 0.0);
    CHECK(rhs(fr.at(0.51, 2.0)) == 0.0);
    CHECK(rhs(Vec2{0.0, 0.0}) == 0.0);

    // in the transition annulus, compare against a 5-point laplacian of u0
    for (Vec2 p : {fr.at(0.30, 2.2), fr.at(0.375, 1.1), fr.at(0.45, 3.0), fr.at(0.40, 2.356)}) {
        double h = 1e-4;
        double lap = (u0({p.x + h, p.y}) + u0({p.x - h, p.y}) + u0({p.x, p.y + h}) +
                      u0({p.x, p.y - h}) - 4.0 * u0(p)) /
                     (h * h);
        CHECK(rhs(p) == doctest::Approx(lap).epsilon(1e-5));
    }
}

TEST_CASE("annulus bump profile and support") {
    RhsSpec b = RhsSpec::annulus_bump({1.0, 2.0}, 0.5, 0.1, -3.0);
    CHECK(b({1.5, 2.0}) == doctest::Approx(-3.0).epsilon(1e-14));  // peak on the circle
    CHECK(b({1.39, 2.0}) == 0.0);
    CHECK(b({1.61, 2.0}) == 0.0);
    CHECK(b({1.0, 2.0}) == 0.0);
    // C^2 takeoff: value just inside the band is tiny
    CHECK(std::abs(b({1.401, 2.0})) < 3.0 * 64.0 * std::pow(0.01 / 0.2, 3.0) * 1.01);

    RhsSpec c = RhsSpec::combination({2.0, -1.0}, {b, b});
    CHECK(c({1.5, 2.0}) == doctest::Approx(-3.0).epsilon(1e-14));

    CHECK_THROWS_AS(RhsSpec::annulus_bump({0, 0}, 0.1, 0.2, 1.0), GeometryMismatch);
    CHECK_THROWS_AS(RhsSpec::combination({1.0}, {}), GeometryMismatch);
}

TEST_CASE("support check accepts corner-clean rhs and rejects others") {
    SectorFrame fr{{0.0, 0.0}, 1.5 * kPi, 0.0};
    RhsSpec ok = RhsSpec::corner_mode_driver(fr, 1, 0.5);
    CHECK_NOTHROW(check_support(ok, {0.0, 0.0}, 0.25));
    RhsSpec bad = RhsSpec::analytic([](Vec2) { return 1.0; });
    CHECK_THROWS_AS(check_support(bad, {0.0, 0.0}, 0.25), SupportViolation);
}

TEST_CASE("interpolation reproduces polynomials of the element order") {
    auto mp = share(unit_square(0.21));
    auto lin = [](Vec2 p) { return 2.0 * p.x - 0.7 * p.y + 0.3; };
    FemField f1 = interpolate(mp, 1, lin);
    auto quad = [](Vec2 p) { return p.x * p.x + 3.0 * p.x * p.y + 2.0 * p.y * p.y - p.x; };
    FemField f2 = interpolate(mp, 2, quad);

    for (Vec2 p : {Vec2{0.13, 0.77}, Vec2{0.5, 0.5}, Vec2{0.92, 0.08}}) {
        CHECK(f1.value(p) == doctest::Approx(lin(p)).epsilon(1e-13));
        Vec2 g1 = f1.gradient(p);
        CHECK(g1.x == doctest::Approx(2.0).epsilon(1e-11));
        CHECK(g1.y == doctest::Approx(-0.7).epsilon(1e-11));
        CHECK(f2.value(p) == doctest::Approx(quad(p)).epsilon(1e-12));
        Vec2 g2 = f2.gradient(p);
        CHECK(g2.x == doctest::Approx(2.0 * p.x + 3.0 * p.y - 1.0).epsilon(1e-10));
        CHECK(g2.y == doctest::Approx(3.0 * p.x + 4.0 * p.y).epsilon(1e-10));
    }
    std::array<double, 3> hess = f2.hessian_in_tri(0);
    CHECK(hess[0] == doctest::Approx(2.0).epsilon(1e-9));
    CHECK(hess[1] == doctest::Approx(3.0).epsilon(1e-9));
    CHECK(hess[2] == doctest::Approx(4.0).epsilon(1e-9));
    CHECK(f1.hessian_in_tri(0) == std::array<double, 3>{0.0, 0.0, 0.0});

    CHECK_THROWS_AS(make_field(mp, 3), OrderUnavailable);
    CHECK_THROWS_AS(f1.value({3.0, 3.0}), PointOutside);
}

TEST_CASE("zero rhs gives the zero field") {
    auto mp = share(unit_square(0.2));
    for (int order : {1, 2}) {
        FemField u = solve_dirichlet(mp, RhsSpec::zero(), order);
        for (double v : u.values) CHECK(v == 0.0);
    }
}

TEST_CASE("manufactured sine solution converges at the expected rates") {
    RhsSpec rhs = RhsSpec::analytic(
        [](Vec2 p) { return -2.0 * kPi * kPi * std::sin(kPi * p.x) * std::sin(kPi * p.y); });
    auto exact = [](Vec2 p) { return std::sin(kPi * p.x) * std::sin(kPi * p.y); };
    auto exact_grad = [](Vec2 p) {
        return Vec2{kPi * std::cos(kPi * p.x) * std::sin(kPi * p.y),
                    kPi * std::sin(kPi * p.x) * std::cos(kPi * p.y)};
    };

    std::vector<double> hs = {0.16, 0.08, 0.04, 0.02};
    for (int order : {1, 2}) {
        std::vector<double> lg_h, lg_l2, lg_h1;
        for (double h : hs) {
            auto mp = share(unit_square(h));
            FemField u = solve_dirichlet(mp, rhs, order);
            double el2 = integrate_region(
                *mp, Region::whole(),
                [&](int t, Vec2 p) {
                    double d = u.value_in_tri(t, p) - exact(p);
                    return d * d;
                },
                5);
            double eh1 = integrate_region(
                *mp, Region::whole(),
                [&](int t, Vec2 p) {
                    Vec2 d = u.gradient_in_tri(t, p) - exact_grad(p);
                    return dot(d, d);
                },
                5);
            lg_h.push_back(std::log(h));
            lg_l2.push_back(0.5 * std::log(el2));
            lg_h1.push_back(0.5 * std::log(eh1));
        }
        double s_l2 = fit_slope(lg_h, lg_l2), s_h1 = fit_slope(lg_h, lg_h1);
        if (order == 1) {
            CHECK(s_h1 == doctest::Approx(1.0).epsilon(0.15));
            CHECK(s_l2 == doctest::Approx(2.0).epsilon(0.10));
        } else {
            CHECK(s_h1 == doctest::Approx(2.0).epsilon(0.15));
            CHECK(s_l2 == doctest::Approx(3.0).epsilon(0.13));
        }
    }
}

TEST_CASE("discrete residual is orthogonal to the test space") {
    RhsSpec rhs = RhsSpec::analytic(
        [](Vec2 p) { return -2.0 * kPi * kPi * std::sin(kPi * p.x) * std::sin(kPi * p.y); });
    for (int order : {1, 2}) {
        auto mp = share(unit_square(0.09));
        FemField u = solve_dirichlet(mp, rhs, order);
        FemField v = make_field(mp, order);
        std::mt19937 rng(271828);
        std::uniform_real_distribution<double> uni(-1.0, 1.0);
        for (int i = 0; i < v.n_dofs(); ++i)
            if (!v.dirichlet[i]) v.values[i] = uni(rng);

        // same quadrature as the assembly: order-2 stiffness, order-4 loads
        double a_uv = 0.0, load_v = 0.0;
        const Mesh& m = *mp;
        for (std::size_t t = 0; t < m.n_tris(); ++t) {
            Vec2 a = m.tri_vertex(t, 0), b = m.tri_vertex(t, 1), c = m.tri_vertex(t, 2);
            a_uv += integrate_tri(
                [&](Vec2 p) { return dot(u.gradient_in_tri(t, p), v.gradient_in_tri(t, p)); },
                a, b, c, tri_rule(2));
            load_v += integrate_tri([&](Vec2 p) { return rhs(p) * v.value_in_tri(t, p); }, a,
                                    b, c, tri_rule(4));
        }
        double scale = std::max({std::abs(a_uv), std::abs(load_v), 1.0});
        CHECK(std::abs(a_uv + load_v) <= 1e-9 * scale);
    }
}

TEST_CASE("corner mode energy in a disk approaches the closed form") {
    SectorFrame fr{{0.0, 0.0}, 1.5 * kPi, 0.0};
    SingularExponent e1 = exponents_sector(fr.omega, 1)[0];
    double lam = e1.lambda_plus;

    std::vector<Vec2> loop = sector_disk_polygon(fr, 1.0, 48);
    std::vector<GradingSpec> gr = {{fr.vertex, 0.5, 12, 0.25}};
    double rho = 0.5;
    double closed = lam * std::pow(rho, 2.0 * lam);

    auto pie = [&](double h) {
        TriangulateOptions opt;
        opt.h_max = h;
        opt.grading = gr;
        return triangulate_polygon(loop, opt);
    };

    std::vector<double> err;
    for (double h : {0.12, 0.06}) {
        auto mp = share(pie(h));
        FemField u = interpolate(mp, 2, [&](Vec2 p) { return h_plus(e1, fr, p); });
        double e = energy(u, Region::disk(fr.vertex, rho));
        err.push_back(std::abs(e - closed) / closed);
    }
    CHECK(err[0] < 0.02);
    CHECK(err[1] < 0.5 * err[0]);

    // additivity of the region split and empty-region signaling
    auto mp = share(pie(0.12));
    FemField u = interpolate(mp, 2, [&](Vec2 p) { return h_plus(e1, fr, p); });
    double whole = energy(u, Region::whole());
    double in = energy(u, Region::disk(fr.vertex, 0.4));
    double out = energy(u, Region::annulus(fr.vertex, 0.4, 10.0));
    CHECK(in + out == doctest::Approx(whole).epsilon(1e-10));
    CHECK_THROWS_AS(energy(u, Region::disk({50.0, 50.0}, 0.1)), EmptyRegion);
}

TEST_CASE("reentrant corner driver reproduces the cut mode") {
    SectorFrame fr{{0.0, 0.0}, 1.5 * kPi, 0.0};
    SingularExponent e1 = exponents_sector(fr.omega, 1)[0];
    RhsSpec rhs = RhsSpec::corner_mode_driver(fr, 1, 0.5);
    auto u0 = [&](Vec2 p) { return cutoff(fr.radius(p), 0.25, 0.5) * h_plus(e1, fr, p); };

    std::vector<double> errs;
    for (double h : {0.10, 0.05}) {
        auto mp = share(lshape(h, 10));
        FemField u = solve_dirichlet(mp, rhs, 1);
        double e = 0.0;
        for (std::size_t v = 0; v < mp->n_verts(); ++v)
            e = std::max(e, std::abs(u.values[v] - u0(mp->verts[v])));
        errs.push_back(e);
    }
    CHECK(errs[0] < 0.02);
    CHECK(errs[1] < 0.6 * errs[0]);

    // P2 on the coarse mesh beats P1 comfortably
    auto mp = share(lshape(0.10, 10));
    FemField u2 = solve_dirichlet(mp, rhs, 2);
    double e2 = 0.0;
    for (std::size_t v = 0; v < mp->n_verts(); ++v)
        e2 = std::max(e2, std::abs(u2.values[v] - u0(mp->verts[v])));
    CHECK(e2 < 0.5 * errs[0]);
}

TEST_CASE("solutions are exactly similarity invariant") {
    auto f0 = [](Vec2 p) { return (p.x - 0.3) * (p.y - 0.5) * std::sin(3.0 * p.x); };
    for (int order : {1, 2}) {
        Mesh m = unit_square(0.11);
        auto mp = share(m);
        auto mp2 = share(scale(m, 2.0));
        FemField u = solve_dirichlet(mp, RhsSpec::analytic(f0), order);
        FemField u2 = solve_dirichlet(
            mp2, RhsSpec::analytic([&](Vec2 p) { return f0(0.5 * p) / 4.0; }), order);
        REQUIRE(u.n_dofs() == u2.n_dofs());
        double dmax = 0.0;
        for (int i = 0; i < u.n_dofs(); ++i)
            dmax = std::max(dmax, std::abs(u.values[i] - u2.values[i]));
        CHECK(dmax <= 1e-10);
    }
}

TEST_CASE("field restriction to a submesh preserves values") {
    RhsSpec rhs = RhsSpec::analytic(
        [](Vec2 p) { return -2.0 * kPi * kPi * std::sin(kPi * p.x) * std::sin(kPi * p.y); });
    for (int order : {1, 2}) {
        auto mp = share(unit_square(0.1));
        FemField u = solve_dirichlet(mp, rhs, order);
        Region disk = Region::disk({0.5, 0.5}, 0.3);
        auto sp = share(submesh(*mp, disk));
        FemField ur = restrict_field(u, sp);
        for (std::size_t t = 0; t < sp->n_tris(); ++t) {
            Vec2 c = sp->centroid(t);
            CHECK(ur.value_in_tri((int)t, c) ==
                  doctest::Approx(u.value_in_tri(sp->parent_tri[t], c)).epsilon(1e-13));
        }
    }
}
