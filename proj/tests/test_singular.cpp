#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <cmath>

#include "cornerlab/errors.hpp"
#include "cornerlab/fem.hpp"
#include "cornerlab/singular.hpp"
#include "cornerlab/spectral.hpp"
#include "doctest.h"

using namespace cornerlab;

namespace {

const double kPi = 3.14159265358979323846;

SectorFrame origin_frame(double omega, Vec2 vertex = {0, 0}, double angle = 0.0) {
    SectorFrame fr;
    fr.vertex = vertex;
    fr.edge0_angle = angle;
    fr.omega = omega;
    return fr;
}

double quintic_step(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }

// reentrant corner at the origin, edges along +x and -y, opening 3*pi/2
std::shared_ptr<const Mesh> lshape_mesh() {
    TriangulateOptions opt;
    opt.h_max = 0.08;
    opt.grading.push_back({{0.0, 0.0}, 0.5, 10, 0.2});
    return share(triangulate_polygon(
        {{0, 0}, {1, 0}, {1, 1}, {-1, 1}, {-1, -1}, {0, -1}}, opt));
}

DomainFamily reentrant_family() {
    double om = 1.5 * kPi;
    return build_family(om, 1.0, notch_pattern(om, 0.6));
}

// dof coordinates through interpolation of the coordinate functions
std::vector<Vec2> dof_points(const FemField& f) {
    FemField px = interpolate(f.mesh, f.order, [](Vec2 p) { return p.x; });
    FemField py = interpolate(f.mesh, f.order, [](Vec2 p) { return p.y; });
    std::vector<Vec2> out(f.values.size());
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = {px.values[i], py.values[i]};
    return out;
}

}  // namespace

TEST_CASE("mode coefficients come back exactly from an analytic expansion") {
    double om = 1.5 * kPi;
    SectorFrame fr = origin_frame(om, {0.2, -0.1}, 0.3);
    auto es = exponents_sector(om, 3);
    auto u = [&](Vec2 p) { return 3.0 * h_plus(es[0], fr, p) + 2.0 * h_plus(es[1], fr, p); };

    auto grid = default_rho_grid(1.0);
    CoefficientEstimate c1 = extract_coefficient(u, fr, 1, grid);
    CHECK(c1.value == doctest::Approx(3.0).epsilon(1e-10));
    CHECK(c1.spread <= 1e-10);
    CHECK(c1.per_rho.size() == grid.size());

    CoefficientEstimate c2 = extract_coefficient(u, fr, 2, grid);
    CHECK(c2.value == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(c2.spread <= 1e-10);

    CoefficientEstimate c3 = extract_coefficient(u, fr, 3, grid);
    CHECK(std::abs(c3.value) <= 1e-10);
}

TEST_CASE("mode energies balance the dirichlet energy on circles") {
    double om = 1.5 * kPi;
    SectorFrame fr = origin_frame(om);
    auto es = exponents_sector(om, 2);
    auto u1 = [&](Vec2 p) { return h_plus(es[0], fr, p); };
    auto g1 = [&](Vec2 p) { return h_plus_gradient(es[0], fr, p); };

    // a single mode is fully captured at J = 1
    CHECK(parseval_residual(u1, g1, fr, 1, 0.7) <= 1e-8);

    // with two modes present the J = 1 gap is exactly the second mode's share
    auto u12 = [&](Vec2 p) { return h_plus(es[0], fr, p) + h_plus(es[1], fr, p); };
    auto g12 = [&](Vec2 p) {
        Vec2 a = h_plus_gradient(es[0], fr, p), b = h_plus_gradient(es[1], fr, p);
        return Vec2{a.x + b.x, a.y + b.y};
    };
    double rho = 0.7;
    double l1 = es[0].lambda_plus, l2 = es[1].lambda_plus;
    double e1 = l1 * std::pow(rho, 2.0 * l1), e2 = l2 * std::pow(rho, 2.0 * l2);
    double expected = e2 / (e1 + e2);
    CHECK(parseval_residual(u12, g12, fr, 1, rho) == doctest::Approx(expected).epsilon(1e-8));
    CHECK(parseval_residual(u12, g12, fr, 2, rho) <= 1e-8);

    // zero field: no energy, no gap
    auto z = [](Vec2) { return 0.0; };
    auto gz = [](Vec2) { return Vec2{0, 0}; };
    CHECK(parseval_residual(z, gz, fr, 2, 0.5) == 0.0);
}

TEST_CASE("radius grids are validated") {
    double om = 1.5 * kPi;
    SectorFrame fr = origin_frame(om);
    auto u = [](Vec2) { return 0.0; };
    CHECK_THROWS_AS(extract_coefficient(u, fr, 1, {}), RhoOutOfRange);
    CHECK_THROWS_AS(extract_coefficient(u, fr, 1, {0.3, 0.2}), RhoOutOfRange);
    CHECK_THROWS_AS(extract_coefficient(u, fr, 1, {-0.1, 0.2}), RhoOutOfRange);
    // radii must stay within half the matching radius when one is given
    CHECK_THROWS_AS(extract_coefficient(u, fr, 1, {0.6}, 1.0), RhoOutOfRange);
    CHECK_NOTHROW(extract_coefficient(u, fr, 1, {0.5}, 1.0));
}

TEST_CASE("the finite element solution reproduces a planted corner coefficient") {
    double om = 1.5 * kPi;
    SectorFrame fr = origin_frame(om);
    auto mesh = lshape_mesh();
    FemField u = solve_dirichlet(mesh, RhsSpec::corner_mode_driver(fr, 1, 1.0), 2);

    CoefficientEstimate c1 = extract_coefficient(u, fr, 1, default_rho_grid(1.0), 1.0);
    CHECK(c1.value == doctest::Approx(1.0).epsilon(0.01));
    CHECK(c1.spread <= 0.01);

    // the discrete energy matches the first few recovered modes on a circle
    CHECK(parseval_residual(u, fr, 3, 0.45, 1.0) <= 0.01);
}

TEST_CASE("corner profiles vanish on the pattern boundary and stay positive") {
    DomainFamily fam = reentrant_family();
    CHECK_THROWS_AS(canonical_profile(fam, 1, 3.9, 0.4), TruncationTooSmall);
    CHECK_THROWS_AS(canonical_profile(fam, 1, 8.0, 0.4, 0.5, 2.0), RadiusOutOfRange);
    CHECK_THROWS_AS(canonical_profile(fam, 1, 8.0, 0.4, 1.0, 6.0), RadiusOutOfRange);

    CanonicalProfile prof = canonical_profile(fam, 1, 8.0, 0.4);
    CHECK(prof.truncation_error > 0.0);
    CHECK(prof.truncation_error < 1.0);

    double kmax = 0.0, kmin = 0.0;
    for (double v : prof.field.values) {
        kmax = std::max(kmax, std::abs(v));
        kmin = std::min(kmin, v);
    }
    CHECK(kmax > 0.0);
    CHECK(kmin >= -1e-8 * kmax);

    // zero trace on the real boundary; the artificial arc carries the far field
    auto pts = dof_points(prof.field);
    double worst = 0.0;
    int checked = 0;
    for (int i = 0; i < prof.field.n_dofs(); ++i) {
        if (!prof.field.dirichlet[i]) continue;
        if (dist(pts[i], prof.frame.vertex) >= 0.98 * prof.R_art) continue;
        worst = std::max(worst, std::abs(prof.field.values[i]));
        ++checked;
    }
    CHECK(checked > 100);
    CHECK(worst <= 1e-10 * kmax);

    // beyond the cutoff the profile tracks the pure mode to truncation accuracy
    auto deficit = [&](Vec2 p) {
        return prof.field.value(p) - h_plus(prof.exponent, prof.frame, p);
    };
    CoefficientEstimate far =
        extract_coefficient(deficit, prof.frame, 1, {2.5, 3.0, 3.5});
    CHECK(std::abs(far.value) <= prof.truncation_error);
}

TEST_CASE("corner profiles are insensitive to the cutoff placement") {
    DomainFamily fam = reentrant_family();
    CanonicalProfile a = canonical_profile(fam, 1, 8.0, 0.4);
    CanonicalProfile b = canonical_profile(fam, 1, 8.0, 0.4, 1.2, 2.5);
    REQUIRE(a.field.values.size() == b.field.values.size());
    double kmax = 0.0;
    for (double v : a.field.values) kmax = std::max(kmax, std::abs(v));
    double diff = 0.0;
    for (std::size_t i = 0; i < a.field.values.size(); ++i)
        diff = std::max(diff, std::abs(a.field.values[i] - b.field.values[i]));
    CHECK(diff <= 0.02 * kmax);
}

TEST_CASE("profile size ratios are tame across modes and radii") {
    DomainFamily fam = reentrant_family();
    std::vector<double> at2, at4;
    for (int j = 1; j <= 5; ++j) {
        CanonicalProfile prof = canonical_profile(fam, j, 8.0, 0.4);
        if (j == 1) {
            CHECK_THROWS_AS(h1_bound_ratio(prof, 1.0), RadiusOutOfRange);
            CHECK_THROWS_AS(h1_bound_ratio(prof, 5.0), RadiusOutOfRange);
        }
        at2.push_back(h1_bound_ratio(prof, 2.0));
        at4.push_back(h1_bound_ratio(prof, 4.0));
    }
    double lo = at2[0], hi = at2[0];
    for (double r : at2) {
        CHECK(r > 0.0);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK(hi / lo <= 3.0);  // measured spread is a few percent
    for (int j = 0; j < 5; ++j) {
        double f = at4[j] / at2[j];
        CHECK(f >= 0.5);
        CHECK(f <= 2.0);
    }
}

TEST_CASE("a planted corner mode is recovered by the splitting") {
    DomainFamily fam = reentrant_family();
    double eps = 0.3;
    FamilyMesher mesher(fam);
    auto mesh = share(mesher.mesh(eps));

    PolygonDomain dom = instantiate(fam, eps);
    int n = (int)dom.verts.size();
    Vec2 g0 = fam.frame.vertex + rotate(eps * fam.pattern.corners[0], fam.frame.edge0_angle);
    int i0 = -1;
    for (int i = 0; i < n; ++i)
        if (dist(dom.verts[i], g0) < 1e-9) i0 = i;
    REQUIRE(i0 >= 0);

    SectorFrame f0;
    f0.vertex = dom.verts[i0];
    f0.omega = dom.openings[i0];
    f0.edge0_angle = angle_of(dom.verts[(i0 + 1) % n] - dom.verts[i0]);
    SingularExponent e0 = exponents_sector(f0.omega, 1).back();
    double dn = dist(dom.verts[i0], dom.verts[(i0 + 1) % n]);
    double dp = dist(dom.verts[i0], dom.verts[(i0 - 1 + n) % n]);
    double rcut = 0.35 * std::min(dn, dp);

    const double planted = 1.7;
    FemField synth = interpolate(mesh, 2, [&](Vec2 p) {
        double r = dist(p, f0.vertex);
        if (r >= rcut || !f0.inside(p, 1e-9)) return 0.0;
        double t = r / rcut;
        double psi = t <= 0.5 ? 1.0 : 1.0 - quintic_step(2.0 * t - 1.0);
        return planted * psi * h_plus(e0, f0, p);
    });

    CornerSplit sp = split_at_small_corners(synth, fam, eps, {rcut, rcut});
    REQUIRE(sp.d.size() == 2);
    CHECK(sp.openings[0] == doctest::Approx(1.25 * kPi));
    CHECK(sp.openings[1] == doctest::Approx(1.25 * kPi));
    CHECK(sp.d[0] == doctest::Approx(planted).epsilon(0.01));
    CHECK(std::abs(sp.d[1]) <= 1e-10);

    // removing the planted part leaves (almost) nothing
    double rmax = 0.0;
    for (double v : sp.regular.values) rmax = std::max(rmax, std::abs(v));
    CHECK(rmax <= 1e-3);
}

TEST_CASE("the symmetric notch splits symmetrically") {
    DomainFamily fam = reentrant_family();
    double eps = 0.3;
    FamilyMesher mesher(fam);
    auto mesh = share(mesher.mesh(eps));
    FemField u = solve_dirichlet(mesh, RhsSpec::corner_mode_driver(fam.frame, 1, 1.0), 2);
    CornerSplit sp = split_at_small_corners(u, fam, eps);
    REQUIRE(sp.d.size() == 2);
    CHECK(sp.d[0] > 0.5);
    CHECK(sp.d[0] < 1.5);
    CHECK(std::abs(sp.d[0] - sp.d[1]) <= 0.01 * std::abs(sp.d[0]));
}

TEST_CASE("coefficients at convex pseudo-corners fade as the notch shrinks") {
    double om = 0.5 * kPi;
    DomainFamily fam = build_family(om, 1.0, notch_pattern(om, 0.6));
    FamilyMesher mesher(fam);
    std::vector<double> dvals, opens;
    for (double eps : {0.4, 0.2, 0.1}) {
        auto mesh = share(mesher.mesh(eps));
        FemField u = solve_dirichlet(mesh, RhsSpec::corner_mode_driver(fam.frame, 1, 1.0), 2);
        CornerSplit sp = split_at_small_corners(u, fam, eps);
        REQUIRE(sp.d.size() == 2);
        dvals.push_back(sp.d[0]);
        opens.push_back(sp.openings[0]);
    }
    // halving eps scales d by 2^-(lambda_base - lambda_local)
    double lb = exponents_sector(om, 1).back().lambda_plus;
    double ll = exponents_sector(opens[0], 1).back().lambda_plus;
    double expected = std::pow(0.5, lb - ll);
    CHECK(expected < 1.0);
    CHECK(dvals[1] / dvals[0] == doctest::Approx(expected).epsilon(0.08));
    CHECK(dvals[2] / dvals[1] == doctest::Approx(expected).epsilon(0.08));
}

TEST_CASE("splitting rejects mismatched inputs") {
    DomainFamily fam = reentrant_family();
    double eps = 0.3;
    PolygonDomain dom = instantiate(fam, eps);
    TriangulateOptions opt;
    opt.h_max = 0.2;
    auto mesh = share(triangulate_polygon(dom.verts, opt));
    FemField u = interpolate(mesh, 1, [](Vec2) { return 0.0; });

    CHECK_THROWS_AS(split_at_small_corners(u, fam, 0.0), CornerMismatch);
    // field lives on the eps = 0.3 instance, so other eps find no corners
    CHECK_THROWS_AS(split_at_small_corners(u, fam, 0.2), CornerMismatch);
    // one radius for two corners
    CHECK_THROWS_AS(split_at_small_corners(u, fam, eps, {0.05}), CornerMismatch);
    // disks around the two corners collide
    CHECK_THROWS_AS(split_at_small_corners(u, fam, eps, {0.2, 0.2}), OverlappingCutoffs);

    DomainFamily rounded = build_family(1.5 * kPi, 1.0, rounded_pattern(0.3));
    CHECK_THROWS_AS(split_at_small_corners(u, rounded, eps), CornerMismatch);
}
