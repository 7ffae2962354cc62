#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <algorithm>
#include <cmath>
#include <doctest.h>
#include <sstream>

#include "cornerlab/mesh.hpp"

using namespace cornerlab;

namespace {

double total_area(const Mesh& m) {
    double s = 0.0;
    for (std::size_t t = 0; t < m.n_tris(); ++t) s += m.tri_area((int)t);
    return s;
}

double boundary_distance(const std::vector<Vec2>& loop, Vec2 p) {
    double d = 1e300;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        Vec2 a = loop[i], b = loop[(i + 1) % loop.size()];
        Vec2 ab = b - a;
        double t = std::clamp(dot(p - a, ab) / norm2(ab), 0.0, 1.0);
        d = std::min(d, dist(p, a + t * ab));
    }
    return d;
}

DomainFamily lshape_family() {
    double omega = 1.5 * M_PI;
    return build_family(omega, 1.0, notch_pattern(omega, 0.6));
}

}  // namespace

TEST_CASE("unit square: conforming, exact area, quality floor") {
    std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    TriangulateOptions opt;
    opt.h_max = 0.15;
    Mesh m = triangulate_polygon(sq, opt);
    validate_mesh(m);
    CHECK(total_area(m) == doctest::Approx(1.0).epsilon(1e-12));
    for (std::size_t v = 0; v < m.n_verts(); ++v)
        if (m.boundary_vert[v]) CHECK(boundary_distance(sq, m.verts[v]) < 1e-9);
    for (std::size_t t = 0; t < m.n_tris(); ++t) CHECK(m.longest_edge((int)t) <= 0.15 * 1.50001);
}

TEST_CASE("point location") {
    std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    TriangulateOptions opt;
    opt.h_max = 0.2;
    Mesh m = triangulate_polygon(sq, opt);
    for (Vec2 p : {Vec2{0.5, 0.5}, Vec2{0.01, 0.97}, Vec2{1.0, 1.0}, Vec2{0.3, 0.0}}) {
        int t = m.locate(p);
        REQUIRE(t >= 0);
        auto l = m.barycentric(t, p);
        CHECK(std::min({l[0], l[1], l[2]}) >= -1e-9);
        // barycentric combination reproduces the point
        Vec2 q = l[0] * m.tri_vertex(t, 0) + l[1] * m.tri_vertex(t, 1) + l[2] * m.tri_vertex(t, 2);
        CHECK(dist(p, q) < 1e-12);
    }
    CHECK(m.locate({1.5, 0.5}) == -1);
    CHECK(m.locate({-0.2, 0.5}) == -1);
}

TEST_CASE("graded refinement shrinks elements toward the corner") {
    DomainFamily fam = lshape_family();
    PolygonDomain base = instantiate(fam, 0.0);
    GradingSpec g{{0.0, 0.0}, 0.5, 5, 0.5};
    Mesh m = triangulate(base, 0.1, {g});
    validate_mesh(m);
    CHECK(total_area(m) == doctest::Approx(3.0).epsilon(1e-12));
    double near = 1e300, far = 0.0;
    for (std::size_t t = 0; t < m.n_tris(); ++t) {
        double r = norm(m.centroid((int)t));
        double h = m.longest_edge((int)t);
        if (r < 0.02) near = std::min(near, h);
        if (r > 0.7) far = std::max(far, h);
    }
    CHECK(near <= 0.1 * std::pow(0.5, 5) * 1.5);
    CHECK(far > 0.04);  // grading stays local
}

TEST_CASE("custom size field is honored") {
    std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    TriangulateOptions opt;
    opt.h_max = 0.2;
    opt.size_fn = [](Vec2 p) { return p.x > 0.5 ? 0.04 : 1.0; };
    Mesh m = triangulate_polygon(sq, opt);
    validate_mesh(m);
    for (std::size_t t = 0; t < m.n_tris(); ++t) {
        Vec2 c = m.centroid((int)t);
        if (c.x > 0.55) CHECK(m.longest_edge((int)t) <= 0.04 * 1.5);
    }
}

TEST_CASE("exact similarity scaling") {
    std::vector<Vec2> sq{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
    TriangulateOptions opt;
    opt.h_max = 0.2;
    Mesh m = triangulate_polygon(sq, opt);
    Mesh s = scale(m, 0.5);
    REQUIRE(s.n_verts() == m.n_verts());
    for (std::size_t v = 0; v < m.n_verts(); ++v) {
        CHECK(s.verts[v].x == 0.5 * m.verts[v].x);  // power-of-two scaling is exact
        CHECK(s.verts[v].y == 0.5 * m.verts[v].y);
    }
    CHECK(total_area(s) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK_THROWS_AS(scale(m, -1.0), MeshFailure);
}

TEST_CASE("submesh keeps parent maps and closes its boundary") {
    std::vector<Vec2> sq{{-1, -1}, {1, -1}, {1, 1}, {-1, 1}};
    TriangulateOptions opt;
    opt.h_max = 0.12;
    Mesh m = triangulate_polygon(sq, opt);
    Mesh sub = submesh(m, Region::disk({0.0, 0.0}, 0.6));
    REQUIRE(sub.n_tris() > 0);
    validate_mesh(sub);
    for (std::size_t t = 0; t < sub.n_tris(); ++t) {
        CHECK(norm(sub.centroid((int)t)) <= 0.6);
        int pt = sub.parent_tri[t];
        CHECK(m.tri_area(pt) == doctest::Approx(sub.tri_area((int)t)));
    }
    for (std::size_t v = 0; v < sub.n_verts(); ++v) {
        Vec2 p = m.verts[sub.parent_vert[v]];
        CHECK(p.x == sub.verts[v].x);
        CHECK(p.y == sub.verts[v].y);
    }
    CHECK_THROWS_AS(submesh(m, Region::disk({5.0, 5.0}, 0.1)), EmptyRegion);
}

TEST_CASE("plain-text round trip is lossless") {
    DomainFamily fam = lshape_family();
    Mesh m = triangulate(instantiate(fam, 0.25), 0.15);
    std::stringstream ss;
    save_mesh(m, ss);
    std::string text = ss.str();
    CHECK(text.substr(0, 7) == "#nodes ");
    CHECK(text.find("#tris ") != std::string::npos);
    Mesh r = load_mesh(ss);
    REQUIRE(r.n_verts() == m.n_verts());
    REQUIRE(r.n_tris() == m.n_tris());
    for (std::size_t v = 0; v < m.n_verts(); ++v) {
        CHECK(r.verts[v].x == m.verts[v].x);
        CHECK(r.verts[v].y == m.verts[v].y);
        CHECK(r.boundary_vert[v] == m.boundary_vert[v]);
    }
    CHECK(r.tris == m.tris);
    CHECK(r.region_tag == m.region_tag);
}

TEST_CASE("degenerate input is rejected") {
    std::vector<Vec2> cw{{0, 0}, {0, 1}, {1, 1}, {1, 0}};
    TriangulateOptions opt;
    CHECK_THROWS_AS(triangulate_polygon(cw, opt), MeshFailure);
    std::vector<Vec2> dup{{0, 0}, {0, 0}, {1, 1}};
    CHECK_THROWS_AS(triangulate_polygon(dup, opt), MeshFailure);
}

TEST_CASE("family mesher: base and composite tile the domain exactly") {
    DomainFamily fam = lshape_family();
    FamilyMeshOptions fo;
    fo.h_max = 0.1;
    FamilyMesher mesher(fam, fo);

    Mesh base = mesher.mesh(0.0);
    validate_mesh(base);
    CHECK(total_area(base) == doctest::Approx(3.0).epsilon(1e-12));

    double eps = 0.125;
    Mesh comp = mesher.mesh(eps);
    validate_mesh(comp);
    PolygonDomain dom = instantiate(fam, eps);
    // internal zone interfaces share chords, so areas must telescope exactly
    CHECK(total_area(comp) == doctest::Approx(dom.area()).epsilon(1e-10));
    for (std::size_t v = 0; v < comp.n_verts(); ++v)
        if (comp.boundary_vert[v]) CHECK(boundary_distance(dom.verts, comp.verts[v]) < 1e-9);
    // all three zones present
    std::array<int, 3> zone_count{0, 0, 0};
    for (int tag : comp.region_tag) {
        REQUIRE(tag >= 0);
        REQUIRE(tag <= 2);
        ++zone_count[tag];
    }
    CHECK(zone_count[0] > 0);
    CHECK(zone_count[1] > 0);
    CHECK(zone_count[2] > 0);
}

TEST_CASE("family mesher: corner layer is scale-similar across eps") {
    DomainFamily fam = lshape_family();
    FamilyMesher mesher(fam);
    Mesh m1 = mesher.mesh(0.125);
    Mesh m2 = mesher.mesh(0.0625);
    Mesh s1 = submesh(m1, corner_layer(fam, 0.125));
    Mesh s2 = submesh(m2, corner_layer(fam, 0.0625));
    REQUIRE(s1.n_tris() > 100);
    // identical template portion: same element count, areas scale by eps^2
    CHECK(s1.n_tris() == s2.n_tris());
    CHECK(total_area(s1) == doctest::Approx(4.0 * total_area(s2)).epsilon(1e-9));
    for (std::size_t t = 0; t < s1.n_tris(); ++t) CHECK(s1.region_tag[t] == 2);
    // template element count is eps-independent by construction
    CHECK(mesher.corner_template().n_tris() ==
          std::count(m1.region_tag.begin(), m1.region_tag.end(), 2));
}

TEST_CASE("family mesher guards") {
    DomainFamily fam = lshape_family();
    FamilyMesher mesher(fam);
    CHECK_THROWS_AS(mesher.mesh(-0.5), EpsilonOutOfRange);
    CHECK_THROWS_AS(mesher.mesh(1.2), EpsilonOutOfRange);
    FamilyMeshOptions bad;
    bad.n_arc = 4;
    CHECK_THROWS_AS(FamilyMesher(fam, bad), MeshFailure);
}
