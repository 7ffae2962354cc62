#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cornerlab/errors.hpp"
#include "cornerlab/vec2.hpp"

namespace cornerlab {

// Plane sector with vertex, opening omega, and the angular position of its
// first edge.  Local angle theta is measured counterclockwise from edge0,
// interior = { 0 < theta < omega }.
struct SectorFrame {
    Vec2 vertex{0.0, 0.0};
    double omega = 1.5 * M_PI;
    double edge0_angle = 0.0;

    double bisector_angle() const { return edge0_angle + 0.5 * omega; }

    // local polar coordinates; theta wrapped into [0, 2*pi)
    double radius(Vec2 p) const { return dist(p, vertex); }
    double theta(Vec2 p) const {
        double a = angle_of(p - vertex) - edge0_angle;
        a = std::fmod(a, 2.0 * M_PI);
        if (a < 0.0) a += 2.0 * M_PI;
        return a;
    }
    bool inside(Vec2 p, double tol = 1e-12) const {
        double t = theta(p);
        return t <= omega + tol || t >= 2.0 * M_PI - tol;
    }
    // point at local polar coordinates
    Vec2 at(double r, double th) const {
        double a = edge0_angle + th;
        return vertex + Vec2{r * std::cos(a), r * std::sin(a)};
    }
};

// Replacement geometry for the corner: a polyline that substitutes the sector
// vertex inside the ball of radius R0.  Coordinates are sector-frame local
// (vertex at origin, edge0 along +x).  The polyline runs from the edge0 ray
// to the edge-omega ray; its interior vertices are the small corners O_l.
struct PatternSpec {
    enum class Variant { Polygonal, Rounded };

    Variant variant = Variant::Polygonal;
    double R0 = 1.0;
    // Polygonal: corner points O_1..O_L, O_1 on the edge0 ray, O_L on the
    // edge-omega ray, all inside B(R0).
    std::vector<Vec2> corners;
    // Rounded: fillet arc radius (arc tangent to both edge rays)
    double fillet_radius = 0.0;

    // derived on validation
    std::vector<double> openings;   // interior angle at each O_l (Polygonal)
    std::vector<Vec2> polyline;     // boundary replacement, edge0 end first
    double max_opening = 0.0;
};

// Disk / annulus / polygon subsets used to restrict integrals and submeshes.
struct Region {
    enum class Kind { WholeDomain, Disk, Annulus, Polygon };

    Kind kind = Kind::WholeDomain;
    Vec2 center{0.0, 0.0};
    double r_in = 0.0;
    double r_out = 0.0;
    std::vector<Vec2> poly;  // CCW loop for Kind::Polygon

    static Region whole() { return {}; }
    static Region disk(Vec2 c, double r);
    static Region annulus(Vec2 c, double rin, double rout);
    static Region polygon(std::vector<Vec2> loop);

    bool contains(Vec2 p, double tol = 0.0) const;
    double area() const;  // Polygon: shoelace; Disk/Annulus: exact
};

// point-in-polygon (CCW loop), boundary counts as inside within tol
bool polygon_contains(const std::vector<Vec2>& loop, Vec2 p, double tol = 0.0);
double polygon_area(const std::vector<Vec2>& loop);

// Simple closed polygon domain with corner metadata.
struct PolygonDomain {
    std::vector<Vec2> verts;        // CCW
    std::vector<double> openings;   // interior angle at each vertex
    std::vector<bool> reentrant;    // opening > pi
    std::vector<int> grade_corners; // vertices that carry a singularity and want grading
    SectorFrame frame;              // principal corner frame
    double eps = 0.0;               // family parameter this domain was built at

    bool contains(Vec2 p, double tol = 0.0) const { return polygon_contains(verts, p, tol); }
    double area() const { return polygon_area(verts); }
    double diameter() const;
};

// fill openings/reentrant from the vertex loop
void compute_corner_data(PolygonDomain& d);

// A one-parameter family of domains sharing a base polygon: inside B(eps*R0)
// the principal corner is replaced by the eps-scaled pattern, outside the
// domain equals the base.
struct DomainFamily {
    SectorFrame frame;          // principal corner at frame.vertex (origin)
    double r0 = 1.0;            // base domain coincides with the sector in B(r0)
    PatternSpec pattern;
    double eps0 = 1.0;          // = r0 / R0
    std::vector<Vec2> base_verts;  // CCW, principal corner at index base_corner
    int base_corner = 0;

    double lambda1() const { return M_PI / frame.omega; }        // leading base exponent
    double pattern_lambda1() const;                              // min over pattern corners
};

enum class BaseShape { LShape, Pie, Square };

// Validates the pattern (ray attachment, containment in B(R0), angle sum) and
// assembles the family.  Base polygon: L-shape with unit corner edges for
// omega = 3*pi/2, quarter square for omega = pi/2, a truncated sector
// ("pie", radius 2*r0) otherwise.
DomainFamily build_family(double omega, double r0, PatternSpec pattern,
                          std::optional<BaseShape> base = std::nullopt);

// Symmetric two-corner pattern: corners at distance a on both edge rays,
// joined by a chord.  Opening at both corners is (pi + omega)/2.
PatternSpec notch_pattern(double omega, double a, double R0 = 1.0);
// Fillet arc of radius rf tangent to both edge rays (needs omega != pi).
PatternSpec rounded_pattern(double rf, double R0 = 1.0);

// Domain at parameter eps in [0, eps0]; eps = 0 returns the base domain.
PolygonDomain instantiate(const DomainFamily& family, double eps);

// Corner layer region epsQ = eps * (P intersect B(1.5*R0)) as a polygon.
Region corner_layer(const DomainFamily& family, double eps);

// Polygon of P intersected with B(R) around the principal corner (pattern
// polyline + edge rays + discretized arc).  Used for profile solves and
// corner-layer templates; requires R >= R0.
std::vector<Vec2> pattern_disk_polygon(const DomainFamily& family, double R,
                                       int arc_segments = 0);

// pie polygon of the plain sector: vertex + rays + arc at radius R
std::vector<Vec2> sector_disk_polygon(const SectorFrame& frame, double R,
                                      int arc_segments = 0);

}  // namespace cornerlab
