#include "cornerlab/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace cornerlab {

static double wrap_2pi(double a) {
    a = std::fmod(a, 2.0 * M_PI);
    if (a < 0.0) a += 2.0 * M_PI;
    return a;
}

double polygon_area(const std::vector<Vec2>& loop) {
    double s = 0.0;
    for (std::size_t i = 0; i < loop.size(); ++i) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[(i + 1) % loop.size()];
        s += cross(a, b);
    }
    return 0.5 * s;
}

static double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 ab = b - a;
    double t = dot(p - a, ab) / std::max(norm2(ab), 1e-300);
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, a + t * ab);
}

bool polygon_contains(const std::vector<Vec2>& loop, Vec2 p, double tol) {
    if (tol > 0.0) {
        for (std::size_t i = 0; i < loop.size(); ++i) {
            if (dist_point_segment(p, loop[i], loop[(i + 1) % loop.size()]) <= tol) return true;
        }
    }
    // crossing number
    bool in = false;
    for (std::size_t i = 0, j = loop.size() - 1; i < loop.size(); j = i++) {
        const Vec2& a = loop[i];
        const Vec2& b = loop[j];
        if ((a.y > p.y) != (b.y > p.y)) {
            double xint = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if (p.x < xint) in = !in;
        }
    }
    return in;
}

Region Region::disk(Vec2 c, double r) {
    Region g;
    g.kind = Kind::Disk;
    g.center = c;
    g.r_out = r;
    return g;
}

Region Region::annulus(Vec2 c, double rin, double rout) {
    if (!(0.0 <= rin && rin < rout)) throw EmptyRegion("annulus radii out of order");
    Region g;
    g.kind = Kind::Annulus;
    g.center = c;
    g.r_in = rin;
    g.r_out = rout;
    return g;
}

Region Region::polygon(std::vector<Vec2> loop) {
    if (loop.size() < 3) throw EmptyRegion("polygon region needs >= 3 vertices");
    Region g;
    g.kind = Kind::Polygon;
    g.poly = std::move(loop);
    return g;
}

bool Region::contains(Vec2 p, double tol) const {
    switch (kind) {
        case Kind::WholeDomain: return true;
        case Kind::Disk: return dist(p, center) <= r_out + tol;
        case Kind::Annulus: {
            double r = dist(p, center);
            return r >= r_in - tol && r <= r_out + tol;
        }
        case Kind::Polygon: return polygon_contains(poly, p, tol);
    }
    return false;
}

double Region::area() const {
    switch (kind) {
        case Kind::WholeDomain: return std::numeric_limits<double>::infinity();
        case Kind::Disk: return M_PI * r_out * r_out;
        case Kind::Annulus: return M_PI * (r_out * r_out - r_in * r_in);
        case Kind::Polygon: return polygon_area(poly);
    }
    return 0.0;
}

double PolygonDomain::diameter() const {
    double d = 0.0;
    for (std::size_t i = 0; i < verts.size(); ++i)
        for (std::size_t j = i + 1; j < verts.size(); ++j) d = std::max(d, dist(verts[i], verts[j]));
    return d;
}

void compute_corner_data(PolygonDomain& d) {
    const std::size_t n = d.verts.size();
    d.openings.assign(n, 0.0);
    d.reentrant.assign(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        Vec2 v = d.verts[i];
        Vec2 to_next = d.verts[(i + 1) % n] - v;
        Vec2 to_prev = d.verts[(i + n - 1) % n] - v;
        double op = wrap_2pi(angle_of(to_prev) - angle_of(to_next));
        d.openings[i] = op;
        d.reentrant[i] = op > M_PI + 1e-12;
    }
}

// interior angle at polyline vertex i, with the two edge rays supplying the
// neighbors at the ends; coordinates are sector-frame local
static std::vector<double> pattern_openings(const std::vector<Vec2>& pts, double omega) {
    const std::size_t L = pts.size();
    std::vector<double> op(L, 0.0);
    for (std::size_t i = 0; i < L; ++i) {
        // boundary traversal with interior on the left runs edge-omega ray ->
        // O_L -> ... -> O_1 -> edge0 ray, so "next" along the traversal is
        // index i-1 (or the outgoing edge0 ray) and "prev" is i+1 (or the
        // incoming edge-omega ray).
        Vec2 dir_next = (i == 0) ? Vec2{1.0, 0.0} : unit(pts[i - 1] - pts[i]);
        Vec2 dir_prev = (i + 1 == L) ? Vec2{std::cos(omega), std::sin(omega)} : unit(pts[i + 1] - pts[i]);
        op[i] = wrap_2pi(angle_of(dir_prev) - angle_of(dir_next));
    }
    return op;
}

static void validate_pattern(PatternSpec& pat, double omega) {
    if (pat.R0 <= 0.0) throw GeometryMismatch("pattern match radius R0 must be positive");
    if (pat.variant == PatternSpec::Variant::Polygonal) {
        const std::size_t L = pat.corners.size();
        if (L < 2)
            throw GeometryMismatch("polygonal pattern needs at least 2 corners "
                                   "(a single corner reproduces the sector)");
        auto on_ray = [&](Vec2 p, double ray_angle) {
            double r = norm(p);
            if (r <= 0.0) return false;
            Vec2 d{std::cos(ray_angle), std::sin(ray_angle)};
            return std::abs(cross(d, p)) <= 1e-9 * r && dot(d, p) > 0.0;
        };
        if (!on_ray(pat.corners.front(), 0.0))
            throw GeometryMismatch("first pattern corner must sit on the edge0 ray");
        if (!on_ray(pat.corners.back(), omega))
            throw GeometryMismatch("last pattern corner must sit on the edge-omega ray");
        for (Vec2 c : pat.corners)
            if (norm(c) > pat.R0 * (1.0 + 1e-12))
                throw GeometryMismatch("pattern corner outside the match ball B(R0)");
        pat.openings = pattern_openings(pat.corners, omega);
        double sum = 0.0;
        for (double w : pat.openings) {
            if (std::abs(w - M_PI) < 1e-9)
                throw GeometryMismatch("degenerate (straight) pattern corner");
            if (w <= 0.0 || w >= 2.0 * M_PI - 1e-9)
                throw GeometryMismatch("pattern corner opening outside (0, 2*pi)");
            sum += w - M_PI;
        }
        // closes the boundary turning balance; catches winding polylines
        if (std::abs(sum - (omega - M_PI)) > 1e-12 * std::max(1.0, std::abs(omega)))
            throw AngleSumViolation("sum of (opening - pi) over pattern corners must equal omega - pi");
        pat.polyline = pat.corners;
        pat.max_opening = *std::max_element(pat.openings.begin(), pat.openings.end());
    } else {
        double rf = pat.fillet_radius;
        if (rf <= 0.0) throw GeometryMismatch("fillet radius must be positive");
        if (std::abs(omega - M_PI) < 1e-9)
            throw GeometryMismatch("fillet undefined for a flat (omega = pi) corner");
        double half = 0.5 * omega;
        double rho_c = rf / std::abs(std::sin(half));
        double t = rf * std::abs(std::cos(half) / std::sin(half));
        if (t > pat.R0 * (1.0 + 1e-12))
            throw GeometryMismatch("fillet tangency points outside the match ball B(R0)");
        double center_angle = (omega < M_PI) ? half : M_PI + half;
        Vec2 C = rho_c * Vec2{std::cos(center_angle), std::sin(center_angle)};
        double phi0 = (omega < M_PI) ? -0.5 * M_PI : 0.5 * M_PI;
        double dphi = omega - M_PI;
        // chord sag <= 1e-3 * R0
        int n = std::max(8, (int)std::ceil(std::abs(dphi) / std::sqrt(8e-3 * pat.R0 / rf)));
        pat.polyline.clear();
        for (int k = 0; k <= n; ++k) {
            double phi = phi0 + dphi * k / n;
            pat.polyline.push_back(C + rf * Vec2{std::cos(phi), std::sin(phi)});
        }
        pat.openings.clear();
        pat.max_opening = M_PI;
    }
}

double DomainFamily::pattern_lambda1() const {
    if (pattern.openings.empty()) return M_PI / frame.omega;
    return M_PI / pattern.max_opening;
}

PatternSpec notch_pattern(double omega, double a, double R0) {
    PatternSpec p;
    p.variant = PatternSpec::Variant::Polygonal;
    p.R0 = R0;
    p.corners = {{a, 0.0}, a * Vec2{std::cos(omega), std::sin(omega)}};
    return p;
}

PatternSpec rounded_pattern(double rf, double R0) {
    PatternSpec p;
    p.variant = PatternSpec::Variant::Rounded;
    p.R0 = R0;
    p.fillet_radius = rf;
    return p;
}

static std::vector<Vec2> arc_points(Vec2 c, double r, double a0, double a1, int segs) {
    std::vector<Vec2> out;
    for (int k = 0; k <= segs; ++k) {
        double a = a0 + (a1 - a0) * k / segs;
        out.push_back(c + r * Vec2{std::cos(a), std::sin(a)});
    }
    return out;
}

static int default_arc_segments(double sweep) {
    // chord sag ~ r*dtheta^2/8 <= 1e-3*r
    return std::max(16, (int)std::ceil(std::abs(sweep) / std::sqrt(8e-3)));
}

DomainFamily build_family(double omega, double r0, PatternSpec pattern,
                          std::optional<BaseShape> base) {
    if (!(omega > 0.0 && omega < 2.0 * M_PI)) throw GeometryMismatch("omega must lie in (0, 2*pi)");
    if (r0 <= 0.0) throw GeometryMismatch("r0 must be positive");

    validate_pattern(pattern, omega);

    DomainFamily fam;
    fam.frame = SectorFrame{{0.0, 0.0}, omega, 0.0};
    fam.r0 = r0;
    fam.pattern = pattern;
    fam.eps0 = r0 / pattern.R0;

    BaseShape shape = base.value_or(
        std::abs(omega - 1.5 * M_PI) < 1e-9 ? BaseShape::LShape
        : std::abs(omega - 0.5 * M_PI) < 1e-9 ? BaseShape::Square
                                              : BaseShape::Pie);
    switch (shape) {
        case BaseShape::LShape: {
            if (std::abs(omega - 1.5 * M_PI) > 1e-9)
                throw GeometryMismatch("L-shape base requires omega = 3*pi/2");
            double s = r0;
            fam.base_verts = {{s, 0.0}, {s, s}, {-s, s}, {-s, -s}, {0.0, -s}, {0.0, 0.0}};
            fam.base_corner = 5;
            break;
        }
        case BaseShape::Square: {
            if (std::abs(omega - 0.5 * M_PI) > 1e-9)
                throw GeometryMismatch("square base requires omega = pi/2");
            double s = r0;
            fam.base_verts = {{0.0, 0.0}, {s, 0.0}, {s, s}, {0.0, s}};
            fam.base_corner = 0;
            break;
        }
        case BaseShape::Pie: {
            double R = 2.0 * r0;
            fam.base_verts = {{0.0, 0.0}};
            auto arc = arc_points({0.0, 0.0}, R, 0.0, omega, default_arc_segments(omega));
            fam.base_verts.insert(fam.base_verts.end(), arc.begin(), arc.end());
            fam.base_corner = 0;
            break;
        }
    }
    return fam;
}

PolygonDomain instantiate(const DomainFamily& family, double eps) {
    if (eps < 0.0 || eps > family.eps0 * (1.0 + 1e-12))
        throw EpsilonOutOfRange("eps must lie in [0, eps0]");

    PolygonDomain d;
    d.frame = family.frame;
    d.eps = eps;

    auto to_global = [&](Vec2 local) {
        return family.frame.vertex + rotate(local, family.frame.edge0_angle);
    };

    if (eps == 0.0) {
        d.verts = family.base_verts;
        compute_corner_data(d);
        d.grade_corners = {family.base_corner};
        return d;
    }

    const auto& base = family.base_verts;
    for (int i = 0; i < (int)base.size(); ++i) {
        if (i == family.base_corner) {
            // splice the scaled pattern polyline; CCW traversal enters along the
            // edge-omega ray, so the polyline goes in reversed storage order
            int first = (int)d.verts.size();
            for (auto it = family.pattern.polyline.rbegin(); it != family.pattern.polyline.rend(); ++it)
                d.verts.push_back(to_global(eps * (*it)));
            if (family.pattern.variant == PatternSpec::Variant::Polygonal)
                for (int k = first; k < (int)d.verts.size(); ++k) d.grade_corners.push_back(k);
        } else {
            d.verts.push_back(base[i]);
        }
    }
    compute_corner_data(d);
    return d;
}

static std::vector<Vec2> clip_polyline_to_disk(const std::vector<Vec2>& polyline, double omega,
                                               double R, int arc_segments) {
    // polyline endpoints sit on the edge rays inside B(R); walk pattern
    // boundary (reversed), then edge0 out, arc, edge-omega back in
    std::vector<Vec2> loop(polyline.rbegin(), polyline.rend());
    auto arc = arc_points({0.0, 0.0}, R, 0.0, omega,
                          arc_segments > 0 ? arc_segments : default_arc_segments(omega));
    loop.insert(loop.end(), arc.begin(), arc.end());
    return loop;
}

Region corner_layer(const DomainFamily& family, double eps) {
    if (!(eps > 0.0) || eps > family.eps0 / 1.5 + 1e-15)
        throw EpsilonOutOfRange("corner layer needs 0 < eps <= eps0/1.5");
    auto loop = clip_polyline_to_disk(family.pattern.polyline, family.frame.omega,
                                      1.5 * family.pattern.R0, 0);
    for (Vec2& p : loop) p = family.frame.vertex + rotate(eps * p, family.frame.edge0_angle);
    return Region::polygon(std::move(loop));
}

std::vector<Vec2> pattern_disk_polygon(const DomainFamily& family, double R, int arc_segments) {
    if (R < family.pattern.R0 * (1.0 - 1e-12))
        throw RadiusOutOfRange("truncation radius below the pattern match radius");
    auto loop = clip_polyline_to_disk(family.pattern.polyline, family.frame.omega, R, arc_segments);
    for (Vec2& p : loop) p = family.frame.vertex + rotate(p, family.frame.edge0_angle);
    return loop;
}

std::vector<Vec2> sector_disk_polygon(const SectorFrame& frame, double R, int arc_segments) {
    std::vector<Vec2> loop{{0.0, 0.0}};
    auto arc = arc_points({0.0, 0.0}, R, 0.0, frame.omega,
                          arc_segments > 0 ? arc_segments : default_arc_segments(frame.omega));
    loop.insert(loop.end(), arc.begin(), arc.end());
    for (Vec2& p : loop) p = frame.vertex + rotate(p, frame.edge0_angle);
    return loop;
}

}  // namespace cornerlab
