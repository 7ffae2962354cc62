#include "cornerlab/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cornerlab/errors.hpp"
#include "cornerlab/quadrature.hpp"

namespace cornerlab {

namespace {

inline double step5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double step5_d(double t) {
    double u = t * (1.0 - t);
    return 30.0 * u * u;
}
inline double step5_dd(double t) { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }

void validate_grid(const std::vector<double>& grid, double r0) {
    if (grid.empty()) throw RhoOutOfRange("empty radius grid");
    double prev = 0.0;
    for (double r : grid) {
        if (!(r > prev)) throw RhoOutOfRange("radius grid must be positive and increasing");
        prev = r;
    }
    if (r0 > 0.0 && grid.back() > 0.5 * r0 * (1.0 + 1e-12))
        throw RhoOutOfRange("radius exceeds half the sector match radius");
}

CoefficientEstimate extract_impl(const std::function<double(Vec2)>& eval,
                                 const SectorFrame& frame, int j,
                                 const std::vector<double>& grid, double r0) {
    if (j < 1) throw RhoOutOfRange("mode index must be >= 1");
    validate_grid(grid, r0);

    CoefficientEstimate out;
    out.j = j;
    out.rho_grid = grid;
    double lambda = j * M_PI / frame.omega;
    for (double rho : grid) {
        double I = integrate_1d_composite(
            [&](double th) {
                return eval(frame.at(rho, th)) * angular_mode(frame.omega, j, th);
            },
            0.0, frame.omega, 8, 8);
        out.per_rho.push_back(std::pow(rho, -lambda) * I);
    }
    double mean = 0.0;
    for (double v : out.per_rho) mean += v;
    mean /= (double)out.per_rho.size();
    out.value = mean;
    auto [mn, mx] = std::minmax_element(out.per_rho.begin(), out.per_rho.end());
    double width = *mx - *mn;
    if (mean != 0.0)
        out.spread = width / std::abs(mean);
    else
        out.spread = (width == 0.0) ? 0.0 : std::numeric_limits<double>::infinity();
    return out;
}

}  // namespace

std::vector<double> default_rho_grid(double r0, int count) {
    if (!(r0 > 0.0) || count < 1) throw RhoOutOfRange("need r0 > 0 and at least one radius");
    std::vector<double> g;
    double lo = 0.1 * r0, hi = 0.5 * r0;
    for (int k = 0; k < count; ++k) {
        double t = count == 1 ? 0.0 : (double)k / (count - 1);
        g.push_back(lo * std::pow(hi / lo, t));
    }
    return g;
}

CoefficientEstimate extract_coefficient(const FemField& u, const SectorFrame& frame, int j,
                                        const std::vector<double>& rho_grid, double r0) {
    return extract_impl(
        [&](Vec2 p) {
            try {
                return u.value(p);
            } catch (const PointOutside&) {
                throw NotInSector("circle sample point left the mesh");
            }
        },
        frame, j, rho_grid, r0);
}

CoefficientEstimate extract_coefficient(const std::function<double(Vec2)>& u,
                                        const SectorFrame& frame, int j,
                                        const std::vector<double>& rho_grid, double r0) {
    return extract_impl(u, frame, j, rho_grid, r0);
}

namespace {

double mode_sum(const std::function<CoefficientEstimate(int)>& coeff, double omega, int J,
                double rho) {
    double s = 0.0;
    for (int j = 1; j <= J; ++j) {
        double lam = j * M_PI / omega;
        double c = coeff(j).value;
        s += lam * std::pow(rho, 2.0 * lam) * c * c;
    }
    return s;
}

double residual_from(double sum, double energy_val) {
    if (energy_val == 0.0) {
        if (sum == 0.0) return 0.0;
        return std::numeric_limits<double>::infinity();
    }
    return std::abs(sum - energy_val) / energy_val;
}

}  // namespace

double parseval_residual(const FemField& u, const SectorFrame& frame, int J, double rho,
                         double r0) {
    if (J < 1) throw RhoOutOfRange("need at least one mode");
    std::vector<double> grid{rho};
    double sum = mode_sum(
        [&](int j) { return extract_coefficient(u, frame, j, grid, r0); }, frame.omega, J,
        rho);
    double E = energy(u, Region::disk(frame.vertex, rho));
    return residual_from(sum, E);
}

double parseval_residual(const std::function<double(Vec2)>& u,
                         const std::function<Vec2(Vec2)>& grad_u, const SectorFrame& frame,
                         int J, double rho, double r0) {
    if (J < 1) throw RhoOutOfRange("need at least one mode");
    std::vector<double> grid{rho};
    double sum = mode_sum(
        [&](int j) { return extract_coefficient(u, frame, j, grid, r0); }, frame.omega, J,
        rho);
    double E = integrate_1d_composite(
        [&](double th) {
            return integrate_radial_graded(
                [&](double r) {
                    Vec2 g = grad_u(frame.at(r, th));
                    return (g.x * g.x + g.y * g.y) * r;
                },
                rho, 96, 8);
        },
        0.0, frame.omega, 8, 8);
    return residual_from(sum, E);
}

CanonicalProfile canonical_profile(const DomainFamily& family, int j, double R_art,
                                   double h, double cutoff_lo, double cutoff_hi) {
    double R0 = family.pattern.R0;
    double omega = family.frame.omega;
    if (R_art < 4.0 * R0 * (1.0 - 1e-12))
        throw TruncationTooSmall("need R_art >= 4 * R0");
    double lo = cutoff_lo > 0.0 ? cutoff_lo : R0;
    double hi = cutoff_hi > 0.0 ? cutoff_hi : 2.0 * R0;
    if (lo < R0 * (1.0 - 1e-12) || hi <= lo || hi > 0.5 * R_art * (1.0 + 1e-12))
        throw RadiusOutOfRange("cutoff transition must sit inside [R0, R_art/2]");

    SingularExponent e = exponents_sector(omega, j).back();

    int n_arc = std::max(48, (int)std::ceil(omega * R_art / h));
    std::vector<Vec2> loop = pattern_disk_polygon(family, R_art, n_arc);

    TriangulateOptions opt;
    opt.h_max = h;
    const auto& corners = family.pattern.corners;
    double lam_min = family.pattern_lambda1();
    int n_layers =
        std::max(6, (int)std::ceil(std::log(h / R_art) / (lam_min * std::log(0.5))));
    double spacing = R0;
    for (std::size_t a = 0; a + 1 < corners.size(); ++a)
        spacing = std::min(spacing, dist(corners[a], corners[a + 1]));
    for (Vec2 c : corners) {
        Vec2 g = family.frame.vertex + rotate(c, family.frame.edge0_angle);
        opt.grading.push_back({g, 0.5, n_layers, 0.45 * spacing});
    }
    auto mesh = share(triangulate_polygon(loop, opt));

    SectorFrame frame = family.frame;
    auto cutoff = [lo, hi](double r) {
        if (r <= lo) return 0.0;
        if (r >= hi) return 1.0;
        return step5((r - lo) / (hi - lo));
    };
    RhsSpec rhs = RhsSpec::analytic([=](Vec2 p) {
        double r = dist(p, frame.vertex);
        if (r <= lo || r >= hi) return 0.0;
        double dlt = hi - lo;
        double t = (r - lo) / dlt;
        double phi_d = step5_d(t) / dlt;
        double phi_dd = step5_dd(t) / (dlt * dlt);
        double hv = h_plus(e, frame, p);
        Vec2 gh = h_plus_gradient(e, frame, p);
        Vec2 rr = (1.0 / r) * (p - frame.vertex);
        double dr = gh.x * rr.x + gh.y * rr.y;
        return -(hv * (phi_dd + phi_d / r) + 2.0 * phi_d * dr);
    });
    FemField w = solve_dirichlet(mesh, rhs, 2);
    FemField part = interpolate(mesh, 2, [&](Vec2 p) {
        double r = dist(p, frame.vertex);
        double c = cutoff(r);
        return c == 0.0 ? 0.0 : c * h_plus(e, frame, p);
    });
    for (std::size_t i = 0; i < w.values.size(); ++i) w.values[i] += part.values[i];

    CanonicalProfile prof;
    prof.frame = frame;
    prof.exponent = e;
    prof.R0 = R0;
    prof.R_art = R_art;
    prof.field = std::move(w);
    prof.truncation_error = std::pow(R_art / R0, -M_PI / omega);
    prof.phi_lo = lo;
    prof.phi_hi = hi;
    return prof;
}

double h1_bound_ratio(const CanonicalProfile& profile, double R) {
    if (R < 2.0 * profile.R0 * (1.0 - 1e-12) ||
        R > 0.5 * profile.R_art * (1.0 + 1e-12))
        throw RadiusOutOfRange("ratio radius must sit in [2*R0, R_art/2]");
    Region region = Region::disk(profile.frame.vertex, R);
    double grad2 = energy(profile.field, region);
    double l2sq = integrate_region(
        *profile.field.mesh, region,
        [&](int t, Vec2 p) {
            double v = profile.field.value_in_tri(t, p);
            return v * v;
        },
        4);
    double lam = profile.exponent.lambda_plus;
    return (R * std::sqrt(grad2) + std::sqrt(l2sq)) /
           (std::sqrt(lam + 1.0) * std::pow(R, lam + 1.0));
}

CornerSplit split_at_small_corners(const FemField& u, const DomainFamily& family,
                                   double eps, std::vector<double> cutoff_radii) {
    const auto& pat = family.pattern;
    if (pat.variant != PatternSpec::Variant::Polygonal || pat.corners.empty())
        throw CornerMismatch("pattern carries no polygonal corners");
    if (!(eps > 0.0)) throw CornerMismatch("corner splitting needs eps > 0");

    PolygonDomain dom = instantiate(family, eps);
    const int L = (int)pat.corners.size();
    const int n = (int)dom.verts.size();

    CornerSplit split;
    split.regular = u;

    std::vector<int> vidx(L, -1);
    for (int l = 0; l < L; ++l) {
        Vec2 g = family.frame.vertex + rotate(eps * pat.corners[l], family.frame.edge0_angle);
        for (int i = 0; i < n; ++i)
            if (dist(dom.verts[i], g) <= 1e-9 * std::max(1.0, eps * pat.R0)) {
                vidx[l] = i;
                break;
            }
        if (vidx[l] < 0) throw CornerMismatch("small corner missing from the eps-domain");
        int t = u.mesh->locate(g);
        if (t < 0) throw CornerMismatch("field mesh does not cover the small corners");
        bool at_vertex = false;
        for (int k = 0; k < 3; ++k)
            at_vertex = at_vertex ||
                        dist(u.mesh->verts[u.mesh->tris[t][k]], g) <=
                            1e-9 * std::max(1.0, eps * pat.R0);
        if (!at_vertex)
            throw CornerMismatch("small corner is not a vertex of the field mesh");
        split.corners.push_back(g);
        split.openings.push_back(dom.openings[vidx[l]]);
    }

    // default cutoff: a fraction of the distance to the neighboring vertices
    if (cutoff_radii.empty()) {
        for (int l = 0; l < L; ++l) {
            int i = vidx[l];
            Vec2 v = dom.verts[i];
            double dn = dist(v, dom.verts[(i + 1) % n]);
            double dp = dist(v, dom.verts[(i - 1 + n) % n]);
            cutoff_radii.push_back(0.35 * std::min(dn, dp));
        }
    }
    if ((int)cutoff_radii.size() != L)
        throw CornerMismatch("one cutoff radius per small corner expected");
    for (int a = 0; a < L; ++a)
        for (int b = a + 1; b < L; ++b)
            if (dist(split.corners[a], split.corners[b]) <=
                cutoff_radii[a] + cutoff_radii[b])
                throw OverlappingCutoffs("cutoff disks intersect");
    Region layer = corner_layer(family, eps);
    for (int l = 0; l < L; ++l) {
        for (int k = 0; k < 16; ++k) {
            double a = 2.0 * M_PI * k / 16;
            Vec2 p = split.corners[l] + cutoff_radii[l] * Vec2{std::cos(a), std::sin(a)};
            if (dom.contains(p, -1e-12) && !layer.contains(p, 1e-9))
                throw OverlappingCutoffs("cutoff disk leaves the corner layer");
        }
    }
    split.cutoff = cutoff_radii;

    // local frames and leading-mode coefficients
    std::vector<SectorFrame> frames(L);
    std::vector<SingularExponent> exps(L);
    for (int l = 0; l < L; ++l) {
        int i = vidx[l];
        Vec2 v = dom.verts[i];
        SectorFrame fr;
        fr.vertex = v;
        fr.omega = split.openings[l];
        fr.edge0_angle = angle_of(dom.verts[(i + 1) % n] - v);
        frames[l] = fr;
        exps[l] = exponents_sector(fr.omega, 1).back();

        // radii kept well inside both the harmonic neighborhood and the
        // plateau of the cutoff window
        double r_loc = 0.8 * std::min(dist(v, dom.verts[(i + 1) % n]),
                                      dist(v, dom.verts[(i - 1 + n) % n]));
        double r_grid = std::min(r_loc, 0.9 * split.cutoff[l]);
        CoefficientEstimate est =
            extract_coefficient(u, fr, 1, default_rho_grid(r_grid));
        split.d.push_back(est.value);
    }

    FemField sing = interpolate(u.mesh, u.order, [&](Vec2 p) {
        double s = 0.0;
        for (int l = 0; l < L; ++l) {
            double r = dist(p, split.corners[l]);
            if (r >= split.cutoff[l]) continue;
            double t = r / split.cutoff[l];
            double psi = t <= 0.5 ? 1.0 : 1.0 - step5(2.0 * t - 1.0);
            if (!frames[l].inside(p, 1e-9)) continue;
            s += split.d[l] * psi * h_plus(exps[l], frames[l], p);
        }
        return s;
    });
    for (std::size_t i = 0; i < sing.values.size(); ++i)
        split.regular.values[i] -= sing.values[i];
    return split;
}

}  // namespace cornerlab
