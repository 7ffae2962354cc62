#include "cornerlab/norms.hpp"

#include <algorithm>
#include <cmath>

#include "cornerlab/errors.hpp"
#include "cornerlab/quadrature.hpp"

namespace cornerlab {

namespace {

// ---------------------------------------------------------------------------
// component evaluators

struct FieldComponents {
    const FemField* u;
    int deriv;
    int n() const { return deriv == 0 ? 1 : deriv == 1 ? 2 : 3; }
    void operator()(int t, Vec2 p, double* out) const {
        if (deriv == 0) {
            out[0] = u->value_in_tri(t, p);
        } else if (deriv == 1) {
            Vec2 g = u->gradient_in_tri(t, p);
            out[0] = g.x;
            out[1] = g.y;
        } else {
            std::array<double, 3> h = u->hessian_in_tri(t);
            out[0] = h[0];
            out[1] = h[1];
            out[2] = h[2];
        }
    }
    // gradient of each component near point p (exact whenever the component
    // is affine on the element, i.e. everywhere except P2 values)
    void grads(int t, Vec2 p, Vec2* out) const {
        if (deriv == 0) {
            out[0] = u->gradient_in_tri(t, p);
        } else if (deriv == 1) {
            std::array<double, 3> h = u->hessian_in_tri(t);
            out[0] = {h[0], h[1]};
            out[1] = {h[1], h[2]};
        } else {
            out[0] = out[1] = out[2] = {0.0, 0.0};
        }
    }
};

std::vector<int> region_tris(const Mesh& m, const Region& reg) {
    std::vector<int> out;
    out.reserve(m.n_tris());
    for (std::size_t t = 0; t < m.n_tris(); ++t)
        if (reg.kind == Region::Kind::WholeDomain || reg.contains(m.centroid(t)))
            out.push_back((int)t);
    if (out.empty()) throw EmptyRegion("region does not meet the mesh");
    return out;
}

inline double dpow(double d2, double expo) {
    if (expo == 1.5) return d2 * std::sqrt(d2);
    return std::pow(d2, expo);
}

// ---------------------------------------------------------------------------
// Slobodeckii pair engine.  Top-level pairs sharing no vertex use cached
// tensor quadrature; pairs sharing a vertex or edge (and each triangle with
// itself) subdivide geometrically toward the shared feature.  Classification
// below the top level uses exact coordinate equality only, so congruent
// meshes (e.g. similarity copies) produce identical quadrature trees.

struct TriGeo {
    Vec2 v[3];
    int id;  // parent mesh triangle, for field evaluation
};

struct PairEngine {
    FieldComponents eval;
    int C;
    double p, expo, theta;
    bool p2;
    const TriRule& near_rule = tri_rule(2);
    const TriRule& alt_rule = tri_rule(1);  // offset rule so identical leaves
                                            // never pair coincident nodes
    double acc[3] = {0.0, 0.0, 0.0};

    void leaf(const TriGeo& A, const TriGeo& B, const TriRule& ra, const TriRule& rb,
              double mult) {
        double fa[3][3], fb[3][3];
        Vec2 pa[3], pb[3];
        double ja = std::abs(orient(A.v[0], A.v[1], A.v[2]));
        double jb = std::abs(orient(B.v[0], B.v[1], B.v[2]));
        int na = (int)ra.pts.size(), nb = (int)rb.pts.size();
        for (int a = 0; a < na; ++a) {
            pa[a] = A.v[0] + ra.pts[a].x * (A.v[1] - A.v[0]) + ra.pts[a].y * (A.v[2] - A.v[0]);
            eval(A.id, pa[a], fa[a]);
        }
        for (int b = 0; b < nb; ++b) {
            pb[b] = B.v[0] + rb.pts[b].x * (B.v[1] - B.v[0]) + rb.pts[b].y * (B.v[2] - B.v[0]);
            eval(B.id, pb[b], fb[b]);
        }
        for (int a = 0; a < na; ++a) {
            for (int b = 0; b < nb; ++b) {
                Vec2 d = pa[a] - pb[b];
                double den = dpow(d.x * d.x + d.y * d.y, expo);
                double w = mult * ja * jb * ra.w[a] * rb.w[b] / den;
                for (int c = 0; c < C; ++c) {
                    double df = fa[a][c] - fb[b][c];
                    acc[c] += w * (p2 ? df * df : std::pow(std::abs(df), p));
                }
            }
        }
    }

    // ∫_{r0}^{r1} rho^a d rho (log branch when a == -1)
    static double pint(double a, double r0, double r1) {
        double ap1 = a + 1.0;
        if (std::abs(ap1) < 1e-12) return std::log(r1 / r0);
        return (std::pow(r1, ap1) - std::pow(r0, ap1)) / ap1;
    }

    // positive ray parameter where x + rho*d crosses segment [p,q], or -1
    static double ray_seg(Vec2 x, Vec2 d, Vec2 p, Vec2 q) {
        Vec2 e = q - p;
        double den = d.x * e.y - d.y * e.x;
        if (std::abs(den) < 1e-300) return -1.0;
        Vec2 w = p - x;
        double rho = (w.x * e.y - w.y * e.x) / den;
        double s = (w.x * d.y - w.y * d.x) / den;
        if (rho <= 0.0 || s < -1e-12 || s > 1.0 + 1e-12) return -1.0;
        return rho;
    }

    // outer nodes: one midpoint split of the outer triangle, degree-4 rule on
    // each cell; brings the outer error of the radial leaves under a percent
    static int outer_nodes(const TriGeo& T, Vec2* xs, double* ws) {
        const TriRule& xr = tri_rule(4);
        double jac = std::abs(orient(T.v[0], T.v[1], T.v[2]));
        int n = 0;
        for (std::size_t q = 0; q < xr.pts.size(); ++q) {
            xs[n] = T.v[0] + xr.pts[q].x * (T.v[1] - T.v[0]) +
                    xr.pts[q].y * (T.v[2] - T.v[0]);
            ws[n] = jac * xr.w[q];
            ++n;
        }
        return n;
    }

    // bottom leaf of an (T,T) pair: the rho-integral of the |z|-power is done
    // in closed form around each outer node; the components are affine on the
    // element here, so the difference is exactly a gradient dotted with z
    void leaf_identical_radial(const TriGeo& T, double mult) {
        Vec2 g[3];
        Vec2 cen = (1.0 / 3.0) * (T.v[0] + T.v[1] + T.v[2]);
        eval.grads(T.id, cen, g);
        bool zero = true;
        for (int c = 0; c < C; ++c)
            if (g[c].x != 0.0 || g[c].y != 0.0) zero = false;
        if (zero) return;

        const Gauss1D& gl = gauss_legendre(6);
        double inv = 1.0 / (2.0 - 2.0 * theta);
        Vec2 xs[24];
        double ws[24];
        int nx = outer_nodes(T, xs, ws);
        for (int a = 0; a < nx; ++a) {
            Vec2 x = xs[a];
            double wx = mult * ws[a];
            double ang[3];
            for (int i = 0; i < 3; ++i) ang[i] = std::atan2(T.v[i].y - x.y, T.v[i].x - x.x);
            std::sort(ang, ang + 3);
            double lo[3] = {ang[0], ang[1], ang[2]};
            double hi[3] = {ang[1], ang[2], ang[0] + 2.0 * M_PI};
            for (int pan = 0; pan < 3; ++pan) {
                double half = 0.5 * (hi[pan] - lo[pan]);
                if (half < 1e-14) continue;
                double mid = 0.5 * (hi[pan] + lo[pan]);
                for (std::size_t k = 0; k < gl.x.size(); ++k) {
                    double phi = mid + half * gl.x[k];
                    Vec2 d{std::cos(phi), std::sin(phi)};
                    double R = -1.0;
                    for (int e = 0; e < 3; ++e) {
                        double r = ray_seg(x, d, T.v[e], T.v[(e + 1) % 3]);
                        if (r > 0.0 && (R < 0.0 || r < R)) R = r;
                    }
                    if (R <= 0.0) continue;
                    double base = wx * gl.w[k] * half * std::pow(R, 2.0 - 2.0 * theta) * inv;
                    for (int c = 0; c < C; ++c) {
                        double gc = g[c].x * d.x + g[c].y * d.y;
                        acc[c] += base * gc * gc;
                    }
                }
            }
        }
    }

    // one orientation of a touching bottom leaf: outer nodes in A, the inner
    // integral over B done per direction with the rho-powers in closed form
    void cross_radial_one(const TriGeo& A, const TriGeo& B, double mult) {
        Vec2 gB[3];
        Vec2 cenB = (1.0 / 3.0) * (B.v[0] + B.v[1] + B.v[2]);
        eval.grads(B.id, cenB, gB);
        const Gauss1D& gl = gauss_legendre(6);
        Vec2 xs[24];
        double ws[24];
        int nx = outer_nodes(A, xs, ws);
        for (int a = 0; a < nx; ++a) {
            Vec2 x = xs[a];
            double wx = mult * ws[a];
            double fa[3], fb[3], c0[3];
            eval(A.id, x, fa);
            eval(B.id, x, fb);  // affine extension of the B-side polynomial
            for (int c = 0; c < C; ++c) c0[c] = fa[c] - fb[c];
            double aref = std::atan2(cenB.y - x.y, cenB.x - x.x);
            double ang[3];
            for (int i = 0; i < 3; ++i) {
                double t = std::atan2(B.v[i].y - x.y, B.v[i].x - x.x) - aref;
                while (t > M_PI) t -= 2.0 * M_PI;
                while (t < -M_PI) t += 2.0 * M_PI;
                ang[i] = t;
            }
            std::sort(ang, ang + 3);
            for (int pan = 0; pan < 2; ++pan) {
                double half = 0.5 * (ang[pan + 1] - ang[pan]);
                if (half < 1e-14) continue;
                double mid = 0.5 * (ang[pan + 1] + ang[pan]) + aref;
                for (std::size_t k = 0; k < gl.x.size(); ++k) {
                    double phi = mid + half * gl.x[k];
                    Vec2 d{std::cos(phi), std::sin(phi)};
                    double r0 = -1.0, r1 = -1.0;
                    for (int e = 0; e < 3; ++e) {
                        double r = ray_seg(x, d, B.v[e], B.v[(e + 1) % 3]);
                        if (r <= 0.0) continue;
                        if (r0 < 0.0 || r < r0) r0 = r;
                        if (r > r1) r1 = r;
                    }
                    if (r0 <= 0.0 || r1 <= r0) continue;
                    double wphi = wx * gl.w[k] * half;
                    double J0 = pint(-2.0 * theta - 1.0, r0, r1);
                    double J1 = pint(-2.0 * theta, r0, r1);
                    double J2 = pint(1.0 - 2.0 * theta, r0, r1);
                    for (int c = 0; c < C; ++c) {
                        double gc = gB[c].x * d.x + gB[c].y * d.y;
                        acc[c] += wphi * (c0[c] * c0[c] * J0 - 2.0 * c0[c] * gc * J1 +
                                          gc * gc * J2);
                    }
                }
            }
        }
    }

    // symmetrized so pair enumeration order cannot leak into the value
    void leaf_cross_radial(const TriGeo& A, const TriGeo& B, double mult) {
        cross_radial_one(A, B, 0.5 * mult);
        cross_radial_one(B, A, 0.5 * mult);
    }

    static int shared_coords(const TriGeo& A, const TriGeo& B) {
        int s = 0;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (A.v[i].x == B.v[j].x && A.v[i].y == B.v[j].y) ++s;
        return s;
    }

    static void split(const TriGeo& T, TriGeo out[4]) {
        Vec2 m01 = 0.5 * (T.v[0] + T.v[1]);
        Vec2 m12 = 0.5 * (T.v[1] + T.v[2]);
        Vec2 m20 = 0.5 * (T.v[2] + T.v[0]);
        out[0] = {{T.v[0], m01, m20}, T.id};
        out[1] = {{m01, T.v[1], m12}, T.id};
        out[2] = {{m20, m12, T.v[2]}, T.id};
        out[3] = {{m01, m12, m20}, T.id};
    }

    void identical(const TriGeo& T, int level, double mult) {
        if (level == 0) {
            if (p2)
                leaf_identical_radial(T, mult);
            else
                leaf(T, T, near_rule, alt_rule, mult);
            return;
        }
        TriGeo c[4];
        split(T, c);
        for (int i = 0; i < 4; ++i) identical(c[i], level - 1, mult);
        for (int i = 0; i < 4; ++i)
            for (int j = i + 1; j < 4; ++j) cross(c[i], c[j], level - 1, 2.0 * mult);
    }

    void cross(const TriGeo& A, const TriGeo& B, int level, double mult) {
        if (shared_coords(A, B) == 0) {
            leaf(A, B, near_rule, near_rule, mult);
            return;
        }
        if (level == 0) {
            if (p2)
                leaf_cross_radial(A, B, mult);
            else
                leaf(A, B, near_rule, near_rule, mult);
            return;
        }
        TriGeo ca[4], cb[4];
        split(A, ca);
        split(B, cb);
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j < 4; ++j) {
                if (shared_coords(ca[i], cb[j]) > 0)
                    cross(ca[i], cb[j], level - 1, mult);
                else
                    leaf(ca[i], cb[j], near_rule, near_rule, mult);
            }
        }
    }
};

std::vector<double> pair_seminorms(const FemField& u, int deriv, double theta, double p,
                                   const Region& region, int levels) {
    const Mesh& m = *u.mesh;
    std::vector<int> sel = region_tris(m, region);
    const int N = (int)sel.size();

    PairEngine eng{FieldComponents{&u, deriv}};
    eng.C = eng.eval.n();
    eng.p = p;
    eng.p2 = (p == 2.0);
    eng.theta = theta;
    eng.expo = 0.5 * (theta * p + 2.0);

    // cached far-field data
    const TriRule& far_rule = tri_rule(4);
    const int Q = (int)far_rule.pts.size();
    std::vector<Vec2> qp((std::size_t)N * Q);
    std::vector<double> qw((std::size_t)N * Q);
    std::vector<double> qf((std::size_t)N * Q * eng.C);
    for (int k = 0; k < N; ++k) {
        int t = sel[k];
        Vec2 a = m.tri_vertex(t, 0), b = m.tri_vertex(t, 1), c = m.tri_vertex(t, 2);
        double jac = std::abs(orient(a, b, c));
        for (int q = 0; q < Q; ++q) {
            Vec2 pt = a + far_rule.pts[q].x * (b - a) + far_rule.pts[q].y * (c - a);
            qp[k * Q + q] = pt;
            qw[k * Q + q] = far_rule.w[q] * jac;
            eng.eval(t, pt, &qf[((std::size_t)k * Q + q) * eng.C]);
        }
    }

    auto shares_vertex = [&](int t1, int t2) {
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j)
                if (m.tris[t1][i] == m.tris[t2][j]) return true;
        return false;
    };
    auto geo = [&](int t) {
        return TriGeo{{m.tri_vertex(t, 0), m.tri_vertex(t, 1), m.tri_vertex(t, 2)}, t};
    };

    for (int i = 0; i < N; ++i) {
        for (int j = i + 1; j < N; ++j) {
            if (shares_vertex(sel[i], sel[j])) {
                eng.cross(geo(sel[i]), geo(sel[j]), levels, 2.0);
                continue;
            }
            const Vec2* pi = &qp[i * Q];
            const Vec2* pj = &qp[j * Q];
            const double* wi = &qw[i * Q];
            const double* wj = &qw[j * Q];
            const double* fi = &qf[(std::size_t)i * Q * eng.C];
            const double* fj = &qf[(std::size_t)j * Q * eng.C];
            for (int a = 0; a < Q; ++a) {
                for (int b = 0; b < Q; ++b) {
                    Vec2 d = pi[a] - pj[b];
                    double den = dpow(d.x * d.x + d.y * d.y, eng.expo);
                    double w = 2.0 * wi[a] * wj[b] / den;
                    for (int c = 0; c < eng.C; ++c) {
                        double df = fi[a * eng.C + c] - fj[b * eng.C + c];
                        eng.acc[c] += w * (eng.p2 ? df * df : std::pow(std::abs(df), p));
                    }
                }
            }
        }
    }
    for (int i = 0; i < N; ++i) eng.identical(geo(sel[i]), levels, 1.0);

    std::vector<double> out(eng.C);
    for (int c = 0; c < eng.C; ++c) out[c] = std::pow(eng.acc[c], 1.0 / p);
    return out;
}

void validate_fractional_args(double theta, double p) {
    if (!(theta > 0.0) || !(theta < 1.0))
        throw DivergentRequest("fractional order must lie strictly in (0,1)");
    if (!(p > 1.0)) throw DivergentRequest("exponent p must exceed 1");
}

}  // namespace

// ---------------------------------------------------------------------------

std::vector<double> slobodeckii_components(const FemField& u, int deriv, double theta,
                                           double p, const Region& region, int levels) {
    validate_fractional_args(theta, p);
    if (deriv < 0 || deriv > 2 || (deriv == 2 && u.order == 1))
        throw OrderUnavailable("derivative order beyond the element space");
    return pair_seminorms(u, deriv, theta, p, region, levels);
}

double slobodeckii_seminorm(const FemField& u, double theta, double p,
                            const Region& region, int levels) {
    validate_fractional_args(theta, p);
    return pair_seminorms(u, 0, theta, p, region, levels)[0];
}

double integer_seminorm(const FemField& u, int m, double p, const Region& region,
                        bool* broken) {
    if (broken) *broken = false;
    if (!(p > 1.0)) throw DivergentRequest("exponent p must exceed 1");
    if (m < 0 || m > 2 || (m == 2 && u.order == 1))
        throw OrderUnavailable("derivative order beyond the element space");
    if (m == 2 && broken) *broken = true;
    double s = integrate_region(
        *u.mesh, region,
        [&](int t, Vec2 pt) {
            if (m == 0) return std::pow(std::abs(u.value_in_tri(t, pt)), p);
            if (m == 1) {
                Vec2 g = u.gradient_in_tri(t, pt);
                return std::pow(std::abs(g.x), p) + std::pow(std::abs(g.y), p);
            }
            std::array<double, 3> h = u.hessian_in_tri(t);
            return std::pow(std::abs(h[0]), p) + std::pow(std::abs(h[1]), p) +
                   std::pow(std::abs(h[2]), p);
        },
        5);
    return std::pow(s, 1.0 / p);
}

double integer_seminorm(const Mesh& mesh, const AnalyticField& u, int m, double p,
                        const Region& region) {
    if (!(p > 1.0)) throw DivergentRequest("exponent p must exceed 1");
    if (m < 0 || m > 2) throw OrderUnavailable("analytic inputs carry derivatives up to 2");
    if ((m == 0 && !u.value) || (m == 1 && !u.gradient) || (m == 2 && !u.hessian))
        throw OrderUnavailable("required derivative callable not supplied");
    static const TriRule duffy = tri_rule_duffy(10);
    double s = 0.0;
    int touched = 0;
    for (std::size_t t = 0; t < mesh.n_tris(); ++t) {
        Vec2 a = mesh.tri_vertex(t, 0), b = mesh.tri_vertex(t, 1), c = mesh.tri_vertex(t, 2);
        if (region.kind != Region::Kind::WholeDomain && !region.contains((a + b + c) / 3.0))
            continue;
        touched = 1;
        s += integrate_tri(
            [&](Vec2 pt) {
                if (m == 0) return std::pow(std::abs(u.value(pt)), p);
                if (m == 1) {
                    Vec2 g = u.gradient(pt);
                    return std::pow(std::abs(g.x), p) + std::pow(std::abs(g.y), p);
                }
                std::array<double, 3> h = u.hessian(pt);
                return std::pow(std::abs(h[0]), p) + std::pow(std::abs(h[1]), p) +
                       std::pow(std::abs(h[2]), p);
            },
            a, b, c, duffy);
    }
    if (!touched) throw EmptyRegion("region does not meet the mesh");
    return std::pow(s, 1.0 / p);
}

double fractional_norm(const FemField& u, const NormRequest& req) {
    double s = req.s, p = req.p;
    if (s < 0.0) throw DivergentRequest("norm order must be nonnegative");
    if (!(p > 1.0)) throw DivergentRequest("exponent p must exceed 1");
    int m = (int)std::floor(s + 1e-12);
    double theta = s - m;
    if (theta >= 1.0 - 1e-12) {
        ++m;
        theta = 0.0;
    }
    bool fractional = theta > 1e-12;
    if (fractional) {
        if (u.order == 1 && s >= 1.5 - 1e-9)
            throw DivergentRequest("order-1 fields do not reach s >= 3/2");
        if (u.order == 2 && s >= 2.5 - 1e-9)
            throw DivergentRequest("order-2 fields do not reach s >= 5/2");
    }
    double acc = 0.0;
    if (req.full_norm)
        for (int k = 0; k < m; ++k)
            acc += std::pow(integer_seminorm(u, k, p, req.region), p);
    if (!fractional) {
        acc += std::pow(integer_seminorm(u, m, p, req.region), p);
    } else {
        std::vector<double> parts =
            slobodeckii_components(u, m, theta, p, req.region, req.levels);
        for (double v : parts) acc += std::pow(v, p);
    }
    return std::pow(acc, 1.0 / p);
}

double fractional_seminorm(const FemField& u, double s, double p, const Region& region,
                           int levels) {
    NormRequest req;
    req.s = s;
    req.p = p;
    req.region = region;
    req.levels = levels;
    return fractional_norm(u, req);
}

// ---------------------------------------------------------------------------
// H^2 identity

double h2_identity_residual(const FemField& u) {
    if (u.order != 2) throw OrderUnavailable("second derivatives need order-2 elements");
    double umax = 0.0;
    for (double v : u.values) umax = std::max(umax, std::abs(v));
    const Mesh& m = *u.mesh;
    double trace = 0.0;
    for (std::size_t v = 0; v < m.n_verts(); ++v)
        if (m.boundary_vert[v]) trace = std::max(trace, std::abs(u.values[v]));
    for (std::size_t t = 0; t < m.n_tris(); ++t)
        for (int i = 0; i < 3; ++i)
            if (m.boundary[t][i])
                trace = std::max(trace, std::abs(u.values[u.tri_edge[t][i]]));
    if (trace > 1e-8 * (umax + 1e-300)) throw NonzeroTrace("field is not zero on the boundary");

    double lap2 = 0.0, weighted = 0.0;
    for (std::size_t t = 0; t < m.n_tris(); ++t) {
        std::array<double, 3> h = u.hessian_in_tri((int)t);
        double area = m.tri_area((int)t);
        double lap = h[0] + h[2];
        lap2 += area * lap * lap;
        weighted += area * (h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2]);
    }
    if (lap2 == 0.0) return 0.0;
    return std::abs(lap2 - weighted) / lap2;
}

double h2_identity_residual(const Mesh& mesh, const AnalyticField& u) {
    if (!u.value || !u.hessian)
        throw OrderUnavailable("analytic input needs value and hessian callables");
    double umax = 1e-300;
    for (std::size_t t = 0; t < mesh.n_tris(); ++t)
        umax = std::max(umax, std::abs(u.value(mesh.centroid(t))));
    double trace = 0.0;
    for (std::size_t t = 0; t < mesh.n_tris(); ++t) {
        for (int i = 0; i < 3; ++i) {
            if (!mesh.boundary[t][i]) continue;
            Vec2 a = mesh.tri_vertex(t, (i + 1) % 3), b = mesh.tri_vertex(t, (i + 2) % 3);
            for (double s : {0.0, 0.25, 0.5, 0.75, 1.0})
                trace = std::max(trace, std::abs(u.value(a + s * (b - a))));
        }
    }
    if (trace > 1e-8 * umax) throw NonzeroTrace("field is not zero on the boundary");

    static const TriRule duffy = tri_rule_duffy(12);
    double lap2 = 0.0, weighted = 0.0;
    for (std::size_t t = 0; t < mesh.n_tris(); ++t) {
        Vec2 a = mesh.tri_vertex(t, 0), b = mesh.tri_vertex(t, 1), c = mesh.tri_vertex(t, 2);
        lap2 += integrate_tri(
            [&](Vec2 pt) {
                std::array<double, 3> h = u.hessian(pt);
                double lap = h[0] + h[2];
                return lap * lap;
            },
            a, b, c, duffy);
        weighted += integrate_tri(
            [&](Vec2 pt) {
                std::array<double, 3> h = u.hessian(pt);
                return h[0] * h[0] + 2.0 * h[1] * h[1] + h[2] * h[2];
            },
            a, b, c, duffy);
    }
    if (lap2 == 0.0) return 0.0;
    return std::abs(lap2 - weighted) / lap2;
}

}  // namespace cornerlab
