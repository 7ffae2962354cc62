#include "cornerlab/fem.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "cornerlab/errors.hpp"
#include "cornerlab/quadrature.hpp"

namespace cornerlab {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

inline Vec2 perp(Vec2 v) { return {-v.y, v.x}; }

// quintic step: s(0)=0, s(1)=1, s' = s'' = 0 at both ends
inline double step5(double t) { return t * t * t * (10.0 + t * (-15.0 + 6.0 * t)); }
inline double step5_d(double t) {
    double u = t * (1.0 - t);
    return 30.0 * u * u;
}
inline double step5_dd(double t) { return 60.0 * t * (1.0 - t) * (1.0 - 2.0 * t); }

// angle of p in the frame, snapped onto [0, omega]; negative if outside
double sector_angle(const SectorFrame& frame, Vec2 p) {
    double th = frame.theta(p);
    if (th <= frame.omega) return th;
    if (th >= kTwoPi - 1e-9) return 0.0;
    if (th <= frame.omega + 1e-9) return frame.omega;
    return -1.0;
}

double eval_corner_driver(const RhsSpec& s, Vec2 p) {
    double r = s.frame.radius(p);
    if (r <= s.r_lo || r >= s.r_hi) return 0.0;
    double th = sector_angle(s.frame, p);
    if (th < 0.0) return 0.0;
    double lam = s.mode_index * M_PI / s.frame.omega;
    double dlt = s.r_hi - s.r_lo;
    double t = (r - s.r_lo) / dlt;
    double phi_d = -step5_d(t) / dlt;
    double phi_dd = -step5_dd(t) / (dlt * dlt);
    double psi = angular_mode(s.frame.omega, s.mode_index, th);
    return psi * (std::pow(r, lam) * (phi_dd + phi_d / r) +
                  2.0 * lam * std::pow(r, lam - 1.0) * phi_d);
}

double eval_annulus_bump(const RhsSpec& s, Vec2 p) {
    double t = (dist(p, s.center) - (s.radius - s.band)) / (2.0 * s.band);
    if (t <= 0.0 || t >= 1.0) return 0.0;
    double u = t * (1.0 - t);           // C^2 cutoff, peak 1 at t = 1/2
    return s.amplitude * 64.0 * u * u * u;
}

}  // namespace

double RhsSpec::operator()(Vec2 p) const {
    switch (variant) {
        case Variant::Zero:
            return 0.0;
        case Variant::CornerModeDriver:
            return eval_corner_driver(*this, p);
        case Variant::AnnulusBump:
            return eval_annulus_bump(*this, p);
        case Variant::Combination: {
            double s = 0.0;
            for (std::size_t i = 0; i < parts.size(); ++i) s += weights[i] * parts[i](p);
            return s;
        }
        case Variant::Analytic:
            return fn(p);
    }
    return 0.0;
}

RhsSpec RhsSpec::zero() { return {}; }

RhsSpec RhsSpec::corner_mode_driver(const SectorFrame& frame, int j, double r0) {
    return corner_mode_driver(frame, j, 0.5 * r0, r0);
}

RhsSpec RhsSpec::corner_mode_driver(const SectorFrame& frame, int j, double r_lo, double r_hi) {
    if (j < 1 || r_lo <= 0.0 || r_hi <= r_lo)
        throw GeometryMismatch("corner_mode_driver: need j >= 1 and 0 < r_lo < r_hi");
    RhsSpec s;
    s.variant = Variant::CornerModeDriver;
    s.frame = frame;
    s.mode_index = j;
    s.r_lo = r_lo;
    s.r_hi = r_hi;
    return s;
}

RhsSpec RhsSpec::annulus_bump(Vec2 center, double radius, double band, double amplitude) {
    if (band <= 0.0 || radius - band < 0.0)
        throw GeometryMismatch("annulus_bump: need 0 < band <= radius");
    RhsSpec s;
    s.variant = Variant::AnnulusBump;
    s.center = center;
    s.radius = radius;
    s.band = band;
    s.amplitude = amplitude;
    return s;
}

RhsSpec RhsSpec::combination(std::vector<double> weights, std::vector<RhsSpec> parts) {
    if (weights.size() != parts.size())
        throw GeometryMismatch("combination: weight/part count mismatch");
    RhsSpec s;
    s.variant = Variant::Combination;
    s.weights = std::move(weights);
    s.parts = std::move(parts);
    return s;
}

RhsSpec RhsSpec::analytic(std::function<double(Vec2)> f) {
    RhsSpec s;
    s.variant = Variant::Analytic;
    s.fn = std::move(f);
    return s;
}

void check_support(const RhsSpec& rhs, Vec2 center, double r) {
    if (std::abs(rhs(center)) > 1e-12)
        throw SupportViolation("rhs does not vanish near the corner");
    for (int k = 0; k < 24; ++k) {
        double rr = r * (k + 0.5) / 24.0;
        for (int a = 0; a < 64; ++a) {
            double ang = kTwoPi * a / 64.0;
            Vec2 p = center + Vec2{rr * std::cos(ang), rr * std::sin(ang)};
            if (std::abs(rhs(p)) > 1e-12)
                throw SupportViolation("rhs does not vanish near the corner");
        }
    }
}

// ---------------------------------------------------------------------------
// dof scaffolding

FemField make_field(std::shared_ptr<const Mesh> mesh, int order) {
    if (order != 1 && order != 2) throw OrderUnavailable("element order must be 1 or 2");
    FemField f;
    f.mesh = std::move(mesh);
    f.order = order;
    const Mesh& m = *f.mesh;
    f.n_vert_dofs = (int)m.n_verts();
    int n_dofs = f.n_vert_dofs;
    if (order == 2) {
        f.tri_edge.assign(m.n_tris(), {-1, -1, -1});
        std::unordered_map<long long, int> edge_id;
        edge_id.reserve(3 * m.n_tris());
        for (std::size_t t = 0; t < m.n_tris(); ++t) {
            for (int i = 0; i < 3; ++i) {
                int a = m.tris[t][(i + 1) % 3], b = m.tris[t][(i + 2) % 3];
                long long key = (long long)std::min(a, b) * (long long)m.n_verts() +
                                std::max(a, b);
                auto it = edge_id.find(key);
                if (it == edge_id.end()) it = edge_id.emplace(key, n_dofs++).first;
                f.tri_edge[t][i] = it->second;
            }
        }
    }
    f.values.assign(n_dofs, 0.0);
    f.dirichlet.assign(n_dofs, 0);
    for (std::size_t v = 0; v < m.n_verts(); ++v)
        if (m.boundary_vert[v]) f.dirichlet[v] = 1;
    if (order == 2) {
        for (std::size_t t = 0; t < m.n_tris(); ++t)
            for (int i = 0; i < 3; ++i)
                if (m.boundary[t][i]) f.dirichlet[f.tri_edge[t][i]] = 1;
    }
    return f;
}

FemField interpolate(std::shared_ptr<const Mesh> mesh, int order,
                     const std::function<double(Vec2)>& fn) {
    FemField f = make_field(std::move(mesh), order);
    const Mesh& m = *f.mesh;
    for (std::size_t v = 0; v < m.n_verts(); ++v) f.values[v] = fn(m.verts[v]);
    if (order == 2) {
        for (std::size_t t = 0; t < m.n_tris(); ++t) {
            for (int i = 0; i < 3; ++i) {
                Vec2 mid = 0.5 * (m.tri_vertex(t, (i + 1) % 3) + m.tri_vertex(t, (i + 2) % 3));
                f.values[f.tri_edge[t][i]] = fn(mid);
            }
        }
    }
    return f;
}

// ---------------------------------------------------------------------------
// evaluation

namespace {

// gradients of the barycentric coordinates; returns 2*area
double bary_gradients(Vec2 a, Vec2 b, Vec2 c, Vec2 g[3]) {
    double twoA = orient(a, b, c);
    g[0] = perp(c - b) / twoA;
    g[1] = perp(a - c) / twoA;
    g[2] = perp(b - a) / twoA;
    return twoA;
}

}  // namespace

double FemField::value_in_tri(int t, Vec2 p) const {
    std::array<double, 3> l = mesh->barycentric(t, p);
    const std::array<int, 3>& v = mesh->tris[t];
    if (order == 1) return values[v[0]] * l[0] + values[v[1]] * l[1] + values[v[2]] * l[2];
    double s = 0.0;
    for (int i = 0; i < 3; ++i) s += values[v[i]] * l[i] * (2.0 * l[i] - 1.0);
    for (int i = 0; i < 3; ++i)
        s += values[tri_edge[t][i]] * 4.0 * l[(i + 1) % 3] * l[(i + 2) % 3];
    return s;
}

Vec2 FemField::gradient_in_tri(int t, Vec2 p) const {
    const std::array<int, 3>& v = mesh->tris[t];
    Vec2 g[3];
    bary_gradients(mesh->verts[v[0]], mesh->verts[v[1]], mesh->verts[v[2]], g);
    if (order == 1)
        return values[v[0]] * g[0] + values[v[1]] * g[1] + values[v[2]] * g[2];
    std::array<double, 3> l = mesh->barycentric(t, p);
    Vec2 s{0.0, 0.0};
    for (int i = 0; i < 3; ++i) s = s + values[v[i]] * (4.0 * l[i] - 1.0) * g[i];
    for (int i = 0; i < 3; ++i) {
        int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        s = s + values[tri_edge[t][i]] * 4.0 * (l[i1] * g[i2] + l[i2] * g[i1]);
    }
    return s;
}

std::array<double, 3> FemField::hessian_in_tri(int t) const {
    if (order == 1) return {0.0, 0.0, 0.0};
    const std::array<int, 3>& v = mesh->tris[t];
    Vec2 g[3];
    bary_gradients(mesh->verts[v[0]], mesh->verts[v[1]], mesh->verts[v[2]], g);
    double xx = 0.0, xy = 0.0, yy = 0.0;
    for (int i = 0; i < 3; ++i) {
        double c = values[v[i]] * 4.0;
        xx += c * g[i].x * g[i].x;
        xy += c * g[i].x * g[i].y;
        yy += c * g[i].y * g[i].y;
    }
    for (int i = 0; i < 3; ++i) {
        int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        double c = values[tri_edge[t][i]] * 4.0;
        xx += c * 2.0 * g[i1].x * g[i2].x;
        xy += c * (g[i1].x * g[i2].y + g[i2].x * g[i1].y);
        yy += c * 2.0 * g[i1].y * g[i2].y;
    }
    return {xx, xy, yy};
}

double FemField::value(Vec2 p) const {
    int t = mesh->locate(p);
    if (t < 0) throw PointOutside("evaluation point outside the mesh");
    return value_in_tri(t, p);
}

Vec2 FemField::gradient(Vec2 p) const {
    int t = mesh->locate(p);
    if (t < 0) throw PointOutside("evaluation point outside the mesh");
    return gradient_in_tri(t, p);
}

// ---------------------------------------------------------------------------
// assembly + solve

namespace {

// shape values and gradients at barycentric l for the given order
void shape_eval(int order, const std::array<double, 3>& l, const Vec2 g[3], double N[6],
                Vec2 dN[6]) {
    if (order == 1) {
        for (int i = 0; i < 3; ++i) {
            N[i] = l[i];
            dN[i] = g[i];
        }
        return;
    }
    for (int i = 0; i < 3; ++i) {
        N[i] = l[i] * (2.0 * l[i] - 1.0);
        dN[i] = (4.0 * l[i] - 1.0) * g[i];
    }
    for (int i = 0; i < 3; ++i) {
        int i1 = (i + 1) % 3, i2 = (i + 2) % 3;
        N[3 + i] = 4.0 * l[i1] * l[i2];
        dN[3 + i] = 4.0 * (l[i1] * g[i2] + l[i2] * g[i1]);
    }
}

}  // namespace

FemField solve_dirichlet(std::shared_ptr<const Mesh> mesh, const RhsSpec& rhs, int order) {
    FemField u = make_field(std::move(mesh), order);
    const Mesh& m = *u.mesh;
    const int n = u.n_dofs();
    const int nl = order == 1 ? 3 : 6;

    std::vector<int> free_id(n, -1);
    int nf = 0;
    for (int i = 0; i < n; ++i)
        if (!u.dirichlet[i]) free_id[i] = nf++;
    if (nf == 0) return u;

    const TriRule& load_rule = tri_rule(4);
    const TriRule& stiff_rule = tri_rule(2);

    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve((std::size_t)m.n_tris() * nl * nl);
    Eigen::VectorXd b = Eigen::VectorXd::Zero(nf);

    int ids[6];
    double N[6];
    Vec2 dN[6];
    double ke[6][6];

    for (std::size_t t = 0; t < m.n_tris(); ++t) {
        Vec2 a = m.tri_vertex(t, 0), bb = m.tri_vertex(t, 1), c = m.tri_vertex(t, 2);
        Vec2 g[3];
        double twoA = bary_gradients(a, bb, c, g);
        for (int i = 0; i < 3; ++i) ids[i] = m.tris[t][i];
        if (order == 2)
            for (int i = 0; i < 3; ++i) ids[3 + i] = u.tri_edge[t][i];

        if (order == 1) {
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) ke[i][j] = 0.5 * twoA * dot(g[i], g[j]);
        } else {
            for (int i = 0; i < nl; ++i)
                for (int j = 0; j < nl; ++j) ke[i][j] = 0.0;
            for (std::size_t q = 0; q < stiff_rule.pts.size(); ++q) {
                double x = stiff_rule.pts[q].x, y = stiff_rule.pts[q].y;
                shape_eval(order, {1.0 - x - y, x, y}, g, N, dN);
                double w = stiff_rule.w[q] * twoA;
                for (int i = 0; i < nl; ++i)
                    for (int j = 0; j < nl; ++j) ke[i][j] += w * dot(dN[i], dN[j]);
            }
        }
        for (int i = 0; i < nl; ++i) {
            int fi = free_id[ids[i]];
            if (fi < 0) continue;
            for (int j = 0; j < nl; ++j) {
                int fj = free_id[ids[j]];
                if (fj >= 0) trips.emplace_back(fi, fj, ke[i][j]);
            }
        }

        for (std::size_t q = 0; q < load_rule.pts.size(); ++q) {
            double x = load_rule.pts[q].x, y = load_rule.pts[q].y;
            Vec2 p = a + x * (bb - a) + y * (c - a);
            double fv = rhs(p);
            if (fv == 0.0) continue;
            shape_eval(order, {1.0 - x - y, x, y}, g, N, dN);
            double w = load_rule.w[q] * twoA * fv;
            for (int i = 0; i < nl; ++i) {
                int fi = free_id[ids[i]];
                if (fi >= 0) b[fi] -= w * N[i];
            }
        }
    }

    double bnorm = b.norm();
    if (bnorm == 0.0) return u;  // zero data, zero solution

    Eigen::SparseMatrix<double> K(nf, nf);
    K.setFromTriplets(trips.begin(), trips.end());

    Eigen::VectorXd x;
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;
    ldlt.compute(K);
    if (ldlt.info() == Eigen::Success)
        x = ldlt.solve(b);
    else
        x = Eigen::VectorXd::Zero(nf);

    double res = (K * x - b).norm() / bnorm;
    if (res > 1e-10) {
        Eigen::ConjugateGradient<Eigen::SparseMatrix<double>, Eigen::Lower | Eigen::Upper>
            cg;
        cg.setTolerance(1e-14);
        cg.setMaxIterations(40 * nf);
        cg.compute(K);
        x = cg.solveWithGuess(b, x);
        res = (K * x - b).norm() / bnorm;
        if (res > 1e-10) throw SolveFailure("linear solve residual above 1e-10");
    }

    for (int i = 0; i < n; ++i)
        if (free_id[i] >= 0) u.values[i] = x[free_id[i]];
    return u;
}

// ---------------------------------------------------------------------------
// region integration

namespace {

double dist_point_segment(Vec2 p, Vec2 a, Vec2 b) {
    Vec2 d = b - a;
    double t = dot(p - a, d) / std::max(dot(d, d), 1e-300);
    t = std::clamp(t, 0.0, 1.0);
    return dist(p, a + t * d);
}

bool point_in_triangle(Vec2 p, Vec2 a, Vec2 b, Vec2 c) {
    return orient(a, b, p) >= 0.0 && orient(b, c, p) >= 0.0 && orient(c, a, p) >= 0.0;
}

// 0 = outside, 1 = inside, 2 = straddles the region boundary
int classify_tri(const Region& reg, Vec2 a, Vec2 b, Vec2 c) {
    switch (reg.kind) {
        case Region::Kind::WholeDomain:
            return 1;
        case Region::Kind::Disk:
        case Region::Kind::Annulus: {
            double r_in = reg.kind == Region::Kind::Annulus ? reg.r_in : 0.0;
            double dmax = std::max({dist(a, reg.center), dist(b, reg.center), dist(c, reg.center)});
            double dmin = 0.0;
            if (!point_in_triangle(reg.center, a, b, c))
                dmin = std::min({dist_point_segment(reg.center, a, b),
                                 dist_point_segment(reg.center, b, c),
                                 dist_point_segment(reg.center, c, a)});
            if (dmin >= reg.r_out || dmax <= r_in) return 0;
            if (dmax <= reg.r_out && dmin >= r_in) return 1;
            return 2;
        }
        case Region::Kind::Polygon: {
            int in = (reg.contains(a) ? 1 : 0) + (reg.contains(b) ? 1 : 0) +
                     (reg.contains(c) ? 1 : 0) +
                     (reg.contains((a + b + c) / 3.0) ? 1 : 0);
            if (in == 4) return 1;
            if (in == 0) return 0;
            return 2;
        }
    }
    return 0;
}

struct RegionIntegrator {
    const Region& reg;
    const std::function<double(int, Vec2)>& density;
    const TriRule& rule;
    int touched = 0;

    double leaf(int t, Vec2 a, Vec2 b, Vec2 c) {
        touched = 1;
        return integrate_tri([&](Vec2 p) { return density(t, p); }, a, b, c, rule);
    }

    double descend(int t, Vec2 a, Vec2 b, Vec2 c, int depth) {
        int cl = classify_tri(reg, a, b, c);
        if (cl == 0) return 0.0;
        if (cl == 1) return leaf(t, a, b, c);
        if (depth == 0)
            return reg.contains((a + b + c) / 3.0) ? leaf(t, a, b, c) : 0.0;
        Vec2 ab = 0.5 * (a + b), bc = 0.5 * (b + c), ca = 0.5 * (c + a);
        return descend(t, a, ab, ca, depth - 1) + descend(t, ab, b, bc, depth - 1) +
               descend(t, ca, bc, c, depth - 1) + descend(t, ab, bc, ca, depth - 1);
    }
};

}  // namespace

double integrate_region(const Mesh& mesh, const Region& region,
                        const std::function<double(int, Vec2)>& density, int quad_degree) {
    RegionIntegrator ri{region, density, tri_rule(quad_degree)};
    double s = 0.0;
    for (std::size_t t = 0; t < mesh.n_tris(); ++t)
        s += ri.descend((int)t, mesh.tri_vertex(t, 0), mesh.tri_vertex(t, 1),
                        mesh.tri_vertex(t, 2), 6);
    if (!ri.touched) throw EmptyRegion("region does not meet the mesh");
    return s;
}

double energy(const FemField& field, const Region& region) {
    return integrate_region(
        *field.mesh, region,
        [&](int t, Vec2 p) {
            Vec2 g = field.gradient_in_tri(t, p);
            return dot(g, g);
        },
        field.order == 1 ? 1 : 2);
}

FemField restrict_field(const FemField& field, std::shared_ptr<const Mesh> sub) {
    const Mesh& s = *sub;
    if (s.parent_vert.size() != s.n_verts())
        throw GeometryMismatch("restrict_field: mesh has no parent maps");
    FemField g = make_field(std::move(sub), field.order);
    for (std::size_t v = 0; v < s.n_verts(); ++v) {
        g.values[v] = field.values[s.parent_vert[v]];
        g.dirichlet[v] = field.dirichlet[s.parent_vert[v]];
    }
    if (field.order == 2) {
        const Mesh& pm = *field.mesh;
        std::unordered_map<long long, int> parent_edge;
        parent_edge.reserve(3 * pm.n_tris());
        for (std::size_t t = 0; t < pm.n_tris(); ++t) {
            for (int i = 0; i < 3; ++i) {
                int a = pm.tris[t][(i + 1) % 3], b = pm.tris[t][(i + 2) % 3];
                long long key = (long long)std::min(a, b) * (long long)pm.n_verts() +
                                std::max(a, b);
                parent_edge.emplace(key, field.tri_edge[t][i]);
            }
        }
        for (std::size_t t = 0; t < s.n_tris(); ++t) {
            for (int i = 0; i < 3; ++i) {
                int a = s.parent_vert[s.tris[t][(i + 1) % 3]];
                int b = s.parent_vert[s.tris[t][(i + 2) % 3]];
                long long key = (long long)std::min(a, b) * (long long)pm.n_verts() +
                                std::max(a, b);
                auto it = parent_edge.find(key);
                if (it == parent_edge.end())
                    throw GeometryMismatch("restrict_field: submesh edge not in parent");
                g.values[g.tri_edge[t][i]] = field.values[it->second];
                g.dirichlet[g.tri_edge[t][i]] = field.dirichlet[it->second];
            }
        }
    }
    return g;
}

}  // namespace cornerlab
