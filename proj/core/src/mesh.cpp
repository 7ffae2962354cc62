#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "cornerlab/errors.hpp"
#include "cornerlab/mesh.hpp"

namespace cornerlab {

double Mesh::tri_area(int t) const {
    Vec2 a = tri_vertex(t, 0), b = tri_vertex(t, 1), c = tri_vertex(t, 2);
    return 0.5 * cross(b - a, c - a);
}

Vec2 Mesh::centroid(int t) const {
    return (tri_vertex(t, 0) + tri_vertex(t, 1) + tri_vertex(t, 2)) / 3.0;
}

double Mesh::shortest_edge(int t) const {
    Vec2 a = tri_vertex(t, 0), b = tri_vertex(t, 1), c = tri_vertex(t, 2);
    return std::min({dist(a, b), dist(b, c), dist(c, a)});
}

double Mesh::longest_edge(int t) const {
    Vec2 a = tri_vertex(t, 0), b = tri_vertex(t, 1), c = tri_vertex(t, 2);
    return std::max({dist(a, b), dist(b, c), dist(c, a)});
}

double Mesh::min_angle_deg(int t) const {
    double worst = 180.0;
    for (int i = 0; i < 3; ++i) {
        Vec2 v = tri_vertex(t, i);
        Vec2 u1 = tri_vertex(t, (i + 1) % 3) - v;
        Vec2 u2 = tri_vertex(t, (i + 2) % 3) - v;
        double c = dot(u1, u2) / std::max(norm(u1) * norm(u2), 1e-300);
        worst = std::min(worst, std::acos(std::clamp(c, -1.0, 1.0)) * 180.0 / M_PI);
    }
    return worst;
}

double Mesh::min_angle_deg_all() const {
    double worst = 180.0;
    for (std::size_t t = 0; t < tris.size(); ++t)
        worst = std::min(worst, min_angle_deg((int)t));
    return worst;
}

namespace {
inline std::uint64_t edge_key(int a, int b) {
    if (a > b) std::swap(a, b);
    return (std::uint64_t)(std::uint32_t)a << 32 | (std::uint32_t)b;
}
}  // namespace

void Mesh::finalize() {
    const std::size_t T = tris.size();
    if (region_tag.size() != T) region_tag.assign(T, 0);
    neighbors.assign(T, {-1, -1, -1});
    boundary.assign(T, {0, 0, 0});

    std::unordered_map<std::uint64_t, std::pair<int, int>> open;  // edge -> (tri, edge slot)
    open.reserve(T * 2);
    for (std::size_t t = 0; t < T; ++t) {
        for (int k = 0; k < 3; ++k) {
            std::uint64_t key = edge_key(tris[t][(k + 1) % 3], tris[t][(k + 2) % 3]);
            auto it = open.find(key);
            if (it == open.end()) {
                open.emplace(key, std::make_pair((int)t, k));
            } else {
                auto [t2, k2] = it->second;
                if (t2 < 0) throw MeshFailure("edge shared by more than two triangles");
                neighbors[t][k] = t2;
                neighbors[t2][k2] = (int)t;
                it->second = {-1, -1};
            }
        }
    }
    boundary_vert.assign(verts.size(), 0);
    for (std::size_t t = 0; t < T; ++t)
        for (int k = 0; k < 3; ++k)
            if (neighbors[t][k] < 0) {
                boundary[t][k] = 1;
                boundary_vert[tris[t][(k + 1) % 3]] = 1;
                boundary_vert[tris[t][(k + 2) % 3]] = 1;
            }

    // locator grid
    grid = Grid{};
    if (verts.empty()) return;
    grid.lo = grid.hi = verts[0];
    for (const Vec2& p : verts) {
        grid.lo.x = std::min(grid.lo.x, p.x);
        grid.lo.y = std::min(grid.lo.y, p.y);
        grid.hi.x = std::max(grid.hi.x, p.x);
        grid.hi.y = std::max(grid.hi.y, p.y);
    }
    int n = (int)std::ceil(std::sqrt((double)std::max<std::size_t>(T, 1)));
    grid.nx = grid.ny = std::clamp(n, 1, 512);
    grid.cells.assign((std::size_t)grid.nx * grid.ny, {});
    double wx = std::max(grid.hi.x - grid.lo.x, 1e-300);
    double wy = std::max(grid.hi.y - grid.lo.y, 1e-300);
    auto cx = [&](double x) {
        return std::clamp((int)((x - grid.lo.x) / wx * grid.nx), 0, grid.nx - 1);
    };
    auto cy = [&](double y) {
        return std::clamp((int)((y - grid.lo.y) / wy * grid.ny), 0, grid.ny - 1);
    };
    for (std::size_t t = 0; t < T; ++t) {
        Vec2 a = tri_vertex((int)t, 0), b = tri_vertex((int)t, 1), c = tri_vertex((int)t, 2);
        int x0 = cx(std::min({a.x, b.x, c.x})), x1 = cx(std::max({a.x, b.x, c.x}));
        int y0 = cy(std::min({a.y, b.y, c.y})), y1 = cy(std::max({a.y, b.y, c.y}));
        for (int iy = y0; iy <= y1; ++iy)
            for (int ix = x0; ix <= x1; ++ix)
                grid.cells[(std::size_t)iy * grid.nx + ix].push_back((int)t);
    }
}

std::array<double, 3> Mesh::barycentric(int t, Vec2 p) const {
    Vec2 a = tri_vertex(t, 0), b = tri_vertex(t, 1), c = tri_vertex(t, 2);
    double den = cross(b - a, c - a);
    return {cross(b - p, c - p) / den, cross(c - p, a - p) / den, cross(a - p, b - p) / den};
}

int Mesh::locate(Vec2 p) const {
    if (grid.cells.empty()) return -1;
    double wx = std::max(grid.hi.x - grid.lo.x, 1e-300);
    double wy = std::max(grid.hi.y - grid.lo.y, 1e-300);
    int ix = std::clamp((int)((p.x - grid.lo.x) / wx * grid.nx), 0, grid.nx - 1);
    int iy = std::clamp((int)((p.y - grid.lo.y) / wy * grid.ny), 0, grid.ny - 1);
    int best = -1;
    double best_min = -1e300;
    for (int t : grid.cells[(std::size_t)iy * grid.nx + ix]) {
        auto l = barycentric(t, p);
        double m = std::min({l[0], l[1], l[2]});
        if (m > best_min) {
            best_min = m;
            best = t;
        }
        if (m >= 0.0) return t;
    }
    if (best >= 0 && best_min >= -1e-9) return best;  // on an edge up to rounding
    return -1;
}

Mesh scale(const Mesh& mesh, double factor) {
    if (!(factor > 0.0)) throw MeshFailure("scale factor must be positive");
    Mesh out = mesh;
    for (Vec2& p : out.verts) p = factor * p;
    for (GradingSpec& g : out.grading) {
        g.center = factor * g.center;
        g.radius *= factor;
    }
    out.finalize();
    return out;
}

Mesh submesh(const Mesh& mesh, const Region& region) {
    Mesh out;
    std::vector<int> vmap(mesh.verts.size(), -1);
    for (std::size_t t = 0; t < mesh.n_tris(); ++t) {
        if (!region.contains(mesh.centroid((int)t))) continue;
        std::array<int, 3> tri;
        for (int k = 0; k < 3; ++k) {
            int v = mesh.tris[t][k];
            if (vmap[v] < 0) {
                vmap[v] = (int)out.verts.size();
                out.verts.push_back(mesh.verts[v]);
                out.parent_vert.push_back(v);
            }
            tri[k] = vmap[v];
        }
        out.tris.push_back(tri);
        out.parent_tri.push_back((int)t);
        out.region_tag.push_back(mesh.region_tag.empty() ? 0 : mesh.region_tag[t]);
    }
    if (out.tris.empty()) throw EmptyRegion("no triangle centroid lies in the region");
    out.grading = mesh.grading;
    out.finalize();
    return out;
}

void save_mesh(const Mesh& mesh, std::ostream& os) {
    char buf[80];
    os << "#nodes " << mesh.n_verts() << "\n";
    for (std::size_t v = 0; v < mesh.n_verts(); ++v) {
        std::snprintf(buf, sizeof buf, "%.17g %.17g %d\n", mesh.verts[v].x, mesh.verts[v].y,
                      mesh.boundary_vert.empty() ? 0 : (int)mesh.boundary_vert[v]);
        os << buf;
    }
    os << "#tris " << mesh.n_tris() << "\n";
    for (std::size_t t = 0; t < mesh.n_tris(); ++t) {
        std::snprintf(buf, sizeof buf, "%d %d %d %d\n", mesh.tris[t][0], mesh.tris[t][1],
                      mesh.tris[t][2], mesh.region_tag.empty() ? 0 : mesh.region_tag[t]);
        os << buf;
    }
}

void save_mesh(const Mesh& mesh, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw MeshFailure("cannot open " + path + " for writing");
    save_mesh(mesh, os);
    if (!os) throw MeshFailure("write to " + path + " failed");
}

Mesh load_mesh(std::istream& is) {
    std::string tag;
    std::size_t n = 0;
    if (!(is >> tag >> n) || tag != "#nodes") throw MeshFailure("expected '#nodes N' header");
    Mesh mesh;
    mesh.verts.resize(n);
    std::vector<char> bflag(n, 0);
    for (std::size_t v = 0; v < n; ++v) {
        int b;
        if (!(is >> mesh.verts[v].x >> mesh.verts[v].y >> b))
            throw MeshFailure("truncated node block");
        bflag[v] = (char)(b != 0);
    }
    std::size_t t_count = 0;
    if (!(is >> tag >> t_count) || tag != "#tris") throw MeshFailure("expected '#tris T' header");
    mesh.tris.resize(t_count);
    mesh.region_tag.resize(t_count);
    for (std::size_t t = 0; t < t_count; ++t) {
        auto& tr = mesh.tris[t];
        if (!(is >> tr[0] >> tr[1] >> tr[2] >> mesh.region_tag[t]))
            throw MeshFailure("truncated triangle block");
        for (int k = 0; k < 3; ++k)
            if (tr[k] < 0 || (std::size_t)tr[k] >= n) throw MeshFailure("vertex index out of range");
    }
    mesh.finalize();
    return mesh;
}

Mesh load_mesh(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw MeshFailure("cannot open " + path);
    return load_mesh(is);
}

void validate_mesh(const Mesh& mesh, double min_angle_deg) {
    if (mesh.verts.empty() || mesh.tris.empty()) throw MeshFailure("empty mesh");
    if (mesh.neighbors.size() != mesh.tris.size() || mesh.boundary.size() != mesh.tris.size())
        throw MeshFailure("mesh not finalized");
    for (std::size_t t = 0; t < mesh.n_tris(); ++t) {
        for (int k = 0; k < 3; ++k) {
            int v = mesh.tris[t][k];
            if (v < 0 || (std::size_t)v >= mesh.n_verts())
                throw MeshFailure("vertex index out of range");
        }
        if (!(mesh.tri_area((int)t) > 0.0)) throw MeshFailure("non-positive triangle area");
        for (int k = 0; k < 3; ++k) {
            int o = mesh.neighbors[t][k];
            if ((o < 0) != (mesh.boundary[t][k] != 0))
                throw MeshFailure("boundary flag disagrees with adjacency");
            if (o >= 0) {
                const auto& on = mesh.neighbors[o];
                if (on[0] != (int)t && on[1] != (int)t && on[2] != (int)t)
                    throw MeshFailure("neighbor link not mutual");
            }
        }
    }
    // boundary edges must close up: every boundary vertex has exactly two
    std::vector<int> deg(mesh.n_verts(), 0);
    for (std::size_t t = 0; t < mesh.n_tris(); ++t)
        for (int k = 0; k < 3; ++k)
            if (mesh.boundary[t][k]) {
                ++deg[mesh.tris[t][(k + 1) % 3]];
                ++deg[mesh.tris[t][(k + 2) % 3]];
            }
    for (std::size_t v = 0; v < mesh.n_verts(); ++v) {
        if (deg[v] != 0 && deg[v] != 2) throw MeshFailure("boundary does not close up");
        if (!mesh.boundary_vert.empty() && (deg[v] != 0) != (mesh.boundary_vert[v] != 0))
            throw MeshFailure("boundary vertex flag inconsistent");
    }
    double worst = mesh.min_angle_deg_all();
    if (worst < min_angle_deg - 1e-9)
        throw MeshFailure("min angle " + std::to_string(worst) + " deg below floor");
}

// ---- composite family meshes ----------------------------------------------

namespace {

struct VecHash {
    std::size_t operator()(const Vec2& p) const {
        std::uint64_t a, b;
        std::memcpy(&a, &p.x, 8);
        std::memcpy(&b, &p.y, 8);
        a ^= b + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2);
        return (std::size_t)a;
    }
};
struct VecEq {
    bool operator()(const Vec2& p, const Vec2& q) const { return p.x == q.x && p.y == q.y; }
};

// incremental mesh builder with exact-coordinate vertex dedup
struct Welder {
    Mesh mesh;
    std::unordered_map<Vec2, int, VecHash, VecEq> index;

    int vertex(Vec2 p) {
        auto it = index.find(p);
        if (it != index.end()) return it->second;
        int id = (int)mesh.verts.size();
        mesh.verts.push_back(p);
        index.emplace(p, id);
        return id;
    }

    void add(const Mesh& part, int tag, const std::function<Vec2(Vec2)>& xform) {
        std::vector<int> vmap(part.n_verts());
        for (std::size_t v = 0; v < part.n_verts(); ++v) vmap[v] = vertex(xform(part.verts[v]));
        for (std::size_t t = 0; t < part.n_tris(); ++t) {
            mesh.tris.push_back({vmap[part.tris[t][0]], vmap[part.tris[t][1]],
                                 vmap[part.tris[t][2]]});
            mesh.region_tag.push_back(tag);
        }
    }
};

}  // namespace

FamilyMesher::FamilyMesher(DomainFamily family, FamilyMeshOptions opt)
    : family_(std::move(family)), opt_(opt) {
    if (opt_.n_arc < 8) throw MeshFailure("composite mesh needs n_arc >= 8");
    if (opt_.template_radius_factor < 1.0 + 1e-9)
        throw MeshFailure("corner patch must extend beyond the pattern radius");

    const double omega = family_.frame.omega;
    const double R0 = family_.pattern.R0;
    const double Rt = opt_.template_radius_factor * R0;

    stations_.reserve(opt_.n_arc + 1);
    rim_local_.reserve(opt_.n_arc + 1);
    for (int i = 0; i <= opt_.n_arc; ++i) {
        double a = omega * i / opt_.n_arc;
        Vec2 u{std::cos(a), std::sin(a)};
        stations_.push_back(u);
        rim_local_.push_back(Rt * u);
    }

    // corner patch template: pattern boundary (reversed), out along edge0,
    // rim arc at the shared stations, back along the edge-omega ray
    {
        const auto& poly = family_.pattern.polyline;
        std::vector<Vec2> loop(poly.rbegin(), poly.rend());
        int arc_start = (int)loop.size();
        loop.insert(loop.end(), rim_local_.begin(), rim_local_.end());

        TriangulateOptions topt;
        topt.h_max = Rt * omega / opt_.n_arc;
        for (int i = 0; i < opt_.n_arc; ++i) topt.protected_edges.push_back(arc_start + i);
        if (family_.pattern.variant == PatternSpec::Variant::Polygonal) {
            for (std::size_t l = 0; l < family_.pattern.corners.size(); ++l) {
                Vec2 c = family_.pattern.corners[l];
                double rg = 0.5 * R0;
                for (std::size_t m = 0; m < family_.pattern.corners.size(); ++m)
                    if (m != l)
                        rg = std::min(rg, 0.5 * dist(c, family_.pattern.corners[m]));
                topt.grading.push_back(GradingSpec{c, opt_.q, opt_.n_layers, rg});
            }
        }
        template_mesh_ = triangulate_polygon(loop, topt);
    }

    // fixed outer mesh: base polygon with the principal corner replaced by the
    // r0/2 arc (stations in decreasing order keeps the loop CCW)
    {
        const double rh = 0.5 * family_.r0;
        auto to_global = [&](Vec2 local) {
            return family_.frame.vertex + rotate(local, family_.frame.edge0_angle);
        };
        std::vector<Vec2> loop;
        std::vector<int> protect;
        for (int i = 0; i < (int)family_.base_verts.size(); ++i) {
            if (i == family_.base_corner) {
                int arc_start = (int)loop.size();
                for (int k = opt_.n_arc; k >= 0; --k) loop.push_back(to_global(rh * stations_[k]));
                for (int k = 0; k < opt_.n_arc; ++k) protect.push_back(arc_start + k);
            } else {
                loop.push_back(family_.base_verts[i]);
            }
        }
        TriangulateOptions topt;
        // small openings make the protected arc chords much shorter than h_max;
        // cap the outer size so the transition stays above the quality floor
        topt.h_max = std::min(opt_.h_max, 2.0 * rh * omega / opt_.n_arc);
        topt.protected_edges = std::move(protect);
        outer_mesh_ = triangulate_polygon(loop, topt);
    }
}

Mesh FamilyMesher::mesh(double eps) const {
    const double omega = family_.frame.omega;
    const double rh = 0.5 * family_.r0;
    const double Rt = opt_.template_radius_factor * family_.pattern.R0;
    auto to_global = [&](Vec2 local) {
        return family_.frame.vertex + rotate(local, family_.frame.edge0_angle);
    };

    if (eps < 0.0 || eps > family_.eps0 * (1.0 + 1e-12))
        throw EpsilonOutOfRange("eps must lie in [0, eps0]");

    if (eps == 0.0) {
        PolygonDomain base = instantiate(family_, 0.0);
        std::vector<GradingSpec> grading{
            GradingSpec{family_.frame.vertex, opt_.q, opt_.n_layers, rh}};
        return triangulate(base, opt_.h_max, std::move(grading));
    }

    if (eps * Rt >= 0.7 * rh) {
        // patch would collide with the outer zone: mesh the domain directly
        PolygonDomain dom = instantiate(family_, eps);
        std::vector<GradingSpec> grading;
        for (int idx : dom.grade_corners)
            grading.push_back(GradingSpec{dom.verts[idx], opt_.q, opt_.n_layers,
                                          0.3 * eps * family_.pattern.R0});
        return triangulate(dom, opt_.h_max, std::move(grading));
    }

    Welder w;
    w.add(outer_mesh_, 0, [](Vec2 p) { return p; });

    // bridging annulus: geometric ring radii, aspect ratio near one
    const double r_in = eps * Rt;
    const int M = std::max(1, (int)std::llround(std::log(rh / r_in) /
                                                std::log(1.0 + omega / opt_.n_arc)));
    {
        const int n = opt_.n_arc;
        const double g = std::pow(rh / r_in, 1.0 / M);
        // ring vertex coordinates; inner and outer rings use the exact float
        // expressions of the neighboring zones so the weld is bitwise
        std::vector<std::vector<int>> ring(M + 1, std::vector<int>(n + 1));
        for (int i = 0; i <= n; ++i) ring[0][i] = w.vertex(to_global(eps * rim_local_[i]));
        for (int k = 1; k < M; ++k) {
            double rho = r_in * std::pow(g, k);
            for (int i = 0; i <= n; ++i) ring[k][i] = w.vertex(to_global(rho * stations_[i]));
        }
        for (int i = 0; i <= n; ++i) ring[M][i] = w.vertex(to_global(rh * stations_[i]));

        for (int k = 0; k < M; ++k)
            for (int i = 0; i < n; ++i) {
                int A = ring[k][i], B = ring[k + 1][i], C = ring[k + 1][i + 1], D = ring[k][i + 1];
                if ((k + i) % 2 == 0) {
                    w.mesh.tris.push_back({A, B, C});
                    w.mesh.tris.push_back({A, C, D});
                } else {
                    w.mesh.tris.push_back({A, B, D});
                    w.mesh.tris.push_back({B, C, D});
                }
                w.mesh.region_tag.push_back(1);
                w.mesh.region_tag.push_back(1);
            }
    }

    w.add(template_mesh_, 2, [&](Vec2 p) { return to_global(eps * p); });

    Mesh out = std::move(w.mesh);
    if (family_.pattern.variant == PatternSpec::Variant::Polygonal)
        for (Vec2 c : family_.pattern.corners)
            out.grading.push_back(GradingSpec{to_global(eps * c), opt_.q, opt_.n_layers,
                                              0.3 * eps * family_.pattern.R0});
    out.finalize();
    return out;
}

}  // namespace cornerlab
