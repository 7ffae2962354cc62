#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <unordered_map>

#include "cornerlab/errors.hpp"
#include "cornerlab/mesh.hpp"

// Flip-based incremental constrained Delaunay triangulation with
// quality/size refinement.  Triangle t stores vertices v[0..2] (CCW); edge k
// is (v[k+1], v[k+2]) with the adjacent triangle in n[k]; con[k] marks a
// constrained (input boundary) edge, prot[k] an interface edge that must not
// be split.

namespace cornerlab {
namespace {

struct DTri {
    int v[3];
    int n[3];
    bool con[3];
    bool prot[3];
    bool alive;
};

inline long double orient_ld(Vec2 a, Vec2 b, Vec2 c) {
    long double abx = (long double)b.x - a.x, aby = (long double)b.y - a.y;
    long double acx = (long double)c.x - a.x, acy = (long double)c.y - a.y;
    return abx * acy - aby * acx;
}

inline long double incircle_ld(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
    long double adx = (long double)a.x - d.x, ady = (long double)a.y - d.y;
    long double bdx = (long double)b.x - d.x, bdy = (long double)b.y - d.y;
    long double cdx = (long double)c.x - d.x, cdy = (long double)c.y - d.y;
    long double ad = adx * adx + ady * ady;
    long double bd = bdx * bdx + bdy * bdy;
    long double cd = cdx * cdx + cdy * cdy;
    return adx * (bdy * cd - bd * cdy) - ady * (bdx * cd - bd * cdx) + ad * (bdx * cdy - bdy * cdx);
}

struct Delaunay {
    std::vector<Vec2> pts;
    std::vector<DTri> tris;
    std::vector<int> vert_tri;  // some alive triangle incident to each vertex
    std::size_t insertions = 0;
    std::size_t max_insertions = 4000000;

    int nv() const { return (int)pts.size(); }

    void set_incident(int t) {
        for (int i = 0; i < 3; ++i) vert_tri[tris[t].v[i]] = t;
    }

    // find k with tris[o].n[k] == t
    int mutual_edge(int o, int t) const {
        for (int k = 0; k < 3; ++k)
            if (tris[o].n[k] == t) return k;
        throw MeshFailure("broken adjacency");
    }

    void relink(int target, int old_nbr, int new_nbr) {
        if (target < 0) return;
        for (int k = 0; k < 3; ++k)
            if (tris[target].n[k] == old_nbr) {
                tris[target].n[k] = new_nbr;
                return;
            }
        throw MeshFailure("broken back link");
    }

    // ---- point location ----------------------------------------------------

    struct Loc {
        int tri = -1;
        int kind = 0;  // 0 interior, 1 on edge `edge`, 2 on vertex `vert`
        int edge = -1;
        int vert = -1;
    };

    Loc locate(Vec2 p, int hint) const {
        int t = hint;
        if (t < 0 || !tris[t].alive) {
            t = -1;
            for (int i = (int)tris.size() - 1; i >= 0; --i)
                if (tris[i].alive) {
                    t = i;
                    break;
                }
        }
        int steps = 0;
        const int cap = (int)tris.size() * 4 + 64;
        int prev = -2;  // distinct from the missing-neighbor sentinel -1
        while (true) {
            if (++steps > cap) throw MeshFailure("point location walk did not terminate");
            const DTri& tr = tris[t];
            int exit = -1;
            long double worst = 0.0L;
            for (int k = 0; k < 3; ++k) {
                Vec2 a = pts[tr.v[(k + 1) % 3]], b = pts[tr.v[(k + 2) % 3]];
                long double o = orient_ld(a, b, p);
                if (o < worst && tr.n[k] != prev) {
                    worst = o;
                    exit = k;
                }
            }
            if (exit < 0) break;
            int nxt = tr.n[exit];
            if (nxt < 0 || !tris[nxt].alive) break;  // stuck at hull: accept t
            prev = t;
            t = nxt;
        }
        // classify with an absolute coordinate tolerance: perpendicular
        // distances below rounding noise must count as "on", or circumcenters
        // computed next to short boundary edges spawn collinear slivers
        Loc loc;
        loc.tri = t;
        const DTri& tr = tris[t];
        const double tol = 1e-13 * (1.0 + norm(p));
        for (int k = 0; k < 3; ++k) {
            if (dist(p, pts[tr.v[k]]) <= tol) {
                loc.kind = 2;
                loc.vert = tr.v[k];
                return loc;
            }
        }
        for (int k = 0; k < 3; ++k) {
            Vec2 a = pts[tr.v[(k + 1) % 3]], b = pts[tr.v[(k + 2) % 3]];
            double d = std::abs((double)orient_ld(a, b, p)) / std::max(dist(a, b), 1e-300);
            if (d <= tol && dot(p - a, b - a) > 0 && dot(p - b, a - b) > 0) {
                loc.kind = 1;
                loc.edge = k;
                return loc;
            }
        }
        return loc;
    }

    // ---- local modifications ----------------------------------------------

    void legalize(int t, int k) {
        if (tris[t].con[k]) return;
        int o = tris[t].n[k];
        if (o < 0) return;
        int ko = mutual_edge(o, t);
        Vec2 a = pts[tris[t].v[k]], b = pts[tris[t].v[(k + 1) % 3]],
             c = pts[tris[t].v[(k + 2) % 3]];
        Vec2 d = pts[tris[o].v[ko]];
        if (incircle_ld(a, b, c, d) <= 0.0L) return;
        flip(t, k, o, ko);
        // flip leaves t = (a,b,d) and o = (a,d,c); recheck the edges opposite a
        legalize(t, 0);
        legalize(o, 0);
    }

    int find_vertex(int t, int v) const {
        for (int k = 0; k < 3; ++k)
            if (tris[t].v[k] == v) return k;
        throw MeshFailure("vertex not in triangle");
    }

    bool has_vertex(int t, int v) const {
        return tris[t].v[0] == v || tris[t].v[1] == v || tris[t].v[2] == v;
    }

    void flip(int t, int k, int o, int ko) {
        DTri tr = tris[t], od = tris[o];
        int a = tr.v[k], b = tr.v[(k + 1) % 3], c = tr.v[(k + 2) % 3];
        int d = od.v[ko];
        // sanity: od shared edge is (c, b)
        int n_ca = tr.n[(k + 1) % 3], n_ab = tr.n[(k + 2) % 3];
        bool c_ca = tr.con[(k + 1) % 3], c_ab = tr.con[(k + 2) % 3];
        bool p_ca = tr.prot[(k + 1) % 3], p_ab = tr.prot[(k + 2) % 3];
        int n_bd = od.n[(ko + 1) % 3], n_dc = od.n[(ko + 2) % 3];
        bool c_bd = od.con[(ko + 1) % 3], c_dc = od.con[(ko + 2) % 3];
        bool p_bd = od.prot[(ko + 1) % 3], p_dc = od.prot[(ko + 2) % 3];

        tris[t] = DTri{{a, b, d}, {n_bd, o, n_ab}, {c_bd, false, c_ab}, {p_bd, false, p_ab}, true};
        tris[o] = DTri{{a, d, c}, {n_dc, n_ca, t}, {c_dc, c_ca, false}, {p_dc, p_ca, false}, true};
        relink(n_bd, o, t);
        relink(n_ca, t, o);
        set_incident(t);
        set_incident(o);
    }

    int split_triangle(int t, Vec2 p, std::vector<int>* created) {
        int pi = nv();
        pts.push_back(p);
        vert_tri.push_back(-1);
        DTri tr = tris[t];
        int v0 = tr.v[0], v1 = tr.v[1], v2 = tr.v[2];
        int tB = (int)tris.size(), tC = tB + 1;
        tris[t] = DTri{{v0, v1, pi}, {tB, tC, tr.n[2]}, {false, false, tr.con[2]}, {false, false, tr.prot[2]}, true};
        tris.push_back(DTri{{v1, v2, pi}, {tC, t, tr.n[0]}, {false, false, tr.con[0]}, {false, false, tr.prot[0]}, true});
        tris.push_back(DTri{{v2, v0, pi}, {t, tB, tr.n[1]}, {false, false, tr.con[1]}, {false, false, tr.prot[1]}, true});
        relink(tr.n[0], t, tB);
        relink(tr.n[1], t, tC);
        set_incident(t);
        set_incident(tB);
        set_incident(tC);
        if (created) {
            created->push_back(t);
            created->push_back(tB);
            created->push_back(tC);
        }
        legalize(t, 2);
        legalize(tB, 2);
        legalize(tC, 2);
        ++insertions;
        return pi;
    }

    int split_edge(int t, int k, Vec2 p, std::vector<int>* created) {
        int pi = nv();
        pts.push_back(p);
        vert_tri.push_back(-1);
        DTri tr = tris[t];
        int a = tr.v[k], b = tr.v[(k + 1) % 3], c = tr.v[(k + 2) % 3];
        bool ce = tr.con[k], pe = tr.prot[k];
        int o = tr.n[k];
        int n_ca = tr.n[(k + 1) % 3], n_ab = tr.n[(k + 2) % 3];
        bool c_ca = tr.con[(k + 1) % 3], c_ab = tr.con[(k + 2) % 3];
        bool p_ca = tr.prot[(k + 1) % 3], p_ab = tr.prot[(k + 2) % 3];

        if (o < 0) {
            int t2 = (int)tris.size();
            tris[t] = DTri{{a, b, pi}, {-1, t2, n_ab}, {ce, false, c_ab}, {pe, false, p_ab}, true};
            tris.push_back(DTri{{a, pi, c}, {-1, n_ca, t}, {ce, c_ca, false}, {pe, p_ca, false}, true});
            relink(n_ca, t, t2);
            set_incident(t);
            set_incident(t2);
            if (created) {
                created->push_back(t);
                created->push_back(t2);
            }
            legalize(t, 2);
            legalize(t2, 1);
            ++insertions;
            return pi;
        }

        int ko = mutual_edge(o, t);
        DTri od = tris[o];
        int d = od.v[ko];
        int n_bd = od.n[(ko + 1) % 3], n_dc = od.n[(ko + 2) % 3];
        bool c_bd = od.con[(ko + 1) % 3], c_dc = od.con[(ko + 2) % 3];
        bool p_bd = od.prot[(ko + 1) % 3], p_dc = od.prot[(ko + 2) % 3];

        int t2 = (int)tris.size(), o2 = t2 + 1;
        // T1 = (a,b,p) in slot t, T2 = (a,p,c), O1 = (d,c,p) in slot o, O2 = (d,p,b)
        tris[t] = DTri{{a, b, pi}, {o2, t2, n_ab}, {ce, false, c_ab}, {pe, false, p_ab}, true};
        tris.push_back(DTri{{a, pi, c}, {o, n_ca, t}, {ce, c_ca, false}, {pe, p_ca, false}, true});
        tris[o] = DTri{{d, c, pi}, {t2, o2, n_dc}, {ce, false, c_dc}, {pe, false, p_dc}, true};
        tris.push_back(DTri{{d, pi, b}, {t, n_bd, o}, {ce, c_bd, false}, {pe, p_bd, false}, true});
        relink(n_ca, t, t2);
        relink(n_bd, o, o2);
        set_incident(t);
        set_incident(t2);
        set_incident(o);
        set_incident(o2);
        if (created) {
            created->push_back(t);
            created->push_back(t2);
            created->push_back(o);
            created->push_back(o2);
        }
        legalize(t, 2);
        legalize(t2, 1);
        legalize(o, 2);
        legalize(o2, 1);
        ++insertions;
        return pi;
    }

    int insert_point(Vec2 p, int hint, std::vector<int>* created = nullptr) {
        if (insertions > max_insertions)
            throw MeshFailure("refinement did not terminate");
        Loc loc = locate(p, hint);
        if (loc.kind == 2) return loc.vert;
        if (loc.kind == 1) return split_edge(loc.tri, loc.edge, p, created);
        return split_triangle(loc.tri, p, created);
    }

    // ---- constraint recovery ----------------------------------------------

    // walk around vertex v collecting alive incident triangles
    std::vector<int> incident(int v) const {
        std::vector<int> out;
        int start = vert_tri[v];
        if (start < 0 || !tris[start].alive || !has_vertex(start, v)) {
            for (int i = 0; i < (int)tris.size(); ++i)
                if (tris[i].alive &&
                    (tris[i].v[0] == v || tris[i].v[1] == v || tris[i].v[2] == v))
                    out.push_back(i);
            return out;
        }
        // rotate both ways (the fan may be open at the hull)
        out.push_back(start);
        for (int dir = 0; dir < 2; ++dir) {
            int t = start;
            while (true) {
                int k = find_vertex(t, v);
                int nxt = tris[t].n[(k + 1 + dir) % 3];
                if (nxt < 0 || !tris[nxt].alive || nxt == start) break;
                if (std::find(out.begin(), out.end(), nxt) != out.end()) break;
                out.push_back(nxt);
                t = nxt;
            }
        }
        return out;
    }

    bool edge_exists(int va, int vb, int* t_out = nullptr, int* k_out = nullptr) const {
        for (int t : incident(va)) {
            for (int k = 0; k < 3; ++k) {
                int p = tris[t].v[(k + 1) % 3], q = tris[t].v[(k + 2) % 3];
                if ((p == va && q == vb) || (p == vb && q == va)) {
                    if (t_out) *t_out = t;
                    if (k_out) *k_out = k;
                    return true;
                }
            }
        }
        return false;
    }

    void mark_constrained(int va, int vb, bool prot_flag) {
        int t, k;
        if (!edge_exists(va, vb, &t, &k)) throw MeshFailure("constraint edge missing after recovery");
        tris[t].con[k] = true;
        tris[t].prot[k] = tris[t].prot[k] || prot_flag;
        int o = tris[t].n[k];
        if (o >= 0) {
            int ko = mutual_edge(o, t);
            tris[o].con[ko] = true;
            tris[o].prot[ko] = tris[o].prot[ko] || prot_flag;
        }
    }

    static bool segments_cross(Vec2 a, Vec2 b, Vec2 c, Vec2 d) {
        long double o1 = orient_ld(a, b, c), o2 = orient_ld(a, b, d);
        long double o3 = orient_ld(c, d, a), o4 = orient_ld(c, d, b);
        return ((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != 0 && o2 != 0 && o3 != 0 &&
               o4 != 0;
    }

    void insert_constraint(int va, int vb, bool prot_flag) {
        if (edge_exists(va, vb)) {
            mark_constrained(va, vb, prot_flag);
            return;
        }
        Vec2 A = pts[va], B = pts[vb];
        // crossing edges, as (tri, edge) pairs re-discovered on the fly
        std::size_t guard = 0;
        while (!edge_exists(va, vb)) {
            if (++guard > 200000) throw MeshFailure("constraint recovery did not terminate");
            // find some edge crossing AB
            int ct = -1, ck = -1;
            for (int t : incident(va)) {
                int k = find_vertex(t, va);
                Vec2 p = pts[tris[t].v[(k + 1) % 3]], q = pts[tris[t].v[(k + 2) % 3]];
                if (segments_cross(p, q, A, B)) {
                    ct = t;
                    ck = k;
                    break;
                }
            }
            if (ct < 0) throw MeshFailure("constraint recovery lost the segment");
            // march along AB flipping crossed edges when the quad is convex
            std::deque<std::pair<int, int>> queue;
            queue.emplace_back(ct, ck);
            std::size_t inner = 0;
            while (!queue.empty()) {
                if (++inner > 200000) throw MeshFailure("constraint recovery did not terminate");
                auto [t, k] = queue.front();
                queue.pop_front();
                if (!tris[t].alive) continue;
                Vec2 p = pts[tris[t].v[(k + 1) % 3]], q = pts[tris[t].v[(k + 2) % 3]];
                if (!segments_cross(p, q, A, B)) continue;
                if (tris[t].con[k]) throw MeshFailure("constraint crosses an existing constraint");
                int o = tris[t].n[k];
                if (o < 0) throw MeshFailure("constraint leaves the triangulation");
                int ko = mutual_edge(o, t);
                Vec2 a = pts[tris[t].v[k]], d = pts[tris[o].v[ko]];
                bool convex = orient_ld(a, p, d) > 0 && orient_ld(a, d, q) > 0;
                if (convex) {
                    flip(t, k, o, ko);
                    // new diagonal is (a, d) on edge... re-enqueue whatever still crosses
                    for (int kk = 0; kk < 3; ++kk) {
                        queue.emplace_back(t, kk);
                        queue.emplace_back(o, kk);
                    }
                } else {
                    queue.emplace_back(t, k);  // retry later
                }
                if (edge_exists(va, vb)) break;
            }
        }
        mark_constrained(va, vb, prot_flag);
    }
};

struct Circum {
    Vec2 c;
    double r2;
    bool ok;
};

Circum circumcircle(Vec2 a, Vec2 b, Vec2 c) {
    double d = 2.0 * (a.x * (b.y - c.y) + b.x * (c.y - a.y) + c.x * (a.y - b.y));
    if (std::abs(d) < 1e-300) return {{0, 0}, 0, false};
    double a2 = norm2(a), b2 = norm2(b), c2 = norm2(c);
    Vec2 cc{(a2 * (b.y - c.y) + b2 * (c.y - a.y) + c2 * (a.y - b.y)) / d,
            (a2 * (c.x - b.x) + b2 * (a.x - c.x) + c2 * (b.x - a.x)) / d};
    return {cc, norm2(cc - a), true};
}

}  // namespace

Mesh triangulate_polygon(const std::vector<Vec2>& loop, const TriangulateOptions& opt) {
    const int n = (int)loop.size();
    if (n < 3) throw MeshFailure("polygon needs at least 3 vertices");
    for (int i = 0; i < n; ++i)
        if (dist(loop[i], loop[(i + 1) % n]) == 0.0) throw MeshFailure("repeated polygon vertex");
    if (polygon_area(loop) <= 0.0) throw MeshFailure("polygon must be CCW with positive area");

    // size field: h_max, then per-corner geometric layers, then custom bound
    auto size_at = [&](Vec2 p) {
        double s = opt.h_max;
        for (const GradingSpec& g : opt.grading) {
            if (g.n_layers <= 0 || g.radius <= 0.0) continue;
            double r = dist(p, g.center);
            if (r >= g.radius) continue;
            double k = std::ceil(std::log(std::max(r, 1e-300) / g.radius) / std::log(g.q));
            double kk = std::min((double)g.n_layers, std::max(0.0, k));
            s = std::min(s, opt.h_max * std::pow(g.q, kk));
        }
        if (opt.size_fn) s = std::min(s, opt.size_fn(p));
        return s;
    };

    Delaunay dt;
    dt.max_insertions = opt.max_insertions;

    // bounding super-square
    Vec2 lo = loop[0], hi = loop[0];
    for (Vec2 p : loop) {
        lo.x = std::min(lo.x, p.x);
        lo.y = std::min(lo.y, p.y);
        hi.x = std::max(hi.x, p.x);
        hi.y = std::max(hi.y, p.y);
    }
    Vec2 mid = 0.5 * (lo + hi);
    double ext = 10.0 * std::max({hi.x - lo.x, hi.y - lo.y, 1e-12});
    // deliberately lopsided corners: an axis-aligned square centered on the
    // input puts its diagonal exactly through diagonally-opposite input
    // corners, and that exact collinearity breaks the incremental flips
    dt.pts = {mid + Vec2{-1.0937528459 * ext, -0.9571342813 * ext},
              mid + Vec2{1.1190864251 * ext, -1.0412935327 * ext},
              mid + Vec2{0.9617374295 * ext, 1.0873218946 * ext},
              mid + Vec2{-1.0281747543 * ext, 0.9138291642 * ext}};
    dt.vert_tri = {0, 0, 1, 1};
    dt.tris.push_back(DTri{{0, 1, 2}, {1, -1, -1}, {false, false, false},
                           {false, false, false}, true});
    dt.tris.push_back(DTri{{0, 2, 3}, {-1, -1, 0}, {false, false, false},
                           {false, false, false}, true});

    // polygon vertices
    std::vector<int> vid(n);
    int hint = 0;
    for (int i = 0; i < n; ++i) {
        vid[i] = dt.insert_point(loop[i], hint);
        hint = dt.vert_tri[vid[i]];
    }
    // boundary constraints
    std::vector<char> prot(n, 0);
    for (int e : opt.protected_edges)
        if (e >= 0 && e < n) prot[e] = 1;
    for (int i = 0; i < n; ++i) {
        int a = vid[i], b = vid[(i + 1) % n];
        if (a == b) throw MeshFailure("degenerate polygon edge after deduplication");
        dt.insert_constraint(a, b, prot[i] != 0);
    }

    // remove everything outside: flood from the super-square corners without
    // crossing constrained edges
    {
        std::vector<char> outside(dt.tris.size(), 0);
        std::deque<int> stack;
        for (int t = 0; t < (int)dt.tris.size(); ++t) {
            if (!dt.tris[t].alive) continue;
            for (int k = 0; k < 3; ++k)
                if (dt.tris[t].v[k] < 4) {
                    outside[t] = 1;
                    stack.push_back(t);
                    break;
                }
        }
        while (!stack.empty()) {
            int t = stack.back();
            stack.pop_back();
            for (int k = 0; k < 3; ++k) {
                int o = dt.tris[t].n[k];
                if (o >= 0 && dt.tris[o].alive && !outside[o] && !dt.tris[t].con[k]) {
                    outside[o] = 1;
                    stack.push_back(o);
                }
            }
        }
        for (int t = 0; t < (int)dt.tris.size(); ++t) {
            if (!dt.tris[t].alive) continue;
            if (outside[t]) {
                dt.tris[t].alive = false;
            }
        }
        // sever links into dead triangles
        for (int t = 0; t < (int)dt.tris.size(); ++t) {
            if (!dt.tris[t].alive) continue;
            for (int k = 0; k < 3; ++k) {
                int o = dt.tris[t].n[k];
                if (o >= 0 && !dt.tris[o].alive) dt.tris[t].n[k] = -1;
            }
        }
    }

    // ---- refinement --------------------------------------------------------

    auto tri_key = [&](int t) {
        const DTri& tr = dt.tris[t];
        return std::uint64_t(tr.v[0]) ^ (std::uint64_t(tr.v[1]) << 21) ^
               (std::uint64_t(tr.v[2]) << 42);
    };
    std::deque<std::pair<int, std::uint64_t>> work;
    auto push_work = [&](int t) {
        if (dt.tris[t].alive) work.emplace_back(t, tri_key(t));
    };
    for (int t = 0; t < (int)dt.tris.size(); ++t) push_work(t);

    auto needs_split = [&](int t) -> int {  // 0 no, 1 quality, 2 size
        const DTri& tr = dt.tris[t];
        Vec2 a = dt.pts[tr.v[0]], b = dt.pts[tr.v[1]], c = dt.pts[tr.v[2]];
        double lmin = std::min({dist(a, b), dist(b, c), dist(c, a)});
        double lmax = std::max({dist(a, b), dist(b, c), dist(c, a)});
        Vec2 cen = (a + b + c) / 3.0;
        if (lmax > size_at(cen)) return 2;
        Circum cc = circumcircle(a, b, c);
        if (!cc.ok) return 1;
        if (cc.r2 > opt.ratio_bound * opt.ratio_bound * lmin * lmin) return 1;
        return 0;
    };

    // walking from inside triangle t toward target; returns the constrained
    // edge crossed first, or (-1,-1) if the target is reached inside the domain
    auto first_constrained_hit = [&](int t, Vec2 target) -> std::pair<int, int> {
        Vec2 from = (dt.pts[dt.tris[t].v[0]] + dt.pts[dt.tris[t].v[1]] + dt.pts[dt.tris[t].v[2]]) / 3.0;
        int cur = t, prev = -1, steps = 0;
        while (true) {
            if (++steps > 10000) return {cur, -2};
            const DTri& tr = dt.tris[cur];
            // inside test
            bool inside = true;
            int exit = -1;
            for (int k = 0; k < 3; ++k) {
                Vec2 p = dt.pts[tr.v[(k + 1) % 3]], q = dt.pts[tr.v[(k + 2) % 3]];
                if (orient_ld(p, q, target) < 0) {
                    inside = false;
                    if (tr.n[k] != prev && Delaunay::segments_cross(p, q, from, target)) exit = k;
                }
            }
            if (inside) return {-1, -1};
            if (exit < 0) return {cur, -2};
            if (tr.con[exit]) return {cur, exit};
            int nxt = tr.n[exit];
            if (nxt < 0 || !dt.tris[nxt].alive) return {cur, -2};
            prev = cur;
            cur = nxt;
        }
    };

    std::vector<int> created;
    // a re-push after an edge split retries the same triangle with the same
    // circumcenter; budget the retries so a center that happens to sit exactly
    // on a boundary segment cannot drive an endless bisection of it
    std::unordered_map<long long, int> retry_count;
    while (!work.empty()) {
        auto [t, key] = work.front();
        work.pop_front();
        if (!dt.tris[t].alive || tri_key(t) != key) continue;
        int why = needs_split(t);
        if (why == 0) continue;
        const DTri& tr = dt.tris[t];
        Vec2 a = dt.pts[tr.v[0]], b = dt.pts[tr.v[1]], c = dt.pts[tr.v[2]];

        // constrained edges that are too long split at their midpoint first
        {
            bool did = false;
            for (int k = 0; k < 3 && !did; ++k) {
                if (!tr.con[k] || tr.prot[k]) continue;
                Vec2 p = dt.pts[tr.v[(k + 1) % 3]], q = dt.pts[tr.v[(k + 2) % 3]];
                Vec2 m = 0.5 * (p + q);
                if (dist(p, q) > size_at(m)) {
                    created.clear();
                    dt.split_edge(t, k, m, &created);
                    for (int nt : created) push_work(nt);
                    did = true;
                }
            }
            if (did) {
                push_work(t);
                continue;
            }
        }

        Circum cc = circumcircle(a, b, c);
        Vec2 target = cc.ok ? cc.c : (a + b + c) / 3.0;

        auto retry = [&](int tri) {
            if (++retry_count[tri_key(tri)] <= 30) push_work(tri);
        };

        // dispatches one candidate point; refuses any insertion that would
        // manufacture a degenerate triangle (target on or outside the located
        // triangle's rim, or grazing one of its vertices).  A point that lands
        // on a constrained segment always encroaches it, so the segment is
        // split at its midpoint rather than at the point itself.
        auto attempt = [&](Vec2 p, int hint) -> bool {
            if (dt.insertions > dt.max_insertions)
                throw MeshFailure("refinement did not terminate");
            Delaunay::Loc loc = dt.locate(p, hint);
            if (loc.kind == 2) return false;
            if (loc.kind == 1) {
                const DTri& lt = dt.tris[loc.tri];
                Vec2 ea = dt.pts[lt.v[(loc.edge + 1) % 3]], eb = dt.pts[lt.v[(loc.edge + 2) % 3]];
                if (lt.con[loc.edge]) {
                    if (lt.prot[loc.edge]) return false;
                    created.clear();
                    dt.split_edge(loc.tri, loc.edge, 0.5 * (ea + eb), &created);
                    for (int nt : created) push_work(nt);
                    return true;
                }
                double s = dot(p - ea, eb - ea) / std::max(dot(eb - ea, eb - ea), 1e-300);
                if (s < 1e-4 || s > 1.0 - 1e-4) return false;  // grazes an endpoint
                created.clear();
                dt.split_edge(loc.tri, loc.edge, p, &created);
                for (int nt : created) push_work(nt);
                return true;
            }
            const DTri& lt = dt.tris[loc.tri];
            Vec2 pa = dt.pts[lt.v[0]], pb = dt.pts[lt.v[1]], pc = dt.pts[lt.v[2]];
            double lmin = std::min({dist(pa, pb), dist(pb, pc), dist(pc, pa)});
            if (dist(p, pa) < 1e-6 * lmin || dist(p, pb) < 1e-6 * lmin ||
                dist(p, pc) < 1e-6 * lmin)
                return false;
            for (int k = 0; k < 3; ++k) {
                Vec2 ea = dt.pts[lt.v[(k + 1) % 3]], eb = dt.pts[lt.v[(k + 2) % 3]];
                if (orient_ld(ea, eb, p) <= 0.0L) return false;
            }
            created.clear();
            dt.split_triangle(loc.tri, p, &created);
            for (int nt : created) push_work(nt);
            return true;
        };

        auto [ht, hk] = first_constrained_hit(t, target);
        if (hk >= 0) {
            // circumcenter lies beyond a constrained edge; split the edge only
            // if the circumcenter encroaches its diametral circle (repeating
            // unconditional splits would bisect the boundary indefinitely)
            Vec2 p = dt.pts[dt.tris[ht].v[(hk + 1) % 3]], q = dt.pts[dt.tris[ht].v[(hk + 2) % 3]];
            Vec2 m = 0.5 * (p + q);
            bool encroaches = dist(target, m) < 0.5 * dist(p, q);
            if (encroaches && !dt.tris[ht].prot[hk]) {
                created.clear();
                dt.split_edge(ht, hk, m, &created);
                for (int nt : created) push_work(nt);
                retry(t);
                continue;
            }
        }
        if (hk >= 0 || hk == -2) {
            // unreachable circumcenter; an oversized triangle can still make
            // progress through its centroid, a merely skinny one is left for
            // the final angle check
            if (why == 2) attempt((a + b + c) / 3.0, t);
            continue;
        }

        // diametral-circle guard: if the new point would encroach a nearby
        // constrained edge, split that edge instead
        {
            bool encroached = false;
            Delaunay::Loc loc = dt.locate(target, t);
            const DTri& pt_ = dt.tris[loc.tri];
            for (int k = 0; k < 3; ++k) {
                if (!pt_.con[k]) continue;
                Vec2 p = dt.pts[pt_.v[(k + 1) % 3]], q = dt.pts[pt_.v[(k + 2) % 3]];
                Vec2 m = 0.5 * (p + q);
                if (dist(target, m) < 0.5 * dist(p, q) * (1.0 - 1e-12)) {
                    encroached = true;
                    if (!pt_.prot[k]) {
                        created.clear();
                        dt.split_edge(loc.tri, k, m, &created);
                        for (int nt : created) push_work(nt);
                        retry(t);
                    }
                    break;
                }
            }
            if (encroached) continue;
        }

        if (attempt(target, t)) {
            if (dt.tris[t].alive && tri_key(t) == key) retry(t);
        } else if (why == 2) {
            attempt((a + b + c) / 3.0, t);
        }
    }

    // ---- export ------------------------------------------------------------

    Mesh mesh;
    std::vector<int> vmap(dt.pts.size(), -1);
    for (const DTri& tr : dt.tris) {
        if (!tr.alive) continue;
        for (int k = 0; k < 3; ++k)
            if (vmap[tr.v[k]] < 0) {
                vmap[tr.v[k]] = (int)mesh.verts.size();
                mesh.verts.push_back(dt.pts[tr.v[k]]);
            }
    }
    for (const DTri& tr : dt.tris) {
        if (!tr.alive) continue;
        mesh.tris.push_back({vmap[tr.v[0]], vmap[tr.v[1]], vmap[tr.v[2]]});
    }
    if (mesh.tris.empty()) throw MeshFailure("triangulation produced no interior triangles");
    mesh.region_tag.assign(mesh.tris.size(), 0);
    mesh.grading = opt.grading;
    mesh.finalize();

    double worst = mesh.min_angle_deg_all();
    if (worst < opt.min_angle_deg)
        throw MeshFailure("min angle " + std::to_string(worst) + " deg below floor");
    return mesh;
}

Mesh triangulate(const PolygonDomain& domain, double h_max, std::vector<GradingSpec> grading) {
    TriangulateOptions opt;
    opt.h_max = h_max;
    if (grading.empty()) {
        for (int idx : domain.grade_corners) {
            Vec2 c = domain.verts[idx];
            // keep layers clear of the two adjacent corners
            int n = (int)domain.verts.size();
            double rg = 0.5 * std::min(dist(c, domain.verts[(idx + 1) % n]),
                                       dist(c, domain.verts[(idx + n - 1) % n]));
            opt.grading.push_back(GradingSpec{c, 0.5, 6, rg});
        }
    } else {
        opt.grading = std::move(grading);
    }
    return triangulate_polygon(domain.verts, opt);
}

}  // namespace cornerlab
