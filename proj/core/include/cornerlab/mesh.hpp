#pragma once

#include <array>
#include <functional>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "cornerlab/geometry.hpp"

namespace cornerlab {

// geometric layer refinement toward a corner: element size h_max*q^k in the
// k-th layer, layers shrinking geometrically from `radius` toward `center`
struct GradingSpec {
    Vec2 center{0.0, 0.0};
    double q = 0.5;
    int n_layers = 0;
    double radius = 0.0;
};

struct TriangulateOptions {
    double h_max = 0.1;
    std::vector<GradingSpec> grading;
    // optional extra size bound evaluated at element centers
    std::function<double(Vec2)> size_fn;
    // loop edges (i -> i+1) that must not be split (mesh-interface arcs)
    std::vector<int> protected_edges;
    double min_angle_deg = 15.0;
    // refinement targets circumradius/shortest-edge <= ratio_bound
    // (sqrt(2) gives ~20.7 deg, comfortably above the 15 deg floor)
    double ratio_bound = 1.41421356237309515;
    std::size_t max_insertions = 4000000;
};

struct Mesh {
    std::vector<Vec2> verts;
    std::vector<std::array<int, 3>> tris;       // CCW vertex triples
    std::vector<std::array<int, 3>> neighbors;  // neighbor opposite local vertex i, -1 none
    std::vector<std::array<char, 3>> boundary;  // edge opposite local vertex i on domain boundary
    std::vector<char> boundary_vert;
    std::vector<int> region_tag;  // per triangle
    std::vector<GradingSpec> grading;

    // submesh bookkeeping (empty for top-level meshes)
    std::vector<int> parent_tri;
    std::vector<int> parent_vert;

    std::size_t n_tris() const { return tris.size(); }
    std::size_t n_verts() const { return verts.size(); }

    Vec2 tri_vertex(int t, int i) const { return verts[tris[t][i]]; }
    double tri_area(int t) const;
    Vec2 centroid(int t) const;
    double shortest_edge(int t) const;
    double longest_edge(int t) const;
    double min_angle_deg(int t) const;
    double min_angle_deg_all() const;

    // point location via a uniform bin grid; returns triangle index or -1
    int locate(Vec2 p) const;
    // barycentric coordinates of p in triangle t
    std::array<double, 3> barycentric(int t, Vec2 p) const;

    void finalize();  // neighbors, boundary flags, locator grid

    // locator grid
    struct Grid {
        Vec2 lo, hi;
        int nx = 0, ny = 0;
        std::vector<std::vector<int>> cells;
    };
    Grid grid;
};

// Conforming triangulation of a simple CCW polygon: constrained Delaunay of
// the loop followed by quality + size driven refinement.
Mesh triangulate_polygon(const std::vector<Vec2>& loop, const TriangulateOptions& opt);

// convenience wrapper for a domain, grading defaults to the flagged corners
Mesh triangulate(const PolygonDomain& domain, double h_max,
                 std::vector<GradingSpec> grading = {});

// exact similarity copy (coordinates scaled about the origin)
Mesh scale(const Mesh& mesh, double factor);

// triangles whose centroid lies in the region, reindexed
Mesh submesh(const Mesh& mesh, const Region& region);

// plain-text round trip: "#nodes N" block of "x y b" lines, then
// "#tris T" block of "a b c tag" lines, all indices 0-based
void save_mesh(const Mesh& mesh, std::ostream& os);
void save_mesh(const Mesh& mesh, const std::string& path);
Mesh load_mesh(std::istream& is);
Mesh load_mesh(const std::string& path);

// consistency check used by tests and after construction: orientation,
// mutual neighbor links, boundary closure, angle floor
void validate_mesh(const Mesh& mesh, double min_angle_deg = 15.0);

// Composite mesh for a family domain at parameter eps > 0: an eps-scaled
// corner patch (shared template across all eps), a structured geometric
// annulus bridging scales, and a fixed outer mesh.  Guarantees a fixed
// element count in the corner layer regardless of eps.
struct FamilyMeshOptions {
    double h_max = 0.08;        // outer region target size
    int n_arc = 48;             // angular resolution of the bridging annulus
    double q = 0.5;             // grading ratio at pattern corners
    int n_layers = 8;           // grading depth at pattern corners
    double template_radius_factor = 2.0;  // corner patch covers B(factor * R0)
};

class FamilyMesher {
  public:
    FamilyMesher(DomainFamily family, FamilyMeshOptions opt = {});

    // eps = 0 gives the base domain with corner grading; eps > 0 the composite
    Mesh mesh(double eps) const;
    const Mesh& corner_template() const { return template_mesh_; }
    const DomainFamily& family() const { return family_; }
    const FamilyMeshOptions& options() const { return opt_; }

  private:
    DomainFamily family_;
    FamilyMeshOptions opt_;
    Mesh template_mesh_;           // pattern patch P cap B(Rt), unit scale, local frame
    Mesh outer_mesh_;              // base domain minus B(r0/2), global frame
    std::vector<Vec2> stations_;   // unit vectors of the shared angular stations
    std::vector<Vec2> rim_local_;  // template rim coordinates Rt * station, local frame
};

}  // namespace cornerlab
