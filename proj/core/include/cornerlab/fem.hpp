#pragma once

#include <array>
#include <functional>
#include <memory>
#include <utility>
#include <vector>

#include "cornerlab/geometry.hpp"
#include "cornerlab/mesh.hpp"
#include "cornerlab/spectral.hpp"

namespace cornerlab {

// Right-hand side of the Dirichlet problem  Delta u = f.  The built-in
// variants all vanish identically inside a disk around the principal corner,
// so the corner neighborhood stays harmonic and exchangeable.
struct RhsSpec {
    enum class Variant { Zero, CornerModeDriver, AnnulusBump, Combination, Analytic };

    Variant variant = Variant::Zero;

    // CornerModeDriver: f = Laplacian(phi * h_j) where phi is the radial
    // quintic step equal to 1 inside r_lo and 0 outside r_hi.  With u0 the
    // solution of the limit problem, u0 = phi*h_j by construction.
    SectorFrame frame;
    int mode_index = 1;
    double r_lo = 0.5;
    double r_hi = 1.0;

    // AnnulusBump: C^2 radial bump around |x - center| = radius, half-width
    // `band`, peak value `amplitude` (sign included).
    Vec2 center{0.0, 0.0};
    double radius = 0.0;
    double band = 0.0;
    double amplitude = 1.0;

    // Combination: weighted sum of parts
    std::vector<double> weights;
    std::vector<RhsSpec> parts;

    // Analytic: arbitrary callable
    std::function<double(Vec2)> fn;

    double operator()(Vec2 p) const;

    static RhsSpec zero();
    // phi transitions between r0/2 and r0
    static RhsSpec corner_mode_driver(const SectorFrame& frame, int j, double r0);
    static RhsSpec corner_mode_driver(const SectorFrame& frame, int j, double r_lo, double r_hi);
    static RhsSpec annulus_bump(Vec2 center, double radius, double band, double amplitude);
    static RhsSpec combination(std::vector<double> weights, std::vector<RhsSpec> parts);
    static RhsSpec analytic(std::function<double(Vec2)> f);
};

// throws SupportViolation unless f vanishes on the disk B(center, r)
void check_support(const RhsSpec& rhs, Vec2 center, double r);

// Discrete field on a triangle mesh, P1 or P2 Lagrange.
// Dof layout: vertex dofs first, then (P2) one dof per undirected edge.
struct FemField {
    std::shared_ptr<const Mesh> mesh;
    int order = 1;
    std::vector<double> values;
    std::vector<char> dirichlet;                 // constrained-dof flags
    std::vector<std::array<int, 3>> tri_edge;    // per-tri edge dof ids (P2; empty for P1)
    int n_vert_dofs = 0;

    int n_dofs() const { return (int)values.size(); }

    // interpolation inside triangle t (no containment check)
    double value_in_tri(int t, Vec2 p) const;
    Vec2 gradient_in_tri(int t, Vec2 p) const;
    // constant per-triangle second derivatives (uxx, uxy, uyy); zero for P1
    std::array<double, 3> hessian_in_tri(int t) const;

    // point evaluation through mesh location; throws PointOutside
    double value(Vec2 p) const;
    Vec2 gradient(Vec2 p) const;
};

// move a mesh into shared ownership for fields
inline std::shared_ptr<const Mesh> share(Mesh m) {
    return std::make_shared<const Mesh>(std::move(m));
}

// dof scaffold (edge tables, Dirichlet flags) with all values zero
FemField make_field(std::shared_ptr<const Mesh> mesh, int order);

// interpolate an analytic function at the dof points (no Dirichlet forcing)
FemField interpolate(std::shared_ptr<const Mesh> mesh, int order,
                     const std::function<double(Vec2)>& f);

// Galerkin solution of  grad u . grad v = -f v  for all test v, u = 0 on the
// boundary (the weak form of Delta u = f).  Direct factorization with an
// iterative fallback; relative residual of the reduced system <= 1e-10 or
// SolveFailure.
FemField solve_dirichlet(std::shared_ptr<const Mesh> mesh, const RhsSpec& rhs, int order);

// integral of |grad field|^2 over the region (triangles crossing the region
// boundary are subdivided a few levels for a sharper cut)
double energy(const FemField& field, const Region& region);

// integral of an arbitrary pointwise density over region with the same
// boundary subdivision; `density` receives (triangle id, point)
double integrate_region(const Mesh& mesh, const Region& region,
                        const std::function<double(int, Vec2)>& density, int quad_degree = 4);

// carry a field over to a submesh produced by Mesh::submesh
FemField restrict_field(const FemField& field, std::shared_ptr<const Mesh> sub);

}  // namespace cornerlab
