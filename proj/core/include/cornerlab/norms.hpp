#pragma once

#include <array>
#include <functional>
#include <vector>

#include "cornerlab/fem.hpp"
#include "cornerlab/geometry.hpp"

namespace cornerlab {

// analytic input with derivatives supplied as callables; leave a member
// empty if that derivative order is not available
struct AnalyticField {
    std::function<double(Vec2)> value;
    std::function<Vec2(Vec2)> gradient;
    std::function<std::array<double, 3>(Vec2)> hessian;  // uxx, uxy, uyy
};

struct NormRequest {
    double s = 1.0;
    double p = 2.0;
    Region region = Region::whole();
    bool full_norm = false;  // include all lower-order terms
    int levels = 4;          // diagonal refinement depth of the pair quadrature
};

// (sum over |alpha| = m of integral |d^alpha u|^p)^(1/p), one term per
// multi-index.  m >= 2 on a P2 field is the element-broken value and sets
// *broken; P1 fields only support m <= 1.
double integer_seminorm(const FemField& u, int m, double p, const Region& region,
                        bool* broken = nullptr);
double integer_seminorm(const Mesh& mesh, const AnalyticField& u, int m, double p,
                        const Region& region);

// double-integral Slobodeckii seminorm of order theta in (0,1):
// (integral over R x R of |u(x)-u(y)|^p / |x-y|^(theta p + 2))^(1/p).
// Far element pairs use tensorized Gauss; touching and identical pairs are
// refined geometrically toward the shared feature, `levels` deep.  The region
// is resolved to whole elements by the centroid rule.
double slobodeckii_seminorm(const FemField& u, double theta, double p,
                            const Region& region, int levels = 4);

// Slobodeckii seminorms of all order-`deriv` derivative components in one
// sweep (they share the pair geometry): deriv 0 -> {u}, 1 -> {ux, uy},
// 2 -> {uxx, uxy, uyy} (P2 broken)
std::vector<double> slobodeckii_components(const FemField& u, int deriv, double theta,
                                           double p, const Region& region,
                                           int levels = 4);

// Sobolev norm of fractional order s = m + theta: combines the order-m
// integer seminorm terms with the Slobodeckii seminorms of the m-th
// derivatives; full_norm adds all lower orders.  Guards: non-integer s needs
// s < 3/2 on P1 and s < 5/2 on P2 fields (DivergentRequest).
double fractional_norm(const FemField& u, const NormRequest& req);
double fractional_seminorm(const FemField& u, double s, double p, const Region& region,
                           int levels = 4);

// relative residual of
//   integral (laplace u)^2 = integral uxx^2 + 2 uxy^2 + uyy^2
// for zero-trace fields (the mixed term carries multiplicity two; the
// single-count sum is off by the uxy share).  Discrete version is
// element-broken on P2; throws NonzeroTrace if u is not zero on the boundary.
double h2_identity_residual(const FemField& u);
double h2_identity_residual(const Mesh& mesh, const AnalyticField& u);

}  // namespace cornerlab
