#pragma once

#include <vector>

#include "cornerlab/vec2.hpp"

namespace cornerlab {

// 1D Gauss-Legendre on [-1,1]
struct Gauss1D {
    std::vector<double> x;
    std::vector<double> w;
};

// nodes/weights for n-point Gauss-Legendre (cached per n)
const Gauss1D& gauss_legendre(int n);

// integrate f on [a,b] with an n-point rule
template <class F>
double integrate_1d(F&& f, double a, double b, int n = 12) {
    const Gauss1D& g = gauss_legendre(n);
    double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    double s = 0.0;
    for (std::size_t i = 0; i < g.x.size(); ++i) s += g.w[i] * f(mid + half * g.x[i]);
    return s * half;
}

// composite rule: [a,b] split into `panels` equal panels, n-point Gauss each
template <class F>
double integrate_1d_composite(F&& f, double a, double b, int panels, int n = 8) {
    double s = 0.0, step = (b - a) / panels;
    for (int k = 0; k < panels; ++k) s += integrate_1d(f, a + k * step, a + (k + 1) * step, n);
    return s;
}

// Composite rule on [0,b] with panels shrinking geometrically toward 0
// (ratio 1/2, `levels` panels).  Handles integrands with an integrable
// power singularity r^alpha, alpha > -1, at the origin: the innermost panel
// [0, b*2^-levels] is dropped, which for alpha > 0 contributes O(2^-levels*(1+alpha)).
template <class F>
// geometric panels toward r = 0; the dropped remainder below b*2^-levels is
// ~(b*2^-levels)^lam for integrands ~r^(lam-1), negligible for lam >= 1/4
double integrate_radial_graded(F&& f, double b, int levels = 192, int n = 16) {
    double s = 0.0;
    double hi = b;
    for (int k = 0; k < levels; ++k) {
        double lo = hi * 0.5;
        s += integrate_1d(f, lo, hi, n);
        hi = lo;
    }
    return s;
}

// symmetric quadrature on the reference triangle (0,0)-(1,0)-(0,1),
// points in barycentric-less (x,y) form, weights summing to 1/2
struct TriRule {
    std::vector<Vec2> pts;
    std::vector<double> w;
    int degree = 0;
};

// exact for polynomials up to `degree` (available: 1, 2, 4, 5)
const TriRule& tri_rule(int degree);

// tensor Gauss rule collapsed onto the triangle (Duffy); not exact by degree
// but converges spectrally for smooth integrands. n*n points.
TriRule tri_rule_duffy(int n);

// integrate f over physical triangle (a,b,c)
template <class F>
double integrate_tri(F&& f, Vec2 a, Vec2 b, Vec2 c, const TriRule& rule) {
    double jac = std::abs(orient(a, b, c));  // = 2*area
    double s = 0.0;
    for (std::size_t i = 0; i < rule.pts.size(); ++i) {
        Vec2 p = a + rule.pts[i].x * (b - a) + rule.pts[i].y * (c - a);
        s += rule.w[i] * f(p);
    }
    return s * jac;
}

}  // namespace cornerlab
