#pragma once

#include <functional>
#include <vector>

#include "cornerlab/fem.hpp"
#include "cornerlab/spectral.hpp"

namespace cornerlab {

// Corner-mode coefficient recovered from circle averages at several radii.
// For a function harmonic near the corner with zero trace on the sector
// edges the per-radius values agree, so the spread measures discretization.
struct CoefficientEstimate {
    int j = 1;
    double value = 0.0;  // mean over the grid
    std::vector<double> rho_grid;
    std::vector<double> per_rho;
    double spread = 0.0;  // (max - min) / |mean|; inf when mean 0 but values not
};

// 8 log-spaced radii in [0.1*r0, 0.5*r0]
std::vector<double> default_rho_grid(double r0, int count = 8);

// per-rho value rho^{-lambda_j} * int_0^omega u(rho,theta) psi_j(theta) dtheta
// using 64-point composite Gauss on the arc.  When r0 > 0 every radius must
// stay within r0/2 (the region where the base domain equals the sector).
CoefficientEstimate extract_coefficient(const FemField& u, const SectorFrame& frame, int j,
                                        const std::vector<double>& rho_grid,
                                        double r0 = 0.0);
CoefficientEstimate extract_coefficient(const std::function<double(Vec2)>& u,
                                        const SectorFrame& frame, int j,
                                        const std::vector<double>& rho_grid,
                                        double r0 = 0.0);

// relative gap between sum_{j<=J} lambda_j rho^{2 lambda_j} c_j^2 and the
// Dirichlet energy on the sector piece of B(rho); 0 for the zero field
double parseval_residual(const FemField& u, const SectorFrame& frame, int J, double rho,
                         double r0 = 0.0);
double parseval_residual(const std::function<double(Vec2)>& u,
                         const std::function<Vec2(Vec2)>& grad_u, const SectorFrame& frame,
                         int J, double rho, double r0 = 0.0);

// Canonical corner profile on the truncated pattern domain: grows like the
// j-th sector mode at infinity, zero trace on the pattern boundary.
struct CanonicalProfile {
    SectorFrame frame;
    SingularExponent exponent;  // mode j of the sector at infinity
    double R0 = 1.0;
    double R_art = 0.0;
    FemField field;             // profile values on P intersect B(R_art)
    double truncation_error = 0.0;  // estimated, (R_art/R0)^(-pi/omega)
    double phi_lo = 0.0, phi_hi = 0.0;  // cutoff transition radii used
};

// Solve for the profile: cutoff * mode plus a correction with Dirichlet data
// zero on the pattern boundary and on the artificial arc r = R_art.  The
// cutoff vanishes for r <= lo and equals 1 for r >= hi (defaults R0, 2*R0).
CanonicalProfile canonical_profile(const DomainFamily& family, int j, double R_art,
                                   double h, double cutoff_lo = 0.0,
                                   double cutoff_hi = 0.0);

// (R |grad K|_{L2} + |K|_{L2}) / (sqrt(lambda_j + 1) * R^{lambda_j + 1})
// over the pattern piece of B(R); valid for 2*R0 <= R <= R_art/2
double h1_bound_ratio(const CanonicalProfile& profile, double R);

// Splitting of a solution on an instantiated family domain into scaled corner
// modes at the small corners plus a regular remainder.
struct CornerSplit {
    std::vector<Vec2> corners;     // small-corner positions (global coords)
    std::vector<double> openings;  // interior angle at each corner
    std::vector<double> d;         // local leading-mode coefficients
    std::vector<double> cutoff;    // radius of the smoothstep window per corner
    FemField regular;              // field minus the cutoff singular parts
};

// d_l from the local leading mode at each small corner of the eps-domain the
// field lives on; cutoff disks must stay disjoint and inside the corner layer
CornerSplit split_at_small_corners(const FemField& u, const DomainFamily& family,
                                   double eps, std::vector<double> cutoff_radii = {});

}  // namespace cornerlab
