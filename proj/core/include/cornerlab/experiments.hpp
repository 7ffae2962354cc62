#pragma once

#include <string>
#include <utility>
#include <vector>

#include "cornerlab/fem.hpp"
#include "cornerlab/geometry.hpp"
#include "cornerlab/mesh.hpp"
#include "cornerlab/norms.hpp"
#include "cornerlab/singular.hpp"

namespace cornerlab {

// One epsilon sweep: solve the family problem at each eps and evaluate
// fractional seminorms over the corner layer.  eps = 0 rows evaluate the
// limit solution over the fixed inner zone B(r0/2) instead.
struct SweepConfig {
    DomainFamily family;
    RhsSpec rhs;
    std::vector<double> eps;                       // entries in [0, eps0/4)
    std::vector<std::pair<double, double>> norms;  // (s, p) per column
    FamilyMeshOptions mesh;
    int order = 2;
    int levels = 4;  // pair-quadrature refinement depth
    int jobs = 1;
    std::string output_path;  // carried for the report writers
};

struct SweepTable {
    std::vector<std::pair<double, double>> norms;   // column labels
    std::vector<double> eps;                        // ascending
    std::vector<std::vector<double>> values;        // values[row][column]
};

// Least-squares power law through (log eps, log value), compared against a
// predicted exponent.  r_squared is reported even when the fit is poor; a
// fit below 0.98 should be treated as inconclusive, never as a pass.
struct RateFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r_squared = 0.0;
    double predicted = 0.0;
    double deviation = 0.0;  // |slope - predicted|
};

inline bool conclusive(const RateFit& fit) { return fit.r_squared >= 0.98; }

// admissible fractional window (s_lo, s_hi) = (1 + pi/omega, 1 + pi/varpi)
std::pair<double, double> admissible_s_window(const DomainFamily& family);

SweepTable blowup_sweep(const SweepConfig& config);

// needs >= 4 points, all eps and values positive (NonPositiveValue)
RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& values,
                 double predicted);
// same on one table column; eps = 0 rows are skipped
RateFit fit_rate(const SweepTable& table, std::size_t column, double predicted);

// one fitted quantity per eps
struct EpsSeries {
    std::vector<double> eps;
    std::vector<double> value;
    RateFit fit;
};

// H^s seminorm of the solution over the corner layer per eps, fitted against
// the predicted growth s_lo - 1 - s + ... i.e. (1 + pi/omega) - s.  The rhs
// is fixed and supported away from the corner, so its source-norm is an
// eps-independent constant and only the solution side is swept.
// s must lie strictly inside the admissible window (SOutOfWindow).
EpsSeries operator_ratio_sweep(const DomainFamily& family, const RhsSpec& f, double s,
                               std::vector<double> eps,
                               const FamilyMeshOptions& mesh = {}, int order = 2,
                               int levels = 4, int jobs = 1);

// local corner coefficients per eps from split_at_small_corners; the fit
// tracks |d_1| against pi/omega - pi/varpi_1
struct CoefficientSweep {
    std::vector<double> eps;               // ascending
    std::vector<std::vector<double>> d;    // d[row][corner]
    std::vector<double> openings;          // varpi per corner
    RateFit fit;
};
CoefficientSweep coefficient_sweep(const DomainFamily& family, const RhsSpec& f,
                                   std::vector<double> eps,
                                   const FamilyMeshOptions& mesh = {}, int order = 2,
                                   int jobs = 1);

// leading corner coefficient of the limit solution on the base domain
double base_mode_coefficient(const DomainFamily& family, const RhsSpec& f,
                             const FamilyMeshOptions& mesh = {}, int order = 2);

// relative H1 distance on the corner layer between u_eps and the rescaled
// leading profile  eps^lambda1 * c1 * K(x / eps)
double inner_leading_residual(const FemField& u_eps, double c1,
                              const CanonicalProfile& profile,
                              const DomainFamily& family, double eps);
// same, solving for u_eps and extracting c1 from the eps = 0 limit first
double inner_leading_residual(const DomainFamily& family, const RhsSpec& f, double eps,
                              const CanonicalProfile& profile,
                              const FamilyMeshOptions& mesh = {}, int order = 2);

// Unit-L2 combination of the rhs basis whose solution on the eps-domain has
// zero coefficient at every small corner, chosen to maximize |c1| of the
// limit solution (ties broken toward the earliest nullspace direction).
struct ConstrainedRhs {
    std::vector<double> weights;   // combination coefficients, L2-normalized
    RhsSpec combined;
    int nullspace_dim = 0;
    double c1_base = 0.0;          // c1(u0) for the combined rhs
    double ratio = 0.0;            // |c1_base| / eps^(1 - pi/omega)
};
ConstrainedRhs constrained_h2_rhs(const DomainFamily& family, double eps,
                                  const std::vector<RhsSpec>& basis,
                                  const FamilyMeshOptions& mesh = {}, int order = 2);

// sweep of the above; fit of |c1| against the predicted decay 1 - pi/omega
struct ConstrainedSweep {
    std::vector<double> eps;
    std::vector<double> c1;
    std::vector<double> ratio;
    RateFit fit;
};
ConstrainedSweep constrained_h2_sweep(const DomainFamily& family, std::vector<double> eps,
                                      const std::vector<RhsSpec>& basis,
                                      const FamilyMeshOptions& mesh = {}, int order = 2,
                                      int jobs = 1);

}  // namespace cornerlab
