#pragma once

#include <utility>
#include <vector>

#include "cornerlab/errors.hpp"
#include "cornerlab/geometry.hpp"

namespace cornerlab {

// One corner mode: angular eigenvalue mu on (0, omega) with Dirichlet ends
// and the two roots of lambda^2 + (n-2)*lambda = mu.
struct SingularExponent {
    int j = 1;
    double mu = 0.0;
    double lambda_plus = 0.0;
    double lambda_minus = 0.0;
    bool polynomial = false;  // model solution extends to a harmonic polynomial
};

// plane-sector exponents lambda_j = j*pi/omega, j = 1..J (n = 2)
std::vector<SingularExponent> exponents_sector(double omega, int J);

// roots lambda^{+/-} = 1 - n/2 +/- sqrt((1 - n/2)^2 + mu)
std::pair<double, double> lambda_from_mu(int n, double mu);

// angular mode with unit L2(0, omega) norm: sqrt(2/omega) * sin(j*pi*theta/omega)
double angular_mode(double omega, int j, double theta);

// model corner solution r^lambda_j * psi_j(theta) in the given frame;
// harmonic on the sector with zero trace on both edges
double h_plus(const SingularExponent& e, const SectorFrame& frame, Vec2 p);
Vec2 h_plus_gradient(const SingularExponent& e, const SectorFrame& frame, Vec2 p);

// true iff the model solution lies in W^{m,p} near the corner of a domain in
// R^n: lambda > m - n/p, or the polynomial case
bool wmp_membership(const SingularExponent& e, double m, double p, int n);

// exponent gap min(lambda_1, lambda_2 - lambda_1); equals pi/omega for sectors
double lambda_prime(double omega);

// additive closure of the generators up to `cutoff`: every finite sum of
// generators <= cutoff + tol, together with 0, sorted and deduplicated
std::vector<double> exponent_monoid(const std::vector<double>& generators, double cutoff);

}  // namespace cornerlab
