#include <algorithm>
#include <cmath>

#include "cornerlab/spectral.hpp"

namespace cornerlab {

std::vector<SingularExponent> exponents_sector(double omega, int J) {
    if (!(omega > 0.0) || !(omega < 2.0 * M_PI))
        throw GeometryMismatch("sector opening must lie in (0, 2*pi)");
    if (J < 1) throw GeometryMismatch("need at least one exponent");
    std::vector<SingularExponent> out;
    out.reserve(J);
    for (int j = 1; j <= J; ++j) {
        SingularExponent e;
        e.j = j;
        e.lambda_plus = j * M_PI / omega;
        e.lambda_minus = -e.lambda_plus;
        e.mu = e.lambda_plus * e.lambda_plus;
        double nearest = std::round(e.lambda_plus);
        e.polynomial = nearest >= 1.0 && std::abs(e.lambda_plus - nearest) <= 1e-12;
        out.push_back(e);
    }
    return out;
}

std::pair<double, double> lambda_from_mu(int n, double mu) {
    if (!(mu > 0.0)) throw NonPositiveMu("angular eigenvalue must be positive");
    double h = 1.0 - 0.5 * n;
    double s = std::sqrt(h * h + mu);
    return {h + s, h - s};
}

double angular_mode(double omega, int j, double theta) {
    return std::sqrt(2.0 / omega) * std::sin(j * M_PI * theta / omega);
}

double h_plus(const SingularExponent& e, const SectorFrame& frame, Vec2 p) {
    double r = frame.radius(p);
    if (r == 0.0) return 0.0;
    double th = frame.theta(p);
    if (th > frame.omega) {
        if (th >= 2.0 * M_PI - 1e-12) th = 0.0;  // wrap-around of the first edge
        else if (th <= frame.omega + 1e-12) th = frame.omega;
        else throw PointOutsideSector("angle " + std::to_string(th));
    }
    return std::pow(r, e.lambda_plus) * angular_mode(frame.omega, e.j, th);
}

Vec2 h_plus_gradient(const SingularExponent& e, const SectorFrame& frame, Vec2 p) {
    double r = frame.radius(p);
    if (r == 0.0) {
        // gradient of r^lambda vanishes at the vertex for lambda > 1,
        // is undefined below; report zero for the boundary-value use cases
        return {0.0, 0.0};
    }
    double th = frame.theta(p);
    if (th > frame.omega) {
        if (th >= 2.0 * M_PI - 1e-12) th = 0.0;
        else if (th <= frame.omega + 1e-12) th = frame.omega;
        else throw PointOutsideSector("angle " + std::to_string(th));
    }
    double lam = e.lambda_plus;
    double k = e.j * M_PI / frame.omega;
    double amp = std::sqrt(2.0 / frame.omega);
    double dr = lam * std::pow(r, lam - 1.0) * amp * std::sin(k * th);
    double dth = std::pow(r, lam - 1.0) * amp * k * std::cos(k * th);
    double a = frame.edge0_angle + th;
    Vec2 er{std::cos(a), std::sin(a)}, et{-std::sin(a), std::cos(a)};
    return dr * er + dth * et;
}

bool wmp_membership(const SingularExponent& e, double m, double p, int n) {
    return e.polynomial || e.lambda_plus > m - double(n) / p;
}

double lambda_prime(double omega) {
    if (!(omega > 0.0) || !(omega < 2.0 * M_PI))
        throw GeometryMismatch("sector opening must lie in (0, 2*pi)");
    double l1 = M_PI / omega;
    return std::min(l1, 2.0 * l1 - l1);
}

std::vector<double> exponent_monoid(const std::vector<double>& generators, double cutoff) {
    const double tol = 1e-12;
    std::vector<double> out{0.0};
    // breadth-first closure; generators are positive so sums only grow
    std::vector<double> frontier{0.0};
    while (!frontier.empty()) {
        std::vector<double> next;
        for (double base : frontier)
            for (double g : generators) {
                if (!(g > 0.0)) continue;
                double v = base + g;
                if (v > cutoff + tol) continue;
                bool seen = false;
                for (double o : out)
                    if (std::abs(o - v) <= tol) {
                        seen = true;
                        break;
                    }
                if (!seen) {
                    out.push_back(v);
                    next.push_back(v);
                }
            }
        frontier = std::move(next);
    }
    std::sort(out.begin(), out.end());
    return out;
}

}  // namespace cornerlab
