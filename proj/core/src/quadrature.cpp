#include "cornerlab/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>

#include "cornerlab/errors.hpp"

namespace cornerlab {

static Gauss1D compute_gauss(int n) {
    // Newton iteration on Legendre P_n, starting from the Chebyshev-like guess
    Gauss1D g;
    g.x.resize(n);
    g.w.resize(n);
    for (int i = 0; i < n; ++i) {
        double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
        double dp = 0.0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = x;
            for (int k = 2; k <= n; ++k) {
                double p2 = ((2 * k - 1) * x * p1 - (k - 1) * p0) / k;
                p0 = p1;
                p1 = p2;
            }
            dp = n * (x * p1 - p0) / (x * x - 1.0);
            double dx = p1 / dp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        g.x[i] = x;
        g.w[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    return g;
}

const Gauss1D& gauss_legendre(int n) {
    static std::map<int, Gauss1D> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, compute_gauss(n)).first;
    return it->second;
}

static TriRule make_tri_rule(int degree) {
    TriRule r;
    r.degree = degree;
    auto push3 = [&](double a, double b, double w) {
        // permutations of barycentric (a,b,b); reference coords drop the first
        r.pts.push_back({b, b});
        r.pts.push_back({a, b});
        r.pts.push_back({b, a});
        r.w.insert(r.w.end(), 3, w);
    };
    switch (degree) {
        case 1:
            r.pts.push_back({1.0 / 3.0, 1.0 / 3.0});
            r.w.push_back(0.5);
            break;
        case 2:
            push3(2.0 / 3.0, 1.0 / 6.0, 0.5 / 3.0);
            break;
        case 4:
            push3(0.108103018168070, 0.445948490915965, 0.5 * 0.223381589678011);
            push3(0.816847572980459, 0.091576213509771, 0.5 * 0.109951743655322);
            break;
        case 5:
            r.pts.push_back({1.0 / 3.0, 1.0 / 3.0});
            r.w.push_back(0.5 * 0.225);
            push3(0.059715871789770, 0.470142064105115, 0.5 * 0.132394152788506);
            push3(0.797426985353087, 0.101286507323456, 0.5 * 0.125939180544827);
            break;
        default:
            throw Error("no tabulated triangle rule of degree " + std::to_string(degree));
    }
    return r;
}

const TriRule& tri_rule(int degree) {
    static std::map<int, TriRule> cache;
    static std::mutex mtx;
    std::lock_guard<std::mutex> lock(mtx);
    auto it = cache.find(degree);
    if (it == cache.end()) it = cache.emplace(degree, make_tri_rule(degree)).first;
    return it->second;
}

TriRule tri_rule_duffy(int n) {
    // map [0,1]^2 -> triangle via (u, v) -> (u, v(1-u)), jacobian (1-u)
    TriRule r;
    r.degree = -1;
    const Gauss1D& g = gauss_legendre(n);
    for (int i = 0; i < n; ++i) {
        double u = 0.5 * (g.x[i] + 1.0), wu = 0.5 * g.w[i];
        for (int j = 0; j < n; ++j) {
            double v = 0.5 * (g.x[j] + 1.0), wv = 0.5 * g.w[j];
            r.pts.push_back({u, v * (1.0 - u)});
            r.w.push_back(wu * wv * (1.0 - u));
        }
    }
    return r;
}

}  // namespace cornerlab
