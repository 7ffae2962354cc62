#include "cornerlab/experiments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "cornerlab/errors.hpp"

namespace cornerlab {

namespace {

// index-parallel loop; first worker exception is rethrown after join
void run_indexed(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
        for (;;) {
            int i = next.fetch_add(1);
            if (i >= n) return;
            try {
                fn(i);
            } catch (...) {
                std::lock_guard<std::mutex> lock(err_mu);
                if (!err) err = std::current_exception();
                return;
            }
        }
    };
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

// ascending, deduplicated; positive entries must stay below eps0/4
std::vector<double> checked_eps(std::vector<double> eps, const DomainFamily& family,
                                bool allow_zero) {
    if (eps.empty()) throw EpsilonOutOfRange("empty eps list");
    std::sort(eps.begin(), eps.end());
    eps.erase(std::unique(eps.begin(), eps.end()), eps.end());
    for (double e : eps) {
        if (e < 0.0 || (!allow_zero && e == 0.0))
            throw EpsilonOutOfRange("eps must be positive");
        if (e > 0.0 && e >= 0.25 * family.eps0)
            throw EpsilonOutOfRange("sweep eps must stay below eps0 / 4");
    }
    return eps;
}

// corner layer for eps > 0, the fixed inner zone for the limit row
Region eval_region(const DomainFamily& family, double eps) {
    if (eps > 0.0) return corner_layer(family, eps);
    return Region::disk(family.frame.vertex, 0.5 * family.r0);
}

void check_norm_requests(const SweepConfig& cfg) {
    for (auto [s, p] : cfg.norms) {
        if (s < 0.0) throw DivergentRequest("norm order must be nonnegative");
        if (!(p > 1.0)) throw DivergentRequest("exponent p must exceed 1");
        double frac = s - std::floor(s + 1e-12);
        if (frac > 1e-12) {
            if (cfg.order == 1 && s >= 1.5 - 1e-9)
                throw DivergentRequest("order-1 fields do not reach s >= 3/2");
            if (cfg.order == 2 && s >= 2.5 - 1e-9)
                throw DivergentRequest("order-2 fields do not reach s >= 5/2");
        }
    }
}

double half_r0(const DomainFamily& family) { return 0.5 * family.r0; }

}  // namespace

std::pair<double, double> admissible_s_window(const DomainFamily& family) {
    return {1.0 + family.lambda1(), 1.0 + family.pattern_lambda1()};
}

SweepTable blowup_sweep(const SweepConfig& config) {
    check_norm_requests(config);
    check_support(config.rhs, config.family.frame.vertex, half_r0(config.family));
    std::vector<double> eps = checked_eps(config.eps, config.family, true);

    FamilyMesher mesher(config.family, config.mesh);
    SweepTable table;
    table.norms = config.norms;
    table.eps = eps;
    table.values.resize(eps.size());

    run_indexed((int)eps.size(), config.jobs, [&](int i) {
        auto mesh = share(mesher.mesh(eps[i]));
        FemField u = solve_dirichlet(mesh, config.rhs, config.order);
        Region region = eval_region(config.family, eps[i]);
        std::vector<double> row;
        row.reserve(config.norms.size());
        for (auto [s, p] : config.norms)
            row.push_back(fractional_seminorm(u, s, p, region, config.levels));
        table.values[i] = std::move(row);
    });
    return table;
}

RateFit fit_rate(const std::vector<double>& eps, const std::vector<double>& values,
                 double predicted) {
    if (eps.size() != values.size() || eps.size() < 4)
        throw NonPositiveValue("rate fit needs at least 4 (eps, value) points");
    std::size_t n = eps.size();
    std::vector<double> x(n), y(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!(eps[i] > 0.0) || !(values[i] > 0.0))
            throw NonPositiveValue("rate fit needs positive eps and values");
        x[i] = std::log(eps[i]);
        y[i] = std::log(values[i]);
    }
    double xm = 0.0, ym = 0.0;
    for (std::size_t i = 0; i < n; ++i) xm += x[i], ym += y[i];
    xm /= (double)n, ym /= (double)n;
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - xm) * (x[i] - xm);
        sxy += (x[i] - xm) * (y[i] - ym);
        syy += (y[i] - ym) * (y[i] - ym);
    }
    if (sxx <= 0.0) throw NonPositiveValue("rate fit needs distinct eps values");

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.intercept = ym - fit.slope * xm;
    double ss_res = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        double r = y[i] - (fit.intercept + fit.slope * x[i]);
        ss_res += r * r;
    }
    fit.r_squared = syy > 1e-300 ? 1.0 - ss_res / syy : 1.0;
    fit.predicted = predicted;
    fit.deviation = std::abs(fit.slope - predicted);
    return fit;
}

RateFit fit_rate(const SweepTable& table, std::size_t column, double predicted) {
    if (column >= table.norms.size())
        throw NonPositiveValue("no such column in the sweep table");
    std::vector<double> eps, values;
    for (std::size_t i = 0; i < table.eps.size(); ++i) {
        if (table.eps[i] == 0.0) continue;
        eps.push_back(table.eps[i]);
        values.push_back(table.values[i][column]);
    }
    return fit_rate(eps, values, predicted);
}

EpsSeries operator_ratio_sweep(const DomainFamily& family, const RhsSpec& f, double s,
                               std::vector<double> eps, const FamilyMeshOptions& mesh,
                               int order, int levels, int jobs) {
    auto [lo, hi] = admissible_s_window(family);
    if (s <= lo + 1e-12 || s >= hi - 1e-12)
        throw SOutOfWindow("s must lie strictly between the window endpoints");
    check_support(f, family.frame.vertex, half_r0(family));
    EpsSeries out;
    out.eps = checked_eps(std::move(eps), family, false);
    out.value.resize(out.eps.size());

    FamilyMesher mesher(family, mesh);
    run_indexed((int)out.eps.size(), jobs, [&](int i) {
        auto m = share(mesher.mesh(out.eps[i]));
        FemField u = solve_dirichlet(m, f, order);
        out.value[i] =
            fractional_seminorm(u, s, 2.0, corner_layer(family, out.eps[i]), levels);
    });
    out.fit = fit_rate(out.eps, out.value, lo - s);
    return out;
}

CoefficientSweep coefficient_sweep(const DomainFamily& family, const RhsSpec& f,
                                   std::vector<double> eps, const FamilyMeshOptions& mesh,
                                   int order, int jobs) {
    check_support(f, family.frame.vertex, half_r0(family));
    CoefficientSweep out;
    out.eps = checked_eps(std::move(eps), family, false);
    out.d.resize(out.eps.size());

    FamilyMesher mesher(family, mesh);
    std::vector<std::vector<double>> opens(out.eps.size());
    run_indexed((int)out.eps.size(), jobs, [&](int i) {
        auto m = share(mesher.mesh(out.eps[i]));
        FemField u = solve_dirichlet(m, f, order);
        CornerSplit split = split_at_small_corners(u, family, out.eps[i]);
        out.d[i] = split.d;
        opens[i] = split.openings;
    });
    out.openings = opens[0];

    std::vector<double> lead;
    lead.reserve(out.eps.size());
    for (const auto& row : out.d) lead.push_back(std::abs(row[0]));
    out.fit = fit_rate(out.eps, lead, family.lambda1() - M_PI / out.openings[0]);
    return out;
}

double base_mode_coefficient(const DomainFamily& family, const RhsSpec& f,
                             const FamilyMeshOptions& mesh, int order) {
    check_support(f, family.frame.vertex, half_r0(family));
    FamilyMesher mesher(family, mesh);
    auto m = share(mesher.mesh(0.0));
    FemField u0 = solve_dirichlet(m, f, order);
    return extract_coefficient(u0, family.frame, 1, default_rho_grid(family.r0), family.r0)
        .value;
}

double inner_leading_residual(const FemField& u_eps, double c1,
                              const CanonicalProfile& profile, const DomainFamily& family,
                              double eps) {
    if (!(eps > 0.0)) throw EpsilonOutOfRange("inner comparison needs eps > 0");
    Region layer = corner_layer(family, eps);
    const Vec2 v = family.frame.vertex;
    const double scale = c1 * std::pow(eps, family.lambda1());

    auto profile_at = [&](Vec2 p, double* kv, Vec2* kg) {
        Vec2 q = v + (1.0 / eps) * (p - v);
        try {
            *kv = profile.field.value(q);
            Vec2 g = profile.field.gradient(q);
            *kg = {g.x / eps, g.y / eps};
        } catch (const PointOutside&) {
            *kv = 0.0;
            *kg = {0.0, 0.0};
        }
    };

    const Mesh& m = *u_eps.mesh;
    double num = integrate_region(m, layer, [&](int t, Vec2 p) {
        double kv;
        Vec2 kg;
        profile_at(p, &kv, &kg);
        Vec2 gu = u_eps.gradient_in_tri(t, p);
        double dv = u_eps.value_in_tri(t, p) - scale * kv;
        Vec2 dg{gu.x - scale * kg.x, gu.y - scale * kg.y};
        return dg.x * dg.x + dg.y * dg.y + dv * dv;
    });
    double den = integrate_region(m, layer, [&](int t, Vec2 p) {
        Vec2 g = u_eps.gradient_in_tri(t, p);
        double uv = u_eps.value_in_tri(t, p);
        return g.x * g.x + g.y * g.y + uv * uv;
    });
    if (!(den > 0.0)) return num > 0.0 ? std::numeric_limits<double>::infinity() : 0.0;
    return std::sqrt(num / den);
}

double inner_leading_residual(const DomainFamily& family, const RhsSpec& f, double eps,
                              const CanonicalProfile& profile,
                              const FamilyMeshOptions& mesh, int order) {
    check_support(f, family.frame.vertex, half_r0(family));
    FamilyMesher mesher(family, mesh);
    double c1;
    {
        auto m0 = share(mesher.mesh(0.0));
        FemField u0 = solve_dirichlet(m0, f, order);
        c1 = extract_coefficient(u0, family.frame, 1, default_rho_grid(family.r0),
                                 family.r0)
                 .value;
    }
    auto m = share(mesher.mesh(eps));
    FemField u = solve_dirichlet(m, f, order);
    return inner_leading_residual(u, c1, profile, family, eps);
}

namespace {

// base-domain data shared across the eps sweep of the constrained problem
struct ConstrainedBase {
    FamilyMesher mesher;
    Eigen::VectorXd c1;   // per-basis limit coefficient
    Eigen::MatrixXd gram; // L2 inner products of the basis

    ConstrainedBase(const DomainFamily& family, const std::vector<RhsSpec>& basis,
                    const FamilyMeshOptions& mesh, int order)
        : mesher(family, mesh) {
        int K = (int)basis.size();
        int L = (int)family.pattern.corners.size();
        if (family.pattern.variant != PatternSpec::Variant::Polygonal || L == 0)
            throw CornerMismatch("pattern carries no polygonal corners");
        if (K <= L)
            throw EmptyNullspace("need more basis members than small corners");
        for (const RhsSpec& b : basis)
            check_support(b, family.frame.vertex, 0.5 * family.r0);

        auto m0 = share(mesher.mesh(0.0));
        c1.resize(K);
        for (int k = 0; k < K; ++k) {
            FemField u0 = solve_dirichlet(m0, basis[k], order);
            c1(k) = extract_coefficient(u0, family.frame, 1,
                                        default_rho_grid(family.r0), family.r0)
                        .value;
        }
        gram.resize(K, K);
        for (int a = 0; a < K; ++a)
            for (int b = a; b < K; ++b) {
                double v = integrate_region(
                    *m0, Region::whole(),
                    [&](int, Vec2 p) { return basis[a](p) * basis[b](p); }, 5);
                gram(a, b) = gram(b, a) = v;
            }
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
        if (es.eigenvalues().minCoeff() <= 1e-10 * es.eigenvalues().maxCoeff())
            throw EmptyNullspace("rhs basis is not linearly independent");
    }
};

ConstrainedRhs constrained_at(const ConstrainedBase& base, const DomainFamily& family,
                              double eps, const std::vector<RhsSpec>& basis, int order) {
    int K = (int)basis.size();
    int L = (int)family.pattern.corners.size();

    auto mesh = share(base.mesher.mesh(eps));
    Eigen::MatrixXd M(L, K);
    for (int k = 0; k < K; ++k) {
        FemField u = solve_dirichlet(mesh, basis[k], order);
        CornerSplit split = split_at_small_corners(u, family, eps);
        for (int l = 0; l < L; ++l) M(l, k) = split.d[l];
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
    double smax = svd.singularValues().size() ? svd.singularValues()(0) : 0.0;
    int rank = 0;
    for (int i = 0; i < svd.singularValues().size(); ++i)
        if (svd.singularValues()(i) > 1e-10 * smax) ++rank;
    int dim = K - rank;
    if (dim <= 0) throw EmptyNullspace("no combination cancels every corner");
    Eigen::MatrixXd N = svd.matrixV().rightCols(dim);

    // maximize |c1| over the unit-L2 sphere of the nullspace
    Eigen::MatrixXd A = N.transpose() * base.gram * N;
    Eigen::VectorXd gt = N.transpose() * base.c1;
    Eigen::LLT<Eigen::MatrixXd> llt(A);
    Eigen::VectorXd z;
    if (gt.norm() > 1e-12 * std::max(1.0, base.c1.norm())) {
        z = llt.solve(gt);
    } else {
        z = Eigen::VectorXd::Zero(dim);  // tie: earliest nullspace direction
        z(0) = 1.0;
    }
    z /= std::sqrt(z.dot(A * z));
    Eigen::VectorXd w = N * z;
    double c1 = base.c1.dot(w);
    if (c1 < 0.0 || (c1 == 0.0 && w(0) < 0.0)) {
        w = -w;
        c1 = -c1;
    }

    ConstrainedRhs out;
    out.weights.assign(w.data(), w.data() + K);
    out.combined = RhsSpec::combination(out.weights, basis);
    out.nullspace_dim = dim;
    out.c1_base = c1;
    out.ratio = std::abs(c1) / std::pow(eps, 1.0 - family.lambda1());
    return out;
}

}  // namespace

ConstrainedRhs constrained_h2_rhs(const DomainFamily& family, double eps,
                                  const std::vector<RhsSpec>& basis,
                                  const FamilyMeshOptions& mesh, int order) {
    std::vector<double> one = checked_eps({eps}, family, false);
    ConstrainedBase base(family, basis, mesh, order);
    return constrained_at(base, family, one[0], basis, order);
}

ConstrainedSweep constrained_h2_sweep(const DomainFamily& family, std::vector<double> eps,
                                      const std::vector<RhsSpec>& basis,
                                      const FamilyMeshOptions& mesh, int order, int jobs) {
    ConstrainedSweep out;
    out.eps = checked_eps(std::move(eps), family, false);
    ConstrainedBase base(family, basis, mesh, order);
    out.c1.resize(out.eps.size());
    out.ratio.resize(out.eps.size());
    run_indexed((int)out.eps.size(), jobs, [&](int i) {
        ConstrainedRhs r = constrained_at(base, family, out.eps[i], basis, order);
        out.c1[i] = std::abs(r.c1_base);
        out.ratio[i] = r.ratio;
    });
    out.fit = fit_rate(out.eps, out.c1, 1.0 - family.lambda1());
    return out;
}

}  // namespace cornerlab
