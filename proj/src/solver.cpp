#include "dma/solver.hpp"

#include <boost/math/tools/toms748_solve.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

namespace dma {

BoundaryData BoundaryData::quadratic(double a, Vec2 center, Vec2 b, double c)
{
    if (a < 0.0)
        throw std::invalid_argument("quadratic boundary data needs a >= 0 to be convex");
    BoundaryData g;
    g.kind = Kind::Quadratic;
    g.a = a;
    g.center = center;
    g.b = b;
    g.c = c;
    return g;
}

BoundaryData BoundaryData::cone(Vec2 center)
{
    BoundaryData g;
    g.kind = Kind::Cone;
    g.center = center;
    return g;
}

BoundaryData BoundaryData::ridge()
{
    BoundaryData g;
    g.kind = Kind::Ridge;
    return g;
}

BoundaryData BoundaryData::radial_power(double p, Vec2 center)
{
    if (p < 1.0)
        throw std::invalid_argument("radial power needs p >= 1 to be convex");
    BoundaryData g;
    g.kind = Kind::RadialPower;
    g.p = p;
    g.center = center;
    return g;
}

BoundaryData BoundaryData::affine(Vec2 b, double c)
{
    BoundaryData g;
    g.kind = Kind::Affine;
    g.b = b;
    g.c = c;
    return g;
}

double BoundaryData::operator()(const Vec2& x) const
{
    switch (kind) {
    case Kind::Quadratic: return 0.5 * a * (x - center).squaredNorm() + b.dot(x) + c;
    case Kind::Cone: return (x - center).norm();
    case Kind::Ridge: return std::abs(x.x());
    case Kind::RadialPower: return std::pow((x - center).norm(), p) / p;
    case Kind::Affine: return b.dot(x) + c;
    }
    return 0.0;
}

std::string BoundaryData::name() const
{
    switch (kind) {
    case Kind::Quadratic: return "quadratic";
    case Kind::Cone: return "cone";
    case Kind::Ridge: return "ridge";
    case Kind::RadialPower: return "radial_power";
    case Kind::Affine: return "affine";
    }
    return "unknown";
}

double default_epsilon(const LatticeDomain& d, const BoundaryData& g)
{
    double gmax = 1.0;
    for (int idx = 0; idx < d.size(); ++idx)
        gmax = std::max(gmax, std::abs(g(d.coords(idx))));
    return 1e-10 * d.h() * d.h() / gmax;
}

double default_tolerance(const LatticeDomain& d) { return 1e-8 * d.h() * d.h(); }

DiscreteScheme::DiscreteScheme(const DiscretizedSource& f, const SolverConfig& cfg, double epsilon, bool mixed,
                               std::vector<int> dirac_points)
    : domain_(f.f.domain_ptr()),
      stencil_(domain_, cfg.policy),
      op_(cfg.op),
      angle_refinement_(cfg.angle_refinement),
      epsilon_(epsilon),
      mixed_(mixed),
      dirac_flag_(domain_->size(), 0),
      target_(Eigen::VectorXd::Zero(domain_->size()))
{
    if (epsilon < 0.0)
        throw std::invalid_argument("epsilon must be >= 0");
    const double h2 = domain_->h() * domain_->h();
    for (int idx : dirac_points) {
        if (idx < 0 || idx >= domain_->size() || !domain_->is_interior(idx))
            throw std::invalid_argument("Dirac points must be interior mesh points");
        dirac_flag_[idx] = 1;
    }
    for (int idx : domain_->interior()) {
        if (f.f[idx] < 0.0)
            throw std::invalid_argument("right-hand side f must be nonnegative");
        if (mixed_ && !dirac_flag_[idx] && f.f[idx] != 0.0)
            throw std::invalid_argument("mixed scheme needs f = 0 away from the Dirac points");
        target_[idx] = h2 * f.f[idx];
    }
}

DiscreteScheme::DiscreteScheme(const DiscretizedSource& f, const SolverConfig& cfg, double epsilon)
    : DiscreteScheme(f, cfg, epsilon, false, {})
{
}

DiscreteScheme DiscreteScheme::mixed(const DiscretizedSource& f, std::vector<int> dirac_points,
                                     const SolverConfig& cfg, double epsilon)
{
    return DiscreteScheme(f, cfg, epsilon, true, std::move(dirac_points));
}

OperatorKind DiscreteScheme::operator_at(int idx) const
{
    if (!mixed_)
        return op_;
    return dirac_flag_[idx] ? OperatorKind::MA3 : OperatorKind::MA0;
}

double DiscreteScheme::measure_at(const MeshFunction& v, int idx) const
{
    return evaluate(operator_at(idx), v, stencil_.at(idx), angle_refinement_);
}

double DiscreteScheme::residual_at(const MeshFunction& v, int idx) const
{
    return target_[idx] - std::max(measure_at(v, idx), 0.0) + epsilon_ * v[idx];
}

Eigen::VectorXd DiscreteScheme::residual(const MeshFunction& v) const
{
    Eigen::VectorXd r = Eigen::VectorXd::Zero(domain_->size());
    for (int idx : domain_->interior())
        r[idx] = residual_at(v, idx);
    return r;
}

namespace {

double resolved_epsilon(const MeshFunction& v, const SolverConfig& cfg)
{
    if (cfg.epsilon)
        return *cfg.epsilon;
    const double vmax = std::max(1.0, v.values().cwiseAbs().maxCoeff());
    return 1e-10 * v.domain().h() * v.domain().h() / vmax;
}

// maxCoeff skips NaN, so non-finite entries are reported explicitly.
double sup_norm(const Eigen::VectorXd& r)
{
    if (!r.allFinite())
        return std::numeric_limits<double>::quiet_NaN();
    return r.size() ? r.cwiseAbs().maxCoeff() : 0.0;
}

/// Moves v[idx] to the root of t -> F(v | v(idx) = t). The bracket is widened
/// geometrically from the current value in the direction that reduces |F|.
/// Returns false, leaving v unchanged, when no sign change was found.
bool local_solve(const DiscreteScheme& scheme, MeshFunction& v, int idx, double f0)
{
    const double start = v[idx];
    // F is nondecreasing in v(idx): F > 0 means the root lies below.
    const double sign = f0 > 0.0 ? -1.0 : 1.0;
    auto at = [&](double t) {
        v[idx] = t;
        return scheme.residual_at(v, idx);
    };
    const double h2 = scheme.domain().h() * scheme.domain().h();
    double step = std::max(std::abs(f0), 1e-3 * h2);
    double near = start, far = start;
    double g_near = f0, g_far = f0;
    bool bracketed = false;
    for (int expand = 0; expand < 60; ++expand) {
        far = start + sign * step;
        g_far = at(far);
        if ((g_far > 0.0) != (g_near > 0.0) || g_far == 0.0) {
            bracketed = true;
            break;
        }
        near = far;
        g_near = g_far;
        step *= 2.0;
    }
    if (!bracketed) {
        v[idx] = start;
        return false;
    }
    if (g_far == 0.0) {
        v[idx] = far;
        return true;
    }
    const bool near_low = near < far;
    double lo = near_low ? near : far, hi = near_low ? far : near;
    double g_lo = near_low ? g_near : g_far, g_hi = near_low ? g_far : g_near;
    std::uintmax_t max_iter = 100;
    const auto bounds = boost::math::tools::toms748_solve(at, lo, hi, g_lo, g_hi,
                                                          boost::math::tools::eps_tolerance<double>(50), max_iter);
    v[idx] = 0.5 * (bounds.first + bounds.second);
    return true;
}

/// Interior values are averaged from the coarse points surrounding each fine
/// point (bilinear on the lattice); points without a full set of coarse
/// parents, and the boundary set, take g̃.
MeshFunction prolong(const MeshFunction& coarse, const DomainPtr& fine, const BoundaryData& g)
{
    MeshFunction out = MeshFunction::restrict(fine, [&g](const Vec2& x) { return g(x); });
    const LatticeDomain& dc = coarse.domain();
    for (int idx : fine->interior()) {
        const LatticePoint& m = fine->point(idx);
        const int x0 = m.x() >> 1, x1 = (m.x() + 1) >> 1;
        const int y0 = m.y() >> 1, y1 = (m.y() + 1) >> 1;
        double sum = 0.0;
        int count = 0;
        bool complete = true;
        for (int px : {x0, x1}) {
            for (int py : {y0, y1}) {
                const int c = dc.index_of(LatticePoint(px, py));
                if (c < 0) {
                    complete = false;
                    continue;
                }
                sum += coarse[c];
                ++count;
            }
        }
        if (complete)
            out[idx] = sum / count;
    }
    return out;
}

int nearest_interior(const LatticeDomain& d, const Vec2& x)
{
    int best = -1;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int idx : d.interior()) {
        const double dist = (d.coords(idx) - x).squaredNorm();
        if (dist < best_dist) {
            best = idx;
            best_dist = dist;
        }
    }
    return best;
}

/// Moves each fine point mass h^2 f(x) to a coarse interior point next to x.
DiscretizedSource coarsen(const DiscretizedSource& f, const DomainPtr& dc)
{
    const LatticeDomain& d = f.f.domain();
    DiscretizedSource out{MeshFunction(dc, 0.0), 0.0, {}, {}};
    const double h2 = d.h() * d.h();
    const double hc2 = dc->h() * dc->h();
    std::vector<int> target(d.size(), -1);
    for (int idx : d.interior()) {
        if (f.f[idx] == 0.0)
            continue;
        const LatticePoint& m = d.point(idx);
        int c = dc->index_of(LatticePoint(m.x() >> 1, m.y() >> 1));
        if (c < 0 || !dc->is_interior(c))
            c = nearest_interior(*dc, d.coords(idx));
        target[idx] = c;
        out.f[c] += h2 * f.f[idx] / hc2;
    }
    for (int idx : f.dirac_points) {
        const int c = target[idx] >= 0 ? target[idx] : nearest_interior(*dc, d.coords(idx));
        if (std::find(out.dirac_points.begin(), out.dirac_points.end(), c) == out.dirac_points.end())
            out.dirac_points.push_back(c);
    }
    out.total = hc2 * out.f.values().sum();
    return out;
}

}  // namespace

MeshFunction residual(const MeshFunction& v, const DiscretizedSource& f, const SolverConfig& cfg)
{
    const DiscreteScheme scheme(f, cfg, resolved_epsilon(v, cfg));
    return MeshFunction(v.domain_ptr(), scheme.residual(v));
}

MeshFunction euler_step(const MeshFunction& v, const DiscretizedSource& f, const SolverConfig& cfg,
                        double nu_current)
{
    const DiscreteScheme scheme(f, cfg, resolved_epsilon(v, cfg));
    MeshFunction next = v;
    next.values() -= nu_current * scheme.residual(v);
    return next;
}

SolveReport iterate(const DiscreteScheme& scheme, MeshFunction init, const SolverConfig& cfg)
{
    if (!(cfg.nu > 0.0 && cfg.nu <= 1.0))
        throw std::invalid_argument("damping nu must lie in (0, 1]");
    if (cfg.max_iter < 0)
        throw std::invalid_argument("max_iter must be >= 0");

    const LatticeDomain& d = scheme.domain();
    SolveReport report;
    report.tol = cfg.tol.value_or(default_tolerance(d));
    report.epsilon = scheme.epsilon();
    report.mixed = scheme.is_mixed();

    MeshFunction v = std::move(init);
    Eigen::VectorXd r = scheme.residual(v);
    double r_sup = sup_norm(r);
    if (!std::isfinite(r_sup))
        throw NumericalBreakdown("non-finite residual at iteration 0");
    report.residual_history.push_back(r_sup);
    double nu = cfg.nu;

    // Gauss-Seidel also stops only once a sweep moves no value by more than
    // tol: where the clamped operator vanishes the residual alone cannot tell
    // a point sitting above its convex envelope from a solved one.
    const bool gauss_seidel = cfg.sweep == SweepKind::GaussSeidel;
    double max_update = gauss_seidel ? std::numeric_limits<double>::infinity() : 0.0;
    auto done = [&] { return r_sup <= report.tol && max_update <= report.tol; };
    int it = 0;
    while (!done() && it < cfg.max_iter) {
        ++it;
        if (!gauss_seidel) {
            MeshFunction next = v;
            next.values() -= nu * r;
            Eigen::VectorXd r_next = scheme.residual(next);
            const double next_sup = sup_norm(r_next);
            if (!std::isfinite(next_sup)) {
                std::ostringstream os;
                os << "non-finite residual at iteration " << it;
                throw NumericalBreakdown(os.str());
            }
            if (next_sup > r_sup) {
                nu *= 0.5;
                ++report.backtracks;
                continue;
            }
            v = std::move(next);
            r = std::move(r_next);
            r_sup = next_sup;
        } else {
            // Points this close to their root are left alone.
            const double skip = scheme.epsilon() > 0.0 ? 1e-3 * scheme.epsilon() : 1e-3 * report.tol;
            max_update = 0.0;
            for (int idx : d.interior()) {
                const double f0 = scheme.residual_at(v, idx);
                if (std::abs(f0) <= skip)
                    continue;
                const double before = v[idx];
                if (!local_solve(scheme, v, idx, f0))
                    v[idx] -= nu * f0;
                max_update = std::max(max_update, std::abs(v[idx] - before));
            }
            r = scheme.residual(v);
            r_sup = sup_norm(r);
            if (!std::isfinite(r_sup)) {
                std::ostringstream os;
                os << "non-finite residual at iteration " << it;
                throw NumericalBreakdown(os.str());
            }
        }
        report.residual_history.push_back(r_sup);
    }

    report.iterations = it;
    report.converged = done();
    report.final_residual = r_sup;
    report.final_nu = nu;
    report.convexity_defect = convexity_defect(v, StencilPolicy::nine_point());
    report.stability = stability_diagnostic(v, d, scheme.stencil().policy());
    for (int idx : d.interior())
        report.measure_total += scheme.measure_at(v, idx);
    if (report.convexity_defect > 1e-7) {
        std::ostringstream os;
        os.precision(17);
        os << "solution is not discretely convex: nine-point defect " << report.convexity_defect;
        report.notes.push_back(os.str());
    }
    if (scheme.is_mixed() || cfg.op == OperatorKind::MA3)
        report.notes.push_back("ma3 quadrature includes the closing interval [theta_2N, theta_1 + 2 pi)");
    if (scheme.is_mixed())
        report.notes.push_back("mixed scheme: Dirac targets are point masses h^2 f(x), ma0 = 0 elsewhere");
    report.solution = std::move(v);
    return report;
}

namespace {

SolveReport solve_levels(const DomainPtr& d, const DiscretizedSource& f, const std::vector<int>& dirac_points,
                         const BoundaryData& g, const SolverConfig& cfg, double eps, bool mixed, int levels)
{
    MeshFunction init = cfg.init == InitKind::Harmonic
                            ? harmonic_init(d, g)
                            : MeshFunction::restrict(d, [&g](const Vec2& x) { return g(x); });
    std::vector<std::string> level_notes;
    if (levels > 0) {
        DomainPtr dc;
        try {
            dc = build_domain(d->shape(), 2.0 * d->h());
        } catch (const DomainError&) {
        }
        if (dc) {
            const DiscretizedSource fc = coarsen(f, dc);
            SolverConfig coarse_cfg = cfg;
            if (cfg.tol)
                coarse_cfg.tol = 4.0 * *cfg.tol;
            const SolveReport rc =
                solve_levels(dc, fc, fc.dirac_points, g, coarse_cfg, 4.0 * eps, mixed, levels - 1);
            init = prolong(rc.solution, d, g);
            for (const std::string& note : rc.notes)
                if (note.rfind("coarse level", 0) == 0)
                    level_notes.push_back(note);
            std::ostringstream os;
            os.precision(17);
            os << "coarse level h=" << dc->h() << ": " << rc.iterations << " sweeps, residual "
               << rc.final_residual << (rc.converged ? "" : " (not converged)");
            level_notes.push_back(os.str());
        }
    }
    const DiscreteScheme scheme =
        mixed ? DiscreteScheme::mixed(f, dirac_points, cfg, eps) : DiscreteScheme(f, cfg, eps);
    SolveReport report = iterate(scheme, std::move(init), cfg);
    report.notes.insert(report.notes.begin(), level_notes.begin(), level_notes.end());
    return report;
}

void check_inputs(const DomainPtr& d, const DiscretizedSource& f, const SolverConfig& cfg)
{
    if (f.f.domain_ptr() != d)
        throw std::invalid_argument("source was discretized on a different lattice");
    if (cfg.coarse_levels < 0)
        throw std::invalid_argument("coarse_levels must be >= 0");
    if (cfg.coarse_levels > 0 && cfg.sweep != SweepKind::GaussSeidel)
        throw std::invalid_argument("coarse_levels needs the gauss_seidel sweep");
}

}  // namespace

SolveReport solve(const DomainPtr& d, const DiscretizedSource& f, const BoundaryData& g, const SolverConfig& cfg)
{
    check_inputs(d, f, cfg);
    const double eps = cfg.epsilon.value_or(default_epsilon(*d, g));
    return solve_levels(d, f, {}, g, cfg, eps, false, cfg.coarse_levels);
}

SolveReport solve_mixed(const DomainPtr& d, const std::vector<int>& dirac_points, const DiscretizedSource& f,
                        const BoundaryData& g, const SolverConfig& cfg)
{
    check_inputs(d, f, cfg);
    const double eps = cfg.epsilon.value_or(default_epsilon(*d, g));
    return solve_levels(d, f, dirac_points, g, cfg, eps, true, cfg.coarse_levels);
}

StabilityDiagnostic stability_diagnostic(const MeshFunction& v, const LatticeDomain& d, StencilPolicy policy)
{
    StabilityDiagnostic s;
    const Stencil stencil(v.domain_ptr(), policy);
    for (int idx : d.interior()) {
        s.alpha = std::max(s.alpha, std::abs(v[idx]));
        s.measure_sum += ma2(v, stencil.at(idx));
    }
    for (int idx : d.boundary())
        s.boundary_max = std::max(s.boundary_max, std::abs(v[idx]));
    s.raw_bound = 2.0 * d.diameter_bound() * std::sqrt(s.measure_sum / std::numbers::pi);
    s.bound = s.raw_bound + s.boundary_max;
    s.satisfied = s.alpha <= s.bound;
    s.raw_satisfied = s.alpha <= s.raw_bound;
    return s;
}

MeshFunction harmonic_init(const DomainPtr& d, const BoundaryData& g)
{
    MeshFunction w = MeshFunction::restrict(d, [&g](const Vec2& x) { return g(x); });
    const auto interior = d->interior();
    std::vector<std::array<int, 4>> nbr(interior.size());
    for (std::size_t i = 0; i < interior.size(); ++i) {
        const LatticePoint& m = d->point(interior[i]);
        nbr[i] = {d->index_of(m + LatticePoint(1, 0)), d->index_of(m - LatticePoint(1, 0)),
                  d->index_of(m + LatticePoint(0, 1)), d->index_of(m - LatticePoint(0, 1))};
    }
    constexpr double omega = 0.9;
    constexpr double target = 1e-10;
    Eigen::VectorXd next = w.values();
    for (int sweep = 0; sweep < 10000000; ++sweep) {
        double worst = 0.0;
        for (std::size_t i = 0; i < interior.size(); ++i) {
            const auto& n = nbr[i];
            const double avg = 0.25 * (w[n[0]] + w[n[1]] + w[n[2]] + w[n[3]]);
            const double defect = avg - w[interior[i]];
            worst = std::max(worst, std::abs(defect));
            next[interior[i]] = w[interior[i]] + omega * defect;
        }
        if (worst <= target)
            break;
        w.values() = next;
    }
    return w;
}

}  // namespace dma
