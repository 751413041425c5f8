#include "dma/measure.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace dma {

double Density::operator()(const Vec2& x) const
{
    switch (kind) {
    case Kind::Zero: return 0.0;
    case Kind::Constant: return c;
    case Kind::RadialPower: {
        const double r = (x - center).norm();
        return (p - 1.0) * std::pow(r, 2.0 * p - 4.0);
    }
    }
    return 0.0;
}

std::string Density::name() const
{
    switch (kind) {
    case Kind::Zero: return "zero";
    case Kind::Constant: return "constant";
    case Kind::RadialPower: return "radial_power";
    }
    return "unknown";
}

bool BorelBox::on_boundary(const Vec2& x, double tol) const
{
    if (!contains(x, tol))
        return false;
    for (int k = 0; k < 2; ++k)
        if (std::abs(x[k] - lo[k]) <= tol || std::abs(x[k] - hi[k]) <= tol)
            return true;
    return false;
}

std::string BorelBox::label() const
{
    std::ostringstream os;
    os.precision(17);
    os << '[' << lo.x() << ';' << hi.x() << "]x[" << lo.y() << ';' << hi.y() << ']';
    return os.str();
}

DiscretizedSource discretize_measure(const SourceMeasure& nu, const DomainPtr& d)
{
    DiscretizedSource out{MeshFunction(d, 0.0), 0.0, {}, {}};
    const double h = d->h();
    if (nu.density) {
        for (int idx : d->interior())
            out.f[idx] += (*nu.density)(d->coords(idx));
    }
    for (const DiracMass& dirac : nu.diracs) {
        if (!(dirac.mass > 0.0))
            throw std::invalid_argument("Dirac masses must be positive");
        if (!d->contains_open(dirac.at))
            throw std::invalid_argument("Dirac location lies outside the open domain");
        int best = -1;
        double best_dist = std::numeric_limits<double>::infinity();
        for (int idx : d->interior()) {
            const double dist = (d->coords(idx) - dirac.at).norm();
            const double slack = 1e-9 * h;
            if (dist < best_dist - slack) {
                best = idx;
                best_dist = dist;
            } else if (std::abs(dist - best_dist) <= slack) {
                const LatticePoint& a = d->point(idx);
                const LatticePoint& b = d->point(best);
                if (a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()))
                    best = idx;
            }
        }
        out.f[best] += dirac.mass / (h * h);
        if (std::find(out.dirac_points.begin(), out.dirac_points.end(), best) == out.dirac_points.end())
            out.dirac_points.push_back(best);
        if (best_dist > 2.0 * h) {
            std::ostringstream os;
            os << "Dirac at (" << dirac.at.x() << ", " << dirac.at.y() << ") snapped " << best_dist
               << " away (more than 2h)";
            out.warnings.push_back(os.str());
        }
    }
    out.total = h * h * out.f.values().sum();
    return out;
}

double counting_measure(const DiscretizedSource& f, const BorelBox& box)
{
    const LatticeDomain& d = f.f.domain();
    const double tol = d.geometric_tolerance();
    double sum = 0.0;
    for (int idx : d.interior())
        if (box.contains(d.coords(idx), tol))
            sum += f.f[idx];
    return d.h() * d.h() * sum;
}

double ma_measure_of_set(const MeshFunction& v, const BorelBox& box, OperatorKind op, const Stencil& stencil)
{
    if (op != OperatorKind::MA1 && op != OperatorKind::MA2)
        throw std::invalid_argument("measure of a set is defined for MA1 and MA2 only");
    const LatticeDomain& d = v.domain();
    const double tol = d.geometric_tolerance();
    double sum = 0.0;
    for (int idx : d.interior())
        if (box.contains(d.coords(idx), tol))
            sum += op == OperatorKind::MA1 ? ma1(v, stencil.at(idx)) : ma2(v, stencil.at(idx));
    return sum;
}

double ma_measure_of_set(const MeshFunction& v, const BorelBox& box, OperatorKind op, StencilPolicy policy)
{
    return ma_measure_of_set(v, box, op, Stencil(v.domain_ptr(), policy));
}

double density_integral(const Density& density, const LatticeDomain& d, const BorelBox& box, double tol)
{
    if (density.kind == Density::Kind::Zero)
        return 0.0;
    using boost::math::quadrature::gauss_kronrod;
    const auto [bb_lo, bb_hi] = d.bounding_box();
    const double x0 = std::max(box.lo.x(), bb_lo.x());
    const double x1 = std::min(box.hi.x(), bb_hi.x());
    if (!(x0 < x1))
        return 0.0;
    constexpr unsigned max_depth = 18;
    auto inner = [&](double x) {
        auto [y0, y1] = d.vertical_section(x);
        y0 = std::max(y0, box.lo.y());
        y1 = std::min(y1, box.hi.y());
        if (!(y0 < y1))
            return 0.0;
        if (density.kind == Density::Kind::Constant)
            return density.c * (y1 - y0);
        return gauss_kronrod<double, 15>::integrate([&](double y) { return density(Vec2(x, y)); }, y0, y1,
                                                    max_depth, tol);
    };
    return gauss_kronrod<double, 15>::integrate(inner, x0, x1, max_depth, tol);
}

double measure_of_box(const SourceMeasure& nu, const LatticeDomain& d, const BorelBox& box)
{
    double mass = nu.density ? density_integral(*nu.density, d, box) : 0.0;
    const double tol = d.geometric_tolerance();
    for (const DiracMass& dirac : nu.diracs) {
        if (box.on_boundary(dirac.at, tol))
            throw std::invalid_argument("box " + box.label() + " cuts a Dirac mass on its boundary");
        if (box.contains(dirac.at))
            mass += dirac.mass;
    }
    return mass;
}

double total_mass(const SourceMeasure& nu, const LatticeDomain& d)
{
    const auto [lo, hi] = d.bounding_box();
    const Vec2 pad = Vec2::Constant(1.0 + (hi - lo).norm());
    return measure_of_box(nu, d, BorelBox{lo - pad, hi + pad});
}

void validate_boxes(const SourceMeasure& nu, const std::vector<BorelBox>& boxes)
{
    for (const BorelBox& box : boxes) {
        if (!(box.lo.array() < box.hi.array()).all())
            throw std::invalid_argument("box " + box.label() + " needs lo < hi");
        const double tol = 1e-12 * (1.0 + (box.hi - box.lo).norm());
        for (const DiracMass& dirac : nu.diracs)
            if (box.on_boundary(dirac.at, tol))
                throw std::invalid_argument("box " + box.label() + " cuts a Dirac mass on its boundary");
    }
}

std::vector<WeakConvergenceRow> weak_convergence_report(
    const std::vector<std::pair<double, MeshFunction>>& v_per_h, const SourceMeasure& nu,
    const std::vector<BorelBox>& boxes, OperatorKind op, StencilPolicy policy)
{
    validate_boxes(nu, boxes);
    std::vector<WeakConvergenceRow> rows;
    for (const auto& [h, v] : v_per_h) {
        const Stencil stencil(v.domain_ptr(), policy);
        for (std::size_t b = 0; b < boxes.size(); ++b) {
            const double measured = ma_measure_of_set(v, boxes[b], op, stencil);
            const double expected = measure_of_box(nu, v.domain(), boxes[b]);
            rows.push_back({h, static_cast<int>(b), boxes[b].label(), measured, expected,
                            std::abs(measured - expected)});
        }
    }
    return rows;
}

}  // namespace dma
