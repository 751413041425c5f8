#include "dma/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

namespace dma {

StencilPolicy StencilPolicy::with_radius(int k)
{
    if (k < 1)
        throw std::invalid_argument("stencil radius must be >= 1");
    return {Kind::Radius, k};
}

std::string StencilPolicy::to_string() const
{
    switch (kind) {
    case Kind::NinePoint: return "nine_point";
    case Kind::Radius: return "radius(" + std::to_string(radius) + ")";
    case Kind::Full: return "full";
    }
    return "unknown";
}

int gcd_abs(int a, int b) { return std::gcd(std::abs(a), std::abs(b)); }

double direction_angle(const LatticePoint& m)
{
    double a = std::atan2(static_cast<double>(m.y()), static_cast<double>(m.x()));
    if (a < 0.0)
        a += 2.0 * std::numbers::pi;
    return a;
}

LatticePoint canonical_direction(const LatticePoint& m)
{
    if (m.y() > 0 || (m.y() == 0 && m.x() > 0))
        return m;
    return -m;
}

namespace {

std::vector<Vec2> normalized_polygon(std::vector<Vec2> v)
{
    if (v.size() < 3)
        throw DomainError("polygon domain needs at least 3 vertices");
    double area2 = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2& a = v[i];
        const Vec2& b = v[(i + 1) % v.size()];
        area2 += a.x() * b.y() - a.y() * b.x();
    }
    if (area2 == 0.0)
        throw DomainError("polygon domain has zero area");
    if (area2 < 0.0)
        std::reverse(v.begin(), v.end());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const Vec2 e0 = v[(i + 1) % v.size()] - v[i];
        const Vec2 e1 = v[(i + 2) % v.size()] - v[(i + 1) % v.size()];
        if (e0.x() * e1.y() - e0.y() * e1.x() < 0.0)
            throw DomainError("polygon domain is not convex");
    }
    return v;
}

}  // namespace

LatticeDomain::LatticeDomain(DomainShape shape, double h) : shape_(std::move(shape)), h_(h)
{
    if (!(h > 0.0) || !std::isfinite(h))
        throw DomainError("mesh length h must be positive");

    if (auto* r = std::get_if<Rectangle>(&shape_)) {
        if (!(r->lo.array() < r->hi.array()).all())
            throw DomainError("rectangle needs lo < hi in both coordinates");
    } else if (auto* c = std::get_if<Disc>(&shape_)) {
        if (!(c->radius > 0.0))
            throw DomainError("disc radius must be positive");
    } else {
        auto& p = std::get<PolygonShape>(shape_);
        p.vertices = normalized_polygon(std::move(p.vertices));
    }

    const auto [bb_lo, bb_hi] = bounding_box();
    tol_ = 1e-12 * (bb_hi - bb_lo).norm();

    std::visit(
        [this](const auto& s) {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rectangle>) {
                for (double x : {s.lo.x(), s.hi.x()})
                    for (double y : {s.lo.y(), s.hi.y()})
                        diameter_bound_ = std::max(diameter_bound_, Vec2(x, y).norm());
            } else if constexpr (std::is_same_v<S, Disc>) {
                diameter_bound_ = s.center.norm() + s.radius;
            } else {
                for (const Vec2& v : s.vertices)
                    diameter_bound_ = std::max(diameter_bound_, v.norm());
            }
        },
        shape_);

    for (int k = 0; k < 2; ++k) {
        lo_[k] = static_cast<int>(std::ceil((bb_lo[k] - tol_) / h_));
        hi_[k] = static_cast<int>(std::floor((bb_hi[k] + tol_) / h_));
    }
    const LatticePoint span = hi_ - lo_ + LatticePoint::Ones();
    if ((span.array() <= 0).any())
        throw DomainError("no lattice point inside the domain");
    extent_ = std::max(span.x(), span.y()) - 1;

    grid_.assign(static_cast<std::size_t>(span.x()) * span.y(), -1);
    // Row-major in (y, x): lexicographic order with x fastest.
    for (int j = lo_.y(); j <= hi_.y(); ++j) {
        for (int i = lo_.x(); i <= hi_.x(); ++i) {
            const LatticePoint m(i, j);
            if (!contains_closed(m.cast<double>() * h_))
                continue;
            grid_[static_cast<std::size_t>(j - lo_.y()) * span.x() + (i - lo_.x())] =
                static_cast<int>(points_.size());
            points_.push_back(m);
        }
    }

    interior_flag_.assign(points_.size(), 0);
    for (int idx = 0; idx < size(); ++idx) {
        const LatticePoint& m = points_[idx];
        bool inside = contains_open(coords(idx));
        for (int k = 0; k < 2 && inside; ++k) {
            LatticePoint r = LatticePoint::Zero();
            r[k] = 1;
            inside = in_closure(m + r) && in_closure(m - r);
        }
        interior_flag_[idx] = inside ? 1 : 0;
        (inside ? interior_ : boundary_).push_back(idx);
    }
}

int LatticeDomain::index_of(const LatticePoint& m) const
{
    if (m.x() < lo_.x() || m.x() > hi_.x() || m.y() < lo_.y() || m.y() > hi_.y())
        return -1;
    const int width = hi_.x() - lo_.x() + 1;
    return grid_[static_cast<std::size_t>(m.y() - lo_.y()) * width + (m.x() - lo_.x())];
}

double LatticeDomain::signed_distance(const Vec2& x) const
{
    return std::visit(
        [&x](const auto& s) -> double {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rectangle>) {
                return std::max({s.lo.x() - x.x(), x.x() - s.hi.x(), s.lo.y() - x.y(),
                                 x.y() - s.hi.y()});
            } else if constexpr (std::is_same_v<S, Disc>) {
                return (x - s.center).norm() - s.radius;
            } else {
                double d = -std::numeric_limits<double>::infinity();
                const auto& v = s.vertices;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const Vec2 edge = v[(i + 1) % v.size()] - v[i];
                    const Vec2 outward(edge.y(), -edge.x());
                    d = std::max(d, outward.dot(x - v[i]) / outward.norm());
                }
                return d;
            }
        },
        shape_);
}

bool LatticeDomain::contains_closed(const Vec2& x) const { return signed_distance(x) <= tol_; }
bool LatticeDomain::contains_open(const Vec2& x) const { return signed_distance(x) < -tol_; }

std::pair<Vec2, Vec2> LatticeDomain::bounding_box() const
{
    return std::visit(
        [](const auto& s) -> std::pair<Vec2, Vec2> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rectangle>) {
                return {s.lo, s.hi};
            } else if constexpr (std::is_same_v<S, Disc>) {
                return {s.center.array() - s.radius, s.center.array() + s.radius};
            } else {
                Vec2 lo = s.vertices.front(), hi = s.vertices.front();
                for (const Vec2& v : s.vertices) {
                    lo = lo.cwiseMin(v);
                    hi = hi.cwiseMax(v);
                }
                return {lo, hi};
            }
        },
        shape_);
}

std::pair<double, double> LatticeDomain::vertical_section(double x) const
{
    static constexpr double inf = std::numeric_limits<double>::infinity();
    return std::visit(
        [x](const auto& s) -> std::pair<double, double> {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rectangle>) {
                if (x < s.lo.x() || x > s.hi.x())
                    return {inf, -inf};
                return {s.lo.y(), s.hi.y()};
            } else if constexpr (std::is_same_v<S, Disc>) {
                const double dx = x - s.center.x();
                if (std::abs(dx) > s.radius)
                    return {inf, -inf};
                const double half = std::sqrt(s.radius * s.radius - dx * dx);
                return {s.center.y() - half, s.center.y() + half};
            } else {
                double lo = inf, hi = -inf;
                const auto& v = s.vertices;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    const Vec2& a = v[i];
                    const Vec2& b = v[(i + 1) % v.size()];
                    if (x < std::min(a.x(), b.x()) || x > std::max(a.x(), b.x()))
                        continue;
                    if (a.x() == b.x()) {
                        lo = std::min({lo, a.y(), b.y()});
                        hi = std::max({hi, a.y(), b.y()});
                        continue;
                    }
                    const double t = (x - a.x()) / (b.x() - a.x());
                    const double y = a.y() + t * (b.y() - a.y());
                    lo = std::min(lo, y);
                    hi = std::max(hi, y);
                }
                return {lo, hi};
            }
        },
        shape_);
}

DomainPtr build_domain(const DomainShape& shape, double h)
{
    auto d = std::make_shared<const LatticeDomain>(shape, h);
    if (d->interior().empty())
        throw DomainError("empty interior: mesh length h is too large for the domain");
    return d;
}

MeshFunction::MeshFunction(DomainPtr domain, double fill)
    : domain_(std::move(domain)), values_(Eigen::VectorXd::Constant(domain_->size(), fill))
{
}

MeshFunction::MeshFunction(DomainPtr domain, Eigen::VectorXd values)
    : domain_(std::move(domain)), values_(std::move(values))
{
    if (values_.size() != domain_->size())
        throw std::invalid_argument("mesh function size does not match the lattice");
}

MeshFunction MeshFunction::restrict(DomainPtr domain, const std::function<double(const Vec2&)>& p)
{
    MeshFunction v(std::move(domain));
    for (int idx = 0; idx < v.domain().size(); ++idx)
        v[idx] = p(v.domain().coords(idx));
    return v;
}

double MeshFunction::at(const LatticePoint& m) const
{
    const int idx = domain_->index_of(m);
    if (idx < 0)
        throw std::out_of_range("lattice point outside the closed domain");
    return values_[idx];
}

double delta_e(const MeshFunction& v, const LatticePoint& x, const LatticePoint& e)
{
    const LatticeDomain& d = v.domain();
    const int c = d.index_of(x);
    const int fwd = d.index_of(x + e);
    const int bwd = d.index_of(x - e);
    if (c < 0 || fwd < 0 || bwd < 0)
        throw InadmissibleDirection("inadmissible direction: x +- e leaves the closed domain");
    return v[fwd] - 2.0 * v[c] + v[bwd];
}

std::vector<LatticeDirection> admissible_directions(const LatticeDomain& d, const LatticePoint& x,
                                                    StencilPolicy policy)
{
    const int cap = policy.cap(d.lattice_extent());
    std::vector<LatticeDirection> out;
    for (int b = 0; b <= cap; ++b) {
        for (int a = -cap; a <= cap; ++a) {
            if (b == 0 && a <= 0)
                continue;
            if (gcd_abs(a, b) != 1)
                continue;
            const LatticePoint e(a, b);
            if (!d.in_closure(x + e) || !d.in_closure(x - e))
                continue;
            out.push_back({e, true, direction_angle(e)});
        }
    }
    std::sort(out.begin(), out.end(),
              [](const LatticeDirection& l, const LatticeDirection& r) { return l.angle < r.angle; });
    return out;
}

std::vector<OrthogonalBasis> orthogonal_bases(const LatticeDomain& d, const LatticePoint& x,
                                              StencilPolicy policy)
{
    std::vector<OrthogonalBasis> out;
    for (const LatticeDirection& dir : admissible_directions(d, x, policy)) {
        if (dir.angle >= std::numbers::pi / 2)
            continue;
        const LatticePoint perp = rot90(dir.step);
        if (d.in_closure(x + perp) && d.in_closure(x - perp))
            out.push_back({dir.step, perp});
    }
    return out;
}

}  // namespace dma
