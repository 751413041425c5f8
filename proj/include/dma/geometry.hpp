#ifndef DMA_GEOMETRY_HPP
#define DMA_GEOMETRY_HPP

// Exact 2D convex geometry in gradient space: half-plane clipping, polygon
// areas and intersections, and a brute-force rasterization oracle.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <span>
#include <vector>

namespace dma {

template <typename Scalar>
using Point2 = Eigen::Matrix<Scalar, 2, 1>;

/// {p : normal . p <= offset}
template <typename Scalar>
struct HalfPlane {
    Point2<Scalar> normal;
    Scalar offset;

    Scalar excess(const Point2<Scalar>& p) const { return normal.dot(p) - offset; }
};

/// {p : lower <= p . e <= upper}
template <typename Scalar>
struct SlabConstraint {
    Point2<Scalar> e;
    Scalar lower;
    Scalar upper;

    HalfPlane<Scalar> upper_half() const { return {e, upper}; }
    HalfPlane<Scalar> lower_half() const { return {-e, -lower}; }
    bool contains(const Point2<Scalar>& p) const
    {
        const Scalar s = p.dot(e);
        return lower <= s && s <= upper;
    }
};

/// Counterclockwise vertex list. Zero, one or two vertices are legitimate
/// (empty, point, segment) and have area zero.
template <typename Scalar>
class ConvexPolygon {
public:
    using Point = Point2<Scalar>;

    ConvexPolygon() = default;
    explicit ConvexPolygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {}

    static ConvexPolygon box(const Point& lo, const Point& hi)
    {
        return ConvexPolygon({lo, Point(hi.x(), lo.y()), hi, Point(lo.x(), hi.y())});
    }

    const std::vector<Point>& vertices() const { return vertices_; }
    std::vector<Point>& vertices() { return vertices_; }
    std::size_t size() const { return vertices_.size(); }
    bool empty() const { return vertices_.empty(); }

    /// Bounding-box diagonal; the length scale for tolerances.
    Scalar scale() const
    {
        if (vertices_.empty())
            return Scalar(0);
        Point lo = vertices_.front(), hi = vertices_.front();
        for (const Point& v : vertices_) {
            lo = lo.cwiseMin(v);
            hi = hi.cwiseMax(v);
        }
        return (hi - lo).norm();
    }

    Scalar perimeter() const
    {
        Scalar s(0);
        for (std::size_t i = 0; i < vertices_.size(); ++i)
            s += (vertices_[(i + 1) % vertices_.size()] - vertices_[i]).norm();
        return s;
    }

private:
    std::vector<Point> vertices_;
};

using ConvexPolygond = ConvexPolygon<double>;
using HalfPlaned = HalfPlane<double>;
using SlabConstraintd = SlabConstraint<double>;

namespace detail {

template <typename Scalar>
void drop_repeated_vertices(std::vector<Point2<Scalar>>& v, Scalar tol)
{
    if (v.size() < 2)
        return;
    std::size_t w = 1;
    for (std::size_t r = 1; r < v.size(); ++r) {
        if ((v[r] - v[w - 1]).norm() > tol)
            v[w++] = v[r];
    }
    v.resize(w);
    while (v.size() > 1 && (v.back() - v.front()).norm() <= tol)
        v.pop_back();
}

/// Sutherland-Hodgman step for one half-plane; `out` is overwritten.
/// Returns false when every vertex was already inside (out untouched).
template <typename Scalar>
bool clip_into(const std::vector<Point2<Scalar>>& in, const HalfPlane<Scalar>& hp, Scalar tol,
               std::vector<Point2<Scalar>>& out, std::vector<Scalar>& excess)
{
    const std::size_t n = in.size();
    const Scalar slack = tol * hp.normal.norm();
    excess.resize(n);
    bool all_in = true;
    bool any_in = false;
    for (std::size_t i = 0; i < n; ++i) {
        excess[i] = hp.excess(in[i]);
        const bool inside = excess[i] <= slack;
        all_in = all_in && inside;
        any_in = any_in || inside;
    }
    if (all_in)
        return false;
    out.clear();
    if (!any_in)
        return true;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t j = (i + 1) % n;
        const bool in_i = excess[i] <= slack;
        const bool in_j = excess[j] <= slack;
        if (in_i)
            out.push_back(in[i]);
        if (in_i != in_j) {
            const Scalar denom = excess[i] - excess[j];
            Scalar t = denom != Scalar(0) ? excess[i] / denom : Scalar(0);
            t = std::clamp(t, Scalar(0), Scalar(1));
            out.push_back(in[i] + t * (in[j] - in[i]));
        }
    }
    drop_repeated_vertices(out, tol);
    return true;
}

template <typename Scalar>
std::vector<HalfPlane<Scalar>> bounding_half_planes(const ConvexPolygon<Scalar>& b)
{
    using Point = Point2<Scalar>;
    const auto& v = b.vertices();
    std::vector<HalfPlane<Scalar>> hps;
    if (v.size() >= 3) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            const Point d = v[(i + 1) % v.size()] - v[i];
            const Point outward(d.y(), -d.x());
            hps.push_back({outward, outward.dot(v[i])});
        }
    } else if (v.size() == 2) {
        const Point d = v[1] - v[0];
        const Point n(d.y(), -d.x());
        hps.push_back({n, n.dot(v[0])});
        hps.push_back({-n, -n.dot(v[0])});
        hps.push_back({d, d.dot(v[1])});
        hps.push_back({-d, -d.dot(v[0])});
    } else if (v.size() == 1) {
        for (int k = 0; k < 2; ++k) {
            Point n = Point::Zero();
            n[k] = Scalar(1);
            hps.push_back({n, v[0][k]});
            hps.push_back({-n, -v[0][k]});
        }
    }
    return hps;
}

}  // namespace detail

/// Shoelace area; zero for empty, point and segment.
template <typename Scalar>
Scalar area(const ConvexPolygon<Scalar>& poly)
{
    const auto& v = poly.vertices();
    if (v.size() < 3)
        return Scalar(0);
    Scalar twice(0);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) {
        const Point2<Scalar> a = v[i] - v[0];
        const Point2<Scalar> b = v[i + 1] - v[0];
        twice += a.x() * b.y() - a.y() * b.x();
    }
    return std::abs(twice) / Scalar(2);
}

template <typename Scalar>
ConvexPolygon<Scalar> clip(const ConvexPolygon<Scalar>& poly, const HalfPlane<Scalar>& hp,
                           Scalar rel_tol = Scalar(1e-12))
{
    const Scalar tol = rel_tol * std::max(poly.scale(), Scalar(1e-300));
    std::vector<Point2<Scalar>> out;
    std::vector<Scalar> scratch;
    if (!detail::clip_into(poly.vertices(), hp, tol, out, scratch))
        return poly;
    return ConvexPolygon<Scalar>(std::move(out));
}

template <typename Scalar>
ConvexPolygon<Scalar> polygon_intersect(const ConvexPolygon<Scalar>& a, const ConvexPolygon<Scalar>& b,
                                        Scalar rel_tol = Scalar(1e-12))
{
    if (a.empty() || b.empty())
        return {};
    const Scalar tol = rel_tol * std::max({a.scale(), b.scale(), Scalar(1e-300)});
    std::vector<Point2<Scalar>> cur = a.vertices(), next;
    std::vector<Scalar> scratch;
    for (const auto& hp : detail::bounding_half_planes(b)) {
        if (detail::clip_into(cur, hp, tol, next, scratch))
            cur.swap(next);
        if (cur.empty())
            break;
    }
    return ConvexPolygon<Scalar>(std::move(cur));
}

template <typename Scalar>
struct ClipResult {
    ConvexPolygon<Scalar> polygon;
    /// A seed-box edge survived although both axis directions were constrained.
    bool seed_box_active = false;
};

/// Box of the axis-aligned slabs, inflated by a factor 2 about its centre.
/// Empty optional when an axis slab is inverted (lower > upper) or an axis is
/// unconstrained.
template <typename Scalar>
std::optional<ConvexPolygon<Scalar>> seed_box(std::span<const SlabConstraint<Scalar>> constraints)
{
    using Point = Point2<Scalar>;
    constexpr Scalar inf = std::numeric_limits<Scalar>::infinity();
    Point lo(-inf, -inf), hi(inf, inf);
    for (const auto& c : constraints) {
        for (int k = 0; k < 2; ++k) {
            if (c.e[1 - k] != Scalar(0) || c.e[k] == Scalar(0))
                continue;
            Scalar a = c.lower / c.e[k], b = c.upper / c.e[k];
            if (c.e[k] < Scalar(0))
                std::swap(a, b);
            lo[k] = std::max(lo[k], a);
            hi[k] = std::min(hi[k], b);
        }
    }
    if (!std::isfinite(lo.x()) || !std::isfinite(lo.y()) || !std::isfinite(hi.x()) ||
        !std::isfinite(hi.y()))
        return std::nullopt;
    if (lo.x() > hi.x() || lo.y() > hi.y())
        return std::nullopt;
    const Point center = (lo + hi) / Scalar(2);
    const Point half = (hi - lo) / Scalar(2);
    const Scalar pad = Scalar(1e-6) * (Scalar(1) + center.cwiseAbs().maxCoeff() + half.maxCoeff());
    const Point w = Scalar(2) * half + Point::Constant(pad);
    return ConvexPolygon<Scalar>::box(center - w, center + w);
}

/// All p satisfying every slab, intersected with `seed`. Clipping runs in
/// coordinates centred on the seed box.
template <typename Scalar>
ClipResult<Scalar> intersect_constraints(std::span<const SlabConstraint<Scalar>> constraints,
                                         const ConvexPolygon<Scalar>& seed,
                                         Scalar rel_tol = Scalar(1e-12))
{
    using Point = Point2<Scalar>;
    ClipResult<Scalar> result;
    if (seed.empty())
        return result;
    Point lo = seed.vertices().front(), hi = lo;
    for (const Point& v : seed.vertices()) {
        lo = lo.cwiseMin(v);
        hi = hi.cwiseMax(v);
    }
    const Point center = (lo + hi) / Scalar(2);
    const Scalar tol = rel_tol * (hi - lo).norm();

    std::vector<Point> cur, next;
    cur.reserve(seed.size() + 2 * constraints.size());
    for (const Point& v : seed.vertices())
        cur.push_back(v - center);
    std::vector<Scalar> scratch;
    // Bounding circle of the current polygon; half-planes containing it are
    // skipped without touching the vertices.
    Point disc_center = Point::Zero();
    Scalar disc_radius = Scalar(0);
    auto refresh_disc = [&] {
        disc_center = Point::Zero();
        for (const Point& v : cur)
            disc_center += v;
        disc_center /= Scalar(std::max<std::size_t>(cur.size(), 1));
        disc_radius = Scalar(0);
        for (const Point& v : cur)
            disc_radius = std::max(disc_radius, (v - disc_center).norm());
    };
    refresh_disc();
    bool has_x = false, has_y = false;
    for (const auto& c : constraints) {
        if (c.lower > c.upper) {
            cur.clear();
            break;
        }
        has_x = has_x || (c.e.y() == Scalar(0) && c.e.x() != Scalar(0));
        has_y = has_y || (c.e.x() == Scalar(0) && c.e.y() != Scalar(0));
        const Scalar shift = c.e.dot(center);
        const Scalar e_norm = c.e.norm();
        for (const HalfPlane<Scalar>& hp :
             {HalfPlane<Scalar>{c.e, c.upper - shift}, HalfPlane<Scalar>{-c.e, shift - c.lower}}) {
            if (hp.normal.dot(disc_center) + e_norm * disc_radius <= hp.offset)
                continue;
            if (detail::clip_into(cur, hp, tol, next, scratch)) {
                cur.swap(next);
                refresh_disc();
            }
            if (cur.empty())
                break;
        }
        if (cur.empty())
            break;
    }
    if (has_x && has_y) {
        const Point hw = (hi - lo) / Scalar(2);
        for (const Point& v : cur) {
            if (std::abs(std::abs(v.x()) - hw.x()) <= tol || std::abs(std::abs(v.y()) - hw.y()) <= tol)
                result.seed_box_active = true;
        }
    }
    for (Point& v : cur)
        v += center;
    result.polygon = ConvexPolygon<Scalar>(std::move(cur));
    return result;
}

/// Brute-force area: counts the cell centres of a resolution x resolution grid
/// over [lo, hi] that satisfy every slab, times the cell area. Each row is
/// resolved analytically, so the count is exact for the sampled centres. The
/// deviation from the true area is bounded by about perimeter * cell size.
template <typename Scalar>
Scalar rasterize_area_oracle(std::span<const SlabConstraint<Scalar>> constraints,
                             const Point2<Scalar>& lo, const Point2<Scalar>& hi, int resolution)
{
    if (resolution < 16)
        throw std::invalid_argument("rasterization resolution must be >= 16");
    const Scalar dx = (hi.x() - lo.x()) / resolution;
    const Scalar dy = (hi.y() - lo.y()) / resolution;
    long long count = 0;
    for (int j = 0; j < resolution; ++j) {
        const Scalar y = lo.y() + (Scalar(j) + Scalar(0.5)) * dy;
        Scalar xa = lo.x(), xb = hi.x();
        bool feasible = true;
        for (const auto& c : constraints) {
            const Scalar a = c.e.x();
            const Scalar rest = c.e.y() * y;
            if (a == Scalar(0)) {
                if (rest < c.lower || rest > c.upper) {
                    feasible = false;
                    break;
                }
                continue;
            }
            Scalar l = (c.lower - rest) / a, u = (c.upper - rest) / a;
            if (a < Scalar(0))
                std::swap(l, u);
            xa = std::max(xa, l);
            xb = std::min(xb, u);
        }
        if (!feasible || xa > xb)
            continue;
        // centres x_i = lo + (i + 1/2) dx, i in [0, resolution)
        const long long first = static_cast<long long>(std::ceil((xa - lo.x()) / dx - Scalar(0.5)));
        const long long last = static_cast<long long>(std::floor((xb - lo.x()) / dx - Scalar(0.5)));
        const long long i0 = std::max<long long>(first, 0);
        const long long i1 = std::min<long long>(last, resolution - 1);
        if (i1 >= i0)
            count += i1 - i0 + 1;
    }
    return Scalar(count) * dx * dy;
}

}  // namespace dma

#endif  // DMA_GEOMETRY_HPP
