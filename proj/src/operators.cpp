#include "dma/operators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace dma {

std::string to_string(OperatorKind kind)
{
    switch (kind) {
    case OperatorKind::MA0: return "MA0";
    case OperatorKind::MA1: return "MA1";
    case OperatorKind::MA2: return "MA2";
    case OperatorKind::MA3: return "MA3";
    case OperatorKind::NinePointProduct: return "NinePointProduct";
    }
    return "unknown";
}

OperatorKind operator_from_string(const std::string& name)
{
    std::string s;
    for (char c : name)
        s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (s == "ma0") return OperatorKind::MA0;
    if (s == "ma1") return OperatorKind::MA1;
    if (s == "ma2") return OperatorKind::MA2;
    if (s == "ma3") return OperatorKind::MA3;
    if (s == "nine_point_product" || s == "ninepointproduct") return OperatorKind::NinePointProduct;
    throw std::invalid_argument("unknown operator '" + name + "'");
}

namespace {

/// Canonical primitive steps with max component <= cap, sorted by angle, and
/// for each the position of its (canonical) 90° rotation.
struct DirectionTable {
    std::vector<LatticePoint> steps;
    std::vector<double> angles;
    std::vector<int> perp;

    explicit DirectionTable(int cap)
    {
        std::vector<std::pair<double, LatticePoint>> all;
        for (int b = 0; b <= cap; ++b)
            for (int a = -cap; a <= cap; ++a) {
                if ((b == 0 && a <= 0) || gcd_abs(a, b) != 1)
                    continue;
                const LatticePoint s(a, b);
                all.emplace_back(direction_angle(s), s);
            }
        std::sort(all.begin(), all.end(), [](const auto& l, const auto& r) { return l.first < r.first; });
        for (const auto& [angle, s] : all) {
            angles.push_back(angle);
            steps.push_back(s);
        }
        perp.assign(steps.size(), -1);
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const LatticePoint target = canonical_direction(rot90(steps[i]));
            const double ta = direction_angle(target);
            auto it = std::lower_bound(angles.begin(), angles.end(), ta - 1e-12);
            for (; it != angles.end() && *it <= ta + 1e-12; ++it) {
                const auto j = static_cast<std::size_t>(it - angles.begin());
                if (steps[j] == target) {
                    perp[i] = static_cast<int>(j);
                    break;
                }
            }
        }
    }
};

PointStencil build_from_table(const LatticeDomain& d, int idx, int cap, const DirectionTable& table,
                              std::vector<int>& ray_of_candidate)
{
    PointStencil ps;
    ps.center = idx;
    const LatticePoint& x = d.point(idx);
    const double h = d.h();
    ray_of_candidate.assign(table.steps.size(), -1);
    for (std::size_t i = 0; i < table.steps.size(); ++i) {
        const LatticePoint& s = table.steps[i];
        const int reach = std::max(std::abs(s.x()), std::abs(s.y()));
        StencilRay ray{s, table.angles[i], h * s.cast<double>().norm(), -1,
                       static_cast<int>(ps.neighbors.size()), 0};
        for (int k = 1; k * reach <= cap; ++k) {
            const int f = d.index_of(x + k * s);
            const int b = d.index_of(x - k * s);
            if (f < 0 || b < 0)
                break;
            ps.neighbors.push_back(f);
            ps.neighbors.push_back(b);
            ++ray.multiples;
        }
        if (ray.multiples == 0)
            continue;
        ray_of_candidate[i] = static_cast<int>(ps.rays.size());
        ps.rays.push_back(ray);
    }
    for (std::size_t i = 0; i < table.steps.size(); ++i) {
        const int r = ray_of_candidate[i];
        if (r >= 0 && table.perp[i] >= 0)
            ps.rays[r].perp = ray_of_candidate[table.perp[i]];
    }
    return ps;
}

inline double second_difference(const MeshFunction& v, const PointStencil& ps, const StencilRay& r, int k)
{
    return v[ps.forward(r, k)] - 2.0 * v[ps.center] + v[ps.backward(r, k)];
}

int require_interior(const LatticeDomain& d, const LatticePoint& x)
{
    const int idx = d.index_of(x);
    if (idx < 0 || !d.is_interior(idx))
        throw std::invalid_argument("operator evaluated at a point outside the interior set");
    return idx;
}

}  // namespace

PointStencil build_point_stencil(const LatticeDomain& d, int idx, StencilPolicy policy)
{
    if (idx < 0 || idx >= d.size() || !d.is_interior(idx))
        throw std::invalid_argument("stencil requested at a non-interior point");
    const int cap = policy.cap(d.lattice_extent());
    const DirectionTable table(cap);
    std::vector<int> scratch;
    return build_from_table(d, idx, cap, table, scratch);
}

Stencil::Stencil(DomainPtr domain, StencilPolicy policy) : domain_(std::move(domain)), policy_(policy)
{
    const int cap = policy.cap(domain_->lattice_extent());
    const DirectionTable table(cap);
    std::vector<int> scratch;
    slot_.assign(domain_->size(), -1);
    stencils_.reserve(domain_->interior().size());
    for (int idx : domain_->interior()) {
        slot_[idx] = static_cast<int>(stencils_.size());
        stencils_.push_back(build_from_table(*domain_, idx, cap, table, scratch));
    }
}

std::vector<SlabConstraintd> slab_constraints(const MeshFunction& v, const PointStencil& ps,
                                              SlabFamily family)
{
    std::vector<SlabConstraintd> out;
    out.reserve(ps.rays.size());
    const double h = v.domain().h();
    const double vc = v[ps.center];
    for (const StencilRay& r : ps.rays) {
        if (family == SlabFamily::OrthogonalBases && r.perp < 0)
            continue;
        double lower = -std::numeric_limits<double>::infinity();
        double upper = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= r.multiples; ++k) {
            lower = std::max(lower, (vc - v[ps.backward(r, k)]) / k);
            upper = std::min(upper, (v[ps.forward(r, k)] - vc) / k);
        }
        out.push_back({h * r.step.cast<double>(), lower, upper});
    }
    return out;
}

ConvexPolygond normal_mapping(const MeshFunction& v, const PointStencil& ps, SlabFamily family)
{
    const auto slabs = slab_constraints(v, ps, family);
    const auto seed = seed_box<double>(slabs);
    if (!seed)
        return {};
    auto result = intersect_constraints<double>(slabs, *seed);
    if (result.seed_box_active)
        throw std::logic_error("seed box edge survived slab clipping");
    return std::move(result.polygon);
}

double lambda1(const MeshFunction& v, const PointStencil& ps)
{
    double best = std::numeric_limits<double>::infinity();
    for (const StencilRay& r : ps.rays)
        for (int k = 1; k <= r.multiples; ++k) {
            const double len = k * r.length;
            best = std::min(best, second_difference(v, ps, r, k) / (len * len));
        }
    return best;
}

double ma0(const MeshFunction& v, const PointStencil& ps)
{
    double best = std::numeric_limits<double>::infinity();
    for (const StencilRay& r : ps.rays) {
        if (r.perp < 0 || r.angle >= std::numbers::pi / 2)
            continue;
        const StencilRay& q = ps.rays[r.perp];
        const double value =
            second_difference(v, ps, r, 1) / r.length * second_difference(v, ps, q, 1) / q.length;
        best = std::min(best, value);
    }
    return std::isfinite(best) ? best : 0.0;
}

double ma1(const MeshFunction& v, const PointStencil& ps)
{
    return area(normal_mapping(v, ps, SlabFamily::OrthogonalBases));
}

double ma2(const MeshFunction& v, const PointStencil& ps)
{
    return area(normal_mapping(v, ps, SlabFamily::AllDirections));
}

double nine_point_product(const MeshFunction& v, int idx)
{
    const LatticeDomain& d = v.domain();
    const LatticePoint& x = d.point(idx);
    for (const LatticePoint& e : {LatticePoint(1, 0), LatticePoint(0, 1), LatticePoint(1, 1), LatticePoint(1, -1)})
        if (!d.in_closure(x + e) || !d.in_closure(x - e))
            throw InadmissibleDirection("nine-point stencil incomplete at this point");
    const double h = d.h();
    return delta_e(v, x, LatticePoint(1, 0)) / h * delta_e(v, x, LatticePoint(0, 1)) / h;
}

PolarProfile polar_profile(const MeshFunction& v, const PointStencil& ps)
{
    PolarProfile profile;
    const double vc = v[ps.center];
    for (const StencilRay& r : ps.rays)
        profile.directions.push_back(
            {r.angle, r.step, r.length, v[ps.forward(r, 1)] - vc, vc - v[ps.backward(r, 1)]});
    for (const auto& dir : profile.directions)
        profile.angles.push_back(dir.angle);
    for (const auto& dir : profile.directions)
        profile.angles.push_back(dir.angle + std::numbers::pi);
    return profile;
}

std::pair<double, double> r_bounds(const PolarProfile& profile, double theta)
{
    constexpr double cos_cutoff = 1e-12;
    double r_minus = -std::numeric_limits<double>::infinity();
    double r_plus = std::numeric_limits<double>::infinity();
    for (const PolarDirection& dir : profile.directions) {
        const double c = std::cos(theta - dir.angle);
        if (c > cos_cutoff) {
            const double scale = dir.length * c;
            r_plus = std::min(r_plus, dir.forward / scale);
            r_minus = std::max(r_minus, dir.backward / scale);
        } else if (c < -cos_cutoff) {
            // the antipodal representative -e has angle theta' + pi
            const double scale = -dir.length * c;
            r_plus = std::min(r_plus, -dir.backward / scale);
            r_minus = std::max(r_minus, -dir.forward / scale);
        }
    }
    return {r_minus, r_plus};
}

double ma3(const PolarProfile& profile, int angle_refinement)
{
    if (angle_refinement < 1)
        throw std::invalid_argument("angle_refinement must be >= 1");
    const auto& angles = profile.angles;
    double sum = 0.0;
    for (std::size_t k = 0; k < angles.size(); ++k) {
        const double next = k + 1 < angles.size() ? angles[k + 1] : angles.front() + 2.0 * std::numbers::pi;
        const double width = (next - angles[k]) / angle_refinement;
        for (int i = 0; i < angle_refinement; ++i) {
            const auto [r_minus, r_plus] = r_bounds(profile, angles[k] + i * width);
            const double outer = std::max(r_plus, 0.0);
            const double inner = std::max(r_minus, 0.0);
            sum += 0.5 * width * std::max(outer * outer - inner * inner, 0.0);
        }
    }
    return sum;
}

double ma3(const MeshFunction& v, const PointStencil& ps, int angle_refinement)
{
    return ma3(polar_profile(v, ps), angle_refinement);
}

double evaluate(OperatorKind kind, const MeshFunction& v, const PointStencil& ps, int angle_refinement)
{
    switch (kind) {
    case OperatorKind::MA0: return ma0(v, ps);
    case OperatorKind::MA1: return ma1(v, ps);
    case OperatorKind::MA2: return ma2(v, ps);
    case OperatorKind::MA3: return ma3(v, ps, angle_refinement);
    case OperatorKind::NinePointProduct: return nine_point_product(v, ps.center);
    }
    throw std::invalid_argument("unknown operator kind");
}

double lambda1(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy)
{
    return lambda1(v, build_point_stencil(v.domain(), require_interior(v.domain(), x), policy));
}

double ma0(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy)
{
    return ma0(v, build_point_stencil(v.domain(), require_interior(v.domain(), x), policy));
}

double ma1(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy)
{
    return ma1(v, build_point_stencil(v.domain(), require_interior(v.domain(), x), policy));
}

double ma2(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy)
{
    return ma2(v, build_point_stencil(v.domain(), require_interior(v.domain(), x), policy));
}

double ma3(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy, int angle_refinement)
{
    return ma3(v, build_point_stencil(v.domain(), require_interior(v.domain(), x), policy), angle_refinement);
}

double nine_point_product(const MeshFunction& v, const LatticePoint& x)
{
    return nine_point_product(v, require_interior(v.domain(), x));
}

PolarProfile polar_profile(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy)
{
    return polar_profile(v, build_point_stencil(v.domain(), require_interior(v.domain(), x), policy));
}

bool is_discrete_convex(const MeshFunction& v, StencilPolicy policy, double tol)
{
    const Stencil stencil(v.domain_ptr(), policy);
    for (int idx : v.domain().interior()) {
        const PointStencil& ps = stencil.at(idx);
        for (const StencilRay& r : ps.rays)
            for (int k = 1; k <= r.multiples; ++k)
                if (second_difference(v, ps, r, k) < -tol)
                    return false;
    }
    return true;
}

double convexity_defect(const MeshFunction& v, StencilPolicy policy)
{
    const Stencil stencil(v.domain_ptr(), policy);
    double worst = 0.0;
    for (int idx : v.domain().interior()) {
        const PointStencil& ps = stencil.at(idx);
        for (const StencilRay& r : ps.rays)
            for (int k = 1; k <= r.multiples; ++k)
                worst = std::max(worst, -second_difference(v, ps, r, k));
    }
    return worst;
}

double discrete_legendre(const MeshFunction& v, std::span<const int> points, const Vec2& p)
{
    double best = -std::numeric_limits<double>::infinity();
    for (int idx : points)
        best = std::max(best, v.domain().coords(idx).dot(p) - v[idx]);
    return best;
}

double discrete_legendre(const MeshFunction& v, const Vec2& p)
{
    std::vector<int> open_points;
    for (int idx = 0; idx < v.domain().size(); ++idx)
        if (v.domain().contains_open(v.domain().coords(idx)))
            open_points.push_back(idx);
    return discrete_legendre(v, open_points, p);
}

}  // namespace dma
