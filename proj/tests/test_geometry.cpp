#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dma/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

using namespace dma;
using P = Point2<double>;

namespace {

const ConvexPolygond unit_square = ConvexPolygond::box(P(0, 0), P(1, 1));

std::vector<SlabConstraintd> box_slabs(double r)
{
    return {{P(1, 0), -r, r}, {P(0, 1), -r, r}};
}

std::vector<SlabConstraintd> octagon_slabs()
{
    const double s = std::sqrt(2.0);
    return {{P(1, 0), -1, 1}, {P(0, 1), -1, 1}, {P(1, 1), -s, s}, {P(1, -1), -s, s}};
}

double clipped_area(const std::vector<SlabConstraintd>& c)
{
    const auto seed = seed_box<double>(c);
    if (!seed)
        return 0.0;
    return area(intersect_constraints<double>(c, *seed).polygon);
}

// Midpoint sampling cell by cell, written without the analytic row solve used in rasterize_area_oracle.
double naive_grid_area(const std::vector<SlabConstraintd>& c, double lo, double hi, int n)
{
    const double dx = (hi - lo) / n;
    long long count = 0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const P p(lo + (i + 0.5) * dx, lo + (j + 0.5) * dx);
            bool in = true;
            for (const auto& s : c)
                in = in && s.contains(p);
            count += in;
        }
    return count * dx * dx;
}

std::vector<SlabConstraintd> random_slabs(std::mt19937& rng, int extra)
{
    std::uniform_real_distribution<double> width(0.3, 2.0), shift(-0.3, 0.3);
    std::uniform_int_distribution<int> comp(-3, 3);
    std::vector<SlabConstraintd> c;
    for (const P& e : {P(1, 0), P(0, 1)}) {
        const double w = width(rng), s = shift(rng);
        c.push_back({e, s - w, s + w});
    }
    for (int k = 0; k < extra; ++k) {
        P e(comp(rng), comp(rng));
        if (e.isZero())
            e = P(1, 1);
        const double w = width(rng) * e.norm(), s = shift(rng) * e.norm();
        c.push_back({e, s - w, s + w});
    }
    return c;
}

}  // namespace

TEST_CASE("clip the unit square")
{
    CHECK(area(clip(unit_square, HalfPlaned{P(1, 0), 0.5})) == doctest::Approx(0.5));
    CHECK(clip(unit_square, HalfPlaned{P(1, 0), -1.0}).empty());
    const auto same = clip(unit_square, HalfPlaned{P(1, 1), 2.0});
    CHECK(same.size() == 4);
    CHECK(area(same) == doctest::Approx(1.0));
}

TEST_CASE("intersect_constraints examples")
{
    CHECK(clipped_area(box_slabs(1.0)) == doctest::Approx(4.0));

    const auto oct = octagon_slabs();
    const double exact = 8.0 * (std::sqrt(2.0) - 1.0);
    const auto seed = seed_box<double>(oct);
    REQUIRE(seed);
    const auto res = intersect_constraints<double>(oct, *seed);
    CHECK(res.polygon.size() == 8);
    CHECK_FALSE(res.seed_box_active);
    CHECK(area(res.polygon) == doctest::Approx(exact).epsilon(1e-12));
    const double oracle = rasterize_area_oracle<double>(oct, P(-2, -2), P(2, 2), 4000);
    CHECK(std::abs(area(res.polygon) - oracle) <= 1e-3);

    const std::vector<SlabConstraintd> point{{P(1, 0), 0, 0}, {P(0, 1), 0, 0}};
    CHECK(clipped_area(point) == 0.0);
}

TEST_CASE("seed box handling")
{
    const std::vector<SlabConstraintd> inverted{{P(1, 0), 1, -1}, {P(0, 1), -1, 1}};
    CHECK_FALSE(seed_box<double>(inverted).has_value());
    const std::vector<SlabConstraintd> open{{P(1, 0), -1, 1}};
    CHECK_FALSE(seed_box<double>(open).has_value());
    // a seed that is too small gets flagged
    const auto tiny = ConvexPolygond::box(P(-0.5, -0.5), P(0.5, 0.5));
    CHECK(intersect_constraints<double>(box_slabs(1.0), tiny).seed_box_active);
}

TEST_CASE("shoelace area")
{
    CHECK(area(unit_square) == doctest::Approx(1.0));
    CHECK(area(ConvexPolygond({P(0, 0), P(1, 0), P(0, 1)})) == doctest::Approx(0.5));
    CHECK(area(ConvexPolygond()) == 0.0);
    CHECK(area(ConvexPolygond({P(1, 2)})) == 0.0);
    CHECK(area(ConvexPolygond({P(0, 0), P(3, 1)})) == 0.0);
    const double s = std::sqrt(2.0) - 1.0;
    const ConvexPolygond oct({P(1, -s), P(1, s), P(s, 1), P(-s, 1), P(-1, s), P(-1, -s), P(-s, -1), P(s, -1)});
    CHECK(area(oct) == doctest::Approx(8.0 * s));
}

TEST_CASE("polygon_intersect examples")
{
    const auto far = ConvexPolygond::box(P(2, 2), P(3, 3));
    CHECK(area(polygon_intersect(unit_square, far)) == 0.0);
    CHECK(area(polygon_intersect(unit_square, unit_square)) == doctest::Approx(1.0));
    const auto shifted = ConvexPolygond::box(P(0.5, 0), P(1.5, 1));
    CHECK(area(polygon_intersect(unit_square, shifted)) == doctest::Approx(0.5));
}

TEST_CASE("raster oracle examples")
{
    CHECK(rasterize_area_oracle<double>(box_slabs(1.0), P(-2, -2), P(2, 2), 2000) == doctest::Approx(4.0).epsilon(0.0025));
    const double oct = rasterize_area_oracle<double>(octagon_slabs(), P(-2, -2), P(2, 2), 4000);
    CHECK(std::abs(oct - 3.3137) <= 0.005);
    CHECK(std::abs(oct - 8.0 * (std::sqrt(2.0) - 1.0)) <= 1e-3);
    const std::vector<SlabConstraintd> infeasible{{P(1, 0), 1, 2}, {P(1, 0), -2, -1}, {P(0, 1), -1, 1}};
    CHECK(rasterize_area_oracle<double>(infeasible, P(-2, -2), P(2, 2), 100) == 0.0);
    CHECK_THROWS(rasterize_area_oracle<double>(box_slabs(1.0), P(-2, -2), P(2, 2), 8));
}

TEST_CASE("row-resolved oracle agrees with naive sampling")
{
    std::mt19937 rng(11);
    for (int t = 0; t < 10; ++t) {
        const auto c = random_slabs(rng, 3);
        const double a = rasterize_area_oracle<double>(c, P(-3, -3), P(3, 3), 400);
        const double b = naive_grid_area(c, -3, 3, 400);
        CHECK(a == doctest::Approx(b).epsilon(1e-12));
    }
}

TEST_CASE("randomized clipping properties")
{
    std::mt19937 rng(2024);
    std::uniform_real_distribution<double> u(-1, 1);
    for (int t = 0; t < 200; ++t) {
        auto c = random_slabs(rng, 4);
        const auto seed = seed_box<double>(c);
        REQUIRE(seed);
        const auto res = intersect_constraints<double>(c, *seed);
        const double a = area(res.polygon);
        CHECK_FALSE(res.seed_box_active);

        // agreement with the raster oracle within 5 perimeter * cell
        const int n = 1000;
        const double cell = 6.0 / n;
        const double oracle = rasterize_area_oracle<double>(c, P(-3, -3), P(3, 3), n);
        CHECK(std::abs(a - oracle) <= 5.0 * std::max(res.polygon.perimeter(), 1e-3) * cell);

        // every vertex satisfies every slab
        for (const P& v : res.polygon.vertices())
            for (const auto& s : c)
                CHECK(std::abs(v.dot(s.e) - std::clamp(v.dot(s.e), s.lower, s.upper)) <= 1e-9 * s.e.norm());

        // clipping never grows the area, and neither does one more slab
        const HalfPlaned hp{P(u(rng), u(rng)), u(rng)};
        CHECK(area(clip(res.polygon, hp)) <= a + 1e-12);
        auto more = c;
        more.push_back(random_slabs(rng, 1).back());
        CHECK(clipped_area(more) <= a + 1e-12);

        // intersection area is symmetric
        const auto other = intersect_constraints<double>(random_slabs(rng, 2), *seed).polygon;
        const double ab = area(polygon_intersect(res.polygon, other));
        const double ba = area(polygon_intersect(other, res.polygon));
        CHECK(std::abs(ab - ba) <= 1e-12 * std::pow(std::max(res.polygon.scale(), other.scale()), 2) + 1e-14);
    }
}

TEST_CASE("clipped polygons stay convex and counterclockwise")
{
    std::mt19937 rng(5);
    for (int t = 0; t < 100; ++t) {
        const auto c = random_slabs(rng, 5);
        const auto poly = intersect_constraints<double>(c, *seed_box<double>(c)).polygon;
        const auto& v = poly.vertices();
        if (v.size() < 3)
            continue;
        const double scale = poly.scale();
        for (std::size_t i = 0; i < v.size(); ++i) {
            const P a = v[(i + 1) % v.size()] - v[i];
            const P b = v[(i + 2) % v.size()] - v[(i + 1) % v.size()];
            CHECK(a.x() * b.y() - a.y() * b.x() >= -1e-12 * scale * scale);
            CHECK(a.norm() > 1e-12 * scale);
        }
    }
}
