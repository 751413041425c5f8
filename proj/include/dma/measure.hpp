#ifndef DMA_MEASURE_HPP
#define DMA_MEASURE_HPP

#include "dma/lattice.hpp"
#include "dma/operators.hpp"

#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace dma {

/// Catalog of analytic densities.
struct Density {
    enum class Kind { Zero, Constant, RadialPower };
    Kind kind = Kind::Zero;
    double c = 0.0;  // Constant
    double p = 2.0;  // RadialPower: (p - 1) r^(2p - 4), the Monge-Ampere density of r^p / p
    Vec2 center = Vec2::Zero();

    static Density zero() { return {}; }
    static Density constant(double c) { return {Kind::Constant, c, 2.0, Vec2::Zero()}; }
    static Density radial_power(double p, Vec2 center = Vec2::Zero())
    {
        return {Kind::RadialPower, 0.0, p, center};
    }

    double operator()(const Vec2& x) const;
    std::string name() const;
};

struct DiracMass {
    Vec2 at;
    double mass;
};

/// A finite Borel measure: optional density plus point masses.
struct SourceMeasure {
    std::optional<Density> density;
    std::vector<DiracMass> diracs;
};

struct DiscretizedSource {
    MeshFunction f;                 // zero off the interior set
    double total = 0.0;             // h^2 sum f
    std::vector<int> dirac_points;  // interior indices that received a Dirac mass
    std::vector<std::string> warnings;
};

/// Closed axis-aligned box [lo.x, hi.x] x [lo.y, hi.y].
struct BorelBox {
    Vec2 lo;
    Vec2 hi;

    bool contains(const Vec2& x, double tol = 0.0) const
    {
        return (x.array() >= lo.array() - tol).all() && (x.array() <= hi.array() + tol).all();
    }
    bool on_boundary(const Vec2& x, double tol) const;
    std::string label() const;
};

/// Density values at interior points plus mass / h^2 for each Dirac at the
/// nearest interior point (ties broken lexicographically). Throws
/// std::invalid_argument for a Dirac outside the open domain.
DiscretizedSource discretize_measure(const SourceMeasure& nu, const DomainPtr& d);

/// h^2 times the sum of f over interior points in the closed box.
double counting_measure(const DiscretizedSource& f, const BorelBox& box);

/// Sum of ma_op over interior points in the box; op must be MA1 or MA2.
double ma_measure_of_set(const MeshFunction& v, const BorelBox& box, OperatorKind op, const Stencil& stencil);
double ma_measure_of_set(const MeshFunction& v, const BorelBox& box, OperatorKind op, StencilPolicy policy);

/// Integral of the density over box ∩ domain by iterated adaptive
/// Gauss-Kronrod quadrature.
double density_integral(const Density& density, const LatticeDomain& d, const BorelBox& box,
                        double tol = 1e-8);

/// nu(box ∩ domain). Throws std::invalid_argument when a Dirac sits on the box
/// boundary, since then nu(boundary) != 0.
double measure_of_box(const SourceMeasure& nu, const LatticeDomain& d, const BorelBox& box);
/// nu(domain).
double total_mass(const SourceMeasure& nu, const LatticeDomain& d);

/// Rejects boxes whose boundary carries a Dirac mass.
void validate_boxes(const SourceMeasure& nu, const std::vector<BorelBox>& boxes);

struct WeakConvergenceRow {
    double h;
    int box_index;
    std::string box;
    double measured;
    double expected;
    double gap;
};

std::vector<WeakConvergenceRow> weak_convergence_report(
    const std::vector<std::pair<double, MeshFunction>>& v_per_h, const SourceMeasure& nu,
    const std::vector<BorelBox>& boxes, OperatorKind op, StencilPolicy policy);

}  // namespace dma

#endif  // DMA_MEASURE_HPP
