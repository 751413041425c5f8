#ifndef DMA_LATTICE_HPP
#define DMA_LATTICE_HPP

#include <Eigen/Dense>

#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace dma {

/// Integer multiplier m of a lattice point x = m * h.
using LatticePoint = Eigen::Vector2i;
using Vec2 = Eigen::Vector2d;

struct InadmissibleDirection : std::domain_error {
    using std::domain_error::domain_error;
};

struct DomainError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// Closed convex domains. All of them are bounded.
struct Rectangle {
    Vec2 lo;
    Vec2 hi;
};

struct Disc {
    Vec2 center;
    double radius;
};

/// Counterclockwise vertex list of a convex polygon.
struct PolygonShape {
    std::vector<Vec2> vertices;
};

using DomainShape = std::variant<Rectangle, Disc, PolygonShape>;

/// Which lattice directions the operators enumerate at a point.
struct StencilPolicy {
    enum class Kind { NinePoint, Radius, Full };
    Kind kind = Kind::Full;
    int radius = 0;

    static StencilPolicy nine_point() { return {Kind::NinePoint, 1}; }
    static StencilPolicy with_radius(int k);
    static StencilPolicy full() { return {Kind::Full, 0}; }

    /// Max-component cap in lattice units; `fallback` is used for Full.
    int cap(int fallback) const { return kind == Kind::Full ? fallback : radius; }
    std::string to_string() const;
};

struct LatticeDirection {
    LatticePoint step;   // e = step * h
    bool primitive;
    double angle;        // in [0, pi)
};

struct OrthogonalBasis {
    LatticePoint first;
    LatticePoint second;  // rot90(first)
};

inline LatticePoint rot90(const LatticePoint& m) { return {-m.y(), m.x()}; }

/// Lattice Z_h^2 restricted to a closed convex domain, split into the interior
/// set (x in the open domain with all axis neighbours in the closure) and the
/// boundary set (every other closure point).
class LatticeDomain {
public:
    LatticeDomain(DomainShape shape, double h);

    double h() const { return h_; }
    int dim() const { return 2; }
    const DomainShape& shape() const { return shape_; }

    /// Number of points of the closure lattice.
    int size() const { return static_cast<int>(points_.size()); }
    const LatticePoint& point(int idx) const { return points_[idx]; }
    Vec2 coords(int idx) const { return points_[idx].cast<double>() * h_; }

    /// Index of a lattice point, or -1 when it is outside the closed domain.
    int index_of(const LatticePoint& m) const;
    bool in_closure(const LatticePoint& m) const { return index_of(m) >= 0; }

    bool is_interior(int idx) const { return interior_flag_[idx] != 0; }
    std::span<const int> interior() const { return interior_; }
    std::span<const int> boundary() const { return boundary_; }

    double diameter_bound() const { return diameter_bound_; }
    double geometric_tolerance() const { return tol_; }

    bool contains_closed(const Vec2& x) const;
    bool contains_open(const Vec2& x) const;

    /// y-range of the vertical line through x inside the closed domain.
    /// Returns an empty interval (first > second) when the line misses it.
    std::pair<double, double> vertical_section(double x) const;
    /// Axis-aligned bounding box of the closed domain.
    std::pair<Vec2, Vec2> bounding_box() const;

    /// Largest |component| of a difference of two lattice points.
    int lattice_extent() const { return extent_; }

private:
    double signed_distance(const Vec2& x) const;

    DomainShape shape_;
    double h_;
    double tol_;
    double diameter_bound_ = 0.0;
    LatticePoint lo_;
    LatticePoint hi_;
    int extent_ = 0;
    std::vector<LatticePoint> points_;
    std::vector<int> grid_;          // dense (hi - lo + 1) box -> point index or -1
    std::vector<char> interior_flag_;
    std::vector<int> interior_;
    std::vector<int> boundary_;
};

using DomainPtr = std::shared_ptr<const LatticeDomain>;

/// Throws DomainError when the interior set is empty or the input is invalid.
DomainPtr build_domain(const DomainShape& shape, double h);

/// Real values on every point of the closure lattice.
class MeshFunction {
public:
    MeshFunction() = default;
    explicit MeshFunction(DomainPtr domain, double fill = 0.0);
    MeshFunction(DomainPtr domain, Eigen::VectorXd values);

    /// r_h(p): the restriction of a function to every lattice point of the closure.
    static MeshFunction restrict(DomainPtr domain, const std::function<double(const Vec2&)>& p);

    const LatticeDomain& domain() const { return *domain_; }
    const DomainPtr& domain_ptr() const { return domain_; }

    double operator[](int idx) const { return values_[idx]; }
    double& operator[](int idx) { return values_[idx]; }
    double at(const LatticePoint& m) const;

    const Eigen::VectorXd& values() const { return values_; }
    Eigen::VectorXd& values() { return values_; }

private:
    DomainPtr domain_;
    Eigen::VectorXd values_;
};

/// Delta_e v(x) = v(x+e) - 2 v(x) + v(x-e). Throws InadmissibleDirection when
/// x +- e leaves the closed domain.
double delta_e(const MeshFunction& v, const LatticePoint& x, const LatticePoint& e);

/// Primitive directions e with x +- e in the closure, one per antipodal pair.
std::vector<LatticeDirection> admissible_directions(const LatticeDomain& d, const LatticePoint& x,
                                                    StencilPolicy policy);

/// Bases (e, rot90(e)) with both vectors primitive and admissible, one per
/// equivalence class under sign and order.
std::vector<OrthogonalBasis> orthogonal_bases(const LatticeDomain& d, const LatticePoint& x,
                                              StencilPolicy policy);

int gcd_abs(int a, int b);
double direction_angle(const LatticePoint& m);
/// Representative of {m, -m} with angle in [0, pi).
LatticePoint canonical_direction(const LatticePoint& m);

}  // namespace dma

#endif  // DMA_LATTICE_HPP
