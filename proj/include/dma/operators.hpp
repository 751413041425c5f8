#ifndef DMA_OPERATORS_HPP
#define DMA_OPERATORS_HPP

#include "dma/geometry.hpp"
#include "dma/lattice.hpp"

#include <span>
#include <string>
#include <utility>
#include <vector>

namespace dma {

enum class OperatorKind { MA0, MA1, MA2, MA3, NinePointProduct };

std::string to_string(OperatorKind kind);
OperatorKind operator_from_string(const std::string& name);

/// One antipodal class of primitive lattice directions at a mesh point,
/// together with the neighbours x +- k e (k = 1..multiples) that stay in the
/// closed domain and inside the policy cap.
struct StencilRay {
    LatticePoint step;
    double angle;    // [0, pi)
    double length;   // |e| = h |step|
    int perp = -1;   // index of the ray with step rot90(step), or -1
    int offset = 0;  // into PointStencil::neighbors
    int multiples = 0;
};

struct PointStencil {
    int center = -1;
    std::vector<StencilRay> rays;   // sorted by angle
    std::vector<int> neighbors;     // per ray: fwd(1), bwd(1), fwd(2), bwd(2), ...

    int forward(const StencilRay& r, int k) const { return neighbors[r.offset + 2 * (k - 1)]; }
    int backward(const StencilRay& r, int k) const { return neighbors[r.offset + 2 * (k - 1) + 1]; }
};

PointStencil build_point_stencil(const LatticeDomain& d, int idx, StencilPolicy policy);

/// Point stencils for every interior point of a domain.
class Stencil {
public:
    Stencil(DomainPtr domain, StencilPolicy policy);

    const PointStencil& at(int idx) const { return stencils_[slot_[idx]]; }
    StencilPolicy policy() const { return policy_; }
    const LatticeDomain& domain() const { return *domain_; }

private:
    DomainPtr domain_;
    StencilPolicy policy_;
    std::vector<int> slot_;
    std::vector<PointStencil> stencils_;
};

/// Which slab family bounds the discrete normal mapping.
enum class SlabFamily {
    OrthogonalBases,  // ∂¹: directions whose 90° rotation is admissible too
    AllDirections     // ∂²: every admissible direction
};

/// Slabs lower <= p.e <= upper at the stencil centre. Each primitive direction
/// contributes the tightest bound over its admissible multiples, which equals
/// the k = 1 slab for discrete convex input.
std::vector<SlabConstraintd> slab_constraints(const MeshFunction& v, const PointStencil& ps,
                                              SlabFamily family);

/// The discrete normal mapping as a polygon in gradient space.
ConvexPolygond normal_mapping(const MeshFunction& v, const PointStencil& ps, SlabFamily family);

double lambda1(const MeshFunction& v, const PointStencil& ps);
/// Infimum over orthogonal bases of Delta_e1 Delta_e2 / (|e1||e2|). Negative
/// values only occur for input that is not discrete convex.
double ma0(const MeshFunction& v, const PointStencil& ps);
double ma1(const MeshFunction& v, const PointStencil& ps);
double ma2(const MeshFunction& v, const PointStencil& ps);

/// prod_i (v(x + h r_i) - 2 v(x) + v(x - h r_i)) / h. Throws
/// InadmissibleDirection when the 9-point stencil is incomplete.
double nine_point_product(const MeshFunction& v, int idx);

struct PolarDirection {
    double angle;      // theta'_j in [0, pi)
    LatticePoint step;
    double length;
    double forward;    // v(x+e) - v(x)
    double backward;   // v(x) - v(x-e)
};

struct PolarProfile {
    std::vector<PolarDirection> directions;
    std::vector<double> angles;  // {theta'_j} and {theta'_j + pi}, increasing
};

PolarProfile polar_profile(const MeshFunction& v, const PointStencil& ps);

/// Radial bounds of the polygon along angle theta: (R_-, R_+). Directions with
/// |cos(theta - theta')| <= 1e-12 are non-binding; the sentinels are -inf/+inf.
std::pair<double, double> r_bounds(const PolarProfile& profile, double theta);

/// Left-point angular quadrature of the polar area formula over the sorted
/// angle list, each interval split into `angle_refinement` equal parts,
/// including the closing interval back to theta_1 + 2 pi.
double ma3(const MeshFunction& v, const PointStencil& ps, int angle_refinement = 1);
double ma3(const PolarProfile& profile, int angle_refinement = 1);

double evaluate(OperatorKind kind, const MeshFunction& v, const PointStencil& ps,
                int angle_refinement = 1);

// Convenience overloads that build the point stencil on the fly.
double lambda1(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy);
double ma0(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy);
double ma1(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy);
double ma2(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy);
double ma3(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy, int angle_refinement = 1);
double nine_point_product(const MeshFunction& v, const LatticePoint& x);
PolarProfile polar_profile(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy);

/// Delta_e v(x) >= -tol at every interior point for every admissible lattice
/// vector under the policy (multiples included).
bool is_discrete_convex(const MeshFunction& v, StencilPolicy policy, double tol);
/// max(0, -min Delta_e v(x)) over interior points and the NinePoint directions.
double convexity_defect(const MeshFunction& v, StencilPolicy policy);

/// sup over mesh points x of the open domain of x.p - v(x).
double discrete_legendre(const MeshFunction& v, const Vec2& p);
double discrete_legendre(const MeshFunction& v, std::span<const int> points, const Vec2& p);

}  // namespace dma

#endif  // DMA_OPERATORS_HPP
