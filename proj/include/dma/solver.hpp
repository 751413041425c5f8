#ifndef DMA_SOLVER_HPP
#define DMA_SOLVER_HPP

#include "dma/lattice.hpp"
#include "dma/measure.hpp"
#include "dma/operators.hpp"

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dma {

/// Convex catalog functions used as Dirichlet data g̃ and as exact solutions.
struct BoundaryData {
    enum class Kind { Quadratic, Cone, Ridge, RadialPower, Affine };
    Kind kind = Kind::Quadratic;
    double a = 1.0;                 // Quadratic: a |x - center|^2 / 2 + b.x + c
    Vec2 center = Vec2::Zero();     // Quadratic, Cone, RadialPower
    Vec2 b = Vec2::Zero();          // Quadratic, Affine
    double c = 0.0;                 // Quadratic, Affine
    double p = 2.0;                 // RadialPower: |x - center|^p / p, p >= 1

    static BoundaryData quadratic(double a = 1.0, Vec2 center = Vec2::Zero(), Vec2 b = Vec2::Zero(), double c = 0.0);
    static BoundaryData cone(Vec2 center = Vec2::Zero());
    static BoundaryData ridge();
    static BoundaryData radial_power(double p, Vec2 center = Vec2::Zero());
    static BoundaryData affine(Vec2 b, double c);

    double operator()(const Vec2& x) const;
    std::string name() const;
};

enum class InitKind { GTilde, Harmonic };
enum class SweepKind { Euler, GaussSeidel };

struct SolverConfig {
    OperatorKind op = OperatorKind::MA2;
    StencilPolicy policy = StencilPolicy::full();
    double nu = 0.1;
    /// Defaults to 1e-10 h^2 / max(1, max |g̃|) when unset.
    std::optional<double> epsilon;
    /// Sup-norm residual target; defaults to 1e-8 h^2 when unset.
    std::optional<double> tol;
    int max_iter = 200000;
    InitKind init = InitKind::GTilde;
    SweepKind sweep = SweepKind::Euler;
    int angle_refinement = 1;
    /// Gauss-Seidel only: number of coarser lattices (h doubled each time)
    /// solved first, each prolonged to give the next initial iterate.
    int coarse_levels = 0;
};

struct NumericalBreakdown : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct StabilityDiagnostic {
    double alpha = 0.0;          // max over the interior of |v|
    double measure_sum = 0.0;    // sum of ma2 over the interior
    double boundary_max = 0.0;   // max over the boundary set of |v|
    double raw_bound = 0.0;      // 2 Delta (sum / pi)^(1/2)
    double bound = 0.0;          // raw_bound + boundary_max
    bool satisfied = false;      // alpha <= bound
    bool raw_satisfied = false;  // alpha <= raw_bound
};

struct SolveReport {
    MeshFunction solution;
    int iterations = 0;
    std::vector<double> residual_history;
    bool converged = false;
    double final_residual = 0.0;
    double convexity_defect = 0.0;
    StabilityDiagnostic stability;
    double measure_total = 0.0;  // sum over the interior of the scheme operator
    int backtracks = 0;
    double final_nu = 0.0;
    double epsilon = 0.0;
    double tol = 0.0;
    bool mixed = false;
    std::vector<std::string> notes;
};

/// Residual F = target - max(ma, 0) + eps v on the interior, 0 on the boundary.
/// F is nondecreasing in v(x) and nonincreasing in each neighbour value.
class DiscreteScheme {
public:
    /// Plain scheme: ma_op(v)(x) = h^2 f(x) at every interior point.
    DiscreteScheme(const DiscretizedSource& f, const SolverConfig& cfg, double epsilon);
    /// Mixed scheme: ma3 = h^2 f(x) (the point mass) at the Dirac points and
    /// ma0 = 0 elsewhere.
    static DiscreteScheme mixed(const DiscretizedSource& f, std::vector<int> dirac_points,
                                const SolverConfig& cfg, double epsilon);

    const LatticeDomain& domain() const { return *domain_; }
    const Stencil& stencil() const { return stencil_; }
    double target(int idx) const { return target_[idx]; }
    OperatorKind operator_at(int idx) const;
    double epsilon() const { return epsilon_; }
    bool is_mixed() const { return mixed_; }

    /// Operator value at an interior point, unclamped.
    double measure_at(const MeshFunction& v, int idx) const;
    double residual_at(const MeshFunction& v, int idx) const;
    Eigen::VectorXd residual(const MeshFunction& v) const;

private:
    DiscreteScheme(const DiscretizedSource& f, const SolverConfig& cfg, double epsilon, bool mixed,
                   std::vector<int> dirac_points);

    DomainPtr domain_;
    Stencil stencil_;
    OperatorKind op_;
    int angle_refinement_;
    double epsilon_;
    bool mixed_;
    std::vector<char> dirac_flag_;
    Eigen::VectorXd target_;
};

/// Resolves the defaulted epsilon for a problem.
double default_epsilon(const LatticeDomain& d, const BoundaryData& g);
double default_tolerance(const LatticeDomain& d);

MeshFunction residual(const MeshFunction& v, const DiscretizedSource& f, const SolverConfig& cfg);
MeshFunction euler_step(const MeshFunction& v, const DiscretizedSource& f, const SolverConfig& cfg,
                        double nu_current);

SolveReport solve(const DomainPtr& d, const DiscretizedSource& f, const BoundaryData& g,
                  const SolverConfig& cfg);
SolveReport solve_mixed(const DomainPtr& d, const std::vector<int>& dirac_points, const DiscretizedSource& f,
                        const BoundaryData& g, const SolverConfig& cfg);
/// Runs the iteration from a given initial mesh function; boundary values of
/// `init` are kept.
SolveReport iterate(const DiscreteScheme& scheme, MeshFunction init, const SolverConfig& cfg);

StabilityDiagnostic stability_diagnostic(const MeshFunction& v, const LatticeDomain& d, StencilPolicy policy);

/// Discrete harmonic function with boundary values r_h(g̃): damped Jacobi on
/// the 5-point Laplacian until the sup residual is below 1e-10.
MeshFunction harmonic_init(const DomainPtr& d, const BoundaryData& g);

}  // namespace dma

#endif  // DMA_SOLVER_HPP
