#ifndef DMA_PROBLEM_HPP
#define DMA_PROBLEM_HPP

#include "dma/lattice.hpp"
#include "dma/measure.hpp"
#include "dma/solver.hpp"

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace dma {

/// Malformed configuration; the message starts with the offending key.
struct ConfigError : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

struct ProblemConfig {
    DomainShape shape;
    double h = 0.0;
    std::optional<int> n;  // lattice points per side when given instead of h
    SourceMeasure measure;
    BoundaryData boundary;
    SolverConfig solver;
    bool mixed = false;
    std::vector<BorelBox> boxes;
    std::vector<double> h_list;  // measure-check sweep; empty means just h
};

struct StudyConfig {
    ProblemConfig base;
    std::vector<double> h_list;
    BorelBox compact_subset;
    BoundaryData reference;
};

/// Mesh size giving n lattice points across the widest side of the bounding box.
double mesh_size_from_points(const DomainShape& shape, int n);

ProblemConfig parse_problem(const std::string& json_text);
StudyConfig parse_study(const std::string& json_text);
ProblemConfig load_problem(const std::string& path);
StudyConfig load_study(const std::string& path);

/// JSON echo of the configuration with every default filled in.
std::string resolved_config_json(const ProblemConfig& cfg, int indent = 2);

struct ProblemRun {
    DomainPtr domain;
    DiscretizedSource source;
    SolveReport report;
};

/// Builds the lattice, discretizes the measure and runs solve or solve_mixed.
ProblemRun run_problem(const ProblemConfig& cfg);

/// Values of every operator at one point, as printed by `dma_cli operator`.
struct OperatorRecord {
    double ma0 = 0.0;
    double ma1 = 0.0;
    double ma2 = 0.0;
    double ma3 = 0.0;
    std::optional<double> nine_point_product;  // empty without the 8 axis/diagonal neighbours
    double lambda1 = 0.0;
};
OperatorRecord operator_record(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy,
                               int angle_refinement);

/// "%.17g" formatting used in every artifact.
std::string format_double(double x);

/// Subcommands. Each returns the process exit code: 0 ok, 1 configuration
/// error, 2 non-convergence. Artifacts go to out_dir; diagnostics to err.
int cmd_solve(const std::string& config_path, const std::string& out_dir, std::ostream& err);
int cmd_study(const std::string& config_path, const std::string& out_dir, std::ostream& err);
int cmd_operator(const std::string& config_path, const std::string& function, const std::string& op,
                 const std::string& point, std::ostream& out, std::ostream& err);
int cmd_measure_check(const std::string& config_path, const std::string& out_dir, std::ostream& err);
int cmd_oracle_area(const std::string& constraints_path, int resolution, std::ostream& out, std::ostream& err);

}  // namespace dma

#endif  // DMA_PROBLEM_HPP
