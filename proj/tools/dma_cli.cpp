#include "dma/problem.hpp"

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv)
{
    CLI::App app{"Discrete Monge-Ampere measures and Dirichlet solver"};
    app.require_subcommand(1);

    std::string config, out_dir = ".", function = "boundary", op = "MA2", point, constraints;
    int resolution = 2000;

    auto* solve = app.add_subcommand("solve", "solve one problem; writes solution.csv, measures.csv, report.json");
    solve->add_option("--config", config, "problem configuration (JSON)")->required()->check(CLI::ExistingFile);
    solve->add_option("--out", out_dir, "output directory");

    auto* study = app.add_subcommand("study", "h-refinement study; writes convergence.csv");
    study->add_option("--config", config, "study configuration (JSON)")->required()->check(CLI::ExistingFile);
    study->add_option("--out", out_dir, "output directory");

    auto* oper = app.add_subcommand("operator", "all operators of a catalog function at one lattice point");
    oper->add_option("--config", config, "problem configuration giving domain, h and stencil policy")
        ->required()
        ->check(CLI::ExistingFile);
    oper->add_option("--function", function, "quadratic, cone, ridge, affine, or boundary (the configured g)");
    oper->add_option("--operator", op, "MA0, MA1, MA2, MA3 or nine_point_product");
    oper->add_option("--point", point, "lattice point as x,y")->required();

    auto* check = app.add_subcommand("measure-check", "weak-convergence report over the configured boxes");
    check->add_option("--config", config, "problem configuration with boxes (JSON)")
        ->required()
        ->check(CLI::ExistingFile);
    check->add_option("--out", out_dir, "output directory");

    auto* oracle = app.add_subcommand("oracle-area", "clipped area of slab constraints next to the raster oracle");
    oracle->add_option("--constraints", constraints, "JSON with constraints [{e, lower, upper}] and optional lo, hi")
        ->required()
        ->check(CLI::ExistingFile);
    oracle->add_option("--resolution", resolution, "raster cells per side")->check(CLI::Range(16, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (*solve)
            return dma::cmd_solve(config, out_dir, std::cerr);
        if (*study)
            return dma::cmd_study(config, out_dir, std::cerr);
        if (*oper)
            return dma::cmd_operator(config, function, op, point, std::cout, std::cerr);
        if (*check)
            return dma::cmd_measure_check(config, out_dir, std::cerr);
        if (*oracle)
            return dma::cmd_oracle_area(constraints, resolution, std::cout, std::cerr);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    }
    return 1;
}
