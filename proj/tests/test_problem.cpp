#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "dma/problem.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

using namespace dma;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

const char* base_problem = R"({
  "domain": {"type": "square", "center": [0, 0], "half_width": 1},
  "h": 0.25,
  "measure": {"density": {"type": "constant", "c": 1}},
  "boundary": {"type": "quadratic"},
  "solver": {"operator": "MA2"}
})";

json base() { return json::parse(base_problem); }

std::string error_of(const json& j)
{
    try {
        parse_problem(j.dump());
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& name)
        : path(fs::temp_directory_path() / ("dma_test_problem_" + name + "_" + std::to_string(::getpid())))
    {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string file(const std::string& name, const json& content) const
    {
        const auto p = path / name;
        std::ofstream(p) << content.dump(2);
        return p.string();
    }
};

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

}  // namespace

TEST_CASE("a full problem parses with defaults")
{
    const auto cfg = parse_problem(base_problem);
    CHECK(cfg.h == 0.25);
    CHECK_FALSE(cfg.n.has_value());
    CHECK(cfg.solver.op == OperatorKind::MA2);
    CHECK(cfg.solver.nu == 0.1);
    CHECK_FALSE(cfg.solver.epsilon.has_value());
    CHECK(cfg.solver.sweep == SweepKind::Euler);
    CHECK(cfg.boundary.kind == BoundaryData::Kind::Quadratic);
    const auto echo = json::parse(resolved_config_json(cfg));
    CHECK(echo["solver"]["nu"] == 0.1);
    CHECK(echo["solver"]["policy"] == "full");
    CHECK(echo["solver"]["tol"].get<double>() == doctest::Approx(1e-8 * 0.0625));
}

TEST_CASE("N sets the mesh size")
{
    auto j = base();
    j.erase("h");
    j["N"] = 17;
    const auto cfg = parse_problem(j.dump());
    CHECK(cfg.h == doctest::Approx(0.125));
    CHECK(cfg.n == 17);
    CHECK(mesh_size_from_points(Rectangle{Vec2(0, 0), Vec2(2, 1)}, 5) == doctest::Approx(0.5));
}

TEST_CASE("errors name the offending key")
{
    {
        auto j = base();
        j["h"] = -0.5;
        CHECK(error_of(j).starts_with("h:"));
    }
    {
        auto j = base();
        j["N"] = 9;
        CHECK(error_of(j).find("exactly one of h and N") != std::string::npos);
    }
    {
        auto j = base();
        j["solver"]["nu"] = 2.0;
        CHECK(error_of(j).starts_with("solver.nu:"));
    }
    {
        auto j = base();
        j["solver"]["sweep"] = "jacobi";
        CHECK(error_of(j).starts_with("solver.sweep:"));
    }
    {
        auto j = base();
        j["boundary"]["type"] = "paraboloid";
        CHECK(error_of(j).starts_with("boundary.type:"));
    }
    {
        auto j = base();
        j["domain"]["radius"] = 3;
        CHECK(error_of(j).starts_with("domain.radius:"));
    }
    {
        auto j = base();
        j["measure"]["diracs"] = json::array({{{"at", {0, 0}}}});
        CHECK(error_of(j).find("mass") != std::string::npos);
    }
    {
        auto j = base();
        j["solver"]["coarse_levels"] = 2;
        CHECK(error_of(j).starts_with("solver.coarse_levels:"));
    }
    {
        auto j = base();
        j["solver"]["policy"] = json{{"radius", 0}};
        CHECK(error_of(j).starts_with("solver.policy"));
    }
    {
        auto j = base();
        j["h_list"] = {0.25, 0.5};
        CHECK(error_of(j).starts_with("h_list:"));
    }
    CHECK_THROWS_AS(parse_problem("{ not json"), ConfigError);
}

TEST_CASE("study parsing")
{
    json s{{"base", base()}, {"h_list", {0.25, 0.125}}, {"compact_subset", {{"lo", {-0.5, -0.5}}, {"hi", {0.5, 0.5}}}}};
    const auto st = parse_study(s.dump());
    CHECK(st.h_list.size() == 2);
    CHECK(st.reference.kind == BoundaryData::Kind::Quadratic);
    s["reference"] = "cone";
    CHECK(parse_study(s.dump()).reference.kind == BoundaryData::Kind::Cone);
    s["compact_subset"]["hi"] = {1.0, 0.5};
    CHECK_THROWS_AS(parse_study(s.dump()), ConfigError);
    s["compact_subset"]["hi"] = {0.5, 0.5};
    s["h_list"] = json::array();
    CHECK_THROWS_AS(parse_study(s.dump()), ConfigError);
}

TEST_CASE("operator records at the cone vertex")
{
    const auto d = build_domain(Rectangle{Vec2(-1, -1), Vec2(1, 1)}, 1.0);
    const auto v = MeshFunction::restrict(d, [](const Vec2& x) { return x.norm(); });
    const auto rec = operator_record(v, LatticePoint(0, 0), StencilPolicy::full(), 1);
    CHECK(rec.ma0 == doctest::Approx(4.0));
    CHECK(rec.ma1 == doctest::Approx(8 * (std::sqrt(2.0) - 1)));
    CHECK(rec.ma2 == doctest::Approx(8 * (std::sqrt(2.0) - 1)));
    REQUIRE(rec.nine_point_product.has_value());
    CHECK(*rec.nine_point_product == doctest::Approx(4.0));
    CHECK(format_double(0.1) == "0.10000000000000001");
}

TEST_CASE("solve command exit codes")
{
    TempDir tmp("solve");
    std::ostringstream err;
    {
        auto j = base();
        j["h"] = -1;
        CHECK(cmd_solve(tmp.file("neg.json", j), (tmp.path / "neg").string(), err) == 1);
    }
    {
        auto j = base();
        j["solver"]["max_iter"] = 1;
        j["solver"]["init"] = "harmonic";
        const auto out = tmp.path / "short";
        CHECK(cmd_solve(tmp.file("short.json", j), out.string(), err) == 2);
        REQUIRE(fs::exists(out / "report.json"));
        const auto rep = json::parse(slurp(out / "report.json"));
        CHECK(rep["converged"] == false);
        CHECK(rep["iterations"] == 1);
    }
    {
        const auto out = tmp.path / "ok";
        CHECK(cmd_solve(tmp.file("ok.json", base()), out.string(), err) == 0);
        const auto rep = json::parse(slurp(out / "report.json"));
        CHECK(rep["converged"] == true);
        CHECK(rep["stability"]["satisfied"] == true);
        CHECK(slurp(out / "solution.csv").starts_with("x,y,u\n"));
        CHECK(slurp(out / "measures.csv").starts_with("x,y,m\n"));
    }
    CHECK(cmd_solve((tmp.path / "missing.json").string(), (tmp.path / "x").string(), err) == 1);
}

TEST_CASE("solve output is byte-identical across runs")
{
    TempDir tmp("determinism");
    std::ostringstream err;
    auto j = base();
    j["measure"] = json{{"diracs", {{{"at", {0, 0}}, {"mass", 3.141592653589793}}}}};
    j["boundary"] = json{{"type", "cone"}};
    j["solver"]["max_iter"] = 300;
    const auto cfg = tmp.file("cone.json", j);
    const auto a = tmp.path / "a", b = tmp.path / "b";
    const int ca = cmd_solve(cfg, a.string(), err);
    const int cb = cmd_solve(cfg, b.string(), err);
    CHECK(ca == cb);
    for (const char* name : {"solution.csv", "measures.csv", "report.json"})
        CHECK(slurp(a / name) == slurp(b / name));
}

TEST_CASE("study command")
{
    TempDir tmp("study");
    std::ostringstream err;
    json s{{"base", base()}, {"h_list", {0.25, 0.125}}, {"compact_subset", {{"lo", {-0.5, -0.5}}, {"hi", {0.5, 0.5}}}}};
    const auto out = tmp.path / "q";
    REQUIRE(cmd_study(tmp.file("q.json", s), out.string(), err) == 0);
    std::istringstream csv(slurp(out / "convergence.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "h,max_err_K,measure_gap,iters,runtime_s");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        const auto c1 = line.find(','), c2 = line.find(',', c1 + 1);
        CHECK(std::stod(line.substr(c1 + 1, c2 - c1 - 1)) <= 1e-5);
    }
    CHECK(rows == 2);
    s["h_list"] = json::array();
    CHECK(cmd_study(tmp.file("empty.json", s), (tmp.path / "e").string(), err) == 1);
}

TEST_CASE("operator command")
{
    TempDir tmp("operator");
    std::ostringstream err;
    auto j = base();
    j["h"] = 1.0;
    j["boundary"] = json{{"type", "cone"}};
    const auto cfg = tmp.file("unit.json", j);
    {
        std::ostringstream out;
        REQUIRE(cmd_operator(cfg, "boundary", "MA2", "0,0", out, err) == 0);
        const auto rec = json::parse(out.str());
        CHECK(rec["ma0"].get<double>() == doctest::Approx(4.0));
        CHECK(rec["ma2"].get<double>() == doctest::Approx(3.313708498984761));
        CHECK(rec["nine_point_product"].get<double>() == doctest::Approx(4.0));
    }
    {
        std::ostringstream out;
        REQUIRE(cmd_operator(cfg, "affine", "MA1", "0,0", out, err) == 0);
        const auto rec = json::parse(out.str());
        for (const char* k : {"ma0", "ma1", "ma2", "ma3", "nine_point_product", "lambda1"})
            CHECK(std::abs(rec[k].get<double>()) <= 1e-12);
    }
    {
        std::ostringstream out;
        CHECK(cmd_operator(cfg, "boundary", "MA2", "1,0", out, err) == 1);
        CHECK(cmd_operator(cfg, "boundary", "MA2", "0.3,0", out, err) == 1);
        CHECK(cmd_operator(cfg, "nonsense", "MA2", "0,0", out, err) == 1);
    }
}

TEST_CASE("measure-check command")
{
    TempDir tmp("measure");
    std::ostringstream err;
    auto j = base();
    j["measure"] = json{{"density", {{"type", "zero"}}}};
    j["boundary"] = json{{"type", "ridge"}};
    j["boxes"] = {{{"lo", {-0.5, -0.5}}, {"hi", {0.5, 0.5}}}, {{"lo", {3, 3}}, {"hi", {4, 4}}}};
    const auto out = tmp.path / "zero";
    REQUIRE(cmd_measure_check(tmp.file("zero.json", j), out.string(), err) == 0);
    std::istringstream csv(slurp(out / "weak_convergence.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "h,box,measured,expected,gap");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        // box labels contain no commas, so the last three fields are numbers
        const auto g = line.rfind(','), e = line.rfind(',', g - 1), m = line.rfind(',', e - 1);
        CHECK(std::stod(line.substr(m + 1, e - m - 1)) <= 1e-8);
        CHECK(std::stod(line.substr(e + 1, g - e - 1)) == 0.0);
    }
    CHECK(rows == 2);

    auto cut = base();
    cut["measure"] = json{{"diracs", {{{"at", {0, 0}}, {"mass", 1.0}}}}};
    cut["boundary"] = json{{"type", "cone"}};
    cut["boxes"] = {{{"lo", {0, -0.5}}, {"hi", {0.5, 0.5}}}};
    CHECK(cmd_measure_check(tmp.file("cut.json", cut), (tmp.path / "cut").string(), err) == 1);
    CHECK(err.str().find("Dirac") != std::string::npos);
}

TEST_CASE("oracle-area command")
{
    TempDir tmp("oracle");
    std::ostringstream err;
    const double s = std::sqrt(2.0);
    json c{{"constraints",
            {{{"e", {1, 0}}, {"lower", -1}, {"upper", 1}},
             {{"e", {0, 1}}, {"lower", -1}, {"upper", 1}},
             {{"e", {1, 1}}, {"lower", -s}, {"upper", s}},
             {{"e", {1, -1}}, {"lower", -s}, {"upper", s}}}}};
    std::ostringstream out;
    REQUIRE(cmd_oracle_area(tmp.file("oct.json", c), 2000, out, err) == 0);
    const auto r = json::parse(out.str());
    CHECK(r["clipped_area"].get<double>() == doctest::Approx(8 * (s - 1)));
    CHECK(std::abs(r["oracle_area"].get<double>() - 8 * (s - 1)) <= 0.01);
    CHECK(cmd_oracle_area(tmp.file("oct2.json", c), 4, out, err) == 1);
}
