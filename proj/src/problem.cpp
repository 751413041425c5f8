#include "dma/problem.hpp"

#include "dma/geometry.hpp"

#include <json.hpp>

#include <Eigen/Core>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace dma {

using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

/// JSON object view that remembers its key path and rejects unknown keys.
class Node {
public:
    Node(const json& j, std::string path) : j_(j), path_(std::move(path))
    {
        if (!j_.is_object())
            fail("expected an object");
    }

    [[noreturn]] void fail(const std::string& what) const
    {
        throw ConfigError((path_.empty() ? std::string("<root>") : path_) + ": " + what);
    }

    std::string key_path(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

    bool has(const std::string& key) const { return j_.contains(key) && !j_.at(key).is_null(); }

    const json& raw(const std::string& key) const
    {
        used_.insert(key);
        if (!j_.contains(key))
            throw ConfigError(key_path(key) + ": missing required key");
        return j_.at(key);
    }

    Node child(const std::string& key) const { return Node(raw(key), key_path(key)); }

    double number(const std::string& key) const
    {
        const json& v = raw(key);
        if (!v.is_number())
            throw ConfigError(key_path(key) + ": expected a number");
        const double x = v.get<double>();
        if (!std::isfinite(x))
            throw ConfigError(key_path(key) + ": expected a finite number");
        return x;
    }
    double number(const std::string& key, double fallback) const { return has(key) ? number(key) : mark(key, fallback); }

    int integer(const std::string& key) const
    {
        const json& v = raw(key);
        if (!v.is_number_integer())
            throw ConfigError(key_path(key) + ": expected an integer");
        return v.get<int>();
    }
    int integer(const std::string& key, int fallback) const { return has(key) ? integer(key) : mark(key, fallback); }

    bool boolean(const std::string& key, bool fallback) const
    {
        if (!has(key))
            return mark(key, fallback);
        const json& v = raw(key);
        if (!v.is_boolean())
            throw ConfigError(key_path(key) + ": expected true or false");
        return v.get<bool>();
    }

    std::string string(const std::string& key) const
    {
        const json& v = raw(key);
        if (!v.is_string())
            throw ConfigError(key_path(key) + ": expected a string");
        return v.get<std::string>();
    }
    std::string string(const std::string& key, const std::string& fallback) const
    {
        return has(key) ? string(key) : mark(key, fallback);
    }

    Vec2 vec2(const std::string& key) const { return to_vec2(raw(key), key_path(key)); }
    Vec2 vec2(const std::string& key, const Vec2& fallback) const { return has(key) ? vec2(key) : mark(key, fallback); }

    static Vec2 to_vec2(const json& v, const std::string& where)
    {
        if (!v.is_array() || v.size() != 2 || !v[0].is_number() || !v[1].is_number())
            throw ConfigError(where + ": expected [x, y]");
        return {v[0].get<double>(), v[1].get<double>()};
    }

    /// Throws on keys that were never read.
    void finish() const
    {
        for (auto it = j_.begin(); it != j_.end(); ++it)
            if (!used_.count(it.key()))
                throw ConfigError(key_path(it.key()) + ": unknown key");
    }

private:
    template <typename T>
    T mark(const std::string& key, T value) const
    {
        used_.insert(key);
        return value;
    }

    const json& j_;
    std::string path_;
    mutable std::set<std::string> used_;
};

DomainShape parse_domain(const Node& n)
{
    const std::string type = n.string("type");
    DomainShape shape;
    if (type == "square") {
        const Vec2 c = n.vec2("center", Vec2::Zero());
        const double hw = n.number("half_width");
        if (!(hw > 0.0))
            n.fail("half_width must be positive");
        shape = Rectangle{c - Vec2::Constant(hw), c + Vec2::Constant(hw)};
    } else if (type == "rect") {
        const Vec2 lo = n.vec2("lo"), hi = n.vec2("hi");
        if (!(lo.array() < hi.array()).all())
            n.fail("rect needs lo < hi componentwise");
        shape = Rectangle{lo, hi};
    } else if (type == "disc") {
        const double r = n.number("radius");
        if (!(r > 0.0))
            n.fail("radius must be positive");
        shape = Disc{n.vec2("center", Vec2::Zero()), r};
    } else if (type == "polygon") {
        const json& verts = n.raw("vertices");
        if (!verts.is_array() || verts.size() < 3)
            throw ConfigError(n.key_path("vertices") + ": expected at least three [x, y] points");
        PolygonShape poly;
        for (std::size_t i = 0; i < verts.size(); ++i)
            poly.vertices.push_back(Node::to_vec2(verts[i], n.key_path("vertices") + "[" + std::to_string(i) + "]"));
        shape = poly;
    } else {
        throw ConfigError(n.key_path("type") + ": unknown domain type '" + type + "'");
    }
    n.finish();
    return shape;
}

Density parse_density(const Node& n)
{
    const std::string type = n.string("type");
    Density d;
    if (type == "zero") {
        d = Density::zero();
    } else if (type == "constant") {
        const double c = n.number("c");
        if (c < 0.0)
            n.fail("density must be nonnegative");
        d = Density::constant(c);
    } else if (type == "radial_power") {
        const double p = n.number("p");
        if (p < 2.0)
            n.fail("radial_power density needs p >= 2");
        d = Density::radial_power(p, n.vec2("center", Vec2::Zero()));
    } else {
        throw ConfigError(n.key_path("type") + ": unknown density type '" + type + "'");
    }
    n.finish();
    return d;
}

SourceMeasure parse_measure(const Node& n)
{
    SourceMeasure m;
    if (n.has("density"))
        m.density = parse_density(n.child("density"));
    else
        n.boolean("density", false);
    if (n.has("diracs")) {
        const json& list = n.raw("diracs");
        if (!list.is_array())
            throw ConfigError(n.key_path("diracs") + ": expected a list");
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Node item(list[i], n.key_path("diracs") + "[" + std::to_string(i) + "]");
            const double mass = item.number("mass");
            if (!(mass > 0.0))
                item.fail("mass must be positive");
            m.diracs.push_back({item.vec2("at"), mass});
            item.finish();
        }
    } else {
        n.boolean("diracs", false);
    }
    n.finish();
    return m;
}

BoundaryData parse_boundary(const Node& n)
{
    const std::string type = n.string("type");
    BoundaryData g;
    try {
        if (type == "quadratic")
            g = BoundaryData::quadratic(n.number("a", 1.0), n.vec2("center", Vec2::Zero()), n.vec2("b", Vec2::Zero()),
                                        n.number("c", 0.0));
        else if (type == "cone")
            g = BoundaryData::cone(n.vec2("center", Vec2::Zero()));
        else if (type == "ridge")
            g = BoundaryData::ridge();
        else if (type == "radial_power")
            g = BoundaryData::radial_power(n.number("p"), n.vec2("center", Vec2::Zero()));
        else if (type == "affine")
            g = BoundaryData::affine(n.vec2("b", Vec2::Zero()), n.number("c", 0.0));
        else
            throw ConfigError(n.key_path("type") + ": unknown boundary function '" + type + "'");
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        n.fail(e.what());
    }
    n.finish();
    return g;
}

BoundaryData catalog_function(const std::string& name, const Node* where)
{
    if (name == "quadratic")
        return BoundaryData::quadratic();
    if (name == "cone")
        return BoundaryData::cone();
    if (name == "ridge")
        return BoundaryData::ridge();
    if (name == "affine")
        return BoundaryData::affine(Vec2(1.0, -0.5), 0.25);
    const std::string msg = "unknown catalog function '" + name + "'";
    if (where)
        where->fail(msg);
    throw ConfigError(msg);
}

StencilPolicy parse_policy(const json& v, const std::string& where)
{
    if (v.is_string()) {
        const std::string s = v.get<std::string>();
        if (s == "full")
            return StencilPolicy::full();
        if (s == "nine_point")
            return StencilPolicy::nine_point();
        throw ConfigError(where + ": unknown stencil policy '" + s + "'");
    }
    const Node n(v, where);
    const int k = n.integer("radius");
    n.finish();
    if (k < 1)
        throw ConfigError(where + ".radius: must be >= 1");
    return StencilPolicy::with_radius(k);
}

SolverConfig parse_solver(const Node& n, bool& mixed)
{
    SolverConfig s;
    try {
        s.op = operator_from_string(n.string("operator", "MA2"));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(n.key_path("operator") + ": " + e.what());
    }
    if (s.op == OperatorKind::NinePointProduct)
        throw ConfigError(n.key_path("operator") + ": the nine-point product is not a solver operator");
    s.policy = n.has("policy") ? parse_policy(n.raw("policy"), n.key_path("policy")) : StencilPolicy::full();
    s.nu = n.number("nu", 0.1);
    if (!(s.nu > 0.0 && s.nu <= 1.0))
        throw ConfigError(n.key_path("nu") + ": must lie in (0, 1]");
    if (n.has("epsilon")) {
        s.epsilon = n.number("epsilon");
        if (*s.epsilon < 0.0)
            throw ConfigError(n.key_path("epsilon") + ": must be >= 0");
    } else {
        n.boolean("epsilon", false);
    }
    if (n.has("tol")) {
        s.tol = n.number("tol");
        if (!(*s.tol > 0.0))
            throw ConfigError(n.key_path("tol") + ": must be positive");
    } else {
        n.boolean("tol", false);
    }
    s.max_iter = n.integer("max_iter", 200000);
    if (s.max_iter < 0)
        throw ConfigError(n.key_path("max_iter") + ": must be >= 0");
    const std::string init = n.string("init", "gtilde");
    if (init == "gtilde")
        s.init = InitKind::GTilde;
    else if (init == "harmonic")
        s.init = InitKind::Harmonic;
    else
        throw ConfigError(n.key_path("init") + ": expected gtilde or harmonic");
    const std::string sweep = n.string("sweep", "euler");
    if (sweep == "euler")
        s.sweep = SweepKind::Euler;
    else if (sweep == "gauss_seidel")
        s.sweep = SweepKind::GaussSeidel;
    else
        throw ConfigError(n.key_path("sweep") + ": expected euler or gauss_seidel");
    s.angle_refinement = n.integer("angle_refinement", 1);
    if (s.angle_refinement < 1)
        throw ConfigError(n.key_path("angle_refinement") + ": must be >= 1");
    s.coarse_levels = n.integer("coarse_levels", 0);
    if (s.coarse_levels < 0)
        throw ConfigError(n.key_path("coarse_levels") + ": must be >= 0");
    if (s.coarse_levels > 0 && s.sweep != SweepKind::GaussSeidel)
        throw ConfigError(n.key_path("coarse_levels") + ": needs sweep gauss_seidel");
    mixed = n.boolean("mixed", false);
    n.finish();
    return s;
}

BorelBox parse_box(const json& v, const std::string& where)
{
    const Node n(v, where);
    BorelBox b{n.vec2("lo"), n.vec2("hi")};
    n.finish();
    if (!(b.lo.array() < b.hi.array()).all())
        throw ConfigError(where + ": box needs lo < hi componentwise");
    return b;
}

std::vector<double> parse_h_list(const Node& n, const std::string& key)
{
    const json& list = n.raw(key);
    if (!list.is_array())
        throw ConfigError(n.key_path(key) + ": expected a list of mesh sizes");
    std::vector<double> out;
    for (std::size_t i = 0; i < list.size(); ++i) {
        if (!list[i].is_number() || !(list[i].get<double>() > 0.0))
            throw ConfigError(n.key_path(key) + "[" + std::to_string(i) + "]: expected a positive number");
        out.push_back(list[i].get<double>());
        if (i > 0 && !(out[i] < out[i - 1]))
            throw ConfigError(n.key_path(key) + ": mesh sizes must be strictly decreasing");
    }
    return out;
}

ProblemConfig parse_problem_node(const Node& n)
{
    ProblemConfig cfg;
    cfg.shape = parse_domain(n.child("domain"));
    const bool has_h = n.has("h"), has_n = n.has("N");
    if (has_h == has_n)
        n.fail("exactly one of h and N is required");
    if (has_h) {
        cfg.h = n.number("h");
        if (!(cfg.h > 0.0))
            throw ConfigError(n.key_path("h") + ": must be positive");
        n.boolean("N", false);
    } else {
        const int points = n.integer("N");
        if (points < 3)
            throw ConfigError(n.key_path("N") + ": needs at least 3 points per side");
        cfg.n = points;
        cfg.h = mesh_size_from_points(cfg.shape, points);
        n.boolean("h", false);
    }
    cfg.measure = n.has("measure") ? parse_measure(n.child("measure")) : SourceMeasure{};
    if (!n.has("measure"))
        n.boolean("measure", false);
    cfg.boundary = parse_boundary(n.child("boundary"));
    if (n.has("solver")) {
        cfg.solver = parse_solver(n.child("solver"), cfg.mixed);
    } else {
        n.boolean("solver", false);
    }
    if (n.has("boxes")) {
        const json& list = n.raw("boxes");
        if (!list.is_array())
            throw ConfigError(n.key_path("boxes") + ": expected a list");
        for (std::size_t i = 0; i < list.size(); ++i)
            cfg.boxes.push_back(parse_box(list[i], n.key_path("boxes") + "[" + std::to_string(i) + "]"));
    } else {
        n.boolean("boxes", false);
    }
    if (n.has("h_list"))
        cfg.h_list = parse_h_list(n, "h_list");
    else
        n.boolean("h_list", false);
    n.finish();
    return cfg;
}

json parse_text(const std::string& text)
{
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("<root>: invalid JSON: ") + e.what());
    }
}

std::string read_file(const std::string& path)
{
    std::ifstream in(path);
    if (!in)
        throw ConfigError(path + ": cannot read file");
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

json vec_json(const Vec2& v) { return json::array({v.x(), v.y()}); }

json shape_json(const DomainShape& shape)
{
    return std::visit(
        [](const auto& s) -> json {
            using S = std::decay_t<decltype(s)>;
            if constexpr (std::is_same_v<S, Rectangle>) {
                return {{"type", "rect"}, {"lo", vec_json(s.lo)}, {"hi", vec_json(s.hi)}};
            } else if constexpr (std::is_same_v<S, Disc>) {
                return {{"type", "disc"}, {"center", vec_json(s.center)}, {"radius", s.radius}};
            } else {
                json verts = json::array();
                for (const Vec2& v : s.vertices)
                    verts.push_back(vec_json(v));
                return {{"type", "polygon"}, {"vertices", verts}};
            }
        },
        shape);
}

json boundary_json(const BoundaryData& g)
{
    json j{{"type", g.name()}};
    switch (g.kind) {
    case BoundaryData::Kind::Quadratic:
        j["a"] = g.a;
        j["center"] = vec_json(g.center);
        j["b"] = vec_json(g.b);
        j["c"] = g.c;
        break;
    case BoundaryData::Kind::Cone: j["center"] = vec_json(g.center); break;
    case BoundaryData::Kind::Ridge: break;
    case BoundaryData::Kind::RadialPower:
        j["p"] = g.p;
        j["center"] = vec_json(g.center);
        break;
    case BoundaryData::Kind::Affine:
        j["b"] = vec_json(g.b);
        j["c"] = g.c;
        break;
    }
    return j;
}

json policy_json(const StencilPolicy& p)
{
    switch (p.kind) {
    case StencilPolicy::Kind::Full: return "full";
    case StencilPolicy::Kind::NinePoint: return "nine_point";
    case StencilPolicy::Kind::Radius: return {{"radius", p.radius}};
    }
    return "full";
}

json config_json(const ProblemConfig& cfg, const LatticeDomain* d)
{
    json measure{{"diracs", json::array()}};
    if (cfg.measure.density) {
        const Density& den = *cfg.measure.density;
        json dj{{"type", den.name()}};
        if (den.kind == Density::Kind::Constant)
            dj["c"] = den.c;
        if (den.kind == Density::Kind::RadialPower) {
            dj["p"] = den.p;
            dj["center"] = vec_json(den.center);
        }
        measure["density"] = dj;
    } else {
        measure["density"] = nullptr;
    }
    for (const DiracMass& m : cfg.measure.diracs)
        measure["diracs"].push_back({{"at", vec_json(m.at)}, {"mass", m.mass}});

    const SolverConfig& s = cfg.solver;
    json solver{{"operator", to_string(s.op)},
                {"policy", policy_json(s.policy)},
                {"nu", s.nu},
                {"max_iter", s.max_iter},
                {"init", s.init == InitKind::Harmonic ? "harmonic" : "gtilde"},
                {"sweep", s.sweep == SweepKind::GaussSeidel ? "gauss_seidel" : "euler"},
                {"angle_refinement", s.angle_refinement},
                {"coarse_levels", s.coarse_levels},
                {"mixed", cfg.mixed}};
    if (s.epsilon)
        solver["epsilon"] = *s.epsilon;
    else if (d)
        solver["epsilon"] = default_epsilon(*d, cfg.boundary);
    if (s.tol)
        solver["tol"] = *s.tol;
    else if (d)
        solver["tol"] = default_tolerance(*d);

    json j{{"domain", shape_json(cfg.shape)},
           {"h", cfg.h},
           {"measure", measure},
           {"boundary", boundary_json(cfg.boundary)},
           {"solver", solver}};
    if (cfg.n)
        j["N"] = *cfg.n;
    json boxes = json::array();
    for (const BorelBox& b : cfg.boxes)
        boxes.push_back({{"lo", vec_json(b.lo)}, {"hi", vec_json(b.hi)}});
    j["boxes"] = boxes;
    if (!cfg.h_list.empty())
        j["h_list"] = cfg.h_list;
    return j;
}

void ensure_dir(const std::string& dir)
{
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec)
        throw ConfigError(dir + ": cannot create output directory (" + ec.message() + ")");
}

std::ofstream open_out(const std::string& dir, const std::string& name)
{
    const auto path = std::filesystem::path(dir) / name;
    std::ofstream out(path);
    if (!out)
        throw ConfigError(path.string() + ": cannot open for writing");
    return out;
}

/// Sum of ma2 (or ma1 for MA1 runs) over all interior points.
double total_measure(const MeshFunction& u, const SolverConfig& s)
{
    const OperatorKind op = s.op == OperatorKind::MA1 ? OperatorKind::MA1 : OperatorKind::MA2;
    const auto [lo, hi] = u.domain().bounding_box();
    return ma_measure_of_set(u, BorelBox{lo - Vec2::Ones(), hi + Vec2::Ones()}, op, s.policy);
}

Vec2 parse_point(const std::string& text)
{
    const auto comma = text.find(',');
    if (comma == std::string::npos)
        throw ConfigError("point: expected x,y");
    try {
        std::size_t used = 0;
        const double x = std::stod(text.substr(0, comma), &used);
        const double y = std::stod(text.substr(comma + 1), &used);
        return {x, y};
    } catch (const std::exception&) {
        throw ConfigError("point: expected x,y");
    }
}

}  // namespace

double mesh_size_from_points(const DomainShape& shape, int n)
{
    if (n < 2)
        throw ConfigError("N: needs at least 2 points per side");
    const LatticeDomain probe(shape, 1.0);
    const auto [lo, hi] = probe.bounding_box();
    return (hi - lo).maxCoeff() / (n - 1);
}

ProblemConfig parse_problem(const std::string& json_text)
{
    const json j = parse_text(json_text);
    return parse_problem_node(Node(j, ""));
}

StudyConfig parse_study(const std::string& json_text)
{
    const json j = parse_text(json_text);
    const Node n(j, "");
    StudyConfig study;
    study.base = parse_problem_node(n.child("base"));
    study.h_list = parse_h_list(n, "h_list");
    if (study.h_list.empty())
        throw ConfigError("h_list: needs at least one mesh size");
    study.compact_subset = parse_box(n.raw("compact_subset"), "compact_subset");
    if (n.has("reference")) {
        const json& ref = n.raw("reference");
        study.reference = ref.is_string() ? catalog_function(ref.get<std::string>(), &n)
                                          : parse_boundary(Node(ref, "reference"));
    } else {
        n.boolean("reference", false);
        study.reference = study.base.boundary;
    }
    n.finish();
    const LatticeDomain probe(study.base.shape, 1.0);
    for (const Vec2& corner : {study.compact_subset.lo, study.compact_subset.hi,
                               Vec2(study.compact_subset.lo.x(), study.compact_subset.hi.y()),
                               Vec2(study.compact_subset.hi.x(), study.compact_subset.lo.y())})
        if (!probe.contains_open(corner))
            throw ConfigError("compact_subset: must lie strictly inside the domain");
    return study;
}

ProblemConfig load_problem(const std::string& path) { return parse_problem(read_file(path)); }
StudyConfig load_study(const std::string& path) { return parse_study(read_file(path)); }

std::string resolved_config_json(const ProblemConfig& cfg, int indent)
{
    DomainPtr d;
    try {
        d = build_domain(cfg.shape, cfg.h);
    } catch (const std::exception&) {
    }
    return config_json(cfg, d.get()).dump(indent);
}

ProblemRun run_problem(const ProblemConfig& cfg)
{
    ProblemRun run;
    run.domain = build_domain(cfg.shape, cfg.h);
    run.source = discretize_measure(cfg.measure, run.domain);
    run.report = cfg.mixed ? solve_mixed(run.domain, run.source.dirac_points, run.source, cfg.boundary, cfg.solver)
                           : solve(run.domain, run.source, cfg.boundary, cfg.solver);
    return run;
}

OperatorRecord operator_record(const MeshFunction& v, const LatticePoint& x, StencilPolicy policy,
                               int angle_refinement)
{
    const LatticeDomain& d = v.domain();
    const int idx = d.index_of(x);
    if (idx < 0 || !d.is_interior(idx))
        throw std::invalid_argument("point is not in the interior set");
    const PointStencil ps = build_point_stencil(d, idx, policy);
    OperatorRecord rec;
    rec.ma0 = ma0(v, ps);
    rec.ma1 = ma1(v, ps);
    rec.ma2 = ma2(v, ps);
    rec.ma3 = ma3(v, ps, angle_refinement);
    rec.lambda1 = lambda1(v, ps);
    try {
        rec.nine_point_product = nine_point_product(v, idx);
    } catch (const InadmissibleDirection&) {
    }
    return rec;
}

std::string format_double(double x)
{
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

int cmd_solve(const std::string& config_path, const std::string& out_dir, std::ostream& err)
{
    ProblemConfig cfg;
    ProblemRun run;
    try {
        cfg = load_problem(config_path);
        ensure_dir(out_dir);
        run = run_problem(cfg);
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
    for (const std::string& w : run.source.warnings)
        err << "warning: " << w << '\n';

    const LatticeDomain& d = *run.domain;
    const SolveReport& rep = run.report;
    {
        auto out = open_out(out_dir, "solution.csv");
        out << "x,y,u\n";
        for (int idx = 0; idx < d.size(); ++idx) {
            const Vec2 c = d.coords(idx);
            out << format_double(c.x()) << ',' << format_double(c.y()) << ',' << format_double(rep.solution[idx])
                << '\n';
        }
    }
    {
        const double eps = rep.epsilon;
        const DiscreteScheme scheme = cfg.mixed
                                          ? DiscreteScheme::mixed(run.source, run.source.dirac_points, cfg.solver, eps)
                                          : DiscreteScheme(run.source, cfg.solver, eps);
        auto out = open_out(out_dir, "measures.csv");
        out << "x,y,m\n";
        for (int idx : d.interior()) {
            const Vec2 c = d.coords(idx);
            out << format_double(c.x()) << ',' << format_double(c.y()) << ','
                << format_double(scheme.measure_at(rep.solution, idx)) << '\n';
        }
    }
    json report{{"converged", rep.converged},
                {"iterations", rep.iterations},
                {"final_residual", rep.final_residual},
                {"tol", rep.tol},
                {"epsilon", rep.epsilon},
                {"backtracks", rep.backtracks},
                {"final_nu", rep.final_nu},
                {"convexity_defect", rep.convexity_defect},
                {"measure_total", rep.measure_total},
                {"source_total", run.source.total},
                {"mixed", rep.mixed},
                {"stability",
                 {{"alpha", rep.stability.alpha},
                  {"measure_sum", rep.stability.measure_sum},
                  {"boundary_max", rep.stability.boundary_max},
                  {"raw_bound", rep.stability.raw_bound},
                  {"bound", rep.stability.bound},
                  {"satisfied", rep.stability.satisfied},
                  {"raw_satisfied", rep.stability.raw_satisfied}}},
                {"residual_history", rep.residual_history},
                {"notes", rep.notes},
                {"warnings", run.source.warnings},
                {"lattice", {{"points", d.size()}, {"interior", d.interior().size()}, {"h", d.h()}}},
                {"config", config_json(cfg, &d)},
                {"versions", {{"dma", kVersion}, {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                                              std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                                              std::to_string(EIGEN_MINOR_VERSION)}}}};
    open_out(out_dir, "report.json") << report.dump(2) << '\n';
    if (!rep.converged) {
        err << "not converged after " << rep.iterations << " iterations (residual "
            << format_double(rep.final_residual) << ", tol " << format_double(rep.tol) << ")\n";
        return 2;
    }
    return 0;
}

int cmd_study(const std::string& config_path, const std::string& out_dir, std::ostream& err)
{
    StudyConfig study;
    try {
        study = load_study(config_path);
        ensure_dir(out_dir);
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
    struct Row {
        double h, err_k, gap;
        int iters;
        double runtime;
        bool converged;
    };
    std::vector<Row> rows;
    for (double h : study.h_list) {
        ProblemConfig cfg = study.base;
        cfg.h = h;
        cfg.n.reset();
        const auto start = std::chrono::steady_clock::now();
        ProblemRun run;
        try {
            run = run_problem(cfg);
        } catch (const std::invalid_argument& e) {
            err << "config error at h=" << format_double(h) << ": " << e.what() << '\n';
            return 1;
        }
        const double runtime = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const LatticeDomain& d = *run.domain;
        double err_k = 0.0;
        for (int idx = 0; idx < d.size(); ++idx) {
            const Vec2 x = d.coords(idx);
            if (study.compact_subset.contains(x, d.geometric_tolerance()))
                err_k = std::max(err_k, std::abs(run.report.solution[idx] - study.reference(x)));
        }
        const double gap = std::abs(total_measure(run.report.solution, cfg.solver) - total_mass(cfg.measure, d));
        rows.push_back({h, err_k, gap, run.report.iterations, runtime, run.report.converged});
    }
    auto out = open_out(out_dir, "convergence.csv");
    out << "h,max_err_K,measure_gap,iters,runtime_s\n";
    bool all = true;
    for (const Row& r : rows) {
        out << format_double(r.h) << ',' << format_double(r.err_k) << ',' << format_double(r.gap) << ',' << r.iters
            << ',' << format_double(r.runtime) << '\n';
        if (!r.converged) {
            err << "h=" << format_double(r.h) << " did not converge\n";
            all = false;
        }
    }
    return all ? 0 : 2;
}

int cmd_operator(const std::string& config_path, const std::string& function, const std::string& op,
                 const std::string& point, std::ostream& out, std::ostream& err)
{
    try {
        const ProblemConfig cfg = load_problem(config_path);
        const BoundaryData fn = function == "boundary" ? cfg.boundary : catalog_function(function, nullptr);
        const OperatorKind kind = operator_from_string(op);
        const DomainPtr d = build_domain(cfg.shape, cfg.h);
        const Vec2 p = parse_point(point);
        const LatticePoint m((p / d->h()).array().round().cast<int>());
        if ((m.cast<double>() * d->h() - p).norm() > 1e-9 * d->h())
            throw ConfigError("point: not a lattice point for h = " + format_double(d->h()));
        const int idx = d->index_of(m);
        if (idx < 0 || !d->is_interior(idx)) {
            err << "point " << point << " is not in the interior set\n";
            return 1;
        }
        const MeshFunction v = MeshFunction::restrict(d, [&fn](const Vec2& x) { return fn(x); });
        const OperatorRecord rec = operator_record(v, m, cfg.solver.policy, cfg.solver.angle_refinement);
        json j{{"ma0", rec.ma0}, {"ma1", rec.ma1}, {"ma2", rec.ma2}, {"ma3", rec.ma3}, {"lambda1", rec.lambda1}};
        j["nine_point_product"] = rec.nine_point_product ? json(*rec.nine_point_product) : json(nullptr);
        j["operator"] = to_string(kind);
        switch (kind) {
        case OperatorKind::MA0: j["value"] = rec.ma0; break;
        case OperatorKind::MA1: j["value"] = rec.ma1; break;
        case OperatorKind::MA2: j["value"] = rec.ma2; break;
        case OperatorKind::MA3: j["value"] = rec.ma3; break;
        case OperatorKind::NinePointProduct: j["value"] = j["nine_point_product"]; break;
        }
        j["point"] = vec_json(d->coords(idx));
        j["h"] = d->h();
        out << j.dump(2) << '\n';
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
}

int cmd_measure_check(const std::string& config_path, const std::string& out_dir, std::ostream& err)
{
    ProblemConfig cfg;
    try {
        cfg = load_problem(config_path);
        if (cfg.boxes.empty())
            throw ConfigError("boxes: measure-check needs at least one box");
        validate_boxes(cfg.measure, cfg.boxes);
        ensure_dir(out_dir);
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
    const std::vector<double> hs = cfg.h_list.empty() ? std::vector<double>{cfg.h} : cfg.h_list;
    std::vector<std::pair<double, MeshFunction>> solutions;
    bool all = true;
    for (double h : hs) {
        ProblemConfig level = cfg;
        level.h = h;
        ProblemRun run;
        try {
            run = run_problem(level);
        } catch (const std::invalid_argument& e) {
            err << "config error at h=" << format_double(h) << ": " << e.what() << '\n';
            return 1;
        }
        if (!run.report.converged) {
            err << "h=" << format_double(h) << " did not converge\n";
            all = false;
        }
        solutions.emplace_back(h, std::move(run.report.solution));
    }
    const OperatorKind op = cfg.solver.op == OperatorKind::MA1 ? OperatorKind::MA1 : OperatorKind::MA2;
    std::vector<WeakConvergenceRow> rows;
    try {
        rows = weak_convergence_report(solutions, cfg.measure, cfg.boxes, op, cfg.solver.policy);
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
    auto out = open_out(out_dir, "weak_convergence.csv");
    out << "h,box,measured,expected,gap\n";
    for (const WeakConvergenceRow& r : rows)
        out << format_double(r.h) << ',' << r.box << ',' << format_double(r.measured) << ','
            << format_double(r.expected) << ',' << format_double(r.gap) << '\n';
    return all ? 0 : 2;
}

int cmd_oracle_area(const std::string& constraints_path, int resolution, std::ostream& out, std::ostream& err)
{
    try {
        const json j = parse_text(read_file(constraints_path));
        const Node n(j, "");
        const json& list = n.raw("constraints");
        if (!list.is_array())
            throw ConfigError("constraints: expected a list");
        std::vector<SlabConstraintd> slabs;
        for (std::size_t i = 0; i < list.size(); ++i) {
            const Node c(list[i], "constraints[" + std::to_string(i) + "]");
            slabs.push_back({c.vec2("e"), c.number("lower"), c.number("upper")});
            c.finish();
        }
        const auto seed = seed_box<double>(slabs);
        Vec2 lo, hi;
        if (n.has("lo") || n.has("hi")) {
            lo = n.vec2("lo");
            hi = n.vec2("hi");
        } else {
            n.boolean("lo", false);
            n.boolean("hi", false);
            if (!seed)
                throw ConfigError("constraints: no bounded axis box, so lo and hi are required");
            lo = seed->vertices().front();
            hi = lo;
            for (const Vec2& v : seed->vertices()) {
                lo = lo.cwiseMin(v);
                hi = hi.cwiseMax(v);
            }
        }
        n.finish();
        json result{{"oracle_area", rasterize_area_oracle<double>(slabs, lo, hi, resolution)},
                    {"resolution", resolution},
                    {"lo", vec_json(lo)},
                    {"hi", vec_json(hi)}};
        if (seed) {
            const auto clipped = intersect_constraints<double>(slabs, *seed);
            result["clipped_area"] = area(clipped.polygon);
            result["seed_box_area"] = area(*seed);
            result["seed_box_active"] = clipped.seed_box_active;
        } else {
            const bool inverted = std::any_of(slabs.begin(), slabs.end(),
                                              [](const SlabConstraintd& c) { return c.lower > c.upper; });
            result["clipped_area"] = inverted ? json(0.0) : json(nullptr);
        }
        out << result.dump(2) << '\n';
        return 0;
    } catch (const std::invalid_argument& e) {
        err << "config error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace dma
