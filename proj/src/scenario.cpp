#include "jumpflow/scenario.hpp"

#include "jumpflow/errors.hpp"
#include "jumpflow/io.hpp"

#include <json.hpp>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <set>
#include <sstream>

namespace jumpflow {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& where, const std::string& what)
{
    throw ValidationError(where + ": " + what);
}

void allow_keys(const json& j, const std::string& where, std::initializer_list<const char*> keys)
{
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [key, value] : j.items()) {
        if (!known.count(key)) {
            fail(where.empty() ? key : where + "." + key, "unknown field");
        }
    }
}

std::string join(const std::string& where, const std::string& key)
{
    return where.empty() ? key : where + "." + key;
}

std::string index(const std::string& where, std::size_t i)
{
    return where + "[" + std::to_string(i) + "]";
}

double number(const json& j, const std::string& where)
{
    if (!j.is_number()) {
        fail(where, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        fail(where, "must be finite");
    }
    return v;
}

double positive(const json& j, const std::string& where)
{
    const double v = number(j, where);
    if (!(v > 0.0)) {
        fail(where, "must be positive");
    }
    return v;
}

std::size_t count(const json& j, const std::string& where)
{
    if (!j.is_number_integer() || j.get<long long>() < 1) {
        fail(where, "expected a positive integer");
    }
    return static_cast<std::size_t>(j.get<long long>());
}

const json& require(const json& j, const std::string& where, const char* key)
{
    if (!j.contains(key)) {
        fail(join(where, key), "missing");
    }
    return j.at(key);
}

Scalar scalar(const json& j, const std::string& where, const std::map<std::string, double>& parameters)
{
    if (j.is_string()) {
        const auto name = j.get<std::string>();
        if (!parameters.count(name)) {
            fail(where, "unknown parameter '" + name + "'");
        }
        return {0.0, name};
    }
    return {number(j, where), {}};
}

QuadFieldMode field_mode(const json& j, const std::string& where)
{
    if (!j.is_string()) {
        fail(where, "expected \"permeability\" or \"inverse\"");
    }
    const auto s = j.get<std::string>();
    if (s == "permeability") {
        return QuadFieldMode::Permeability;
    }
    if (s == "inverse") {
        return QuadFieldMode::InversePermeability;
    }
    fail(where, "expected \"permeability\" or \"inverse\", got \"" + s + "\"");
}

std::filesystem::path resolve_path(const std::string& p, const std::filesystem::path& base)
{
    const std::filesystem::path path(p);
    return path.is_absolute() || base.empty() ? path : base / path;
}

MeshSpec parse_mesh(const json& j, const std::string& where)
{
    MeshSpec m;
    m.dim = static_cast<int>(count(require(j, where, "dim"), join(where, "dim")));
    if (m.dim == 1) {
        allow_keys(j, where, {"dim", "n", "x_left", "x_right"});
        m.n = count(require(j, where, "n"), join(where, "n"));
        if (j.contains("x_left")) {
            m.x_left = number(j["x_left"], join(where, "x_left"));
        }
        if (j.contains("x_right")) {
            m.x_right = number(j["x_right"], join(where, "x_right"));
        }
        if (!(m.x_left < m.x_right)) {
            fail(join(where, "x_right"), "must exceed x_left");
        }
    } else if (m.dim == 2) {
        allow_keys(j, where, {"dim", "nx", "ny", "lx", "ly"});
        m.nx = count(require(j, where, "nx"), join(where, "nx"));
        m.ny = count(require(j, where, "ny"), join(where, "ny"));
        m.lx = positive(require(j, where, "lx"), join(where, "lx"));
        m.ly = positive(require(j, where, "ly"), join(where, "ly"));
    } else {
        fail(join(where, "dim"), "must be 1 or 2");
    }
    return m;
}

WeightSpec parse_weight(const json& j, const std::string& where, const std::filesystem::path& base)
{
    WeightSpec w;
    if (j.is_number()) {
        w.value = positive(j, where);
        return w;
    }
    if (j.is_string()) {
        const auto s = j.get<std::string>();
        if (s == "unit") {
            return w;
        }
        if (s == "lambda_bg") {
            w.kind = WeightKind::LambdaBg;
            return w;
        }
        fail(where, "expected a number, \"unit\", \"lambda_bg\" or {\"field\": path}");
    }
    allow_keys(j, where, {"field", "mode"});
    const auto& p = require(j, where, "field");
    if (!p.is_string()) {
        fail(join(where, "field"), "expected a path");
    }
    w.kind = WeightKind::Field;
    w.path = resolve_path(p.get<std::string>(), base);
    if (j.contains("mode")) {
        w.mode = field_mode(j["mode"], join(where, "mode"));
    }
    return w;
}

TermSpec parse_term(const json& j,
                    const std::string& where,
                    const std::map<std::string, double>& parameters,
                    const std::filesystem::path& base)
{
    allow_keys(j, where, {"thresholds", "regimes", "weight", "weight_scale"});
    TermSpec t;
    if (j.contains("thresholds")) {
        const auto& th = j["thresholds"];
        if (!th.is_array()) {
            fail(join(where, "thresholds"), "expected an array");
        }
        for (std::size_t i = 0; i < th.size(); ++i) {
            t.thresholds.push_back(scalar(th[i], index(join(where, "thresholds"), i), parameters));
        }
    }
    const auto& regimes = require(j, where, "regimes");
    const auto rwhere = join(where, "regimes");
    if (!regimes.is_array()) {
        fail(rwhere, "expected an array");
    }
    if (regimes.size() != t.thresholds.size() + 1) {
        fail(rwhere, "expected " + std::to_string(t.thresholds.size() + 1) + " regimes for "
                         + std::to_string(t.thresholds.size()) + " thresholds, found "
                         + std::to_string(regimes.size()));
    }
    for (std::size_t r = 0; r < regimes.size(); ++r) {
        const auto at = index(rwhere, r);
        if (!regimes[r].is_object() || regimes[r].empty()) {
            fail(at, "expected a non-empty object {power: coefficient}");
        }
        std::map<int, Scalar> terms;
        for (const auto& [key, value] : regimes[r].items()) {
            int power = -1;
            const auto res = std::from_chars(key.data(), key.data() + key.size(), power);
            if (res.ec != std::errc{} || res.ptr != key.data() + key.size() || power < 0) {
                fail(join(at, key), "power must be a non-negative integer");
            }
            terms[power] = scalar(value, join(at, key), parameters);
        }
        t.regimes.push_back(std::move(terms));
    }
    if (j.contains("weight")) {
        t.weight = parse_weight(j["weight"], join(where, "weight"), base);
    }
    if (j.contains("weight_scale")) {
        t.weight_scale = positive(j["weight_scale"], join(where, "weight_scale"));
    }
    return t;
}

PiecewiseConstantFn parse_piecewise(const json& j, const std::string& where)
{
    if (j.is_number()) {
        return PiecewiseConstantFn::constant(number(j, where));
    }
    allow_keys(j, where, {"breakpoints", "values"});
    PiecewiseConstantFn fn;
    const auto& bp = require(j, where, "breakpoints");
    const auto& vals = require(j, where, "values");
    if (!bp.is_array() || !vals.is_array()) {
        fail(where, "breakpoints and values must be arrays");
    }
    for (std::size_t i = 0; i < bp.size(); ++i) {
        fn.breakpoints.push_back(number(bp[i], index(join(where, "breakpoints"), i)));
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
        fn.values.push_back(number(vals[i], index(join(where, "values"), i)));
    }
    try {
        fn.validate();
    } catch (const ValidationError& e) {
        fail(where, e.what());
    }
    return fn;
}

Side side_from_name(const std::string& name, const std::string& where)
{
    for (Side s : {Side::Left, Side::Right, Side::Bottom, Side::Top}) {
        if (name == side_name(s)) {
            return s;
        }
    }
    fail(join(where, name), "unknown side (left, right, bottom, top)");
}

void parse_boundary(const json& j, const std::string& where, Scenario& s)
{
    if (!j.is_object()) {
        fail(where, "expected an object");
    }
    for (const auto& [key, value] : j.items()) {
        const auto at = join(where, key);
        if (key == "mean_pressure") {
            s.mean_pressure = number(value, at);
            continue;
        }
        const Side side = side_from_name(key, where);
        if (s.mesh.dim == 1 && side != Side::Left && side != Side::Right) {
            fail(at, "a 1D mesh has only left and right sides");
        }
        allow_keys(value, at, {"flux", "pressure"});
        if (value.size() != 1) {
            fail(at, "give exactly one of flux or pressure");
        }
        if (value.contains("flux")) {
            s.boundary[side] = {BoundaryKind::Flux, number(value["flux"], join(at, "flux"))};
        } else {
            s.boundary[side] = {BoundaryKind::Pressure, number(value["pressure"], join(at, "pressure"))};
        }
    }
    const std::vector<Side> needed = s.mesh.dim == 1 ? std::vector<Side>{Side::Left, Side::Right}
                                                     : std::vector<Side>{Side::Left, Side::Right, Side::Bottom, Side::Top};
    for (Side side : needed) {
        if (!s.boundary.count(side)) {
            fail(join(where, side_name(side)), "missing");
        }
    }
}

void parse_solver(const json& j, const std::string& where, PicardConfig& c)
{
    allow_keys(j, where, {"epsilon", "tau", "max_iterations", "r", "relaxation", "anderson_depth", "table_points"});
    if (j.contains("epsilon")) {
        c.epsilon = positive(j["epsilon"], join(where, "epsilon"));
    }
    if (j.contains("tau")) {
        c.tau = positive(j["tau"], join(where, "tau"));
    }
    if (j.contains("max_iterations")) {
        c.max_iterations = static_cast<int>(count(j["max_iterations"], join(where, "max_iterations")));
    }
    if (j.contains("r")) {
        c.r_override = number(j["r"], join(where, "r"));
    }
    if (j.contains("relaxation")) {
        c.relaxation = number(j["relaxation"], join(where, "relaxation"));
    }
    if (j.contains("anderson_depth")) {
        const auto& ad = j["anderson_depth"];
        if (!ad.is_number_integer()) {
            fail(join(where, "anderson_depth"), "expected an integer");
        }
        c.anderson_depth = ad.get<int>();
    }
    if (j.contains("table_points")) {
        const auto& tp = j["table_points"];
        if (!tp.is_number_integer() || tp.get<long long>() < 0) {
            fail(join(where, "table_points"), "expected a non-negative integer");
        }
        c.table_points = static_cast<std::size_t>(tp.get<long long>());
    }
    c.validate();
}

PermeabilitySpec parse_permeability(const json& j, const std::string& where, const std::filesystem::path& base)
{
    allow_keys(j, where, {"path", "mode", "unit", "synthetic"});
    PermeabilitySpec p;
    if (j.contains("path")) {
        if (!j["path"].is_string()) {
            fail(join(where, "path"), "expected a path");
        }
        p.path = resolve_path(j["path"].get<std::string>(), base);
    }
    if (j.contains("mode")) {
        p.mode = field_mode(j["mode"], join(where, "mode"));
    }
    if (j.contains("unit")) {
        p.unit = positive(j["unit"], join(where, "unit"));
    }
    if (j.contains("synthetic")) {
        const auto at = join(where, "synthetic");
        const auto& sj = j["synthetic"];
        allow_keys(sj, at, {"seed", "log_mean", "log_sigma"});
        SyntheticSpec syn;
        if (sj.contains("seed")) {
            if (!sj["seed"].is_number_unsigned()) {
                fail(join(at, "seed"), "expected a non-negative integer");
            }
            syn.seed = sj["seed"].get<std::uint64_t>();
        }
        syn.log_mean = number(require(sj, at, "log_mean"), join(at, "log_mean"));
        syn.log_sigma = number(require(sj, at, "log_sigma"), join(at, "log_sigma"));
        if (syn.log_sigma < 0.0) {
            fail(join(at, "log_sigma"), "must be non-negative");
        }
        p.synthetic = syn;
    }
    if (!p.path && !p.synthetic) {
        fail(where, "needs a path or a synthetic block");
    }
    return p;
}

SweepSpec parse_sweep(const json& j, const std::string& where, const Scenario& s)
{
    allow_keys(j, where, {"parameter", "values"});
    SweepSpec sw;
    const auto& p = require(j, where, "parameter");
    if (!p.is_string()) {
        fail(join(where, "parameter"), "expected alpha, beta or epsilon");
    }
    sw.parameter = p.get<std::string>();
    if (sw.parameter != "alpha" && sw.parameter != "beta" && sw.parameter != "epsilon") {
        fail(join(where, "parameter"), "expected alpha, beta or epsilon, got \"" + sw.parameter + "\"");
    }
    if (sw.parameter != "epsilon" && !s.parameters.count(sw.parameter)) {
        fail(join(where, "parameter"), "'" + sw.parameter + "' is not declared under parameters");
    }
    const auto& vals = require(j, where, "values");
    if (!vals.is_array() || vals.empty()) {
        fail(join(where, "values"), "expected a non-empty array");
    }
    for (std::size_t i = 0; i < vals.size(); ++i) {
        sw.values.push_back(positive(vals[i], index(join(where, "values"), i)));
    }
    return sw;
}

std::uint64_t splitmix64(std::uint64_t& state)
{
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// uniform on (0, 1]
double unit_open(std::uint64_t& state)
{
    return static_cast<double>((splitmix64(state) >> 11) + 1) * 0x1.0p-53;
}

struct ResolvedTerm {
    std::vector<double> thresholds;
    std::vector<RegimeSpec> regimes;
};

ResolvedTerm resolve_term(const TermSpec& t, const std::map<std::string, double>& parameters)
{
    ResolvedTerm out;
    for (const auto& x : t.thresholds) {
        out.thresholds.push_back(x.resolve(parameters));
    }
    for (const auto& r : t.regimes) {
        RegimeSpec spec;
        for (const auto& [power, c] : r) {
            spec.powers.push_back(power);
            spec.coeffs.push_back(c.resolve(parameters));
        }
        out.regimes.push_back(std::move(spec));
    }
    return out;
}

CellWeight term_weight(const TermSpec& t, const SimplicialMesh& mesh, const std::optional<CellField>& lambda_bg)
{
    switch (t.weight.kind) {
    case WeightKind::Number:
        return CellWeight::constant(t.weight.value * t.weight_scale);
    case WeightKind::Field:
        return CellWeight::field(load_quad_cell_field(t.weight.path, mesh, t.weight.mode)).scaled(t.weight_scale);
    case WeightKind::LambdaBg:
        if (!lambda_bg) {
            throw ValidationError("law: weight \"lambda_bg\" needs a permeability block");
        }
        return CellWeight::field(*lambda_bg).scaled(t.weight_scale);
    }
    return {};
}

std::optional<CellField> background_field(const Scenario& s, const SimplicialMesh& mesh)
{
    if (!s.permeability) {
        return std::nullopt;
    }
    const auto& p = *s.permeability;
    std::vector<double> inverse;
    if (p.path && std::filesystem::exists(*p.path)) {
        inverse = read_quad_field(*p.path, mesh.nx(), mesh.ny(), p.mode);
    } else if (p.synthetic) {
        if (p.path) {
            spdlog::warn("permeability file '{}' not found; using the synthetic field (seed {})", p.path->string(),
                         p.synthetic->seed);
        }
        inverse = synthetic_field(mesh.nx(), mesh.ny(), p.synthetic->seed, p.synthetic->log_mean,
                                  p.synthetic->log_sigma);
        for (double& v : inverse) {
            v = 1.0 / v;
        }
    } else {
        throw FormatError("permeability file '" + p.path->string() + "' not found and no synthetic fallback given");
    }
    for (double& v : inverse) {
        v /= p.unit;
    }
    return broadcast_quad_field(mesh, inverse);
}

std::vector<double> barycenter_speed(std::span<const Vec2> u)
{
    std::vector<double> out(u.size());
    for (std::size_t c = 0; c < u.size(); ++c) {
        out[c] = std::sqrt(dot(u[c], u[c]));
    }
    return out;
}

} // namespace

double Scalar::resolve(const std::map<std::string, double>& parameters) const
{
    if (param.empty()) {
        return value;
    }
    const auto it = parameters.find(param);
    if (it == parameters.end()) {
        throw ValidationError("unknown parameter '" + param + "'");
    }
    return it->second;
}

Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir)
{
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw FormatError(std::string("config is not valid JSON: ") + e.what());
    }
    allow_keys(j, "", {"schema", "name", "mesh", "parameters", "law", "sources", "boundary", "solver", "permeability",
                       "sweep", "output"});
    const auto& schema = require(j, "", "schema");
    if (!schema.is_number_integer() || schema.get<int>() != 1) {
        fail("schema", "unsupported version (expected 1)");
    }
    Scenario s;
    if (j.contains("name")) {
        if (!j["name"].is_string() || j["name"].get<std::string>().empty()) {
            fail("name", "expected a non-empty string");
        }
        s.name = j["name"].get<std::string>();
    }
    s.mesh = parse_mesh(require(j, "", "mesh"), "mesh");
    if (j.contains("parameters")) {
        const auto& pj = j["parameters"];
        if (!pj.is_object()) {
            fail("parameters", "expected an object");
        }
        for (const auto& [key, value] : pj.items()) {
            s.parameters[key] = number(value, join("parameters", key));
        }
    }
    const auto& law = require(j, "", "law");
    if (!law.is_array() || law.empty()) {
        fail("law", "expected a non-empty array of terms");
    }
    for (std::size_t i = 0; i < law.size(); ++i) {
        s.law.push_back(parse_term(law[i], index("law", i), s.parameters, base_dir));
    }
    if (j.contains("sources")) {
        const auto& sj = j["sources"];
        allow_keys(sj, "sources", {"q", "f"});
        if (sj.contains("q")) {
            s.q = parse_piecewise(sj["q"], "sources.q");
        }
        if (sj.contains("f")) {
            const auto& fj = sj["f"];
            if (fj.is_array()) {
                if (fj.size() != 2) {
                    fail("sources.f", "expected [fx, fy]");
                }
                s.f = {number(fj[0], "sources.f[0]"), number(fj[1], "sources.f[1]")};
            } else {
                s.f = {number(fj, "sources.f"), 0.0};
            }
        }
    }
    parse_boundary(require(j, "", "boundary"), "boundary", s);
    if (j.contains("solver")) {
        parse_solver(j["solver"], "solver", s.solver);
    }
    if (j.contains("permeability")) {
        if (s.mesh.dim != 2) {
            fail("permeability", "only available on 2D meshes");
        }
        s.permeability = parse_permeability(j["permeability"], "permeability", base_dir);
    }
    for (std::size_t i = 0; i < s.law.size(); ++i) {
        const auto kind = s.law[i].weight.kind;
        if (kind == WeightKind::LambdaBg && !s.permeability) {
            fail(index("law", i) + ".weight", "\"lambda_bg\" needs a permeability block");
        }
        if (kind != WeightKind::Number && s.mesh.dim != 2) {
            fail(index("law", i) + ".weight", "field weights need a 2D mesh");
        }
    }
    if (j.contains("sweep")) {
        s.sweep = parse_sweep(j["sweep"], "sweep", s);
    }
    if (j.contains("output")) {
        allow_keys(j["output"], "output", {"dir"});
        if (j["output"].contains("dir")) {
            if (!j["output"]["dir"].is_string()) {
                fail("output.dir", "expected a path");
            }
            s.output_dir = j["output"]["dir"].get<std::string>();
        }
    }
    // resolve once so that bad laws fail at load time
    for (std::size_t i = 0; i < s.law.size(); ++i) {
        try {
            const auto r = resolve_term(s.law[i], s.parameters);
            build_law(r.thresholds, r.regimes);
        } catch (const ValidationError& e) {
            fail(index("law", i), e.what());
        }
    }
    return s;
}

Scenario load_scenario(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw FormatError("cannot open config '" + path.string() + "'");
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str(), path.parent_path());
}

Scenario with_parameter(const Scenario& scenario, const std::string& name, double value)
{
    Scenario s = scenario;
    if (name == "epsilon") {
        s.solver.epsilon = value;
    } else if (s.parameters.count(name)) {
        s.parameters[name] = value;
    } else {
        throw ValidationError("unknown sweep parameter '" + name + "'");
    }
    return s;
}

std::vector<double> synthetic_field(std::size_t nx, std::size_t ny, std::uint64_t seed, double log_mean, double log_sigma)
{
    if (nx == 0 || ny == 0) {
        throw ValidationError("synthetic_field: sizes must be positive");
    }
    if (!(log_sigma >= 0.0)) {
        throw ValidationError("synthetic_field: log_sigma must be non-negative");
    }
    const std::size_t n = nx * ny;
    std::vector<double> out(n);
    std::uint64_t state = seed;
    for (std::size_t i = 0; i < n; i += 2) {
        const double r = std::sqrt(-2.0 * std::log(unit_open(state)));
        const double t = 2.0 * std::numbers::pi * unit_open(state);
        out[i] = std::exp(log_mean + log_sigma * r * std::cos(t));
        if (i + 1 < n) {
            out[i + 1] = std::exp(log_mean + log_sigma * r * std::sin(t));
        }
    }
    return out;
}

BuiltScenario build_scenario(const Scenario& s)
{
    BuiltScenario b{s.mesh.dim == 1 ? build_interval_mesh(s.mesh.x_left, s.mesh.x_right, s.mesh.n)
                                    : build_structured_tri_mesh(s.mesh.nx, s.mesh.ny, s.mesh.lx, s.mesh.ly),
                    {},
                    {},
                    {}};
    b.lambda_bg = background_field(s, b.mesh);
    for (const auto& t : s.law) {
        const auto r = resolve_term(t, s.parameters);
        b.laws.push_back(build_law(r.thresholds, r.regimes, term_weight(t, b.mesh, b.lambda_bg)));
    }
    const auto& q = s.q;
    b.problem.source = assemble_source(b.mesh, [&q](const Vec2& x) { return q(x[0]); });
    b.problem.body_force = s.f;
    b.problem.bc = BoundaryConditions::from_sides(b.mesh, s.boundary, s.mean_pressure);
    return b;
}

SolveOutcome solve_scenario(const Scenario& s, const std::string& stem)
{
    const auto built = build_scenario(s);
    const auto& mesh = built.mesh;
    SolveOutcome out;
    out.result = run_picard(mesh, mollify(built.laws, s.solver), built.problem, s.solver);
    const auto& res = out.result;
    const auto& regimes = res.report.regimes;
    out.frac_regime_2 = static_cast<double>(std::count(regimes.begin(), regimes.end(), 2))
                        / static_cast<double>(mesh.n_cells());

    const auto residual = conservation_residual(mesh, res.state, built.problem.source);
    double worst = 0.0;
    for (double r : residual) {
        worst = std::max(worst, std::abs(r));
    }
    spdlog::info("{}: n_solves={} converged={} max|BU-Q|={:.3g}", stem, res.report.n_solves, res.report.converged,
                 worst);

    if (mesh.dim() == 1) {
        std::vector<double> u(mesh.n_cells());
        for (std::size_t c = 0; c < u.size(); ++c) {
            u[c] = res.velocity[c][0];
        }
        out.files.push_back(s.output_dir / (stem + ".csv"));
        write_solution_csv(out.files.back(), mesh, res.state.pressures, u, regimes);
    } else {
        std::vector<CellArray> data;
        data.push_back({"pressure", res.state.pressures});
        data.push_back({"speed", barycenter_speed(res.velocity)});
        data.push_back({"regime", std::vector<double>(regimes.begin(), regimes.end())});
        data.push_back({"lambda_bg", built.lambda_bg ? *built.lambda_bg : std::vector<double>(mesh.n_cells(), 1.0)});
        out.files.push_back(s.output_dir / (stem + ".vtk"));
        write_vtk(out.files.back(), mesh, data);
    }
    out.files.push_back(s.output_dir / (stem + "_report.csv"));
    write_report_csv(out.files.back(), res.report);
    return out;
}

SolveOutcome solve_scenario(const Scenario& s)
{
    return solve_scenario(s, s.name);
}

SweepOutcome run_sweep(const Scenario& s)
{
    if (!s.sweep) {
        throw ValidationError("sweep: the config has no sweep block");
    }
    SweepOutcome out;
    const auto& param = s.sweep->parameter;
    for (double v : s.sweep->values) {
        const auto run = solve_scenario(with_parameter(s, param, v), s.name + "_" + param + "_" + format_double(v));
        out.rows.push_back({param, v, run.result.report.n_solves, run.result.report.converged, run.frac_regime_2});
        out.files.insert(out.files.end(), run.files.begin(), run.files.end());
    }
    const auto path = s.output_dir / (s.name + "_sweep.csv");
    auto csv = open_output(path);
    csv << "param,value,n_solves,converged,frac_regime_2\n";
    for (const auto& r : out.rows) {
        csv << r.param << ',' << format_double(r.value) << ',' << r.n_solves << ',' << (r.converged ? 1 : 0) << ','
            << format_double(r.frac_regime_2) << '\n';
    }
    out.files.push_back(path);
    return out;
}

void write_table(const Scenario& s, double a_max, std::size_t n, const std::filesystem::path& path)
{
    if (!(a_max > 0.0) || n < 2) {
        throw ValidationError("table: need a_max > 0 and n >= 2");
    }
    const auto r = resolve_term(s.law.front(), s.parameters);
    const MollifiedLaw law(build_law(r.thresholds, r.regimes), s.solver.epsilon);
    auto out = open_output(path);
    out << "a,psi_eps,phi_eps\n";
    for (std::size_t k = 0; k < n; ++k) {
        const double a = a_max * static_cast<double>(k) / static_cast<double>(n - 1);
        out << format_double(a) << ',' << format_double(law.psi_direct(a)) << ',' << format_double(law.phi_direct(a))
            << '\n';
    }
}

OracleSolution scenario_oracle(const Scenario& s, double flux_hint)
{
    if (s.mesh.dim != 1) {
        throw ValidationError("compare: only 1D scenarios have an exact reference");
    }
    const auto built = build_scenario(s);
    const auto& left = s.boundary.at(Side::Left);
    const auto& right = s.boundary.at(Side::Right);
    return solve_oracle(built.laws, s.q, PiecewiseConstantFn::constant(s.f[0]), {left.kind, left.value},
                        {right.kind, right.value}, s.mesh.x_left, s.mesh.x_right, flux_hint);
}

CompareOutcome compare_scenario(const Scenario& s)
{
    if (s.mesh.dim != 1) {
        throw ValidationError("compare: only 1D scenarios have an exact reference");
    }
    CompareOutcome out;
    out.solve = solve_scenario(s);
    const auto mesh = build_interval_mesh(s.mesh.x_left, s.mesh.x_right, s.mesh.n);
    const auto& u_num = out.solve.result.velocity;
    // with pressure at both ends, pick the flux constant nearest to the numerical one
    const double hint = out.solve.result.state.fluxes.front();
    const auto oracle = scenario_oracle(s, hint);
    out.errors = compare(mesh, out.solve.result.state, oracle);
    out.csv = s.output_dir / (s.name + "_compare.csv");
    auto csv = open_output(out.csv);
    csv << "x,p_num,p_ref,u_num,u_ref\n";
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const double x = mesh.cell_barycenter(c)[0];
        csv << format_double(x) << ',' << format_double(out.solve.result.state.pressures[c]) << ','
            << format_double(oracle.p(x)) << ',' << format_double(u_num[c][0]) << ',' << format_double(oracle.u(x))
            << '\n';
    }
    return out;
}

} // namespace jumpflow
