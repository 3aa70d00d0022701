#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpflow/errors.hpp"
#include "jumpflow/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>

using namespace jumpflow;

namespace {

const std::filesystem::path presets = JUMPFLOW_PRESET_DIR;

std::filesystem::path scratch(const std::string& name)
{
    auto dir = std::filesystem::temp_directory_path() / ("jumpflow_test_scenario_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

std::string read_file(const std::filesystem::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

const char* minimal_1d = R"({
  "schema": 1,
  "name": "tiny",
  "mesh": {"dim": 1, "n": 4},
  "law": [{"thresholds": [0.15], "regimes": [{"0": 1.0}, {"0": 0.1}]}],
  "sources": {"q": {"breakpoints": [0.3, 0.7], "values": [1.0, -1.0, 1.0]}, "f": 0.05},
  "boundary": {"left": {"flux": 0.0}, "right": {"pressure": 0.0}},
  "solver": {"epsilon": 1e-4}
})";

std::string replaced(std::string text, const std::string& from, const std::string& to)
{
    const auto at = text.find(from);
    REQUIRE(at != std::string::npos);
    return text.replace(at, from.size(), to);
}

std::string error_of(const std::string& text)
{
    try {
        parse_scenario(text);
    } catch (const std::exception& e) {
        return e.what();
    }
    return {};
}

struct VtkSummary {
    std::size_t points = 0;
    std::size_t cells = 0;
    std::size_t cell_types = 0;
    std::size_t cell_data = 0;
    std::map<std::string, std::vector<double>> scalars;
};

VtkSummary parse_vtk(const std::filesystem::path& p)
{
    std::ifstream in(p);
    VtkSummary s;
    std::string line;
    for (int k = 0; k < 4; ++k) {
        std::getline(in, line);
    }
    std::string word;
    while (in >> word) {
        if (word == "POINTS") {
            in >> s.points >> word;
            double x = 0.0;
            for (std::size_t i = 0; i < 3 * s.points; ++i) {
                in >> x;
            }
        } else if (word == "CELLS") {
            std::size_t total = 0;
            in >> s.cells >> total;
            int v = 0;
            for (std::size_t i = 0; i < total; ++i) {
                in >> v;
            }
        } else if (word == "CELL_TYPES") {
            in >> s.cell_types;
            int t = 0;
            for (std::size_t i = 0; i < s.cell_types; ++i) {
                in >> t;
            }
        } else if (word == "CELL_DATA") {
            in >> s.cell_data;
        } else if (word == "SCALARS") {
            std::string name;
            std::string type;
            int ncomp = 0;
            in >> name >> type >> ncomp >> word >> word;
            auto& values = s.scalars[name];
            values.resize(s.cell_data);
            for (auto& v : values) {
                in >> v;
            }
        }
    }
    return s;
}

} // namespace

TEST_CASE("synthetic_field")
{
    const auto flat = synthetic_field(7, 5, 3, std::log(250.0), 0.0);
    for (double v : flat) {
        CHECK(v == doctest::Approx(250.0).epsilon(1e-14));
    }
    CHECK(synthetic_field(60, 220, 35, 4.6, 2.0) == synthetic_field(60, 220, 35, 4.6, 2.0));
    CHECK(synthetic_field(60, 220, 35, 4.6, 2.0) != synthetic_field(60, 220, 36, 4.6, 2.0));

    double z_sum = 0.0;
    double z_sq = 0.0;
    for (std::uint64_t seed = 1; seed <= 30; ++seed) {
        const auto f = synthetic_field(60, 220, seed, 4.6, 2.0);
        double m = 0.0;
        for (double v : f) {
            m += std::log(v);
        }
        m /= static_cast<double>(f.size());
        const double z = (m - 4.6) / (2.0 / std::sqrt(static_cast<double>(f.size())));
        CHECK(std::abs(z) <= 3.0);
        z_sum += z;
        z_sq += z * z;
    }
    CHECK(std::abs(z_sum / 30.0) <= 3.0 / std::sqrt(30.0));
    CHECK(z_sq / 30.0 == doctest::Approx(1.0).epsilon(0.6));

    const auto field = synthetic_field(60, 220, 35, 4.6, 2.0);
    double mean = 0.0;
    for (double v : field) {
        mean += std::log(v);
    }
    mean /= static_cast<double>(field.size());
    double var = 0.0;
    for (double v : field) {
        var += (std::log(v) - mean) * (std::log(v) - mean);
    }
    var /= static_cast<double>(field.size() - 1);
    CHECK(std::sqrt(var) == doctest::Approx(2.0).epsilon(0.03));

    CHECK_THROWS_AS(synthetic_field(0, 3, 1, 0.0, 1.0), ValidationError);
    CHECK_THROWS_AS(synthetic_field(3, 3, 1, 0.0, -1.0), ValidationError);
}

TEST_CASE("config errors name the offending field")
{
    CHECK_NOTHROW(parse_scenario(minimal_1d));
    CHECK(error_of("{not json").find("not valid JSON") != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"schema\": 1", "\"schema\": 2")).find("schema") != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"n\": 4", "\"n\": 0")).find("mesh.n") != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"n\": 4", "\"n\": 4, \"nx\": 3")).find("mesh.nx: unknown field")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "{\"0\": 0.1}", "{\"0\": 0.1}, {\"0\": 2}")).find("law[0].regimes")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "{\"0\": 0.1}", "{\"x\": 0.1}")).find("law[0].regimes[1].x")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "[0.15]", "[\"alpha\"]")).find("unknown parameter 'alpha'")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "[0.3, 0.7]", "[0.7, 0.3]")).find("sources.q") != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"right\": {\"pressure\": 0.0}", "\"top\": {\"pressure\": 0.0}"))
              .find("boundary.top")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, ", \"right\": {\"pressure\": 0.0}", "")).find("boundary.right: missing")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"epsilon\": 1e-4", "\"epsilon\": -1")).find("solver.epsilon")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"solver\"", "\"sweep\": {\"parameter\": \"gamma\", \"values\": [1]}, \"solver\""))
              .find("sweep.parameter")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"solver\"", "\"sweep\": {\"parameter\": \"alpha\", \"values\": [1]}, \"solver\""))
              .find("not declared")
          != std::string::npos);
    CHECK(error_of(replaced(minimal_1d, "\"law\": [{", "\"law\": [{\"weight\": \"lambda_bg\", ")).find("law[0].weight")
          != std::string::npos);
}

TEST_CASE("permeability: missing file without fallback is an error")
{
    auto s = load_scenario(presets / "case-7.3-alpha.json");
    REQUIRE(s.permeability);
    s.permeability->path = scratch("nofile") / "absent.dat";
    s.permeability->synthetic.reset();
    CHECK_THROWS_AS(build_scenario(s), FormatError);
}

TEST_CASE("permeability file is read when present")
{
    const auto dir = scratch("permfile");
    std::filesystem::create_directories(dir);
    auto s = load_scenario(presets / "case-7.3-alpha.json");
    s.mesh.nx = 3;
    s.mesh.ny = 2;
    {
        std::ofstream out(dir / "k.dat");
        out << "100 200 300\n400 500 600\n";
    }
    s.permeability->path = dir / "k.dat";
    const auto built = build_scenario(s);
    REQUIRE(built.lambda_bg);
    REQUIRE(built.lambda_bg->size() == 12);
    CHECK((*built.lambda_bg)[0] == doctest::Approx(1.0 / (100.0 * 9.869233e-16)));
    CHECK((*built.lambda_bg)[11] == doctest::Approx(1.0 / (600.0 * 9.869233e-16)));
    CHECK(built.laws.front().weight()(0) == doctest::Approx(1e-7 / (100.0 * 9.869233e-16)));
    std::filesystem::remove_all(dir);
}

TEST_CASE("1D outputs")
{
    auto s = parse_scenario(minimal_1d);
    s.output_dir = scratch("oned");
    const auto out = solve_scenario(s);
    REQUIRE(out.files.size() == 2);
    std::istringstream csv(read_file(out.files[0]));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "x_center,pressure,u,regime");
    int rows = 0;
    while (std::getline(csv, line)) {
        ++rows;
        const int regime = std::stoi(line.substr(line.rfind(',') + 1));
        CHECK((regime == 1 || regime == 2));
    }
    CHECK(rows == 4);
    CHECK(read_file(out.files[1]).rfind("iter,increment,dissipation\n", 0) == 0);

    const auto cmp = compare_scenario(s);
    std::istringstream c(read_file(cmp.csv));
    std::getline(c, line);
    CHECK(line == "x,p_num,p_ref,u_num,u_ref");
    std::filesystem::remove_all(s.output_dir);
}

TEST_CASE("table output")
{
    auto s = load_scenario(presets / "case-7.2.1.json");
    const auto dir = scratch("table");
    write_table(s, 0.05, 11, dir / "t.csv");
    std::istringstream in(read_file(dir / "t.csv"));
    std::string line;
    std::getline(in, line);
    CHECK(line == "a,psi_eps,phi_eps");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
    }
    CHECK(rows == 11);
    CHECK_THROWS_AS(write_table(s, 0.0, 11, dir / "t.csv"), ValidationError);
    std::filesystem::remove_all(dir);
}

TEST_CASE("2D output is a consistent legacy VTK file")
{
    auto s = load_scenario(presets / "case-7.3-alpha.json");
    s = with_parameter(s, "alpha", 0.0625);
    s.output_dir = scratch("vtk");
    const auto out = solve_scenario(s, "one");
    CHECK(out.result.report.converged);
    const auto vtk = parse_vtk(out.files[0]);
    CHECK(vtk.points == 61 * 221);
    CHECK(vtk.cells == 26400);
    CHECK(vtk.cell_types == 26400);
    CHECK(vtk.cell_data == 26400);
    for (const char* name : {"pressure", "speed", "regime", "lambda_bg"}) {
        REQUIRE(vtk.scalars.count(name) == 1);
        CHECK(vtk.scalars.at(name).size() == 26400);
    }
    const auto& regime = vtk.scalars.at("regime");
    const auto n2 = std::count(regime.begin(), regime.end(), 2.0);
    CHECK(std::count(regime.begin(), regime.end(), 1.0) + n2 == 26400);
    CHECK(static_cast<double>(n2) / 26400.0 == doctest::Approx(out.frac_regime_2));

    // fast cells sit where the background resistance is small
    const auto& lam = vtk.scalars.at("lambda_bg");
    double mean_fast = 0.0;
    double mean_slow = 0.0;
    for (std::size_t c = 0; c < regime.size(); ++c) {
        (regime[c] == 2.0 ? mean_fast : mean_slow) += std::log(lam[c]);
    }
    mean_fast /= static_cast<double>(n2);
    mean_slow /= static_cast<double>(26400 - n2);
    CHECK(mean_fast < mean_slow);
    std::filesystem::remove_all(s.output_dir);
}

TEST_CASE("sweep summary matches the per-run regime fields")
{
    auto s = load_scenario(presets / "case-7.3-beta.json");
    s.sweep->values = {100.0, 1000.0};
    s.output_dir = scratch("sweep");
    const auto out = run_sweep(s);
    REQUIRE(out.rows.size() == 2);
    std::istringstream csv(read_file(s.output_dir / "case-7.3-beta_sweep.csv"));
    std::string line;
    std::getline(csv, line);
    CHECK(line == "param,value,n_solves,converged,frac_regime_2");
    for (const auto& row : out.rows) {
        const auto vtk = parse_vtk(s.output_dir / ("case-7.3-beta_beta_" + std::to_string(static_cast<int>(row.value)) + ".vtk"));
        const auto& regime = vtk.scalars.at("regime");
        const double frac = static_cast<double>(std::count(regime.begin(), regime.end(), 2.0)) / 26400.0;
        CHECK(frac == doctest::Approx(row.frac_regime_2));
        std::getline(csv, line);
        CHECK(line.rfind("beta,", 0) == 0);
    }
    std::filesystem::remove_all(s.output_dir);
}
