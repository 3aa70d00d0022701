#pragma once

#include "jumpflow/oracle1d.hpp"
#include "jumpflow/picard.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace jumpflow {

/// A number in the config, either literal or a reference into `parameters`.
struct Scalar {
    double value = 0.0;
    std::string param;

    double resolve(const std::map<std::string, double>& parameters) const;
};

struct MeshSpec {
    int dim = 1;
    std::size_t n = 1000;
    double x_left = 0.0;
    double x_right = 1.0;
    std::size_t nx = 0;
    std::size_t ny = 0;
    double lx = 1.0;
    double ly = 1.0;
};

enum class WeightKind { Number, Field, LambdaBg };

struct WeightSpec {
    WeightKind kind = WeightKind::Number;
    double value = 1.0;
    std::filesystem::path path;
    QuadFieldMode mode = QuadFieldMode::InversePermeability;
};

struct TermSpec {
    std::vector<Scalar> thresholds;
    /// Per regime: power of |u| -> coefficient.
    std::vector<std::map<int, Scalar>> regimes;
    WeightSpec weight;
    double weight_scale = 1.0;
};

struct SyntheticSpec {
    std::uint64_t seed = 0;
    double log_mean = 0.0;
    double log_sigma = 0.0;
};

/// Background inverse permeability lambda_bg = 1 / (k * unit) per quad.
struct PermeabilitySpec {
    std::optional<std::filesystem::path> path;
    QuadFieldMode mode = QuadFieldMode::Permeability;
    /// Converts file or synthetic values to m^2 (millidarcy by default).
    double unit = 9.869233e-16;
    std::optional<SyntheticSpec> synthetic;
};

struct SweepSpec {
    std::string parameter;
    std::vector<double> values;
};

struct Scenario {
    std::string name = "run";
    MeshSpec mesh;
    std::map<std::string, double> parameters;
    std::vector<TermSpec> law;
    PiecewiseConstantFn q = PiecewiseConstantFn::constant(0.0);
    Vec2 f{0.0, 0.0};
    std::map<Side, SideCondition> boundary;
    std::optional<double> mean_pressure;
    PicardConfig solver;
    std::optional<PermeabilitySpec> permeability;
    std::optional<SweepSpec> sweep;
    std::filesystem::path output_dir = "output";
};

/// Parse a `schema: 1` JSON config. Relative file paths are resolved against `base_dir`.
Scenario parse_scenario(std::string_view text, const std::filesystem::path& base_dir = {});
Scenario load_scenario(const std::filesystem::path& path);

/// Copy of `scenario` with a sweep parameter (alpha, beta or epsilon) set.
Scenario with_parameter(const Scenario& scenario, const std::string& name, double value);

/// Seeded log-normal per-quad values exp(log_mean + log_sigma Z), x index fastest.
/// splitmix64 feeds a Box-Muller transform, so the sequence is platform independent.
std::vector<double> synthetic_field(std::size_t nx, std::size_t ny, std::uint64_t seed, double log_mean, double log_sigma);

struct BuiltScenario {
    SimplicialMesh mesh;
    std::vector<PiecewiseLaw> laws;
    FlowProblem problem;
    /// lambda_bg per cell when a permeability block is present.
    std::optional<CellField> lambda_bg;
};

BuiltScenario build_scenario(const Scenario& scenario);

struct SolveOutcome {
    PicardResult result;
    std::vector<std::filesystem::path> files;
    double frac_regime_2 = 0.0;
};

/// Run Picard and write `<stem>.csv` (1D) or `<stem>.vtk` (2D) plus `<stem>_report.csv`.
SolveOutcome solve_scenario(const Scenario& scenario, const std::string& stem);
SolveOutcome solve_scenario(const Scenario& scenario);

struct SweepRow {
    std::string param;
    double value = 0.0;
    int n_solves = 0;
    bool converged = false;
    double frac_regime_2 = 0.0;
};

struct SweepOutcome {
    std::vector<SweepRow> rows;
    std::vector<std::filesystem::path> files;
};

/// One solve per sweep value plus `<name>_sweep.csv` with
/// `param,value,n_solves,converged,frac_regime_2`.
SweepOutcome run_sweep(const Scenario& scenario);

/// Samples `a,psi_eps,phi_eps` of the first law term (unit weight) at n
/// uniform points of [0, a_max].
void write_table(const Scenario& scenario, double a_max, std::size_t n, const std::filesystem::path& path);

struct CompareOutcome {
    ComparisonErrors errors;
    SolveOutcome solve;
    std::filesystem::path csv;
};

/// 1D only: solve, build the exact solution for the same data and write
/// `x,p_num,p_ref,u_num,u_ref` per cell.
CompareOutcome compare_scenario(const Scenario& scenario);

/// Exact solution for the data of a 1D scenario; with pressure at both ends the
/// flux constant closest to `flux_hint` is taken.
OracleSolution scenario_oracle(const Scenario& scenario, double flux_hint = 0.0);

} // namespace jumpflow
