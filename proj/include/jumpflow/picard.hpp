#pragma once

#include "jumpflow/mfem.hpp"

#include <optional>
#include <span>
#include <vector>

namespace jumpflow {

struct PicardConfig {
    double epsilon = 1e-3;
    double tau = 1e-6;
    /// Cap on the number of linear solves, the initial one included.
    int max_iterations = 50;
    /// Exponent of the stopping norm; defaults to the largest r of the model terms.
    std::optional<double> r_override;
    /// u^n <- omega u^n + (1 - omega) u^{n-1}; plain Picard when 1.
    double relaxation = 1.0;
    /// History length of Anderson mixing over the Picard map; 0 is plain Picard.
    int anderson_depth = 0;
    /// Samples of the lookup tables of Psi_eps / phi_eps; 0 evaluates by quadrature.
    std::size_t table_points = 4096;
    /// Start from this state instead of the initial solve.
    std::optional<MixedState> initial;

    void validate() const;
};

/// Fixed data of one flow problem: sources, body force and boundary conditions.
struct FlowProblem {
    Eigen::VectorXd source; // Q_K = int_K q
    Vec2 body_force{0.0, 0.0};
    BoundaryConditions bc;
};

struct PicardReport {
    int n_solves = 0;
    std::vector<double> increments;
    bool converged = false;
    std::vector<int> regimes;
    std::vector<double> dissipation_trace;
    /// D_eps(u) - <f, u> + int p0 u.n, the functional minimized by a monotone law.
    std::vector<double> energy_trace;
    bool energy_nonincreasing = true;
    double stopping_exponent = 2.0;
};

struct PicardResult {
    MixedState state;
    PicardReport report;
    std::vector<Vec2> velocity;
    /// Terms as used in the last iteration (table-backed when enabled).
    std::vector<MollifiedLaw> model;
};

/// Mollify every term with the configured epsilon.
std::vector<MollifiedLaw> mollify(std::span<const PiecewiseLaw> laws, const PicardConfig& config);

/// Per-cell coefficient sum_terms w(K) phi_eps(|u_K|^2).
std::vector<double> drag_coefficients(std::span<const MollifiedLaw> model, std::span<const Vec2> velocity);

/// One solve with the coefficient at zero speed.
MixedState initial_state(const SimplicialMesh& mesh, std::span<const MollifiedLaw> model, const FlowProblem& problem);

/// Regime index (1-based) of each cell from its barycenter speed.
std::vector<int> classify_regions(const SimplicialMesh& mesh, const PiecewiseLaw& law, const MixedState& state);
std::vector<int> classify_regions(const PiecewiseLaw& law, std::span<const Vec2> velocity);

/// Picard iteration on the mollified problem. Hitting max_iterations is
/// reported through `converged`, not thrown.
PicardResult run_picard(const SimplicialMesh& mesh,
                        std::span<const MollifiedLaw> model,
                        const FlowProblem& problem,
                        const PicardConfig& config);

/// Rows `iter,increment,dissipation`; the increment of iteration 0 is empty.
void write_report_csv(const std::filesystem::path& path, const PicardReport& report);

} // namespace jumpflow
