#pragma once

#include "jumpflow/mesh.hpp"
#include "jumpflow/mollifier.hpp"

#include <Eigen/Sparse>

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <vector>

namespace jumpflow {

using SparseMatrix = Eigen::SparseMatrix<double>;

/// Face fluxes U_f (integral of u.n along the global face normal) and cell pressures.
struct MixedState {
    std::vector<double> fluxes;
    std::vector<double> pressures;
};

enum class BoundaryKind { Flux, Pressure };

/// Condition on one side of the domain. For flux conditions `value` is the
/// outward normal velocity u.n; for pressure conditions it is p.
struct SideCondition {
    BoundaryKind kind = BoundaryKind::Flux;
    double value = 0.0;
};

/// Per-face boundary data. Entries of interior faces are ignored.
struct BoundaryConditions {
    std::vector<std::optional<BoundaryKind>> kind;
    std::vector<double> value;
    std::optional<double> mean_pressure;

    /// Expand per-side conditions; every side carrying boundary faces must be listed.
    static BoundaryConditions from_sides(const SimplicialMesh& mesh,
                                         const std::map<Side, SideCondition>& sides,
                                         std::optional<double> mean_pressure = std::nullopt);
    bool has_pressure_face() const;
};

/// Linearized saddle-point system
///   M U - B^T P = G,   B U = Q
/// (plus an optional mean-pressure constraint). After boundary reduction M,
/// B and G act on free flux unknowns only; fixed fluxes are stored per face.
struct SaddleSystem {
    SparseMatrix M;
    SparseMatrix B;
    Eigen::VectorXd G;
    Eigen::VectorXd Q;
    std::optional<double> mean_pressure;
    /// Cell volumes, used by the constraint row sum_K |K| P_K = mean * |Omega|.
    Eigen::VectorXd cell_weights;

    bool reduced = false;
    std::vector<int> free_index;      // face -> free dof, -1 if fixed
    std::vector<int> free_faces;      // free dof -> face
    std::vector<double> fixed_fluxes; // per face, zero for free faces
    /// False when no pressure face and no mean-pressure constraint fixes the pressure level.
    bool anchored = true;
};

/// Weighted RT0 mass matrix, sum_K coeff_K M_K, on global face fluxes.
/// Coefficients must be positive; values below 1e-300 are clamped with a warning.
SparseMatrix assemble_mass(const SimplicialMesh& mesh, std::span<const double> coeff);

/// Divergence matrix with (B U)_K = sum_f sigma_{K,f} U_f.
SparseMatrix assemble_div(const SimplicialMesh& mesh);

/// Q_K = q(barycenter_K) |K|.
Eigen::VectorXd assemble_source(const SimplicialMesh& mesh, const std::function<double(const Vec2&)>& q);

/// Body-force load int_K f . phi_f by barycenter quadrature (exact for constant f).
Eigen::VectorXd assemble_body_force(const SimplicialMesh& mesh, const Vec2& f);

/// Unreduced system for one coefficient field.
SaddleSystem assemble_system(const SimplicialMesh& mesh,
                             std::span<const double> coeff,
                             const Eigen::VectorXd& source,
                             const Eigen::VectorXd& body_force);

/// Eliminate flux faces, add pressure data to G and attach the mean-pressure
/// constraint when no pressure face exists.
SaddleSystem apply_boundary_conditions(SaddleSystem system, const SimplicialMesh& mesh, const BoundaryConditions& bc);

struct SolveInfo {
    double relative_residual = 0.0;
    int refinement_steps = 0;
};

/// Sparse LU with iterative refinement to a relative residual of 1e-10.
MixedState solve_saddle(const SaddleSystem& system, SolveInfo* info = nullptr);

/// Repeated solves on a fixed mesh and boundary data with changing
/// coefficients. With a pressure boundary the system is hybridized and
/// solved by sparse Cholesky on face multipliers; otherwise, or when the
/// hybrid residual misses 1e-10, the saddle system goes to sparse LU.
/// Symbolic factorizations are reused across solves.
class MixedSolver {
public:
    MixedSolver(const SimplicialMesh& mesh,
                BoundaryConditions bc,
                Eigen::VectorXd source,
                Eigen::VectorXd body_force);
    ~MixedSolver();
    MixedSolver(const MixedSolver&) = delete;
    MixedSolver& operator=(const MixedSolver&) = delete;

    MixedState solve(std::span<const double> coeff, SolveInfo* info = nullptr);
    const SimplicialMesh& mesh() const { return mesh_; }

private:
    struct Factorization;
    MixedState solve_hybrid(std::span<const double> coeff);

    const SimplicialMesh& mesh_;
    BoundaryConditions bc_;
    Eigen::VectorXd source_;
    Eigen::VectorXd body_force_;
    std::unique_ptr<Factorization> lu_;
};

/// RT0 velocity at each cell barycenter.
std::vector<Vec2> reconstruct_velocity(const SimplicialMesh& mesh, const MixedState& state);

/// 1/2 sum_K |K| sum_terms w(K) Psi_eps(|u_K|^2).
double discrete_dissipation(const SimplicialMesh& mesh, std::span<const MollifiedLaw> model, std::span<const Vec2> velocity);
double discrete_dissipation(const SimplicialMesh& mesh, std::span<const MollifiedLaw> model, const MixedState& state);

/// (sum_K |K| |u_K|^r)^(1/r).
double flux_norm(const SimplicialMesh& mesh, std::span<const Vec2> velocity, double r);
double flux_norm(const SimplicialMesh& mesh, const MixedState& state, double r);

/// Per-cell residual B U - Q of the unreduced divergence equation.
std::vector<double> conservation_residual(const SimplicialMesh& mesh, const MixedState& state, const Eigen::VectorXd& source);

} // namespace jumpflow
