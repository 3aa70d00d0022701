#include "jumpflow/mfem.hpp"

#include "jumpflow/errors.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace jumpflow {

namespace {

constexpr double coeff_floor = 1e-300;
constexpr double residual_target = 1e-10;
constexpr int max_refinement = 10;

using Triplets = std::vector<Eigen::Triplet<double>>;

// Vertex offsets v - v_k of local basis function k, scaled by 1 / (d |K|).
struct LocalBasis {
    std::array<std::array<Vec2, 3>, 3> offsets{}; // [k][v]
    double scale = 0.0;
};

LocalBasis local_basis(const SimplicialMesh& mesh, std::size_t c)
{
    LocalBasis lb;
    const auto verts = mesh.cell_vertices(c);
    const auto& xs = mesh.vertices();
    for (std::size_t k = 0; k < verts.size(); ++k) {
        for (std::size_t v = 0; v < verts.size(); ++v) {
            lb.offsets[k][v] = {xs[verts[v]][0] - xs[verts[k]][0], xs[verts[v]][1] - xs[verts[k]][1]};
        }
    }
    lb.scale = 1.0 / (mesh.dim() * mesh.cell_volume(c));
    return lb;
}

// Exact integral of the product of two RT0 shape functions over a simplex:
// int g.h = |K| / ((d+1)(d+2)) [sum_v g_v.h_v + (sum_v g_v).(sum_v h_v)].
double local_mass_entry(const LocalBasis& lb, std::size_t n, std::size_t k, std::size_t l, double volume)
{
    double pointwise = 0.0;
    Vec2 gk{0.0, 0.0};
    Vec2 gl{0.0, 0.0};
    for (std::size_t v = 0; v < n; ++v) {
        pointwise += dot(lb.offsets[k][v], lb.offsets[l][v]);
        gk[0] += lb.offsets[k][v][0];
        gk[1] += lb.offsets[k][v][1];
        gl[0] += lb.offsets[l][v][0];
        gl[1] += lb.offsets[l][v][1];
    }
    const double d = static_cast<double>(n - 1);
    return volume / ((d + 1.0) * (d + 2.0)) * (pointwise + dot(gk, gl)) * lb.scale * lb.scale;
}

struct Kkt {
    SparseMatrix matrix;
    Eigen::VectorXd rhs;
    std::size_t n_free = 0;
    std::size_t n_cells = 0;
};

void require_reduced(const SaddleSystem& system)
{
    if (!system.reduced) {
        throw ValidationError("saddle system: boundary conditions have not been applied");
    }
}

// [[M, -B^T, 0], [-B, 0, w], [0, w^T, 0]] with the constraint block only when requested.
Kkt build_kkt(const SaddleSystem& s)
{
    require_reduced(s);
    Kkt k;
    k.n_free = static_cast<std::size_t>(s.M.rows());
    k.n_cells = static_cast<std::size_t>(s.B.rows());
    const bool constrained = s.mean_pressure.has_value();
    const auto n = static_cast<Eigen::Index>(k.n_free + k.n_cells + (constrained ? 1 : 0));
    const auto off_p = static_cast<Eigen::Index>(k.n_free);

    Triplets t;
    t.reserve(static_cast<std::size_t>(s.M.nonZeros() + 2 * s.B.nonZeros()) + 2 * k.n_cells);
    for (Eigen::Index col = 0; col < s.M.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(s.M, col); it; ++it) {
            t.emplace_back(it.row(), it.col(), it.value());
        }
    }
    for (Eigen::Index col = 0; col < s.B.outerSize(); ++col) {
        for (SparseMatrix::InnerIterator it(s.B, col); it; ++it) {
            t.emplace_back(off_p + it.row(), it.col(), -it.value());
            t.emplace_back(it.col(), off_p + it.row(), -it.value());
        }
    }
    k.rhs = Eigen::VectorXd::Zero(n);
    k.rhs.head(off_p) = s.G;
    k.rhs.segment(off_p, static_cast<Eigen::Index>(k.n_cells)) = -s.Q;
    if (constrained) {
        const Eigen::Index last = n - 1;
        for (Eigen::Index c = 0; c < static_cast<Eigen::Index>(k.n_cells); ++c) {
            t.emplace_back(off_p + c, last, s.cell_weights[c]);
            t.emplace_back(last, off_p + c, s.cell_weights[c]);
        }
        k.rhs[last] = *s.mean_pressure * s.cell_weights.sum();
    }
    k.matrix.resize(n, n);
    k.matrix.setFromTriplets(t.begin(), t.end());
    k.matrix.makeCompressed();
    return k;
}

MixedState unpack(const SaddleSystem& s, const Eigen::VectorXd& x, std::size_t n_free, std::size_t n_cells)
{
    MixedState state;
    state.fluxes = s.fixed_fluxes;
    for (std::size_t i = 0; i < n_free; ++i) {
        state.fluxes[static_cast<std::size_t>(s.free_faces[i])] = x[static_cast<Eigen::Index>(i)];
    }
    state.pressures.resize(n_cells);
    for (std::size_t c = 0; c < n_cells; ++c) {
        state.pressures[c] = x[static_cast<Eigen::Index>(n_free + c)];
    }
    return state;
}

template <class Lu>
Eigen::VectorXd refine(const Lu& lu, const SparseMatrix& a, const Eigen::VectorXd& b, SolveInfo* info)
{
    const double b_norm = b.norm();
    if (b_norm == 0.0) {
        if (info) {
            *info = {};
        }
        return Eigen::VectorXd::Zero(b.size());
    }
    Eigen::VectorXd x = lu.solve(b);
    Eigen::VectorXd r = b - a * x;
    double rel = r.norm() / b_norm;
    int steps = 0;
    while (!(rel <= residual_target) && steps < max_refinement) {
        x += lu.solve(r);
        r = b - a * x;
        const double next = r.norm() / b_norm;
        ++steps;
        if (!(next < rel)) {
            rel = next;
            break;
        }
        rel = next;
    }
    if (!std::isfinite(rel) || rel > residual_target) {
        throw SolverError("saddle solve: relative residual " + std::to_string(rel) + " above target 1e-10");
    }
    if (info) {
        info->relative_residual = rel;
        info->refinement_steps = steps;
    }
    return x;
}

double checked_coeff(std::span<const double> coeff, std::size_t c, std::size_t& clamped)
{
    const double w = coeff[c];
    if (!(w >= 0.0) || !std::isfinite(w)) {
        throw ValidationError("assemble_mass: coefficient of cell " + std::to_string(c) + " is not positive");
    }
    if (w < coeff_floor) {
        ++clamped;
        return coeff_floor;
    }
    return w;
}

void warn_clamped(std::size_t clamped)
{
    if (clamped > 0) {
        spdlog::warn("assemble_mass: {} cell coefficients below {} clamped", clamped, coeff_floor);
    }
}

std::string missing_anchor_message()
{
    return "saddle solve: singular system, the pressure has no anchor "
           "(no pressure boundary face and no mean-pressure constraint)";
}

} // namespace

BoundaryConditions BoundaryConditions::from_sides(const SimplicialMesh& mesh,
                                                  const std::map<Side, SideCondition>& sides,
                                                  std::optional<double> mean_pressure)
{
    BoundaryConditions bc;
    bc.kind.assign(mesh.n_faces(), std::nullopt);
    bc.value.assign(mesh.n_faces(), 0.0);
    bc.mean_pressure = mean_pressure;
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        if (!mesh.is_boundary(f)) {
            continue;
        }
        const auto it = sides.find(mesh.boundary_side(f));
        if (it == sides.end()) {
            throw ValidationError(std::string("boundary: no condition given for side '") + side_name(mesh.boundary_side(f))
                                  + "'");
        }
        bc.kind[f] = it->second.kind;
        bc.value[f] = it->second.value;
    }
    return bc;
}

bool BoundaryConditions::has_pressure_face() const
{
    return std::any_of(kind.begin(), kind.end(), [](const auto& k) { return k == BoundaryKind::Pressure; });
}

SparseMatrix assemble_mass(const SimplicialMesh& mesh, std::span<const double> coeff)
{
    if (coeff.size() != mesh.n_cells()) {
        throw ValidationError("assemble_mass: coefficient field has " + std::to_string(coeff.size())
                              + " entries, mesh has " + std::to_string(mesh.n_cells()) + " cells");
    }
    const std::size_t n = mesh.cell_size();
    Triplets t;
    t.reserve(mesh.n_cells() * n * n);
    std::size_t clamped = 0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const double w = checked_coeff(coeff, c, clamped);
        const auto lb = local_basis(mesh, c);
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t l = 0; l < n; ++l) {
                const double m = local_mass_entry(lb, n, k, l, mesh.cell_volume(c));
                t.emplace_back(faces[k], faces[l], w * signs[k] * signs[l] * m);
            }
        }
    }
    warn_clamped(clamped);
    const auto nf = static_cast<Eigen::Index>(mesh.n_faces());
    SparseMatrix m(nf, nf);
    m.setFromTriplets(t.begin(), t.end());
    m.makeCompressed();
    return m;
}

SparseMatrix assemble_div(const SimplicialMesh& mesh)
{
    Triplets t;
    t.reserve(mesh.n_cells() * mesh.cell_size());
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        for (std::size_t k = 0; k < faces.size(); ++k) {
            t.emplace_back(static_cast<int>(c), faces[k], static_cast<double>(signs[k]));
        }
    }
    SparseMatrix b(static_cast<Eigen::Index>(mesh.n_cells()), static_cast<Eigen::Index>(mesh.n_faces()));
    b.setFromTriplets(t.begin(), t.end());
    b.makeCompressed();
    return b;
}

Eigen::VectorXd assemble_source(const SimplicialMesh& mesh, const std::function<double(const Vec2&)>& q)
{
    Eigen::VectorXd out(static_cast<Eigen::Index>(mesh.n_cells()));
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        out[static_cast<Eigen::Index>(c)] = q(mesh.cell_barycenter(c)) * mesh.cell_volume(c);
    }
    return out;
}

Eigen::VectorXd assemble_body_force(const SimplicialMesh& mesh, const Vec2& f)
{
    Eigen::VectorXd out = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(mesh.n_faces()));
    if (f[0] == 0.0 && f[1] == 0.0) {
        return out;
    }
    const auto& xs = mesh.vertices();
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto verts = mesh.cell_vertices(c);
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        const auto& bary = mesh.cell_barycenter(c);
        const double scale = 1.0 / (mesh.dim() * mesh.cell_volume(c));
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const Vec2 psi{(bary[0] - xs[verts[k]][0]) * scale, (bary[1] - xs[verts[k]][1]) * scale};
            out[faces[k]] += mesh.cell_volume(c) * signs[k] * dot(f, psi);
        }
    }
    return out;
}

SaddleSystem assemble_system(const SimplicialMesh& mesh,
                             std::span<const double> coeff,
                             const Eigen::VectorXd& source,
                             const Eigen::VectorXd& body_force)
{
    if (source.size() != static_cast<Eigen::Index>(mesh.n_cells())) {
        throw ValidationError("assemble_system: source vector size does not match the cell count");
    }
    if (body_force.size() != static_cast<Eigen::Index>(mesh.n_faces())) {
        throw ValidationError("assemble_system: body-force vector size does not match the face count");
    }
    SaddleSystem s;
    s.M = assemble_mass(mesh, coeff);
    s.B = assemble_div(mesh);
    s.G = body_force;
    s.Q = source;
    s.cell_weights = Eigen::Map<const Eigen::VectorXd>(mesh.cell_volumes().data(),
                                                       static_cast<Eigen::Index>(mesh.n_cells()));
    return s;
}

SaddleSystem apply_boundary_conditions(SaddleSystem s, const SimplicialMesh& mesh, const BoundaryConditions& bc)
{
    if (s.reduced) {
        throw ValidationError("apply_boundary_conditions: system already reduced");
    }
    if (bc.kind.size() != mesh.n_faces() || bc.value.size() != mesh.n_faces()) {
        throw ValidationError("apply_boundary_conditions: boundary data size does not match the face count");
    }
    const std::size_t nf = mesh.n_faces();
    s.free_index.assign(nf, -1);
    s.free_faces.clear();
    s.fixed_fluxes.assign(nf, 0.0);
    bool any_pressure = false;
    for (std::size_t f = 0; f < nf; ++f) {
        if (!mesh.is_boundary(f)) {
            s.free_index[f] = static_cast<int>(s.free_faces.size());
            s.free_faces.push_back(static_cast<int>(f));
            continue;
        }
        if (!bc.kind[f]) {
            throw ValidationError("apply_boundary_conditions: boundary face " + std::to_string(f) + " has no condition");
        }
        const int sigma = mesh.boundary_sign(f);
        if (*bc.kind[f] == BoundaryKind::Pressure) {
            any_pressure = true;
            s.G[static_cast<Eigen::Index>(f)] -= bc.value[f] * sigma;
            s.free_index[f] = static_cast<int>(s.free_faces.size());
            s.free_faces.push_back(static_cast<int>(f));
        } else {
            s.fixed_fluxes[f] = bc.value[f] * mesh.face_measure(f) * sigma;
        }
    }

    Eigen::VectorXd fixed = Eigen::Map<const Eigen::VectorXd>(s.fixed_fluxes.data(), static_cast<Eigen::Index>(nf));
    const Eigen::VectorXd g_full = s.G - s.M * fixed;
    const Eigen::VectorXd q_red = s.Q - s.B * fixed;

    const auto n_free = static_cast<Eigen::Index>(s.free_faces.size());
    Triplets tm;
    tm.reserve(static_cast<std::size_t>(s.M.nonZeros()));
    for (Eigen::Index col = 0; col < s.M.outerSize(); ++col) {
        const int jc = s.free_index[static_cast<std::size_t>(col)];
        if (jc < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(s.M, col); it; ++it) {
            const int ir = s.free_index[static_cast<std::size_t>(it.row())];
            if (ir >= 0) {
                tm.emplace_back(ir, jc, it.value());
            }
        }
    }
    Triplets tb;
    tb.reserve(static_cast<std::size_t>(s.B.nonZeros()));
    for (Eigen::Index col = 0; col < s.B.outerSize(); ++col) {
        const int jc = s.free_index[static_cast<std::size_t>(col)];
        if (jc < 0) {
            continue;
        }
        for (SparseMatrix::InnerIterator it(s.B, col); it; ++it) {
            tb.emplace_back(it.row(), jc, it.value());
        }
    }
    SparseMatrix m(n_free, n_free);
    m.setFromTriplets(tm.begin(), tm.end());
    m.makeCompressed();
    SparseMatrix b(s.B.rows(), n_free);
    b.setFromTriplets(tb.begin(), tb.end());
    b.makeCompressed();
    Eigen::VectorXd g(n_free);
    for (Eigen::Index i = 0; i < n_free; ++i) {
        g[i] = g_full[s.free_faces[static_cast<std::size_t>(i)]];
    }

    s.M = std::move(m);
    s.B = std::move(b);
    s.G = std::move(g);
    s.Q = q_red;
    s.reduced = true;
    s.mean_pressure.reset();
    if (!any_pressure && bc.mean_pressure) {
        const double imbalance = q_red.sum();
        const double scale = std::max(1.0, s.Q.cwiseAbs().sum());
        if (std::abs(imbalance) > 1e-10 * scale) {
            throw CompatibilityError("boundary: total source and net prescribed boundary flux differ by "
                                     + std::to_string(imbalance));
        }
        s.mean_pressure = bc.mean_pressure;
    }
    s.anchored = any_pressure || s.mean_pressure.has_value();
    return s;
}

MixedState solve_saddle(const SaddleSystem& system, SolveInfo* info)
{
    require_reduced(system);
    if (!system.anchored) {
        throw SolverError(missing_anchor_message());
    }
    const Kkt k = build_kkt(system);
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(k.matrix);
    if (lu.info() != Eigen::Success) {
        throw SolverError("saddle solve: factorization failed: " + lu.lastErrorMessage());
    }
    const Eigen::VectorXd x = refine(lu, k.matrix, k.rhs, info);
    return unpack(system, x, k.n_free, k.n_cells);
}

namespace {

using LocalMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, 0, 3, 3>;
using LocalVector = Eigen::Matrix<double, Eigen::Dynamic, 1, 0, 3, 1>;

// Static condensation of one cell, in outward local fluxes:
//   U_K = r - S lambda_K,  P_K = (Q_K - a.G + a.lambda_K) / s
// with A = M_K^-1, a = A e, s = e.a and S = A - a a^T / s.
struct CellCondensation {
    LocalMatrix A;
    LocalVector a;
    double s = 0.0;
    LocalMatrix S;
};

CellCondensation condense(const SimplicialMesh& mesh, std::size_t c, double w)
{
    const std::size_t n = mesh.cell_size();
    const auto lb = local_basis(mesh, c);
    LocalMatrix m(n, n);
    for (std::size_t k = 0; k < n; ++k) {
        for (std::size_t l = 0; l < n; ++l) {
            m(k, l) = w * local_mass_entry(lb, n, k, l, mesh.cell_volume(c));
        }
    }
    CellCondensation cc;
    cc.A = m.llt().solve(LocalMatrix::Identity(n, n));
    cc.a = cc.A.rowwise().sum();
    cc.s = cc.a.sum();
    cc.S = cc.A - cc.a * cc.a.transpose() / cc.s;
    return cc;
}

} // namespace

// Hybridized form: continuity of the normal flux is imposed by face
// multipliers (face pressures) and the cell unknowns are condensed out,
// leaving an SPD system on the faces that do not carry pressure data.
struct MixedSolver::Factorization {
    Eigen::SparseLU<SparseMatrix, Eigen::COLAMDOrdering<int>> lu;
    bool analyzed = false;

    Eigen::SimplicialLLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> llt;
    bool hybrid_analyzed = false;
    std::vector<int> multiplier; // face -> unknown, -1 on pressure faces
    Eigen::Index n_multipliers = 0;
    // body-force load carried by each local face: the owning cell takes all of G_f
    std::vector<double> local_load;
};

MixedSolver::MixedSolver(const SimplicialMesh& mesh,
                         BoundaryConditions bc,
                         Eigen::VectorXd source,
                         Eigen::VectorXd body_force)
    : mesh_(mesh)
    , bc_(std::move(bc))
    , source_(std::move(source))
    , body_force_(std::move(body_force))
    , lu_(std::make_unique<Factorization>())
{
    if (bc_.kind.size() != mesh_.n_faces() || bc_.value.size() != mesh_.n_faces()) {
        throw ValidationError("MixedSolver: boundary data size does not match the face count");
    }
    if (!bc_.has_pressure_face()) {
        return;
    }
    auto& h = *lu_;
    h.multiplier.assign(mesh_.n_faces(), -1);
    for (std::size_t f = 0; f < mesh_.n_faces(); ++f) {
        if (!(mesh_.is_boundary(f) && bc_.kind[f] == BoundaryKind::Pressure)) {
            h.multiplier[f] = static_cast<int>(h.n_multipliers++);
        }
    }
    const std::size_t n = mesh_.cell_size();
    h.local_load.assign(mesh_.n_cells() * n, 0.0);
    for (std::size_t c = 0; c < mesh_.n_cells(); ++c) {
        const auto faces = mesh_.cell_faces(c);
        const auto signs = mesh_.cell_signs(c);
        for (std::size_t k = 0; k < n; ++k) {
            const auto f = static_cast<std::size_t>(faces[k]);
            if (mesh_.face_cells(f)[0] == static_cast<int>(c)) {
                h.local_load[c * n + k] = signs[k] * body_force_[faces[k]];
            }
        }
    }
}

MixedSolver::~MixedSolver() = default;

MixedState MixedSolver::solve_hybrid(std::span<const double> coeff)
{
    auto& h = *lu_;
    const std::size_t n = mesh_.cell_size();
    const std::size_t nc = mesh_.n_cells();
    if (coeff.size() != nc) {
        throw ValidationError("assemble_mass: coefficient field has " + std::to_string(coeff.size())
                              + " entries, mesh has " + std::to_string(nc) + " cells");
    }
    std::vector<CellCondensation> cells(nc);
    std::vector<LocalVector> loads(nc);
    std::vector<LocalVector> r(nc);
    Triplets t;
    t.reserve(nc * n * n);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(h.n_multipliers);
    std::size_t clamped = 0;
    for (std::size_t c = 0; c < nc; ++c) {
        const auto faces = mesh_.cell_faces(c);
        cells[c] = condense(mesh_, c, checked_coeff(coeff, c, clamped));
        const auto& cc = cells[c];
        LocalVector g(n);
        for (std::size_t k = 0; k < n; ++k) {
            g[k] = h.local_load[c * n + k];
            const auto f = static_cast<std::size_t>(faces[k]);
            if (h.multiplier[f] < 0) {
                g[k] -= bc_.value[f];
            }
        }
        const double q = source_[static_cast<Eigen::Index>(c)];
        r[c] = cc.A * g + cc.a * ((q - cc.a.dot(g)) / cc.s);
        loads[c] = g;
        for (std::size_t k = 0; k < n; ++k) {
            const int i = h.multiplier[static_cast<std::size_t>(faces[k])];
            if (i < 0) {
                continue;
            }
            rhs[i] += r[c][k];
            for (std::size_t l = 0; l < n; ++l) {
                const int j = h.multiplier[static_cast<std::size_t>(faces[l])];
                if (j >= 0) {
                    t.emplace_back(i, j, cc.S(k, l));
                }
            }
        }
    }
    warn_clamped(clamped);
    for (std::size_t f = 0; f < mesh_.n_faces(); ++f) {
        if (mesh_.is_boundary(f) && bc_.kind[f] == BoundaryKind::Flux) {
            rhs[h.multiplier[f]] -= bc_.value[f] * mesh_.face_measure(f);
        }
    }
    SparseMatrix a(h.n_multipliers, h.n_multipliers);
    a.setFromTriplets(t.begin(), t.end());
    a.makeCompressed();
    if (!h.hybrid_analyzed) {
        h.llt.analyzePattern(a);
        h.hybrid_analyzed = true;
    }
    h.llt.factorize(a);
    if (h.llt.info() != Eigen::Success) {
        throw SolverError("hybrid solve: Cholesky factorization failed");
    }
    const Eigen::VectorXd lambda = h.llt.solve(rhs);

    MixedState state;
    state.fluxes.assign(mesh_.n_faces(), 0.0);
    state.pressures.assign(nc, 0.0);
    for (std::size_t c = 0; c < nc; ++c) {
        const auto faces = mesh_.cell_faces(c);
        const auto signs = mesh_.cell_signs(c);
        const auto& cc = cells[c];
        LocalVector lam = LocalVector::Zero(n);
        for (std::size_t k = 0; k < n; ++k) {
            const int i = h.multiplier[static_cast<std::size_t>(faces[k])];
            lam[k] = i >= 0 ? lambda[i] : 0.0;
        }
        const LocalVector u = r[c] - cc.S * lam;
        const double q = source_[static_cast<Eigen::Index>(c)];
        state.pressures[c] = (q - cc.a.dot(loads[c]) + cc.a.dot(lam)) / cc.s;
        for (std::size_t k = 0; k < n; ++k) {
            const auto f = static_cast<std::size_t>(faces[k]);
            if (mesh_.face_cells(f)[0] == static_cast<int>(c)) {
                state.fluxes[f] = signs[k] * u[k];
            }
        }
    }
    for (std::size_t f = 0; f < mesh_.n_faces(); ++f) {
        if (mesh_.is_boundary(f) && bc_.kind[f] == BoundaryKind::Flux) {
            state.fluxes[f] = bc_.value[f] * mesh_.face_measure(f) * mesh_.boundary_sign(f);
        }
    }
    return state;
}

MixedState MixedSolver::solve(std::span<const double> coeff, SolveInfo* info)
{
    const auto system = apply_boundary_conditions(assemble_system(mesh_, coeff, source_, body_force_), mesh_, bc_);
    if (!system.anchored) {
        throw SolverError(missing_anchor_message());
    }
    const Kkt k = build_kkt(system);
    if (!lu_->multiplier.empty()) {
        MixedState state = solve_hybrid(coeff);
        Eigen::VectorXd x(k.matrix.rows());
        for (std::size_t i = 0; i < k.n_free; ++i) {
            x[static_cast<Eigen::Index>(i)] = state.fluxes[static_cast<std::size_t>(system.free_faces[i])];
        }
        for (std::size_t c = 0; c < k.n_cells; ++c) {
            x[static_cast<Eigen::Index>(k.n_free + c)] = state.pressures[c];
        }
        const double b_norm = k.rhs.norm();
        const double rel = b_norm > 0.0 ? (k.rhs - k.matrix * x).norm() / b_norm : (k.matrix * x).norm();
        if (rel <= residual_target) {
            if (info) {
                *info = {rel, 0};
            }
            return state;
        }
        spdlog::debug("hybrid solve: relative residual {:.3g}, switching to the sparse LU path", rel);
    }
    if (!lu_->analyzed) {
        lu_->lu.analyzePattern(k.matrix);
        lu_->analyzed = true;
    }
    lu_->lu.factorize(k.matrix);
    if (lu_->lu.info() != Eigen::Success) {
        throw SolverError("saddle solve: factorization failed: " + lu_->lu.lastErrorMessage());
    }
    const Eigen::VectorXd x = refine(lu_->lu, k.matrix, k.rhs, info);
    return unpack(system, x, k.n_free, k.n_cells);
}

std::vector<Vec2> reconstruct_velocity(const SimplicialMesh& mesh, const MixedState& state)
{
    if (state.fluxes.size() != mesh.n_faces()) {
        throw ValidationError("reconstruct_velocity: state does not match the mesh");
    }
    const auto& xs = mesh.vertices();
    std::vector<Vec2> out(mesh.n_cells());
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto verts = mesh.cell_vertices(c);
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        const auto& bary = mesh.cell_barycenter(c);
        const double scale = 1.0 / (mesh.dim() * mesh.cell_volume(c));
        Vec2 u{0.0, 0.0};
        for (std::size_t k = 0; k < faces.size(); ++k) {
            const double w = signs[k] * state.fluxes[static_cast<std::size_t>(faces[k])] * scale;
            u[0] += w * (bary[0] - xs[verts[k]][0]);
            u[1] += w * (bary[1] - xs[verts[k]][1]);
        }
        out[c] = u;
    }
    return out;
}

double discrete_dissipation(const SimplicialMesh& mesh, std::span<const MollifiedLaw> model, std::span<const Vec2> velocity)
{
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        sum += mesh.cell_volume(c) * regularized_dissipation_density(model, dot(velocity[c], velocity[c]), c);
    }
    return 0.5 * sum;
}

double discrete_dissipation(const SimplicialMesh& mesh, std::span<const MollifiedLaw> model, const MixedState& state)
{
    const auto u = reconstruct_velocity(mesh, state);
    return discrete_dissipation(mesh, model, u);
}

double flux_norm(const SimplicialMesh& mesh, std::span<const Vec2> velocity, double r)
{
    if (!(r >= 1.0)) {
        throw DomainError("flux_norm: exponent must be at least 1");
    }
    double sum = 0.0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const double speed = std::sqrt(dot(velocity[c], velocity[c]));
        sum += mesh.cell_volume(c) * std::pow(speed, r);
    }
    return std::pow(sum, 1.0 / r);
}

double flux_norm(const SimplicialMesh& mesh, const MixedState& state, double r)
{
    const auto u = reconstruct_velocity(mesh, state);
    return flux_norm(mesh, u, r);
}

std::vector<double> conservation_residual(const SimplicialMesh& mesh, const MixedState& state, const Eigen::VectorXd& source)
{
    std::vector<double> out(mesh.n_cells());
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const auto faces = mesh.cell_faces(c);
        const auto signs = mesh.cell_signs(c);
        double div = 0.0;
        for (std::size_t k = 0; k < faces.size(); ++k) {
            div += signs[k] * state.fluxes[static_cast<std::size_t>(faces[k])];
        }
        out[c] = div - source[static_cast<Eigen::Index>(c)];
    }
    return out;
}

} // namespace jumpflow
