#include "jumpflow/picard.hpp"

#include "jumpflow/errors.hpp"
#include "jumpflow/io.hpp"

#include <spdlog/spdlog.h>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <deque>

namespace jumpflow {

namespace {

double max_speed_sq(std::span<const Vec2> velocity)
{
    double m = 0.0;
    for (const auto& u : velocity) {
        m = std::max(m, dot(u, u));
    }
    return m;
}

double smallest_table_range(std::span<const MollifiedLaw> model)
{
    double top = 0.0;
    for (const auto& term : model) {
        const auto t2 = term.base().squared_thresholds();
        const double last = t2.empty() ? 0.0 : t2.back();
        top = std::max(top, last + 20.0 * term.epsilon());
    }
    return top;
}

bool tables_cover(std::span<const MollifiedLaw> model, double a)
{
    return std::all_of(model.begin(), model.end(),
                       [a](const MollifiedLaw& m) { return m.has_table() && m.table()->a_max() >= a; });
}

// Build (or grow) tables so that every term covers [0, a_needed].
void ensure_tables(std::vector<MollifiedLaw>& model, double a_needed, std::size_t n)
{
    if (n == 0 || tables_cover(model, a_needed)) {
        return;
    }
    double a_max = std::max(smallest_table_range(model), a_needed);
    for (auto& term : model) {
        if (term.has_table()) {
            a_max = std::max(a_max, term.table()->a_max());
            while (a_max < a_needed) {
                a_max *= 2.0;
            }
        }
    }
    for (auto& term : model) {
        term = term.with_table(a_max, n);
    }
}

double model_exponent(std::span<const MollifiedLaw> model)
{
    double r = 2.0;
    for (const auto& term : model) {
        r = std::max(r, term.base().r_exponent());
    }
    return r;
}

// Work of the body force and the boundary pressure: f.phi_f - p0 sigma per face.
Eigen::VectorXd load_vector(const SimplicialMesh& mesh, const FlowProblem& problem)
{
    Eigen::VectorXd g = assemble_body_force(mesh, problem.body_force);
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
        if (mesh.is_boundary(f) && problem.bc.kind[f] == BoundaryKind::Pressure) {
            g[static_cast<Eigen::Index>(f)] -= problem.bc.value[f] * mesh.boundary_sign(f);
        }
    }
    return g;
}

double energy(double dissipation, const Eigen::VectorXd& load, const MixedState& state)
{
    double work = 0.0;
    for (std::size_t f = 0; f < state.fluxes.size(); ++f) {
        work += load[static_cast<Eigen::Index>(f)] * state.fluxes[f];
    }
    return dissipation - work;
}

double increment_norm(const SimplicialMesh& mesh, std::span<const Vec2> now, std::span<const Vec2> before, double r)
{
    std::vector<Vec2> diff(now.size());
    for (std::size_t c = 0; c < now.size(); ++c) {
        diff[c] = {now[c][0] - before[c][0], now[c][1] - before[c][1]};
    }
    return flux_norm(mesh, diff, r);
}

Eigen::VectorXd pack(const MixedState& s)
{
    Eigen::VectorXd v(static_cast<Eigen::Index>(s.fluxes.size() + s.pressures.size()));
    std::copy(s.fluxes.begin(), s.fluxes.end(), v.data());
    std::copy(s.pressures.begin(), s.pressures.end(), v.data() + s.fluxes.size());
    return v;
}

MixedState unpack_like(const Eigen::VectorXd& v, const MixedState& shape)
{
    MixedState s;
    s.fluxes.assign(v.data(), v.data() + shape.fluxes.size());
    s.pressures.assign(v.data() + shape.fluxes.size(), v.data() + v.size());
    return s;
}

// Anderson mixing of the map x -> G(x) on stacked (fluxes, pressures); the
// least-squares fit only looks at the flux block, which drives the coefficients.
// Every update is an affine combination of solver outputs, so B U = Q holds exactly.
class AndersonMixer {
public:
    AndersonMixer(int depth, double beta, Eigen::Index n_flux)
        : depth_(static_cast<std::size_t>(depth))
        , beta_(beta)
        , n_flux_(n_flux)
    {
    }

    Eigen::VectorXd next(const Eigen::VectorXd& x, const Eigen::VectorXd& g)
    {
        const Eigen::VectorXd f = g - x;
        if (have_prev_) {
            df_.push_back(f - f_prev_);
            dg_.push_back(g - g_prev_);
            if (df_.size() > depth_) {
                df_.pop_front();
                dg_.pop_front();
            }
        }
        f_prev_ = f;
        g_prev_ = g;
        have_prev_ = true;
        if (df_.empty()) {
            return x + beta_ * f;
        }
        const auto m = static_cast<Eigen::Index>(df_.size());
        Eigen::MatrixXd a(n_flux_, m);
        for (Eigen::Index j = 0; j < m; ++j) {
            a.col(j) = df_[static_cast<std::size_t>(j)].head(n_flux_);
        }
        const Eigen::VectorXd gamma = a.colPivHouseholderQr().solve(f.head(n_flux_));
        Eigen::VectorXd out = g;
        Eigen::VectorXd f_bar = f;
        for (Eigen::Index j = 0; j < m; ++j) {
            out -= gamma[j] * dg_[static_cast<std::size_t>(j)];
            f_bar -= gamma[j] * df_[static_cast<std::size_t>(j)];
        }
        return out - (1.0 - beta_) * f_bar;
    }

private:
    std::size_t depth_;
    double beta_;
    Eigen::Index n_flux_;
    std::deque<Eigen::VectorXd> df_;
    std::deque<Eigen::VectorXd> dg_;
    Eigen::VectorXd f_prev_;
    Eigen::VectorXd g_prev_;
    bool have_prev_ = false;
};

} // namespace

void PicardConfig::validate() const
{
    if (!(epsilon > 0.0)) {
        throw ValidationError("solver.epsilon must be positive");
    }
    if (!(tau > 0.0 && tau < 1.0)) {
        throw ValidationError("solver.tau must lie in (0, 1)");
    }
    if (max_iterations < 1) {
        throw ValidationError("solver.max_iterations must be at least 1");
    }
    if (r_override && !(*r_override >= 1.0)) {
        throw ValidationError("solver.r must be at least 1");
    }
    if (!(relaxation > 0.0 && relaxation <= 1.0)) {
        throw ValidationError("solver.relaxation must lie in (0, 1]");
    }
    if (anderson_depth < 0 || anderson_depth > 50) {
        throw ValidationError("solver.anderson_depth must lie in [0, 50]");
    }
    if (table_points != 0 && table_points < 64) {
        throw ValidationError("solver.table_points must be 0 or at least 64");
    }
}

std::vector<MollifiedLaw> mollify(std::span<const PiecewiseLaw> laws, const PicardConfig& config)
{
    std::vector<MollifiedLaw> out;
    out.reserve(laws.size());
    for (const auto& law : laws) {
        out.emplace_back(law, config.epsilon);
    }
    return out;
}

std::vector<double> drag_coefficients(std::span<const MollifiedLaw> model, std::span<const Vec2> velocity)
{
    std::vector<double> coeff(velocity.size());
    for (std::size_t c = 0; c < velocity.size(); ++c) {
        coeff[c] = regularized_drag_coeff(model, dot(velocity[c], velocity[c]), c);
    }
    return coeff;
}

MixedState initial_state(const SimplicialMesh& mesh, std::span<const MollifiedLaw> model, const FlowProblem& problem)
{
    MixedSolver solver(mesh, problem.bc, problem.source, assemble_body_force(mesh, problem.body_force));
    const std::vector<Vec2> zero(mesh.n_cells(), Vec2{0.0, 0.0});
    return solver.solve(drag_coefficients(model, zero));
}

std::vector<int> classify_regions(const PiecewiseLaw& law, std::span<const Vec2> velocity)
{
    std::vector<int> out(velocity.size());
    for (std::size_t c = 0; c < velocity.size(); ++c) {
        out[c] = law.regime_of_speed(std::sqrt(dot(velocity[c], velocity[c])));
    }
    return out;
}

std::vector<int> classify_regions(const SimplicialMesh& mesh, const PiecewiseLaw& law, const MixedState& state)
{
    const auto u = reconstruct_velocity(mesh, state);
    return classify_regions(law, u);
}

PicardResult run_picard(const SimplicialMesh& mesh,
                        std::span<const MollifiedLaw> model_in,
                        const FlowProblem& problem,
                        const PicardConfig& config)
{
    config.validate();
    if (model_in.empty()) {
        throw ValidationError("run_picard: the model needs at least one term");
    }
    PicardResult result;
    result.model.assign(model_in.begin(), model_in.end());
    auto& model = result.model;
    auto& report = result.report;
    const double r = config.r_override.value_or(model_exponent(model));
    report.stopping_exponent = r;
    bool monotone = true;
    for (const auto& term : model) {
        monotone = monotone && term.base().is_monotone();
    }

    MixedSolver solver(mesh, problem.bc, problem.source, assemble_body_force(mesh, problem.body_force));
    const Eigen::VectorXd load = load_vector(mesh, problem);

    MixedState state;
    if (config.initial) {
        state = *config.initial;
    } else {
        const std::vector<Vec2> zero(mesh.n_cells(), Vec2{0.0, 0.0});
        state = solver.solve(drag_coefficients(model, zero));
        report.n_solves = 1;
    }
    std::vector<Vec2> velocity = reconstruct_velocity(mesh, state);

    auto record = [&] {
        const double d = discrete_dissipation(mesh, model, velocity);
        report.dissipation_trace.push_back(d);
        report.energy_trace.push_back(energy(d, load, state));
    };
    ensure_tables(model, 16.0 * max_speed_sq(velocity), config.table_points);
    record();

    std::optional<AndersonMixer> anderson;
    if (config.anderson_depth > 0) {
        anderson.emplace(config.anderson_depth, config.relaxation, static_cast<Eigen::Index>(mesh.n_faces()));
    }
    while (report.n_solves < config.max_iterations) {
        ensure_tables(model, max_speed_sq(velocity), config.table_points);
        MixedState out = solver.solve(drag_coefficients(model, velocity));
        ++report.n_solves;
        auto out_velocity = reconstruct_velocity(mesh, out);
        const double base = flux_norm(mesh, velocity, r);
        const double step = increment_norm(mesh, out_velocity, velocity, r);
        const double increment = base > 0.0 ? step / base : step;
        report.increments.push_back(increment);
        if (increment < config.tau || (!anderson && config.relaxation == 1.0)) {
            state = std::move(out);
            velocity = std::move(out_velocity);
        } else if (anderson) {
            state = unpack_like(anderson->next(pack(state), pack(out)), out);
            velocity = reconstruct_velocity(mesh, state);
        } else {
            const double w = config.relaxation;
            state = unpack_like(w * pack(out) + (1.0 - w) * pack(state), out);
            velocity = reconstruct_velocity(mesh, state);
        }
        record();
        if (increment < config.tau) {
            report.converged = true;
            break;
        }
    }

    // the first energy value belongs to the zero-speed coefficient and is skipped
    const auto& e = report.energy_trace;
    for (std::size_t k = 2; k < e.size(); ++k) {
        if (e[k] > e[k - 1] + 1e-8 * (1.0 + std::abs(e[k - 1]))) {
            report.energy_nonincreasing = false;
        }
    }
    if (!report.energy_nonincreasing) {
        if (monotone) {
            spdlog::warn("picard: energy increased between iterates for a monotone law");
        } else {
            spdlog::info("picard: energy not monotone along the iterates (non-monotone law)");
        }
    }
    if (!report.converged) {
        spdlog::warn("picard: no convergence after {} solves (last increment {})", report.n_solves,
                     report.increments.empty() ? 0.0 : report.increments.back());
    }

    report.regimes = classify_regions(model.front().base(), velocity);
    result.state = std::move(state);
    result.velocity = std::move(velocity);
    return result;
}

void write_report_csv(const std::filesystem::path& path, const PicardReport& report)
{
    auto out = open_output(path);
    out << "iter,increment,dissipation\n";
    const std::size_t offset = report.dissipation_trace.size() - report.increments.size();
    for (std::size_t k = 0; k < report.dissipation_trace.size(); ++k) {
        out << k << ',';
        if (k >= offset) {
            out << format_double(report.increments[k - offset]);
        }
        out << ',' << format_double(report.dissipation_trace[k]) << '\n';
    }
}

} // namespace jumpflow
