#include "jumpflow/oracle1d.hpp"

#include "jumpflow/errors.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <limits>

namespace jumpflow {

namespace {

// int_{x0}^{x} u^m for linear u with u(x0) = a, u(x) = b, without cancellation:
// (x - x0) / (m + 1) * sum_k a^k b^(m-k).
double linear_power_integral(double a, double b, std::size_t m, double dx)
{
    double sum = 0.0;
    double ak = 1.0;
    for (std::size_t k = 0; k <= m; ++k) {
        sum += ak * std::pow(b, static_cast<double>(m - k));
        ak *= a;
    }
    return dx * sum / static_cast<double>(m + 1);
}

void require_constant_weight(const PiecewiseLaw& law)
{
    if (law.weight().is_field()) {
        throw ValidationError("oracle: laws must carry a constant weight in 1D");
    }
}

} // namespace

PiecewiseConstantFn PiecewiseConstantFn::constant(double value)
{
    return {{}, {value}};
}

void PiecewiseConstantFn::validate() const
{
    if (values.size() != breakpoints.size() + 1) {
        throw ValidationError("piecewise-constant function: need one more value than breakpoints");
    }
    if (!std::is_sorted(breakpoints.begin(), breakpoints.end())
        || std::adjacent_find(breakpoints.begin(), breakpoints.end()) != breakpoints.end()) {
        throw ValidationError("piecewise-constant function: breakpoints must be strictly increasing");
    }
}

double PiecewiseConstantFn::operator()(double x) const
{
    const auto k = static_cast<std::size_t>(std::upper_bound(breakpoints.begin(), breakpoints.end(), x)
                                            - breakpoints.begin());
    return values[k];
}

double PiecewiseConstantFn::integral(double a, double b) const
{
    if (b < a) {
        return -integral(b, a);
    }
    double sum = 0.0;
    double lo = a;
    for (std::size_t k = 0; k <= breakpoints.size(); ++k) {
        const double hi = k < breakpoints.size() ? std::min(b, breakpoints[k]) : b;
        if (hi > lo) {
            sum += values[k] * (hi - lo);
            lo = hi;
        }
        if (lo >= b) {
            break;
        }
    }
    return sum;
}

double PiecewiseLinearFn::operator()(double at) const
{
    auto it = std::upper_bound(x.begin(), x.end(), at);
    std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    k = std::min(k, x.size() - 2);
    const double t = (at - x[k]) / (x[k + 1] - x[k]);
    return y[k] + t * (y[k + 1] - y[k]);
}

PiecewiseLinearFn integrate_flux(const PiecewiseConstantFn& q, double u_left, double x_left, double x_right)
{
    q.validate();
    if (!(x_left < x_right)) {
        throw ValidationError("integrate_flux: need x_left < x_right");
    }
    PiecewiseLinearFn u;
    u.x.push_back(x_left);
    u.y.push_back(u_left);
    for (double b : q.breakpoints) {
        if (b > x_left && b < x_right) {
            u.y.push_back(u.y.back() + q.integral(u.x.back(), b));
            u.x.push_back(b);
        }
    }
    u.y.push_back(u.y.back() + q.integral(u.x.back(), x_right));
    u.x.push_back(x_right);
    return u;
}

double ExactPressure::integrate_piece(const Piece& piece, double x) const
{
    const double dx = x - piece.x0;
    const double ux = piece.u0 + piece.slope * dx;
    double drag = 0.0;
    for (std::size_t m = 0; m < piece.coeffs.size(); ++m) {
        if (piece.coeffs[m] != 0.0) {
            drag += piece.coeffs[m] * linear_power_integral(piece.u0, ux, m, dx);
        }
    }
    return piece.p0 + piece.f * dx - drag;
}

double ExactPressure::operator()(double x) const
{
    auto it = std::upper_bound(pieces_.begin(), pieces_.end(), x, [](double v, const Piece& p) { return v < p.x0; });
    const std::size_t k = it == pieces_.begin() ? 0 : static_cast<std::size_t>(it - pieces_.begin()) - 1;
    return integrate_piece(pieces_[k], x);
}

ExactPressure pressure_from_flux(std::span<const PiecewiseLaw> laws,
                                 const PiecewiseLinearFn& u,
                                 const PiecewiseConstantFn& f,
                                 double anchor_x,
                                 double anchor_value)
{
    f.validate();
    for (const auto& law : laws) {
        require_constant_weight(law);
    }
    const double xl = u.x.front();
    const double xr = u.x.back();
    if (!(anchor_x >= xl && anchor_x <= xr)) {
        throw ValidationError("pressure_from_flux: anchor outside the domain");
    }

    std::vector<double> cuts(u.x.begin(), u.x.end());
    for (double b : f.breakpoints) {
        if (b > xl && b < xr) {
            cuts.push_back(b);
        }
    }
    std::vector<double> levels{0.0};
    for (const auto& law : laws) {
        for (double t : law.thresholds()) {
            levels.push_back(t);
            levels.push_back(-t);
        }
    }
    for (std::size_t k = 0; k + 1 < u.x.size(); ++k) {
        const double y0 = u.y[k];
        const double y1 = u.y[k + 1];
        for (double level : levels) {
            if ((y0 - level) * (y1 - level) < 0.0) {
                cuts.push_back(u.x[k] + (level - y0) / (y1 - y0) * (u.x[k + 1] - u.x[k]));
            }
        }
    }
    std::sort(cuts.begin(), cuts.end());
    cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());

    ExactPressure p;
    double p_run = 0.0;
    int previous_regime = 0;
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
        ExactPressure::Piece piece;
        piece.x0 = cuts[k];
        piece.x1 = cuts[k + 1];
        const double xm = 0.5 * (piece.x0 + piece.x1);
        const double um = u(xm);
        auto seg = std::upper_bound(u.x.begin(), u.x.end(), xm);
        const auto s = static_cast<std::size_t>(seg - u.x.begin()) - 1;
        piece.slope = (u.y[s + 1] - u.y[s]) / (u.x[s + 1] - u.x[s]);
        piece.u0 = u.y[s] + piece.slope * (piece.x0 - u.x[s]);
        piece.f = f(xm);
        piece.p0 = p_run;
        const double sigma = um < 0.0 ? -1.0 : 1.0;
        for (std::size_t t = 0; t < laws.size(); ++t) {
            const auto& law = laws[t];
            const double w = law.weight()(0);
            const int regime = law.regime_of_speed(std::abs(um));
            const auto& spec = law.regimes()[static_cast<std::size_t>(regime - 1)];
            for (std::size_t i = 0; i < spec.powers.size(); ++i) {
                const auto m = static_cast<std::size_t>(spec.powers[i]) + 1;
                if (piece.coeffs.size() <= m) {
                    piece.coeffs.resize(m + 1, 0.0);
                }
                piece.coeffs[m] += w * spec.coeffs[i] * std::pow(sigma, spec.powers[i]);
            }
            if (t == 0) {
                if (k > 0 && regime != previous_regime) {
                    p.transitions_.push_back(piece.x0);
                }
                previous_regime = regime;
            }
        }
        p_run = p.integrate_piece(piece, piece.x1);
        p.pieces_.push_back(std::move(piece));
    }

    const double shift = anchor_value - p(anchor_x);
    for (auto& piece : p.pieces_) {
        piece.p0 += shift;
    }
    return p;
}

std::vector<double> solve_pressure_bc(std::span<const PiecewiseLaw> laws,
                                      const PiecewiseConstantFn& q,
                                      const PiecewiseConstantFn& f,
                                      double p_left,
                                      double p_right,
                                      double c_lo,
                                      double c_hi,
                                      double tol,
                                      double x_left,
                                      double x_right)
{
    if (!(c_lo < c_hi) || !std::isfinite(c_lo) || !std::isfinite(c_hi)) {
        throw ValidationError("solve_pressure_bc: bracket must be finite with lo < hi");
    }
    if (!(tol > 0.0)) {
        throw ValidationError("solve_pressure_bc: tolerance must be positive");
    }
    auto residual = [&](double c) {
        const auto u = integrate_flux(q, c, x_left, x_right);
        const auto p = pressure_from_flux(laws, u, f, x_left, 0.0);
        return p(x_right) - (p_right - p_left);
    };

    constexpr int n_scan = 1024;
    std::vector<double> cs(n_scan + 1);
    std::vector<double> fs(n_scan + 1);
    for (int k = 0; k <= n_scan; ++k) {
        cs[k] = k == n_scan ? c_hi : c_lo + (c_hi - c_lo) * k / n_scan;
        fs[k] = residual(cs[k]);
    }
    double scale = 1.0;
    for (double v : fs) {
        scale = std::max(scale, std::abs(v));
    }
    std::vector<double> roots;
    for (int k = 0; k < n_scan; ++k) {
        if (fs[k] == 0.0) {
            roots.push_back(cs[k]);
            continue;
        }
        if (fs[k] * fs[k + 1] >= 0.0) {
            continue;
        }
        double a = cs[k];
        double b = cs[k + 1];
        double fa = fs[k];
        while (b - a >= tol) {
            const double m = 0.5 * (a + b);
            const double fm = residual(m);
            if (fm == 0.0) {
                a = b = m;
                break;
            }
            if ((fa < 0.0) == (fm < 0.0)) {
                a = m;
                fa = fm;
            } else {
                b = m;
            }
        }
        const double mid = 0.5 * (a + b);
        // a sign change across a jump of the residual is not a root
        if (std::abs(residual(mid)) > std::sqrt(tol) * scale) {
            spdlog::debug("solve_pressure_bc: discarding jump of the residual at C = {}", mid);
            continue;
        }
        roots.push_back(mid);
    }
    if (fs[n_scan] == 0.0) {
        roots.push_back(cs[n_scan]);
    }
    if (roots.empty()) {
        throw NoRootError("solve_pressure_bc: no sign change of the pressure-drop residual in ["
                          + std::to_string(c_lo) + ", " + std::to_string(c_hi) + "]; try a wider bracket");
    }
    const bool monotone = std::all_of(laws.begin(), laws.end(), [](const PiecewiseLaw& l) { return l.is_monotone(); });
    if (monotone && roots.size() > 1) {
        spdlog::warn("solve_pressure_bc: {} roots found for a monotone law", roots.size());
    }
    return roots;
}

OracleSolution solve_oracle(std::span<const PiecewiseLaw> laws,
                            const PiecewiseConstantFn& q,
                            const PiecewiseConstantFn& f,
                            EndCondition left,
                            EndCondition right,
                            double x_left,
                            double x_right,
                            double flux_hint)
{
    OracleSolution sol;
    const double total_q = q.integral(x_left, x_right);
    double u_left = 0.0;
    if (left.kind == BoundaryKind::Flux) {
        // outward normal at the left end is -x
        u_left = -left.value;
    } else if (right.kind == BoundaryKind::Flux) {
        u_left = right.value - total_q;
    } else {
        double span = 1.0;
        for (const auto& law : laws) {
            for (double t : law.thresholds()) {
                span = std::max(span, 4.0 * t);
            }
        }
        span = std::max(span, 4.0 * std::abs(flux_hint) + 4.0 * std::abs(total_q));
        sol.candidate_constants = solve_pressure_bc(laws, q, f, left.value, right.value, flux_hint - span,
                                                    flux_hint + span, 1e-14, x_left, x_right);
        u_left = *std::min_element(sol.candidate_constants.begin(), sol.candidate_constants.end(),
                                   [&](double a, double b) { return std::abs(a - flux_hint) < std::abs(b - flux_hint); });
    }
    sol.u = integrate_flux(q, u_left, x_left, x_right);
    if (left.kind == BoundaryKind::Pressure) {
        sol.p = pressure_from_flux(laws, sol.u, f, x_left, left.value);
    } else if (right.kind == BoundaryKind::Pressure) {
        sol.p = pressure_from_flux(laws, sol.u, f, x_right, right.value);
    } else {
        throw ValidationError("oracle: at least one end needs a pressure condition");
    }
    return sol;
}

ComparisonErrors compare(const SimplicialMesh& mesh, const MixedState& state, const OracleSolution& oracle)
{
    if (mesh.dim() != 1) {
        throw ValidationError("compare: only 1D meshes are supported");
    }
    const auto u = reconstruct_velocity(mesh, state);
    double dp = 0.0;
    double np = 0.0;
    double du = 0.0;
    double nu = 0.0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
        const double x = mesh.cell_barycenter(c)[0];
        const double w = mesh.cell_volume(c);
        const double p_ref = oracle.p(x);
        const double u_ref = oracle.u(x);
        dp += w * (state.pressures[c] - p_ref) * (state.pressures[c] - p_ref);
        np += w * p_ref * p_ref;
        du += w * (u[c][0] - u_ref) * (u[c][0] - u_ref);
        nu += w * u_ref * u_ref;
    }
    if (np == 0.0 || nu == 0.0) {
        throw DomainError("compare: reference solution has zero norm");
    }
    return {std::sqrt(dp / np), std::sqrt(du / nu)};
}

} // namespace jumpflow
