#pragma once

#include "jumpflow/mfem.hpp"

#include <optional>
#include <span>
#include <vector>

namespace jumpflow {

/// Piecewise-constant function on the line: values[k] holds on
/// (breakpoints[k-1], breakpoints[k]); a breakpoint itself takes the right value.
struct PiecewiseConstantFn {
    std::vector<double> breakpoints;
    std::vector<double> values;

    static PiecewiseConstantFn constant(double value);
    void validate() const;
    double operator()(double x) const;
    /// Exact integral over [a, b].
    double integral(double a, double b) const;
};

/// Continuous piecewise-linear function through (x_k, y_k).
struct PiecewiseLinearFn {
    std::vector<double> x;
    std::vector<double> y;

    double operator()(double at) const;
};

/// u(x) = u_left + int_{x_left}^x q, exact.
PiecewiseLinearFn integrate_flux(const PiecewiseConstantFn& q, double u_left, double x_left = 0.0, double x_right = 1.0);

/// Pressure with p' = f - sum_terms w phi(u^2) u on [x.front(), x.back()], stored
/// as closed-form antiderivatives on pieces where u is linear and every term
/// stays in one regime.
class ExactPressure {
public:
    double operator()(double x) const;
    double x_left() const { return pieces_.front().x0; }
    double x_right() const { return pieces_.back().x1; }
    /// Points where some term switches regime (|u| crosses a threshold).
    const std::vector<double>& transitions() const { return transitions_; }

    friend ExactPressure pressure_from_flux(std::span<const PiecewiseLaw>,
                                            const PiecewiseLinearFn&,
                                            const PiecewiseConstantFn&,
                                            double,
                                            double);

private:
    struct Piece {
        double x0 = 0.0;
        double x1 = 0.0;
        double p0 = 0.0;
        double u0 = 0.0;
        double slope = 0.0;
        double f = 0.0;
        // drag polynomial sum_i c_i sigma^i u^{i+1} collected per power of u
        std::vector<double> coeffs;
    };
    double integrate_piece(const Piece& piece, double x) const;

    std::vector<Piece> pieces_;
    std::vector<double> transitions_;
};

/// Requires laws with a constant weight. `anchor_x` must lie in the domain.
ExactPressure pressure_from_flux(std::span<const PiecewiseLaw> laws,
                                 const PiecewiseLinearFn& u,
                                 const PiecewiseConstantFn& f,
                                 double anchor_x,
                                 double anchor_value);

/// Flux constants C (u = C + int q) whose pressure drop matches p_right - p_left.
/// Scans 1024 cells of the bracket for sign changes and bisects each to tol.
std::vector<double> solve_pressure_bc(std::span<const PiecewiseLaw> laws,
                                      const PiecewiseConstantFn& q,
                                      const PiecewiseConstantFn& f,
                                      double p_left,
                                      double p_right,
                                      double c_lo,
                                      double c_hi,
                                      double tol,
                                      double x_left = 0.0,
                                      double x_right = 1.0);

struct OracleSolution {
    PiecewiseLinearFn u;
    ExactPressure p;
    /// Every admissible flux constant when both ends carry pressure data.
    std::vector<double> candidate_constants;
};

/// Boundary data for the oracle: per end either an outward normal flux or a pressure.
struct EndCondition {
    BoundaryKind kind = BoundaryKind::Flux;
    double value = 0.0;
};

/// Exact solution for the given end conditions. With pressure at both ends the
/// flux constant closest to `flux_hint` is selected.
OracleSolution solve_oracle(std::span<const PiecewiseLaw> laws,
                            const PiecewiseConstantFn& q,
                            const PiecewiseConstantFn& f,
                            EndCondition left,
                            EndCondition right,
                            double x_left = 0.0,
                            double x_right = 1.0,
                            double flux_hint = 0.0);

struct ComparisonErrors {
    double err_p = 0.0;
    double err_u = 0.0;
};

/// Relative cell-volume-weighted 2-norm errors at barycenters.
ComparisonErrors compare(const SimplicialMesh& mesh, const MixedState& state, const OracleSolution& oracle);

} // namespace jumpflow
