#pragma once

#include "jumpflow/law.hpp"

#include <cstddef>
#include <memory>
#include <span>
#include <vector>

namespace jumpflow {

/// Gaussian mollifier (1 / (eps sqrt(2 pi))) exp(-x^2 / (2 eps^2)).
double gaussian_kernel(double epsilon, double x);

/// Standard normal cumulative distribution function.
double normal_cdf(double x);

/// Sampled Psi_eps / phi_eps with derivative data for Hermite interpolation.
struct MollifiedTable {
    std::vector<double> a;
    std::vector<double> psi;
    std::vector<double> phi;
    std::vector<double> dpsi; // limited slopes used by the interpolant
    std::vector<double> dphi;

    double a_max() const { return a.back(); }
    double eval_psi(double x) const;
    double eval_phi(double x) const;
};

/// A piecewise law whose dissipation integrand is convolved with a Gaussian.
///
/// Psi_eps(a) = Psi(0) (1 - N(a/eps)) + int_0^inf w_eps(a - b) Psi(b) db, i.e.
/// the mollification of Psi extended by the constant Psi(0) for negative
/// arguments, and phi_eps = Psi_eps'. The integral is evaluated with
/// Gauss-Legendre panels split at 0, at every squared threshold and at the
/// window bounds a -/+ window * eps.
class MollifiedLaw {
public:
    MollifiedLaw(PiecewiseLaw base, double epsilon, double window = 10.0, int nodes_per_panel = 32);

    const PiecewiseLaw& base() const { return base_; }
    double epsilon() const { return epsilon_; }
    double window() const { return window_; }
    int nodes_per_panel() const { return nodes_; }

    /// Table lookup inside [0, a_max] when a table is attached, quadrature otherwise.
    double psi(double a) const;
    double phi(double a) const;

    double psi_direct(double a) const;
    double phi_direct(double a) const;
    /// d phi_eps / da by quadrature against the kernel derivative.
    double dphi_direct(double a) const;

    /// Copy of this law backed by a table on [0, a_max] with about n samples.
    MollifiedLaw with_table(double a_max, std::size_t n) const;

    bool has_table() const { return table_ != nullptr; }
    const MollifiedTable* table() const { return table_.get(); }

private:
    enum class Integrand { Psi, Phi, DPhi };
    double integrate(double a, Integrand what) const;

    PiecewiseLaw base_;
    double epsilon_;
    double window_;
    int nodes_;
    std::vector<double> kinks_; // 0 and the squared thresholds
    std::shared_ptr<const MollifiedTable> table_;
};

/// Sample grid used by with_table(): uniform in sqrt(a) plus dense windows around each kink.
std::vector<double> table_grid(const MollifiedLaw& law, double a_max, std::size_t n);

/// Sum over terms of weight(cell) * phi_eps(a): the coefficient multiplying u.
double regularized_drag_coeff(std::span<const MollifiedLaw> model, double u_norm_sq, std::size_t cell);

/// Sum over terms of weight(cell) * Psi_eps(a).
double regularized_dissipation_density(std::span<const MollifiedLaw> model, double u_norm_sq, std::size_t cell);

} // namespace jumpflow
