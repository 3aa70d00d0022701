#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace jumpflow {

/// Per-cell scalar field (volumes, weights, regime indices stored as doubles).
using CellField = std::vector<double>;

/// Nonnegative multiplier applied to a whole drag term, either uniform or per cell.
class CellWeight {
public:
    CellWeight() = default;

    static CellWeight constant(double value);
    static CellWeight field(CellField values);

    double operator()(std::size_t cell) const
    {
        return values_.empty() ? value_ : values_[cell];
    }

    bool is_field() const { return !values_.empty(); }
    double constant_value() const { return value_; }
    const CellField& values() const { return values_; }

    /// Multiply the whole weight by a positive factor.
    CellWeight scaled(double factor) const;

private:
    double value_ = 1.0;
    CellField values_;
};

/// One regime of a jump law: drag coefficient sum_i coeffs[i] * |u|^powers[i].
struct RegimeSpec {
    std::vector<int> powers;
    std::vector<double> coeffs;
};

/// Closed interval [lo, hi]; degenerate when lo == hi.
struct Interval {
    double lo = 0.0;
    double hi = 0.0;

    double midpoint() const { return 0.5 * (lo + hi); }
    bool contains(double x) const { return lo <= x && x <= hi; }
};

/// Constants of the growth envelope c a^{(r-2)/2} <= phi(a) <= C (1 + a^{(r-2)/2}).
struct CoercivityBounds {
    double c = 0.0;
    double C = 0.0;
    double r = 2.0;
};

/// Piecewise polynomial drag law switching at speed thresholds.
///
/// With a = |u|^2 and s = sqrt(a), regime j carries
///   phi_j(a) = sum_i lambda_ij s^i                        (drag coefficient)
///   Psi_j(a) = K_j + sum_i 2 lambda_ij / (i + 2) s^(i+2)   (dissipation integrand)
/// so that Psi_j' = phi_j. The offsets K_j make Psi continuous across the
/// thresholds, with K_1 = 0. At a threshold the drag is the closed interval
/// spanned by the two adjacent branches.
///
/// Regime indices returned by regime_of_speed() are 1-based; the branch
/// accessors take 0-based indices.
class PiecewiseLaw {
public:
    PiecewiseLaw(std::vector<double> thresholds,
                 std::vector<RegimeSpec> regimes,
                 CellWeight weight = {});

    std::size_t regime_count() const { return regimes_.size(); }
    std::span<const double> thresholds() const { return thresholds_; }
    const std::vector<RegimeSpec>& regimes() const { return regimes_; }
    std::span<const double> psi_constants() const { return psi_constants_; }
    double r_exponent() const { return r_exponent_; }
    const CellWeight& weight() const { return weight_; }

    /// Squared thresholds, i.e. the kinks of Psi in the a variable.
    std::vector<double> squared_thresholds() const;

    /// Regime j (1-based) with threshold_{j-1} <= speed < threshold_j.
    int regime_of_speed(double speed) const;

    double phi_branch(std::size_t j, double a) const;
    double psi_branch(std::size_t j, double a) const;

    Interval phi_set(double a) const;
    /// Single-valued selection: the branch value off thresholds, the interval midpoint on them.
    double phi(double a) const;
    double psi(double a) const;

    /// Per interior threshold: true iff the drag coefficient does not drop across it.
    std::vector<bool> monotone_jumps() const;
    bool is_monotone() const;

    CoercivityBounds coercivity_bounds() const;

    /// Same regimes and thresholds with a different weight.
    PiecewiseLaw with_weight(CellWeight weight) const;

private:
    /// Index of the threshold that a sits on (within rounding), or -1.
    int threshold_at(double a) const;
    std::size_t branch_of(double a) const;

    std::vector<double> thresholds_;
    std::vector<RegimeSpec> regimes_;
    CellWeight weight_;
    std::vector<double> psi_constants_;
    // dense coefficients in s = sqrt(a), lowest degree first
    std::vector<std::vector<double>> phi_poly_;
    std::vector<std::vector<double>> psi_poly_;
    double r_exponent_ = 2.0;
};

PiecewiseLaw build_law(std::vector<double> thresholds,
                       std::vector<RegimeSpec> regimes,
                       CellWeight weight = {});

} // namespace jumpflow
