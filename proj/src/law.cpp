#include "jumpflow/law.hpp"

#include "jumpflow/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace jumpflow {

namespace {

double horner(const std::vector<double>& coeffs, double s)
{
    double acc = 0.0;
    for (auto it = coeffs.rbegin(); it != coeffs.rend(); ++it) {
        acc = acc * s + *it;
    }
    return acc;
}

void validate_regime(const RegimeSpec& regime, std::size_t index)
{
    const auto where = "regime " + std::to_string(index + 1) + ": ";
    if (regime.powers.empty()) {
        throw ValidationError(where + "empty regime");
    }
    if (regime.powers.size() != regime.coeffs.size()) {
        throw ValidationError(where + "powers and coeffs differ in length");
    }
    for (std::size_t k = 0; k < regime.powers.size(); ++k) {
        if (regime.powers[k] < 0) {
            throw ValidationError(where + "negative power");
        }
        if (k > 0 && regime.powers[k] <= regime.powers[k - 1]) {
            throw ValidationError(where + "powers must be strictly increasing");
        }
        if (!std::isfinite(regime.coeffs[k]) || regime.coeffs[k] < 0.0) {
            throw ValidationError(where + "negative or non-finite coefficient");
        }
    }
    if (!(regime.coeffs.back() > 0.0)) {
        throw ValidationError(where + "coefficient of the highest power must be positive");
    }
}

} // namespace

CellWeight CellWeight::constant(double value)
{
    if (!std::isfinite(value) || value < 0.0) {
        throw ValidationError("weight must be finite and nonnegative");
    }
    CellWeight w;
    w.value_ = value;
    return w;
}

CellWeight CellWeight::field(CellField values)
{
    if (values.empty()) {
        throw ValidationError("weight field is empty");
    }
    for (double v : values) {
        if (!std::isfinite(v) || v < 0.0) {
            throw ValidationError("weight field must be finite and nonnegative");
        }
    }
    CellWeight w;
    w.values_ = std::move(values);
    return w;
}

CellWeight CellWeight::scaled(double factor) const
{
    if (!std::isfinite(factor) || factor <= 0.0) {
        throw ValidationError("weight scale must be positive");
    }
    CellWeight w = *this;
    w.value_ *= factor;
    for (double& v : w.values_) {
        v *= factor;
    }
    return w;
}

PiecewiseLaw::PiecewiseLaw(std::vector<double> thresholds,
                           std::vector<RegimeSpec> regimes,
                           CellWeight weight)
    : thresholds_(std::move(thresholds))
    , regimes_(std::move(regimes))
    , weight_(std::move(weight))
{
    if (regimes_.empty()) {
        throw ValidationError("law needs at least one regime");
    }
    if (regimes_.size() != thresholds_.size() + 1) {
        throw ValidationError("law with " + std::to_string(thresholds_.size())
                              + " thresholds needs " + std::to_string(thresholds_.size() + 1)
                              + " regimes, got " + std::to_string(regimes_.size()));
    }
    for (std::size_t k = 0; k < thresholds_.size(); ++k) {
        if (!std::isfinite(thresholds_[k]) || thresholds_[k] <= 0.0) {
            throw ValidationError("thresholds must be finite and positive");
        }
        if (k > 0 && thresholds_[k] <= thresholds_[k - 1]) {
            throw ValidationError("thresholds must be strictly increasing");
        }
    }
    for (std::size_t j = 0; j < regimes_.size(); ++j) {
        validate_regime(regimes_[j], j);
    }

    for (const auto& regime : regimes_) {
        const int top = regime.powers.back();
        std::vector<double> phi(static_cast<std::size_t>(top) + 1, 0.0);
        std::vector<double> psi(static_cast<std::size_t>(top) + 3, 0.0);
        for (std::size_t k = 0; k < regime.powers.size(); ++k) {
            const auto i = static_cast<std::size_t>(regime.powers[k]);
            phi[i] = regime.coeffs[k];
            psi[i + 2] = 2.0 * regime.coeffs[k] / static_cast<double>(i + 2);
        }
        phi_poly_.push_back(std::move(phi));
        psi_poly_.push_back(std::move(psi));
    }

    psi_constants_.assign(regimes_.size(), 0.0);
    for (std::size_t j = 0; j + 1 < regimes_.size(); ++j) {
        const double s = thresholds_[j];
        const double left = psi_constants_[j] + horner(psi_poly_[j], s);
        const double right_shape = horner(psi_poly_[j + 1], s);
        psi_constants_[j + 1] = left - right_shape;
    }
    for (std::size_t j = 0; j < regimes_.size(); ++j) {
        psi_poly_[j][0] = psi_constants_[j];
    }

    r_exponent_ = static_cast<double>(regimes_.back().powers.back()) + 2.0;
}

PiecewiseLaw build_law(std::vector<double> thresholds,
                       std::vector<RegimeSpec> regimes,
                       CellWeight weight)
{
    return PiecewiseLaw(std::move(thresholds), std::move(regimes), std::move(weight));
}

std::vector<double> PiecewiseLaw::squared_thresholds() const
{
    std::vector<double> out;
    out.reserve(thresholds_.size());
    for (double t : thresholds_) {
        out.push_back(t * t);
    }
    return out;
}

int PiecewiseLaw::regime_of_speed(double speed) const
{
    const auto it = std::upper_bound(thresholds_.begin(), thresholds_.end(), speed);
    return static_cast<int>(it - thresholds_.begin()) + 1;
}

double PiecewiseLaw::phi_branch(std::size_t j, double a) const
{
    return horner(phi_poly_.at(j), std::sqrt(a));
}

double PiecewiseLaw::psi_branch(std::size_t j, double a) const
{
    return horner(psi_poly_.at(j), std::sqrt(a));
}

int PiecewiseLaw::threshold_at(double a) const
{
    // a = t^2 is matched within a few ulps so that literals like 0.0225 hit 0.15^2
    constexpr double rel = 8.0 * std::numeric_limits<double>::epsilon();
    for (std::size_t k = 0; k < thresholds_.size(); ++k) {
        const double t2 = thresholds_[k] * thresholds_[k];
        if (std::abs(a - t2) <= rel * t2) {
            return static_cast<int>(k);
        }
    }
    return -1;
}

std::size_t PiecewiseLaw::branch_of(double a) const
{
    return static_cast<std::size_t>(regime_of_speed(std::sqrt(a)) - 1);
}

Interval PiecewiseLaw::phi_set(double a) const
{
    if (!(a >= 0.0)) {
        throw DomainError("phi_set: argument must be nonnegative");
    }
    if (const int k = threshold_at(a); k >= 0) {
        const auto j = static_cast<std::size_t>(k);
        const double t2 = thresholds_[j] * thresholds_[j];
        const double left = phi_branch(j, t2);
        const double right = phi_branch(j + 1, t2);
        return {std::min(left, right), std::max(left, right)};
    }
    const double v = phi_branch(branch_of(a), a);
    return {v, v};
}

double PiecewiseLaw::phi(double a) const
{
    return phi_set(a).midpoint();
}

double PiecewiseLaw::psi(double a) const
{
    if (!(a >= 0.0)) {
        throw DomainError("psi: argument must be nonnegative");
    }
    return psi_branch(branch_of(a), a);
}

std::vector<bool> PiecewiseLaw::monotone_jumps() const
{
    std::vector<bool> out;
    out.reserve(thresholds_.size());
    for (std::size_t j = 0; j < thresholds_.size(); ++j) {
        const double s = thresholds_[j];
        out.push_back(horner(phi_poly_[j], s) <= horner(phi_poly_[j + 1], s));
    }
    return out;
}

bool PiecewiseLaw::is_monotone() const
{
    const auto jumps = monotone_jumps();
    return std::all_of(jumps.begin(), jumps.end(), [](bool b) { return b; });
}

CoercivityBounds PiecewiseLaw::coercivity_bounds() const
{
    const int m = regimes_.back().powers.back();
    const double inf = std::numeric_limits<double>::infinity();

    // lower bound of phi_j(s) / s^m on [lo, hi], term by term
    auto lower_ratio = [m](const RegimeSpec& regime, double lo, double hi) {
        double sum = 0.0;
        for (std::size_t k = 0; k < regime.powers.size(); ++k) {
            const int e = regime.powers[k] - m;
            const double lam = regime.coeffs[k];
            if (e == 0) {
                sum += lam;
            } else if (e > 0) {
                sum += lam * std::pow(lo, e);
            } else if (std::isfinite(hi)) {
                sum += lam * std::pow(hi, e);
            }
        }
        return sum;
    };

    double c = inf;
    double C = 0.0;
    for (std::size_t j = 0; j < regimes_.size(); ++j) {
        const double lo = j == 0 ? 0.0 : thresholds_[j - 1];
        const double hi = j + 1 == regimes_.size() ? inf : thresholds_[j];
        c = std::min(c, lower_ratio(regimes_[j], lo, hi));
        if (std::isfinite(hi)) {
            // bounded regime: phi_j <= phi_j(hi) <= phi_j(hi) (1 + a^{m/2})
            C = std::max(C, horner(phi_poly_[j], hi));
        } else {
            // split middle powers between the constant and the top-power envelope
            double constant_part = 0.0;
            double top_part = 0.0;
            double middle = 0.0;
            for (std::size_t k = 0; k < regimes_[j].powers.size(); ++k) {
                const int i = regimes_[j].powers[k];
                if (i == 0) {
                    constant_part += regimes_[j].coeffs[k];
                } else if (i == m) {
                    top_part += regimes_[j].coeffs[k];
                } else {
                    middle += regimes_[j].coeffs[k];
                }
            }
            if (m == 0) {
                C = std::max(C, constant_part);
            } else {
                C = std::max(C, std::max(constant_part, top_part) + middle);
            }
        }
    }
    if (!(c > 0.0)) {
        throw ValidationError("law is not coercive with exponent r = m_n + 2");
    }
    return {c, C, r_exponent_};
}

PiecewiseLaw PiecewiseLaw::with_weight(CellWeight weight) const
{
    return PiecewiseLaw(thresholds_, regimes_, std::move(weight));
}

} // namespace jumpflow
