#include "jumpflow/mollifier.hpp"

#include "jumpflow/errors.hpp"

#include <boost/math/quadrature/gauss.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace jumpflow {

namespace {

constexpr double inv_sqrt_2pi = 0.3989422804014326779399460599343819;

inline double kernel_unchecked(double epsilon, double x)
{
    const double z = x / epsilon;
    return inv_sqrt_2pi / epsilon * std::exp(-0.5 * z * z);
}

template <unsigned N, class F>
double gauss_legendre(F&& f, double lo, double hi)
{
    return boost::math::quadrature::gauss<double, N>::integrate(std::forward<F>(f), lo, hi);
}

template <class F>
double gauss_legendre(int nodes, F&& f, double lo, double hi)
{
    switch (nodes) {
    case 16:
        return gauss_legendre<16>(f, lo, hi);
    case 32:
        return gauss_legendre<32>(f, lo, hi);
    default:
        return gauss_legendre<64>(f, lo, hi);
    }
}

double hermite(double x0, double x1, double y0, double y1, double d0, double d1, double x)
{
    const double h = x1 - x0;
    const double t = (x - x0) / h;
    const double t2 = t * t;
    const double t3 = t2 * t;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + t) * h * d0
         + (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * h * d1;
}

// Fritsch-Carlson limiting on intervals where the supplied slopes agree in
// sign with the secant; intervals holding a genuine extremum keep their slopes.
void limit_slopes(const std::vector<double>& x, const std::vector<double>& y, std::vector<double>& d)
{
    for (std::size_t k = 0; k + 1 < x.size(); ++k) {
        const double delta = (y[k + 1] - y[k]) / (x[k + 1] - x[k]);
        if (delta == 0.0) {
            continue;
        }
        if (d[k] * delta < 0.0 || d[k + 1] * delta < 0.0) {
            continue;
        }
        const double alpha = d[k] / delta;
        const double beta = d[k + 1] / delta;
        const double norm2 = alpha * alpha + beta * beta;
        if (norm2 > 9.0) {
            const double tau = 3.0 / std::sqrt(norm2);
            d[k] = tau * alpha * delta;
            d[k + 1] = tau * beta * delta;
        }
    }
}

double table_eval(const std::vector<double>& x,
                  const std::vector<double>& y,
                  const std::vector<double>& d,
                  double at)
{
    auto it = std::upper_bound(x.begin(), x.end(), at);
    std::size_t k = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
    k = std::min(k, x.size() - 2);
    return hermite(x[k], x[k + 1], y[k], y[k + 1], d[k], d[k + 1], at);
}

} // namespace

double gaussian_kernel(double epsilon, double x)
{
    if (!(epsilon > 0.0)) {
        throw DomainError("gaussian_kernel: epsilon must be positive");
    }
    return kernel_unchecked(epsilon, x);
}

double normal_cdf(double x)
{
    return 0.5 * std::erfc(-x / std::numbers::sqrt2);
}

double MollifiedTable::eval_psi(double x) const
{
    return table_eval(a, psi, dpsi, x);
}

double MollifiedTable::eval_phi(double x) const
{
    return table_eval(a, phi, dphi, x);
}

MollifiedLaw::MollifiedLaw(PiecewiseLaw base, double epsilon, double window, int nodes_per_panel)
    : base_(std::move(base))
    , epsilon_(epsilon)
    , window_(window)
    , nodes_(nodes_per_panel)
{
    if (!(epsilon_ > 0.0) || !std::isfinite(epsilon_)) {
        throw DomainError("mollifier: epsilon must be positive");
    }
    if (!(window_ >= 8.0)) {
        throw ValidationError("mollifier: window must be at least 8 (in units of epsilon)");
    }
    if (nodes_ != 16 && nodes_ != 32 && nodes_ != 64) {
        throw ValidationError("mollifier: nodes_per_panel must be 16, 32 or 64");
    }
    kinks_.push_back(0.0);
    for (double t2 : base_.squared_thresholds()) {
        kinks_.push_back(t2);
    }
}

double MollifiedLaw::integrate(double a, Integrand what) const
{
    // Integrate in the offset x = a - b so that the kernel argument carries no
    // cancellation error when a >> eps. b >= 0 restricts x to x <= a.
    const double eps = epsilon_;
    const double lo = -window_ * eps;
    const double hi = std::min(window_ * eps, a);
    if (!(hi > lo)) {
        return 0.0;
    }

    std::vector<double> cuts{lo};
    for (auto it = kinks_.rbegin(); it != kinks_.rend(); ++it) {
        const double x = a - *it;
        if (x > lo && x < hi) {
            cuts.push_back(x);
        }
    }
    cuts.push_back(hi);

    double total = 0.0;
    for (std::size_t p = 0; p + 1 < cuts.size(); ++p) {
        const double x0 = cuts[p];
        const double x1 = cuts[p + 1];
        if (!(x1 > x0)) {
            continue;
        }
        const double b_mid = std::max(0.0, a - 0.5 * (x0 + x1));
        const std::size_t branch = static_cast<std::size_t>(base_.regime_of_speed(std::sqrt(b_mid)) - 1);
        const auto sub = static_cast<std::size_t>(std::ceil((x1 - x0) / (2.0 * eps)));
        const double h = (x1 - x0) / static_cast<double>(sub);
        // kernel-weighted branch value at offset x, with b = a - x
        auto integrand = [&](double x, double b) {
            double g = 0.0;
            switch (what) {
            case Integrand::Psi:
                g = base_.psi_branch(branch, b);
                break;
            case Integrand::Phi:
                g = base_.phi_branch(branch, b);
                break;
            case Integrand::DPhi:
                g = -x / (eps * eps) * base_.phi_branch(branch, b);
                break;
            }
            return kernel_unchecked(eps, x) * g;
        };
        for (std::size_t s = 0; s < sub; ++s) {
            const double y0 = x0 + static_cast<double>(s) * h;
            const double y1 = s + 1 == sub ? x1 : y0 + h;
            const double b0 = std::max(0.0, a - y1);
            const double b1 = a - y0;
            if (b0 <= 2.0 * (b1 - b0)) {
                // odd powers of sqrt(b) are not smooth at b = 0; integrate in t = sqrt(b)
                total += gauss_legendre(
                    nodes_,
                    [&](double t) {
                        const double b = t * t;
                        return 2.0 * t * integrand(a - b, b);
                    },
                    std::sqrt(b0), std::sqrt(b1));
            } else {
                total += gauss_legendre(
                    nodes_, [&](double x) { return integrand(x, std::max(0.0, a - x)); }, y0, y1);
            }
        }
    }
    return total;
}

double MollifiedLaw::psi_direct(double a) const
{
    if (!(a >= 0.0)) {
        throw DomainError("mollify_psi: argument must be nonnegative");
    }
    const double below = base_.psi(0.0) * (1.0 - normal_cdf(a / epsilon_));
    return below + integrate(a, Integrand::Psi);
}

double MollifiedLaw::phi_direct(double a) const
{
    if (!(a >= 0.0)) {
        throw DomainError("mollify_phi: argument must be nonnegative");
    }
    return integrate(a, Integrand::Phi);
}

double MollifiedLaw::dphi_direct(double a) const
{
    if (!(a >= 0.0)) {
        throw DomainError("mollify_phi: argument must be nonnegative");
    }
    return integrate(a, Integrand::DPhi);
}

double MollifiedLaw::psi(double a) const
{
    if (table_ && a >= 0.0 && a <= table_->a_max()) {
        return table_->eval_psi(a);
    }
    return psi_direct(a);
}

double MollifiedLaw::phi(double a) const
{
    if (table_ && a >= 0.0 && a <= table_->a_max()) {
        return table_->eval_phi(a);
    }
    return phi_direct(a);
}

std::vector<double> table_grid(const MollifiedLaw& law, double a_max, std::size_t n)
{
    const double eps = law.epsilon();
    const auto kinks2 = law.base().squared_thresholds();
    const double top = kinks2.empty() ? 0.0 : kinks2.back();
    if (!(a_max >= top + 10.0 * eps)) {
        throw ValidationError("table: a_max must be at least the largest squared threshold + 10 eps");
    }
    if (n < 64) {
        throw ValidationError("table: at least 64 samples required");
    }

    std::vector<double> centers{0.0};
    centers.insert(centers.end(), kinks2.begin(), kinks2.end());
    const std::size_t per_window = std::max<std::size_t>(48, n / (2 * centers.size()));
    const std::size_t n_sparse = std::max<std::size_t>(32, n - std::min(n, per_window * centers.size()));

    std::vector<double> grid;
    grid.reserve(n_sparse + per_window * centers.size() + 1);
    const double s_max = std::sqrt(a_max);
    for (std::size_t k = 0; k < n_sparse; ++k) {
        const double s = s_max * static_cast<double>(k) / static_cast<double>(n_sparse - 1);
        grid.push_back(std::min(a_max, s * s));
    }
    const double half = 12.0 * eps;
    for (double c : centers) {
        const double lo = std::max(0.0, c - half);
        const double hi = std::min(a_max, c + half);
        for (std::size_t k = 0; k < per_window; ++k) {
            grid.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(per_window - 1));
        }
    }
    grid.push_back(a_max);
    std::sort(grid.begin(), grid.end());

    const double min_gap = 1e-13 * a_max;
    std::vector<double> out;
    out.reserve(grid.size());
    for (double g : grid) {
        if (out.empty() || g - out.back() > min_gap) {
            out.push_back(g);
        }
    }
    out.back() = a_max;
    return out;
}

MollifiedLaw MollifiedLaw::with_table(double a_max, std::size_t n) const
{
    auto table = std::make_shared<MollifiedTable>();
    table->a = table_grid(*this, a_max, n);
    const std::size_t m = table->a.size();
    table->psi.resize(m);
    table->phi.resize(m);
    table->dphi.resize(m);
    for (std::size_t k = 0; k < m; ++k) {
        const double a = table->a[k];
        table->psi[k] = psi_direct(a);
        table->phi[k] = phi_direct(a);
        table->dphi[k] = dphi_direct(a);
    }
    table->dpsi = table->phi;
    limit_slopes(table->a, table->psi, table->dpsi);
    limit_slopes(table->a, table->phi, table->dphi);

    MollifiedLaw out = *this;
    out.table_ = std::move(table);
    return out;
}

double regularized_drag_coeff(std::span<const MollifiedLaw> model, double u_norm_sq, std::size_t cell)
{
    if (!(u_norm_sq >= 0.0)) {
        throw DomainError("regularized_drag_coeff: squared norm must be nonnegative");
    }
    double sum = 0.0;
    for (const auto& term : model) {
        sum += term.base().weight()(cell) * term.phi(u_norm_sq);
    }
    return sum;
}

double regularized_dissipation_density(std::span<const MollifiedLaw> model, double u_norm_sq, std::size_t cell)
{
    if (!(u_norm_sq >= 0.0)) {
        throw DomainError("dissipation: squared norm must be nonnegative");
    }
    double sum = 0.0;
    for (const auto& term : model) {
        sum += term.base().weight()(cell) * term.psi(u_norm_sq);
    }
    return sum;
}

} // namespace jumpflow
