#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "jumpflow/errors.hpp"
#include "jumpflow/mollifier.hpp"
#include "laws_fixture.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

using namespace jumpflow;
using namespace jumpflow::testing;

namespace {

// Independent reference: adaptive Gauss-Kronrod over each smooth piece of the
// integrand, plus the closed-form b < 0 contribution.
double oracle_convolution(const PiecewiseLaw& law, double eps, double a, bool derivative)
{
    using boost::math::quadrature::gauss_kronrod;
    std::vector<double> cuts{0.0};
    for (double t2 : law.squared_thresholds()) {
        cuts.push_back(t2);
    }
    const double top = a + 14.0 * eps;
    std::vector<double> pieces;
    for (double c : cuts) {
        if (c < top) {
            pieces.push_back(c);
        }
    }
    pieces.push_back(std::max(top, pieces.back()));
    double total = derivative ? 0.0 : law.psi(0.0) * 0.5 * std::erfc(a / (eps * std::numbers::sqrt2));
    for (std::size_t k = 0; k + 1 < pieces.size(); ++k) {
        const double lo = std::max(pieces[k], a - 14.0 * eps);
        const double hi = pieces[k + 1];
        if (!(hi > lo)) {
            continue;
        }
        const std::size_t branch = k;
        auto f = [&](double b) {
            const double z = (a - b) / eps;
            const double w = std::exp(-0.5 * z * z) / (eps * std::sqrt(2.0 * std::numbers::pi));
            return w * (derivative ? law.phi_branch(branch, b) : law.psi_branch(branch, b));
        };
        double err = 0.0;
        total += gauss_kronrod<double, 61>::integrate(f, lo, hi, 10, 1e-13, &err);
    }
    return total;
}

double max_rel(double x, double y)
{
    return std::abs(x - y) / std::max(std::abs(y), 1e-300);
}

} // namespace

TEST_CASE("gaussian_kernel")
{
    CHECK(gaussian_kernel(1.0, 0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-15));
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> dist(-5.0, 5.0);
    for (int k = 0; k < 50; ++k) {
        const double x = dist(rng);
        CHECK(gaussian_kernel(0.7, x) == gaussian_kernel(0.7, -x));
    }
    for (double eps : {1.0, 1e-3}) {
        auto f = [eps](double x) { return gaussian_kernel(eps, x); };
        const double mass =
            boost::math::quadrature::gauss_kronrod<double, 61>::integrate(f, -10 * eps, 10 * eps, 10, 1e-14);
        CHECK(std::abs(mass - 1.0) <= 1e-12);
    }
    CHECK_THROWS_AS(gaussian_kernel(0.0, 1.0), DomainError);
    CHECK_THROWS_AS(gaussian_kernel(-1.0, 1.0), DomainError);
}

TEST_CASE("normal_cdf reference values")
{
    CHECK(normal_cdf(0.0) == 0.5);
    CHECK(std::abs(normal_cdf(1.0) - 0.8413447460685429) <= 1e-15);
    CHECK(std::abs(normal_cdf(-3.0) - 0.0013498980316300946) <= 1e-15);
    CHECK(std::abs(normal_cdf(-8.0) - 6.22096057427178e-16) <= 1e-15 * 1e-10);
    CHECK(std::abs(normal_cdf(2.5) - 0.9937903346742238) <= 1e-15);
}

TEST_CASE("mollify_psi closed forms")
{
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const MollifiedLaw m(darcy_law(), eps);
        const double expected = eps / std::sqrt(2.0 * std::numbers::pi);
        CHECK(max_rel(m.psi_direct(0.0), expected) <= 1e-10);
    }
    const MollifiedLaw dd(dd_law(), 1e-4);
    CHECK(std::abs(dd.psi_direct(0.1) - dd_law().psi(0.1)) <= 1e-12);
    CHECK_THROWS_AS(dd.psi_direct(-1.0), DomainError);
}

TEST_CASE("mollify_psi dominates a convex base law")
{
    const auto law = convex_jump_law();
    const MollifiedLaw m(law, 1e-4);
    for (int k = 0; k <= 1000; ++k) {
        const double a = 0.05 * k / 1000.0;
        CHECK(m.psi_direct(a) >= law.psi(a) - 1e-12);
    }
}

TEST_CASE("mollify_phi")
{
    const MollifiedLaw dd(dd_law(), 1e-4);
    CHECK(std::abs(dd.phi_direct(0.0225) - 0.55) <= 1e-6);
    CHECK(std::abs(dd.phi_direct(0.01) - 1.0) <= 1e-10);

    for (double eps : {1e-2, 1e-4}) {
        const MollifiedLaw darcy(darcy_law(), eps);
        for (double a : {0.0, 0.3 * eps, eps, 3 * eps, 0.5}) {
            CHECK(std::abs(darcy.phi_direct(a) - normal_cdf(a / eps)) <= 1e-12);
        }
    }
    CHECK_THROWS_AS(dd.phi_direct(-1e-9), DomainError);
}

TEST_CASE("quadrature agrees with an adaptive reference")
{
    std::mt19937_64 rng(5);
    for (const auto& law : {dd_law(), dd_nonlinear_law(), three_nonlinear_law(), darcy_forchheimer_law()}) {
        for (double eps : {1e-3, 1e-4}) {
            const MollifiedLaw m(law, eps);
            std::uniform_real_distribution<double> dist(0.0, 0.06);
            for (int k = 0; k < 40; ++k) {
                // half the samples land within a few eps of a kink
                double a = dist(rng);
                if (k % 2 == 0 && !law.thresholds().empty()) {
                    a = law.squared_thresholds().back() + (dist(rng) / 0.06 - 0.5) * 6 * eps;
                }
                CHECK(max_rel(m.psi_direct(a), oracle_convolution(law, eps, a, false)) <= 1e-10);
                CHECK(max_rel(m.phi_direct(a), oracle_convolution(law, eps, a, true)) <= 1e-10);
            }
        }
    }
}

TEST_CASE("build_table")
{
    std::mt19937_64 rng(17);
    for (const auto& law : {dd_law(), dd_nonlinear_law(), three_linear_law(), three_nonlinear_law()}) {
        const MollifiedLaw m(law, 1e-4);
        const auto t = m.with_table(0.2, 4096);
        REQUIRE(t.has_table());
        std::uniform_real_distribution<double> dist(0.0, 0.2);
        double worst = 0.0;
        for (int k = 0; k < 200; ++k) {
            const double a = k % 2 ? dist(rng) : law.squared_thresholds()[0] + (dist(rng) - 0.1) * 1e-2;
            worst = std::max(worst, max_rel(t.phi(a), m.phi_direct(a)));
            worst = std::max(worst, max_rel(t.psi(a), m.psi_direct(a)));
        }
        CHECK(worst <= 1e-7);
    }

    SUBCASE("kink windows are densely sampled")
    {
        const MollifiedLaw m(three_linear_law(), 1e-3);
        const auto grid = table_grid(m, 0.1, 256);
        for (double c : {0.0, 0.075 * 0.075, 0.0225}) {
            const auto inside = std::count_if(grid.begin(), grid.end(), [&](double a) {
                return std::abs(a - c) <= 10e-3;
            });
            CHECK(inside >= 32);
        }
    }

    SUBCASE("doubling the sample count reduces the error")
    {
        const MollifiedLaw m(dd_nonlinear_law(), 1e-3);
        std::vector<double> probes;
        std::uniform_real_distribution<double> dist(0.0, 0.1);
        for (int k = 0; k < 200; ++k) {
            probes.push_back(dist(rng));
        }
        auto max_error = [&](std::size_t n) {
            const auto t = m.with_table(0.1, n);
            double worst = 0.0;
            for (double a : probes) {
                worst = std::max(worst, max_rel(t.phi(a), m.phi_direct(a)));
            }
            return worst;
        };
        CHECK(max_error(256) < max_error(128));
    }

    SUBCASE("Darcy table is nondecreasing")
    {
        const auto t = MollifiedLaw(darcy_law(), 1e-3).with_table(1.0, 512);
        const auto* table = t.table();
        for (std::size_t k = 1; k < table->a.size(); ++k) {
            CHECK(table->phi[k] >= table->phi[k - 1] - 1e-15);
        }
        double prev = t.phi(0.0);
        for (int k = 1; k <= 5000; ++k) {
            const double v = t.phi(k * 2e-4);
            CHECK(v >= prev - 1e-15); // rounding-level noise on the plateau
            prev = v;
        }
    }

    SUBCASE("validation")
    {
        const MollifiedLaw m(dd_law(), 1e-3);
        CHECK_THROWS_AS(m.with_table(0.0225, 1024), ValidationError);
        CHECK_THROWS_AS(m.with_table(1.0, 32), ValidationError);
    }
}

TEST_CASE("regularized_drag_coeff")
{
    const double eps = 1e-4;
    const std::vector<MollifiedLaw> darcy{MollifiedLaw(darcy_law(), eps)};
    CHECK(regularized_drag_coeff(darcy, 0.5, 0) == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(regularized_drag_coeff(darcy, 0.0, 0) == doctest::Approx(0.5).epsilon(1e-14));

    const auto weighted = dd_law().with_weight(CellWeight::field({2.0, 3.0}));
    const std::vector<MollifiedLaw> model{MollifiedLaw(weighted, eps)};
    CHECK(regularized_drag_coeff(model, 0.01, 0) == doctest::Approx(2.0).epsilon(1e-10));
    CHECK(regularized_drag_coeff(model, 0.0, 1) == doctest::Approx(1.5).epsilon(1e-14));

    // two terms add
    const std::vector<MollifiedLaw> sum{MollifiedLaw(darcy_law(), eps), MollifiedLaw(dd_law(), eps)};
    CHECK(regularized_drag_coeff(sum, 0.05, 0) == doctest::Approx(1.1).epsilon(1e-10));
    CHECK_THROWS_AS(regularized_drag_coeff(darcy, -1.0, 0), DomainError);
}

TEST_CASE("property: pointwise convergence with linear error scaling")
{
    const auto law = dd_law();
    std::vector<double> errors;
    for (double eps : {1e-2, 1e-3, 1e-4}) {
        const MollifiedLaw m(law, eps);
        double sup = 0.0;
        for (int k = 0; k <= 1000; ++k) {
            const double a = 0.05 * k / 1000.0;
            sup = std::max(sup, std::abs(m.psi_direct(a) - law.psi(a)));
        }
        errors.push_back(sup);
    }
    for (std::size_t k = 0; k + 1 < errors.size(); ++k) {
        const double ratio = errors[k] / errors[k + 1];
        CHECK(ratio >= 8.0);
        CHECK(ratio <= 12.0);
    }
    // off the kinks the error vanishes much faster
    const MollifiedLaw fine(law, 1e-4);
    CHECK(std::abs(fine.psi_direct(0.04) - law.psi(0.04)) <= 1e-14);
}

TEST_CASE("property: convexity and monotonicity preservation")
{
    const auto convex = convex_jump_law();
    const MollifiedLaw m(convex, 1e-3);
    const double h = 0.05 / 1000.0;
    std::vector<double> values;
    for (int k = 0; k <= 1000; ++k) {
        values.push_back(m.psi_direct(k * h));
    }
    for (std::size_t k = 1; k + 1 < values.size(); ++k) {
        CHECK(values[k + 1] - 2 * values[k] + values[k - 1] >= -1e-12);
    }
    for (const auto& law : {dd_law(), dd_nonlinear_law(), three_linear_law(), three_nonlinear_law()}) {
        const MollifiedLaw ml(law, 1e-3);
        double prev = ml.psi_direct(0.0);
        for (int k = 1; k <= 1000; ++k) {
            const double a = k * h;
            const double v = ml.psi_direct(a);
            CHECK(v >= prev);
            CHECK(ml.phi_direct(a) >= -1e-14);
            prev = v;
        }
    }
}

TEST_CASE("property: mollification is linear in the law")
{
    // a law whose coefficients are the sum of two others has the summed integrand
    const auto a_law = dd_nonlinear_law();
    const auto b_law = convex_jump_law();
    const auto total = build_law({0.15}, {{{0}, {1.1}}, {{0, 1}, {1.01, 3.0}}});
    for (double eps : {1e-3, 1e-4}) {
        const MollifiedLaw a(a_law, eps), b(b_law, eps), t(total, eps);
        for (int k = 0; k <= 100; ++k) {
            const double x = 0.05 * k / 100.0;
            CHECK(std::abs(a.psi_direct(x) + b.psi_direct(x) - t.psi_direct(x)) <= 1e-10);
            CHECK(std::abs(a.phi_direct(x) + b.phi_direct(x) - t.phi_direct(x)) <= 1e-10);
        }
    }
}

TEST_CASE("property: phi_eps is the derivative of Psi_eps")
{
    std::mt19937_64 rng(23);
    std::uniform_real_distribution<double> dist(0.0, 0.05);
    for (const auto& law : {dd_law(), dd_nonlinear_law(), three_nonlinear_law()}) {
        const double eps = 1e-3;
        const MollifiedLaw m(law, eps);
        for (int k = 0; k < 100; ++k) {
            const double a = dist(rng) + 1e-3 * eps;
            const double h = 1e-4 * eps;
            const double fd = (m.psi_direct(a + h) - m.psi_direct(std::max(0.0, a - h))) / (2 * h);
            CHECK(max_rel(fd, m.phi_direct(a)) <= 1e-6);
            const double fd2 = (m.phi_direct(a + h) - m.phi_direct(std::max(0.0, a - h))) / (2 * h);
            CHECK(std::abs(fd2 - m.dphi_direct(a)) <= 1e-5 * (1.0 + std::abs(m.dphi_direct(a))));
        }
    }
}

TEST_CASE("property: regularized drag keeps a growth envelope")
{
    std::mt19937_64 rng(29);
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (const auto& law : {dd_law(), dd_nonlinear_law(), three_nonlinear_law(), darcy_forchheimer_law()}) {
        const auto bounds = law.coercivity_bounds();
        const double e = (bounds.r - 2.0) / 2.0;
        const MollifiedLaw m(law, 1e-3);
        const double c_eps = 0.5 * bounds.c;
        const double C_eps = 2.0 * bounds.C * std::max(1.0, std::pow(2.0, e - 1.0));
        for (int k = 0; k < 1000; ++k) {
            const double a = std::pow(10.0, 4.0 * dist(rng) - 4.0);
            const double phi = m.phi_direct(a);
            CHECK(c_eps * std::pow(a, e) <= phi);
            CHECK(phi <= C_eps * (1.0 + std::pow(a, e)));
        }
    }
}
