#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/common.hpp"
#include "pwf/holland.hpp"
#include "pwf/stats.hpp"

#include <chrono>
#include <cmath>
#include <numeric>

using namespace pwf;

namespace {

// midpoint rule over alpha with the sin(alpha) measure; beta and gamma contribute 8 pi^2
template <class F>
double angular_integral(F f, int n = 200000)
{
    double h = pi / n, s = 0;
    for (int i = 0; i < n; ++i) {
        double a = (i + 0.5) * h;
        s += f(a) * std::sin(a);
    }
    return s * h * 8 * pi * pi;
}

} // namespace

TEST_CASE("site densities")
{
    CHECK(angular_integral([](double a) { return u_density(1, a); }) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(angular_integral([](double a) { return u_density(-1, a); }) == doctest::Approx(1.0).epsilon(1e-9));
    double bc = angular_integral([](double a) { return std::sqrt(u_density(1, a) * u_density(-1, a)); });
    CHECK(bc == doctest::Approx(pi / 4).epsilon(1e-9));
    CHECK(holland_site_overlap() == doctest::Approx(bc).epsilon(1e-9));
    CHECK(u_density(-1, 0.0) == doctest::Approx(1 / (8 * pi * pi)));
    CHECK(u_density(1, 0.0) == 0.0);
    for (int s : {1, -1}) {
        double m = angular_integral([s](double a) { return a * u_density(s, a); });
        double v = angular_integral([s, m](double a) { return (a - m) * (a - m) * u_density(s, a); });
        CHECK(m == doctest::Approx(holland_mean_alpha(s)).epsilon(1e-9));
        CHECK(std::sqrt(v) == doctest::Approx(holland_alpha_spread()).epsilon(1e-8));
    }
    CHECK(holland_alpha_spread() == doctest::Approx(0.5597).epsilon(1e-4));
    CHECK_THROWS(u_density(0, 1.0));
    CHECK_THROWS(u_density(1, 4.0));
}

TEST_CASE("sampled alpha moments at one million draws")
{
    auto t0 = std::chrono::steady_clock::now();
    for (int s : {1, -1}) {
        auto a = sample_alpha(s, 1000000, 2024);
        auto m = moments(a);
        CHECK(std::abs(m.mean / holland_mean_alpha(s) - 1) < 0.01);
        CHECK(std::abs(m.mean - holland_mean_alpha(s)) < 4 * m.standard_error);
        CHECK(std::abs(std::sqrt(m.variance) / holland_alpha_spread() - 1) < 0.01);
    }
    CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() < 60.0);
}

TEST_CASE("angular configurations")
{
    auto st = OccupationState::first_occupied(4, 2);
    auto c = sample_angles(st, 50000, 5);
    REQUIRE(c.alpha.size() == 4 * 50000);
    std::vector<double> occupied, empty, beta, gamma;
    for (std::size_t s = 0; s < c.samples; ++s)
        for (std::size_t i = 0; i < 4; ++i) {
            std::size_t k = s * 4 + i;
            CHECK_FALSE((c.alpha[k] < 0 || c.alpha[k] > pi || c.beta[k] < 0 || c.beta[k] >= 2 * pi ||
                         c.gamma[k] < 0 || c.gamma[k] >= 4 * pi));
            (i < 2 ? occupied : empty).push_back(c.alpha[k]);
            beta.push_back(c.beta[k]);
            gamma.push_back(c.gamma[k]);
        }
    auto mo = moments(occupied), me = moments(empty);
    CHECK(std::abs(mo.mean - 5 * pi / 8) < 4 * mo.standard_error);
    CHECK(std::abs(me.mean - 3 * pi / 8) < 4 * me.standard_error);
    // uniform beta and gamma
    double crit = ks_critical(beta.size(), 0.01);
    CHECK(ks_statistic(beta, [](double b) { return b / (2 * pi); }) < crit);
    CHECK(ks_statistic(gamma, [](double g) { return g / (4 * pi); }) < crit);
    // alpha against the closed-form CDFs
    auto cdf_occupied = [](double a) { return (1 - std::cos(a)) * (1 - std::cos(a)) / 4; };
    auto cdf_empty = [](double a) { return 1 - (1 + std::cos(a)) * (1 + std::cos(a)) / 4; };
    CHECK(ks_statistic(occupied, cdf_occupied) < ks_critical(occupied.size(), 0.01));
    CHECK(ks_statistic(empty, cdf_empty) < ks_critical(empty.size(), 0.01));
    CHECK(ks_statistic(empty, cdf_occupied) > ks_critical(empty.size(), 0.01));
    CHECK_THROWS(OccupationState::first_occupied(2, 3));
}

TEST_CASE("region statistic")
{
    std::vector<double> alpha(10, pi / 2);
    std::vector<std::size_t> region{0, 3, 7};
    CHECK(a_v_statistic(alpha, region) == doctest::Approx(pi / 2));
    CHECK_THROWS(a_v_statistic(alpha, std::span<const std::size_t>{}));

    // mean and variance of A_V under product states
    const std::size_t nl = 50, draws = 20000;
    std::vector<std::size_t> all(nl);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t n : {std::size_t(0), nl / 2, nl}) {
        auto c = sample_angles(OccupationState::first_occupied(nl, n), draws, 30 + n);
        std::vector<double> av(draws);
        for (std::size_t s = 0; s < draws; ++s) av[s] = a_v_statistic(c.alphas(s), all);
        auto m = moments(av);
        double expect = (double(n) * 5 * pi / 8 + double(nl - n) * 3 * pi / 8) / double(nl);
        CHECK(std::abs(m.mean - expect) < 4 * m.standard_error);
        double var = holland_alpha_spread() * holland_alpha_spread() / double(nl);
        CHECK(std::abs(m.variance - var) < 4 * var * std::sqrt(2.0 / (draws - 1)));
    }
}

TEST_CASE("analytic distinguishability criterion")
{
    auto d = distinguishability(100, 100);
    CHECK(d.lhs == doctest::Approx(10.0));
    CHECK(d.rhs == doctest::Approx(0.7126).epsilon(1e-4));
    CHECK(d.pass);
    auto f = distinguishability(1, 1e6);
    CHECK(f.lhs == doctest::Approx(0.001));
    CHECK_FALSE(f.pass);
    CHECK_FALSE(distinguishability(100, 100, 20).pass);
    CHECK_THROWS(distinguishability(5, 4));
    CHECK_THROWS(distinguishability(0, 0.5));
}

TEST_CASE("length scale")
{
    auto nucleus = length_scale_criterion(1e-15, 1e30);
    CHECK(nucleus.threshold == doctest::Approx(1e-5).epsilon(1e-12));
    CHECK(nucleus.length == doctest::Approx(1e-4).epsilon(1e-12));
    auto planck = length_scale_criterion(1e-35, 1e30);
    CHECK(planck.threshold == doctest::Approx(1e15).epsilon(1e-12));
    auto doubled = length_scale_criterion(2e-15, 1e30);
    CHECK(doubled.length == doctest::Approx(nucleus.length / 2).epsilon(1e-14));
    // the defining relation L a rho^{2/3} = margin
    CHECK(nucleus.length * 1e-15 * std::cbrt(1e60) == doctest::Approx(10.0).epsilon(1e-12));
    CHECK_THROWS(length_scale_criterion(0, 1));
}

TEST_CASE("sampled separability follows the criterion over the sweep grid")
{
    std::vector<std::size_t> sizes{1, 10, 100, 1000, 10000};
    std::vector<double> fractions{0.0, 0.01, 0.1, 0.3, 1.0};
    auto cells = holland_sweep(sizes, fractions, 400, 77);
    REQUIRE(cells.size() == 25);
    int passes = 0;
    for (const auto& c : cells) {
        INFO("n_l " << c.n_l << " n " << c.n << " separation " << c.separation << " lhs " << c.analytic.lhs);
        CHECK(c.agree);
        // separation in pooled-spread units is (pi / 4) lhs / spread
        double predicted = pi / 4 * c.analytic.lhs / holland_alpha_spread();
        CHECK(std::abs(c.separation - predicted) < 0.15 * predicted + 0.3);
        double var = holland_alpha_spread() * holland_alpha_spread() / double(c.n_l);
        CHECK(std::abs(c.var_empty - var) < 5 * var * std::sqrt(2.0 / 399));
        passes += c.analytic.pass;
    }
    // both outcomes occur on the grid
    CHECK(passes == 6);
}

TEST_CASE("holland overlap by sampling")
{
    for (int n : {1, 4, 12}) {
        auto o = holland_overlap_mc(n, 200000, 3);
        CHECK(std::abs(o.estimate - std::pow(pi / 4, n)) < 4 * o.error);
    }
    auto big = holland_overlap_mc(1, 1000000, 4);
    CHECK(std::abs(big.estimate / (pi / 4) - 1) < 0.01);
}
