#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/dynamics.hpp"

#include <cmath>
#include <random>

using namespace pwf;

namespace {

TheoryModel bohm() { return TheoryModel(TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.5); }

// Closed-form Bohm path in a Gaussian product state whose width is real at t = 0:
// each coordinate follows the classical centre and keeps its offset in units of the spread.
struct GaussianPath {
    const TheoryModel& theory;
    GaussianFunctional g;

    std::vector<double> at(std::span<const double> x0, double t) const
    {
        std::vector<double> x(x0.begin(), x0.end());
        for (std::size_t j = 0; j < x.size(); ++j) {
            if (!g.active[j]) continue;
            const auto& o = theory.oscillators()[j];
            double c = g.center[j], p = g.momentum[j], w = g.width[j].real();
            double ct, sig0 = 1.0 / (2 * w), sig;
            if (o.omega > 0) {
                double cs = std::cos(o.omega * t), sn = std::sin(o.omega * t);
                ct = c * cs + o.h * p * sn / o.omega;
                sig = sig0 * cs * cs + o.h * o.h * w * sn * sn / (2 * o.omega * o.omega);
            } else {
                ct = c + o.h * p * t;
                sig = sig0 + o.h * o.h * w * t * t / 2;
            }
            x[j] = ct + (x0[j] - c) * std::sqrt(sig / sig0);
        }
        return x;
    }
};

GaussianFunctional squeezed_coherent(const TheoryModel& th, std::size_t& squeezed)
{
    ModeCoefficients a{{ModeKey{0, {0, 0, 1}, 0}, cplx(0.7, 0.3)}, {ModeKey{0, {1, 0, 0}, 1}, cplx(-0.4, 0.5)}};
    GaussianFunctional g = coherent(th, a);
    squeezed = th.space()->sectors()[0].basis->coordinate_index(*th.space()->sectors()[0].basis->index_of({0, 1, 0}), 0, 0);
    g.width[squeezed] *= 2.0;
    return g;
}

double max_diff(std::span<const double> a, std::span<const double> b)
{
    double m = 0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
    return m;
}

} // namespace

TEST_CASE("vacuum trajectories stand still")
{
    TheoryModel th = bohm();
    EvolvingFunctional psi(vacuum(th), &th);
    std::mt19937_64 rng(3);
    std::normal_distribution<double> n;
    FieldConfiguration x0 = FieldConfiguration::zero(th.space());
    for (auto& v : x0.x) v = n(rng);
    std::vector<double> times{0, 1, 2, 5};
    auto tr = integrate_trajectory(th, psi, x0, times);
    REQUIRE(tr.states.size() == 4);
    CHECK_FALSE(tr.stats.flagged);
    for (const auto& s : tr.states) CHECK(max_diff(s, x0.x) < 1e-13);
    CHECK(tr.stats.projection_residual < 1e-14);
}

TEST_CASE("coherent electromagnetic mode follows the classical solution")
{
    TheoryModel th = bohm();
    ModeCoefficients a{{ModeKey{0, {0, 0, 1}, 0}, cplx(0.7, 0.3)}, {ModeKey{0, {1, 1, 0}, 1}, cplx(-0.4, 0.5)}};
    GaussianFunctional g = coherent(th, a);
    EvolvingFunctional psi(g, &th);
    GaussianPath path{th, g};
    FieldConfiguration x0 = FieldConfiguration::zero(th.space());
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n(0.0, 0.5);
    for (std::size_t j = 0; j < x0.x.size(); ++j) x0.x[j] = g.center[j] + n(rng);
    std::vector<double> times{0, 0.5, 1, 2, 3, 6};
    auto tr = integrate_trajectory(th, psi, x0, times);
    REQUIRE_FALSE(tr.stats.flagged);
    double err = 0;
    for (std::size_t i = 0; i < times.size(); ++i) err = std::max(err, max_diff(tr.states[i], path.at(x0.x, times[i])));
    CHECK(err < 1e-6);
    CHECK(tr.stats.rejections <= tr.stats.steps);
}

TEST_CASE("squeezed state trajectories and the integrator order")
{
    TheoryModel th = bohm();
    std::size_t sq = 0;
    GaussianFunctional g = squeezed_coherent(th, sq);
    EvolvingFunctional psi(g, &th);
    GaussianPath path{th, g};
    std::vector<double> x0(g.center);
    x0[sq] += 0.8;
    for (std::size_t j = 0; j < x0.size(); ++j) x0[j] += 0.1 * std::sin(double(j));
    const double T = 2.5;
    auto exact = path.at(x0, T);

    SUBCASE("adaptive")
    {
        std::vector<double> times{0, T};
        FieldConfiguration c0{th.space(), x0};
        auto tr = integrate_trajectory(th, psi, c0, times);
        CHECK(max_diff(tr.states.back(), exact) < 1e-6);
        // reversibility: integrate back to the start
        std::vector<double> back{T, 0};
        auto rv = integrate(guidance_field(th, psi), tr.states.back(), back);
        CHECK(max_diff(rv.states.back(), x0) < 1e-7);
    }
    SUBCASE("fixed-step order study")
    {
        auto f = guidance_field(th, psi);
        std::vector<double> err;
        for (std::size_t steps : {10, 20, 40, 80}) err.push_back(max_diff(integrate_fixed(f, x0, 0, T, steps), exact));
        for (std::size_t i = 1; i < err.size(); ++i) {
            double order = std::log2(err[i - 1] / err[i]);
            MESSAGE("observed order " << order << " at error " << err[i]);
            CHECK(order >= 5.0 - 0.25);
        }
        // RK4 reference: fourth order
        double e1 = max_diff(integrate_rk4(f, x0, 0, T, 40), exact), e2 = max_diff(integrate_rk4(f, x0, 0, T, 80), exact);
        CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.1));
    }
}

TEST_CASE("tightening the tolerance tightens the error")
{
    TheoryModel th = bohm();
    std::size_t sq = 0;
    GaussianFunctional g = squeezed_coherent(th, sq);
    EvolvingFunctional psi(g, &th);
    GaussianPath path{th, g};
    std::vector<double> x0(g.center);
    x0[sq] -= 0.6;
    std::vector<double> times{0, 3};
    auto exact = path.at(x0, 3);
    double prev = 1e300;
    for (double rtol : {1e-6, 1e-8, 1e-10}) {
        Tolerances tol;
        tol.rtol = rtol;
        tol.atol = rtol * 1e-2;
        auto tr = integrate(guidance_field(th, psi), x0, times, tol);
        double e = max_diff(tr.states.back(), exact);
        CHECK(e < prev);
        CHECK(e < 200 * rtol);
        prev = e;
    }
}

TEST_CASE("nodes shrink the step and eventually flag the trajectory")
{
    // velocity 1 with an excluded band around x = 1
    VelocityField f = [](double, std::span<const double> x, std::span<double> v) {
        if (std::abs(x[0] - 1.0) < 0.3) throw DegeneratePoint("band");
        v[0] = 1.0;
    };
    std::vector<double> times{0, 0.5, 2};
    Tolerances tol;
    tol.min_step = 1e-8;
    auto tr = integrate(f, {0.0}, times, tol);
    CHECK(tr.stats.flagged);
    CHECK(tr.stats.degenerate_events > 0);
    CHECK_FALSE(tr.stats.message.empty());
    REQUIRE(tr.states.size() == 2); // start and the first output time survive
    CHECK(tr.states[1][0] == doctest::Approx(0.5));

    // a band the path never reaches leaves nothing to log
    VelocityField g = [](double, std::span<const double> x, std::span<double> v) {
        if (x[0] > 5.0) throw DegeneratePoint("far");
        v[0] = 1.0;
    };
    auto ok = integrate(g, {0.0}, times, tol);
    CHECK_FALSE(ok.stats.flagged);
    CHECK(ok.stats.degenerate_events == 0);
    CHECK(ok.states.back()[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("output times must be monotone")
{
    VelocityField f = [](double, std::span<const double>, std::span<double> v) { v[0] = 0.0; };
    std::vector<double> bad{0, 1, 0.5};
    CHECK_THROWS_AS(integrate(f, {0.0}, bad), std::invalid_argument);
    std::vector<double> one{0};
    CHECK(integrate(f, {1.0}, one).states.size() == 1);
}
