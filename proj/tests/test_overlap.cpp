#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/holland.hpp"
#include "pwf/overlap.hpp"
#include "pwf/rng.hpp"

#include <cmath>
#include <random>

using namespace pwf;

namespace {

ModeKey key(IVec3 n, int pol = 0) { return ModeKey{0, n, pol}; }

TheoryModel one_mode() { return TheoryModel(TheoryKind::SchrodingerFieldBoson, {}, 2 * pi, 0.0); }

} // namespace

TEST_CASE("identical functionals overlap fully")
{
    TheoryModel th(TheoryKind::SchrodingerFieldBoson, {}, 2 * pi, 1.0);
    auto g = coherent(th, {{key({1, 0, 0}), cplx(0.3, -0.2)}});
    CHECK(gaussian_bhattacharyya(g, g) == doctest::Approx(1.0).epsilon(1e-14));
    auto r = density_overlap(g, g, 2000, 1);
    CHECK(r.bhattacharyya == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(r.min_overlap == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_FALSE(r.flagged);
    auto one = one_particle(th, {{key({1, 0, 0}), 1.0}});
    auto e = density_overlap(one, one, 2000, 2, OverlapEstimator::MinOverlap);
    CHECK(e.estimate == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("separated coherent states: exp(-delta^2 / 4)")
{
    // the single mode has density proportional to exp(-q^2)
    auto th = one_mode();
    auto a = coherent(th, {});
    REQUIRE(a.width[0].real() == doctest::Approx(1.0));
    for (double alpha : {0.25, 0.5, 1.0, 1.5}) {
        auto b = coherent(th, {{key({0, 0, 0}), alpha}});
        double delta = b.center[0] - a.center[0];
        double expect = std::exp(-delta * delta / 4.0);
        CHECK(gaussian_bhattacharyya(a, b) == doctest::Approx(expect).epsilon(1e-14));
        auto r = density_overlap(a, b, 40000, 3);
        CHECK(std::abs(r.estimate - expect) < 3 * r.error);
        CHECK(r.min_overlap == doctest::Approx(std::erfc(delta / 2.0)).epsilon(0.02));
    }
}

TEST_CASE("monte carlo agrees with the gaussian closed form on random pairs")
{
    TheoryModel th(TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.5);
    std::mt19937_64 rng(11);
    std::normal_distribution<double> n01;
    int outside = 0;
    for (int p = 0; p < 50; ++p) {
        ModeCoefficients a1, a2;
        a1[key({0, 0, 1})] = cplx(0.4 * n01(rng), 0.4 * n01(rng));
        a2[key({0, 0, 1})] = cplx(0.4 * n01(rng), 0.4 * n01(rng));
        a2[key({1, 1, 0}, 1)] = cplx(0.3 * n01(rng), 0.3 * n01(rng));
        auto g1 = coherent(th, a1), g2 = coherent(th, a2);
        double exact = gaussian_bhattacharyya(g1, g2);
        auto r = density_overlap(g1, g2, 4000, 100 + p);
        CHECK(r.min_overlap <= r.bhattacharyya + 1e-15);
        if (std::abs(r.estimate - exact) > 3 * r.error) ++outside;
    }
    // 3 sigma bands hold for every pair with high probability; allow the expected 0.27% tail
    CHECK(outside <= 1);
}

TEST_CASE("overlap is symmetric and ordered")
{
    TheoryModel th(TheoryKind::SchrodingerFieldBoson, {}, 2 * pi, 1.0);
    auto one = one_particle(th, {{key({1, 0, 0}), 1.0}});
    auto vac = vacuum(th);
    auto ab = density_overlap(one, vac, 20000, 5);
    auto ba = density_overlap(vac, one, 20000, 6);
    CHECK(std::abs(ab.estimate - ba.estimate) < 3 * std::hypot(ab.error, ba.error));
    CHECK(ab.min_overlap <= ab.bhattacharyya);
    CHECK(ab.estimate == doctest::Approx(std::sqrt(pi) / 2).epsilon(0.02));
}

TEST_CASE("one-particle states of disjoint support overlap significantly")
{
    TheoryModel th(TheoryKind::SchrodingerFieldBoson, {}, 2 * pi, 3.0);
    // indicators of [0, pi / 2) and [pi, 3 pi / 2) along x, projected on the x-axis modes
    auto bump = [](double lo, double hi) {
        ModeCoefficients c;
        for (int j = -3; j <= 3; ++j)
            c[key({j, 0, 0})] = j == 0 ? cplx(hi - lo) : (std::exp(cplx(0, -lo * j)) - std::exp(cplx(0, -hi * j))) / cplx(0, j);
        return c;
    };
    auto a = one_particle(th, bump(0, pi / 2)), b = one_particle(th, bump(pi, 1.5 * pi));
    MESSAGE("state inner product " << std::abs(inner_product(a, b)));
    CHECK(std::abs(inner_product(a, b)) < 0.5);
    auto r = density_overlap(a, b, 20000, 7);
    INFO(r.message);
    CHECK_FALSE(r.flagged);
    MESSAGE("disjoint-support overlap " << r.estimate << " +- " << r.error);
    CHECK(r.estimate > 0.1);
    CHECK(r.min_overlap <= r.bhattacharyya);
}

TEST_CASE("effective sample size floor flags vanishing overlap")
{
    auto th = one_mode();
    auto a = coherent(th, {});
    auto b = coherent(th, {{key({0, 0, 0}), 12.0}});
    auto r = density_overlap(a, b, 2000, 8);
    CHECK(r.flagged);
    CHECK(r.effective_samples < default_ess_floor);
}

TEST_CASE("one-particle maxima")
{
    TheoryModel th(TheoryKind::SchrodingerFieldBoson, {}, 2 * pi, 1.0);
    const ModeBasis& b = *th.space()->sectors()[0].basis;

    SUBCASE("real psi: maxima proportional to psi")
    {
        ModeCoefficients psi{{key({1, 0, 0}), 0.6}, {key({-1, 0, 0}), 0.6}, {key({0, 1, 0}), 0.4},
                             {key({0, -1, 0}), 0.4}};
        auto m = one_particle_maxima(th, psi, 8, 3);
        REQUIRE(m.points.size() == 8);
        for (std::size_t s = 0; s < 8; ++s) {
            CHECK(m.gradient_residual[s] < 1e-8);
            CHECK(m.span_residual[s] < 1e-8);
        }
        // field amplitudes at a maximum are a real multiple of the coefficients
        for (const auto& x : m.points) {
            auto q = b.amplitudes(x);
            cplx ref = q[*b.index_of({1, 0, 0})] / 0.6;
            CHECK(std::abs(ref.imag()) < 1e-8 * std::abs(ref));
            for (const auto& [k, c] : psi) CHECK(std::abs(q[*b.index_of(k.n)] - ref * c) < 1e-8 * std::abs(ref));
            CHECK(std::abs(q[*b.index_of({0, 0, 1})]) < 1e-8 * std::abs(ref));
        }
        CHECK(m.zero_plane_density < 1e-20);
    }

    SUBCASE("superposition: maxima in the span of the combined coefficients")
    {
        ModeCoefficients p1{{key({1, 0, 0}), cplx(0.7, 0.2)}}, p2{{key({0, 1, 0}), cplx(-0.1, 0.5)}};
        ModeCoefficients sum = p1;
        for (const auto& [k, c] : p2) sum[k] += c;
        auto m = one_particle_maxima(th, sum, 8, 4);
        REQUIRE_FALSE(m.points.empty());
        for (std::size_t s = 0; s < m.span_residual.size(); ++s) CHECK(m.span_residual[s] < 1e-8);
        // not aligned with psi_1 alone: the (0,1,0) amplitude is excited at every maximum
        for (const auto& x : m.points) {
            auto q = b.amplitudes(x);
            CHECK(std::abs(q[*b.index_of({0, 1, 0})]) > 0.1 * std::abs(q[*b.index_of({1, 0, 0})]));
        }
        CHECK(m.zero_plane_density < 1e-20);
    }
}

TEST_CASE("excitation scan decays exponentially")
{
    auto r = n_particle_overlap_scan("excitation", 1, 12, 4000, 9);
    REQUIRE(r.rows.size() == 12);
    int outside = 0;
    for (const auto& row : r.rows)
        if (std::abs(row.overlap - row.analytic) > 3 * row.error) ++outside;
    CHECK(outside <= 1);
    CHECK(r.slope < 0);
    CHECK(r.r2 > 0.9);
    CHECK(r.slope == doctest::Approx(std::log(std::sqrt(pi) / 2)).epsilon(0.1));
}

TEST_CASE("holland scan: (pi / 4)^n")
{
    auto r = n_particle_overlap_scan("holland", 1, 12, 20000, 10);
    for (std::size_t i = 0; i < r.rows.size(); ++i) {
        const auto& row = r.rows[i];
        CHECK(row.analytic == doctest::Approx(std::pow(pi / 4, row.n)).epsilon(1e-14));
        if (i > 0) CHECK(row.analytic / r.rows[i - 1].analytic == doctest::Approx(pi / 4).epsilon(1e-14));
        CHECK(std::abs(row.overlap - row.analytic) < 4 * row.error);
    }
    CHECK(r.slope == doctest::Approx(std::log(pi / 4)).epsilon(0.02));
    CHECK_THROWS(n_particle_overlap_scan("nope", 1, 2, 100, 1));
}
