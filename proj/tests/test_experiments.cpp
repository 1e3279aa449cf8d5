#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/experiments.hpp"

#include <cmath>

using namespace pwf;

namespace {

ModeKey key(IVec3 n, int pol = 0) { return ModeKey{0, n, pol}; }

} // namespace

TEST_CASE("functional specs")
{
    TheoryModel th(TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.5);
    CHECK(build_functional(th, {}).is_gaussian());
    FunctionalSpec one{"one-particle", {{key({0, 0, 1}), 1.0}}};
    CHECK(build_functional(th, one).is_excited());
    auto sup = build_functional(th, default_gauge_functional());
    CHECK(sup.is_superposition());
    CHECK(norm_squared(sup) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK_THROWS(build_functional(th, FunctionalSpec{"squeezed"}));
    CHECK(checkpoint_times(2.0, 5) == std::vector<double>{0.0, 0.5, 1.0, 1.5, 2.0});
    CHECK_THROWS(checkpoint_times(1.0, 1));
}

TEST_CASE("gauge equivalence of the two free-field guidance laws")
{
    GaugeEquivalenceOptions o;
    o.functional = default_gauge_functional();
    o.trajectories = 4;
    auto r = run_gauge_equivalence(o);
    REQUIRE(r.times.size() == 5);
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        CHECK(r.b_difference[k] < 1e-6);
        CHECK(r.b_scale[k] > 0.1);
    }
    CHECK(r.longitudinal_velocity == 0.0);
    CHECK(r.longitudinal_drift == 0.0);
    CHECK(r.pass);
}

TEST_CASE("equivariance experiment and its power")
{
    EquivarianceExperimentOptions o;
    o.theory = {TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.5};
    o.functional = {"one-particle", {{key({0, 0, 1}), cplx(0.7, 0.2)}, {key({1, 0, 0}, 1), cplx(-0.3, 0.5)}}};
    o.samples = 4000;
    auto r = run_equivariance_experiment(o);
    CHECK(r.pass);
    CHECK(r.flagged == 0);
    CHECK(r.reports.size() == 5);

    // a coherent ensemble that is never moved fails against the evolved functional
    TheoryModel th = o.theory.build();
    auto g = coherent(th, {{key({0, 0, 1}), cplx(0.9, 0.0)}});
    auto e = sample_equilibrium(g, 4000, 3);
    EvolvingFunctional psi(g, &th);
    auto ms = standard_marginals(g, 4, 1);
    CHECK_FALSE(equivariance_test(e, psi.at(1.0), ms).pass);
}

TEST_CASE("relaxation toward equilibrium")
{
    RelaxationOptions o;
    o.samples = 600;
    o.final_time = 24.0;
    o.checkpoints = 5;
    auto r = run_relaxation_experiment(o);
    REQUIRE(r.h.size() == 5);
    for (double h : r.h) CHECK(h >= 0.0);
    CHECK(r.h.back() < r.h.front());
    CHECK(r.slope < 0.0);
    CHECK(r.pass);
}

TEST_CASE("single trajectory")
{
    TrajectoryOptions o;
    o.theory = {TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.0};
    o.functional = {"coherent", {{key({0, 0, 1}), cplx(0.5, 0.0)}}};
    auto r = run_trajectory(o);
    CHECK(r.pass);
    CHECK(r.trajectory.states.size() == 11);
    for (double l : r.log_density) CHECK(std::isfinite(l));
    o.start = {1.0};
    CHECK_THROWS(run_trajectory(o));
}
