#include "pwf/experiments.hpp"

#include "pwf/rng.hpp"
#include "pwf/stats.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <random>

namespace pwf {

WaveFunctional build_functional(const TheoryModel& theory, const FunctionalSpec& spec)
{
    if (spec.kind == "vacuum") return vacuum(theory);
    if (spec.kind == "coherent") return coherent(theory, spec.coefficients);
    if (spec.kind == "one-particle") return one_particle(theory, spec.coefficients);
    if (spec.kind == "superposition") {
        if (spec.weights.size() != 2) throw std::invalid_argument("superposition needs two weights");
        return normalized(superpose(spec.weights, {coherent(theory, spec.coefficients), coherent(theory, spec.second)}));
    }
    throw std::invalid_argument("unknown functional kind: " + spec.kind);
}

std::vector<double> checkpoint_times(double final_time, std::size_t checkpoints)
{
    if (checkpoints < 2) throw std::invalid_argument("need at least two checkpoints");
    if (!(final_time > 0.0)) throw std::invalid_argument("final time must be positive");
    std::vector<double> t(checkpoints);
    for (std::size_t k = 0; k < checkpoints; ++k) t[k] = final_time * double(k) / double(checkpoints - 1);
    return t;
}

EquivarianceExperimentResult run_equivariance_experiment(const EquivarianceExperimentOptions& o)
{
    auto t0 = std::chrono::steady_clock::now();
    TheoryModel th = o.theory.build();
    WaveFunctional f = build_functional(th, o.functional);
    SeedTree tree(o.seed);
    EvolvingFunctional psi(f, &th);
    EquivarianceExperimentResult r;
    r.times = checkpoint_times(o.final_time, o.checkpoints);
    Ensemble start = sample_equilibrium(f, o.samples, tree.derive("ensemble"));
    r.sampler = start.provenance;
    EvolveOptions eo;
    eo.tolerances = o.tolerances;
    auto ev = evolve_ensemble(start, th, psi, r.times, eo);
    r.flagged = ev.flagged;
    r.evolution_failed = ev.failed;
    r.message = ev.message;
    auto marginals = standard_marginals(f, o.projections, tree.derive("marginals"));
    EquivarianceOptions opt;
    opt.alpha = o.alpha;
    opt.family_size = marginals.size() * r.times.size();
    opt.seed = tree.derive("reference");
    r.pass = !ev.failed && !start.provenance.flagged;
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        r.reports.push_back(equivariance_test(ev.checkpoints[k], psi.at(r.times[k]), marginals, opt));
        r.pass = r.pass && r.reports.back().pass;
    }
    if (start.provenance.flagged) r.message += (r.message.empty() ? "" : "; ") + start.provenance.message;
    r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return r;
}

RelaxationResult run_relaxation_experiment(const RelaxationOptions& o)
{
    TheoryModel th(TheoryKind::FreeEM_Bohm, {}, o.box_length, o.cutoff);
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    auto coord = [&](IVec3 n) {
        auto m = b.index_of(n);
        if (!m) throw std::invalid_argument("relaxation modes are outside the cutoff");
        long j = b.coordinate_index(*m, 0, 0);
        if (j < 0) throw std::invalid_argument("relaxation coordinate missing");
        return std::uint32_t(j);
    };
    // frequencies 1 and sqrt 2
    const std::uint32_t ja = coord({0, 0, 1}), jb = coord({1, 1, 0});
    SeedTree tree(o.seed);
    auto rng = tree.engine("relaxation-phases");
    std::uniform_real_distribution<double> phase(0.0, 2 * pi);
    ExcitedFunctional e{vacuum(th), {}};
    for (int na = 0; na <= o.max_quanta; ++na)
        for (int nb = 0; nb <= o.max_quanta; ++nb) {
            std::vector<std::pair<std::uint32_t, std::uint16_t>> occ;
            if (na) occ.push_back({ja, std::uint16_t(na)});
            if (nb) occ.push_back({jb, std::uint16_t(nb)});
            e.poly.add_term(occ, std::polar(1.0, phase(rng)));
        }
    e.poly.finalize(th.space()->dimension());
    WaveFunctional f = normalized(WaveFunctional(e));
    EvolvingFunctional psi(f, &th);

    RelaxationResult r;
    r.times = checkpoint_times(o.final_time, o.checkpoints);
    Ensemble start = sample_equilibrium(vacuum(th), o.samples, tree.derive("relaxation-ensemble"));
    EvolveOptions eo;
    eo.tolerances = o.tolerances;
    auto ev = evolve_ensemble(start, th, psi, r.times, eo);
    r.flagged = ev.flagged;
    r.message = ev.message;
    CoarseGrainOptions cg;
    cg.bin_fraction = o.bin_fraction;
    cg.coordinates = {ja, jb};
    for (std::size_t k = 0; k < r.times.size(); ++k) {
        auto h = coarse_grained_h(ev.checkpoints[k], psi.at(r.times[k]), cg);
        r.h.push_back(h.value);
        r.noise_floor.push_back(h.noise_floor);
    }
    auto fit = fit_line(r.times, r.h);
    r.slope = fit.slope;
    r.slope_error = fit.slope_error;
    r.pass = !ev.failed && r.slope <= r.slope_error;
    return r;
}

FunctionalSpec default_gauge_functional()
{
    FunctionalSpec s;
    s.kind = "superposition";
    s.coefficients = {{ModeKey{0, {0, 0, 1}, 0}, cplx(0.8, 0.0)}, {ModeKey{0, {1, 1, 0}, 1}, cplx(0.0, 0.5)}};
    s.second = {{ModeKey{0, {0, 1, 0}, 1}, cplx(-0.6, 0.0)}, {ModeKey{0, {1, 0, 1}, 0}, cplx(0.4, 0.3)}};
    s.weights = {1.0, cplx(0.0, 1.0)};
    return s;
}

GaugeEquivalenceResult run_gauge_equivalence(const GaugeEquivalenceOptions& o)
{
    TheoryModel bohm(TheoryKind::FreeEM_Bohm, {}, o.box_length, o.cutoff);
    TheoryModel val(TheoryKind::FreeEM_Valentini, {}, o.box_length, o.cutoff);
    const ModeBasis& bb = *bohm.space()->sectors()[0].basis;
    const ModeBasis& vb = *val.space()->sectors()[0].basis;
    WaveFunctional fb = build_functional(bohm, o.functional);
    WaveFunctional fv = build_functional(val, o.functional);
    EvolvingFunctional pb(fb, &bohm), pv(fv, &val);

    GaugeEquivalenceResult r;
    r.times = checkpoint_times(o.final_time, o.checkpoints);
    r.b_difference.assign(r.times.size(), 0.0);
    r.b_scale.assign(r.times.size(), 0.0);
    SeedTree tree(o.seed);
    Ensemble starts = sample_equilibrium(fb, o.trajectories, tree.derive("gauge-starts"));
    auto rng = tree.engine("gauge-longitudinal");
    std::normal_distribution<double> nd;

    // Valentini mode i -> Bohm mode with the same lattice vector
    std::vector<std::size_t> to_bohm(vb.size());
    for (std::size_t i = 0; i < vb.size(); ++i) {
        auto m = bb.index_of(vb.lattice(i));
        if (!m) throw std::logic_error("lattices of the two gauges differ");
        to_bohm[i] = *m;
    }
    std::vector<double> vel(val.space()->dimension());
    for (std::size_t s = 0; s < starts.size(); ++s) {
        FieldConfiguration cb{bohm.space(), std::vector<double>(starts.member(s).begin(), starts.member(s).end())};
        auto ab = cb.amplitudes(0);
        // same transverse data, plus an arbitrary static longitudinal part
        std::vector<cplx> av(vb.size() * 3);
        for (std::size_t i = 0; i < vb.size(); ++i) {
            if (!vb.representative(i)) continue;
            Vec3 k = vb.momentum(i);
            double kn = std::sqrt(norm2(k));
            cplx c(o.longitudinal_scale * nd(rng), o.longitudinal_scale * nd(rng));
            std::size_t p = vb.partner(i);
            for (int d = 0; d < 3; ++d) {
                av[i * 3 + d] = ab[to_bohm[i] * 3 + d] + c * k[d] / kn;
                av[p * 3 + d] = std::conj(av[i * 3 + d]);
            }
        }
        auto cv = FieldConfiguration::from_amplitudes(val.space(), av);
        auto tb = integrate_trajectory(bohm, pb, cb, r.times, o.tolerances);
        auto tv = integrate_trajectory(val, pv, cv, r.times, o.tolerances);
        if (tb.stats.flagged || tv.stats.flagged) {
            r.message = "trajectory flagged: " + tb.stats.message + tv.stats.message;
            return r;
        }
        for (std::size_t k = 0; k < r.times.size(); ++k) {
            auto bb_modes = magnetic_field_modes(bb, bb.amplitudes(tb.states[k]));
            auto bv_modes = magnetic_field_modes(vb, vb.amplitudes(tv.states[k]));
            for (std::size_t i = 0; i < vb.size(); ++i)
                for (int d = 0; d < 3; ++d) {
                    cplx x = bb_modes[to_bohm[i] * 3 + d], y = bv_modes[i * 3 + d];
                    r.b_difference[k] = std::max(r.b_difference[k], std::abs(x - y));
                    r.b_scale[k] = std::max(r.b_scale[k], std::abs(x));
                }
            FieldConfiguration now{val.space(), tv.states[k]};
            auto v = guidance_velocity(val, pv.at(r.times[k]), now);
            for (std::size_t j = 0; j < v.size(); ++j)
                if (vb.coordinates()[j].pol == 2) {
                    r.longitudinal_velocity = std::max(r.longitudinal_velocity, std::abs(v[j]));
                    r.longitudinal_drift = std::max(r.longitudinal_drift, std::abs(tv.states[k][j] - tv.states[0][j]));
                }
        }
    }
    double worst = *std::max_element(r.b_difference.begin(), r.b_difference.end());
    r.pass = worst <= o.tolerance && r.longitudinal_velocity == 0.0 && r.longitudinal_drift == 0.0;
    return r;
}

TrajectoryResult run_trajectory(const TrajectoryOptions& o)
{
    TheoryModel th = o.theory.build();
    WaveFunctional f = build_functional(th, o.functional);
    EvolvingFunctional psi(f, &th);
    std::vector<double> x0 = o.start;
    if (x0.empty()) {
        auto e = sample_equilibrium(f, 1, SeedTree(o.seed).derive("trajectory-start"));
        x0.assign(e.member(0).begin(), e.member(0).end());
    }
    if (x0.size() != th.space()->dimension()) throw std::invalid_argument("start configuration has the wrong dimension");
    auto times = checkpoint_times(o.final_time, o.checkpoints);
    TrajectoryResult r;
    r.trajectory = integrate_trajectory(th, psi, FieldConfiguration{th.space(), x0}, times, o.tolerances);
    for (std::size_t k = 0; k < r.trajectory.states.size(); ++k) {
        try {
            r.log_density.push_back(2.0 * psi.log_psi(r.trajectory.times[k], r.trajectory.states[k]).real());
        } catch (const DegeneratePoint&) {
            r.log_density.push_back(-std::numeric_limits<double>::infinity());
        }
    }
    r.pass = !r.trajectory.stats.flagged;
    return r;
}

} // namespace pwf
