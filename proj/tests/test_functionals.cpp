#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/functionals.hpp"
#include "pwf/theories.hpp"

#include <cmath>
#include <random>

using namespace pwf;

namespace {

TheoryModel schrodinger(double L = 2 * pi, double cut = 1.5)
{
    return TheoryModel(TheoryKind::SchrodingerFieldBoson, {}, L, cut);
}

ModeKey key(IVec3 n, int pol = 0, std::size_t sector = 0) { return ModeKey{sector, n, pol}; }

std::vector<double> random_config(std::size_t d, std::mt19937_64& rng, double s = 1.0)
{
    std::normal_distribution<double> n(0.0, s);
    std::vector<double> x(d);
    for (auto& v : x) v = n(rng);
    return x;
}

// central differences of log Psi along a random unit direction, compared to the analytic gradient
double gradient_error(const WaveFunctional& f, const std::vector<double>& x, std::mt19937_64& rng)
{
    std::size_t d = x.size();
    auto u = random_config(d, rng);
    double un = 0.0;
    for (double v : u) un += v * v;
    for (auto& v : u) v /= std::sqrt(un);
    std::vector<cplx> g(d);
    log_psi_gradient(f, x, g);
    cplx analytic = 0.0;
    for (std::size_t j = 0; j < d; ++j) analytic += g[j] * u[j];
    double h = 1e-5;
    std::vector<double> xp(x), xm(x);
    for (std::size_t j = 0; j < d; ++j) {
        xp[j] += h * u[j];
        xm[j] -= h * u[j];
    }
    cplx lp = log_psi(f, xp), lm = log_psi(f, xm);
    double dphase = std::remainder(lp.imag() - lm.imag(), 2 * pi);
    cplx numeric((lp.real() - lm.real()) / (2 * h), dphase / (2 * h));
    double scale = std::max({std::abs(analytic.real()), std::abs(analytic.imag()), 1.0});
    return std::max(std::abs(numeric.real() - analytic.real()), std::abs(numeric.imag() - analytic.imag())) / scale;
}

cplx field_at(const ModeBasis& b, const ModeCoefficients& a, const Vec3& x)
{
    cplx s = 0.0;
    for (const auto& [k, v] : a) s += v * std::polar(1.0, dot(b.momentum(*b.index_of(k.n)), x));
    return s * std::pow(b.box_length(), -1.5);
}

} // namespace

TEST_CASE("vacuum of the Schrodinger field")
{
    auto th = schrodinger();
    WaveFunctional vac = vacuum(th);
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    std::mt19937_64 rng(1);
    cplx l0 = log_psi(vac, std::vector<double>(b.dimension(), 0.0));
    CHECK(l0.imag() == 0.0);
    for (int trial = 0; trial < 10; ++trial) {
        auto x = random_config(b.dimension(), rng);
        auto q = b.amplitudes(x);
        double sumq = 0.0;
        for (cplx v : q) sumq += std::norm(v);
        cplx l = log_psi(vac, x);
        CHECK(2 * (l.real() - l0.real()) == doctest::Approx(-sumq).epsilon(1e-12));
        FieldConfiguration cfg{th.space(), x};
        for (double v : phase_gradient(vac, cfg)) CHECK(v == 0.0);
    }
    CHECK(norm_squared(vac) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("vacuum widths of the free electromagnetic field grow with |k|")
{
    TheoryModel em(TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.8);
    auto vac = vacuum(em);
    const ModeBasis& b = *em.space()->sectors()[0].basis;
    for (std::size_t j = 0; j < vac.dimension(); ++j) {
        double k = std::sqrt(b.k2(b.coordinates()[j].mode));
        CHECK(vac.width[j].real() == doctest::Approx(k).epsilon(1e-14));
    }
    TheoryModel higgs_full(TheoryKind::AbelianHiggs, {.e = 0.3, .mu = 1.0, .lambda = 0.5}, 2 * pi, 1.0);
    CHECK_THROWS(vacuum(higgs_full));
}

TEST_CASE("coherent states")
{
    auto th = schrodinger();
    const ModeBasis& b = *th.space()->sectors()[0].basis;

    auto vac = vacuum(th);
    auto zero = coherent(th, {});
    for (std::size_t j = 0; j < vac.dimension(); ++j) {
        CHECK(zero.center[j] == 0.0);
        CHECK(zero.momentum[j] == 0.0);
    }

    ModeCoefficients alpha{{key({1, 0, 0}), cplx(0.8, -0.3)}, {key({0, 1, 1}), cplx(-0.2, 0.5)}, {key({0, 0, 0}), 0.4}};
    auto coh = coherent(th, alpha);
    // density peak sits on the field sqrt2 Re psi_alpha(x)
    FieldConfiguration c{th.space(), coh.center};
    auto amps = c.amplitudes();
    for (Vec3 p : {Vec3{0.1, 0.2, 0.3}, Vec3{2.5, -1.0, 4.0}}) {
        auto f = synthesize_field(b, amps, std::span<const Vec3>(&p, 1));
        CHECK(f[0].real() == doctest::Approx(std::sqrt(2.0) * field_at(b, alpha, p).real()).epsilon(1e-12));
    }
    std::mt19937_64 rng(2);
    double peak = log_psi(coh, coh.center).real();
    for (int t = 0; t < 200; ++t) {
        auto x = coh.center;
        auto dx = random_config(x.size(), rng, 0.3);
        for (std::size_t j = 0; j < x.size(); ++j) x[j] += dx[j];
        CHECK(log_psi(coh, x).real() < peak);
    }

    // evolution multiplies alpha(k) by exp(-i k^2 t / 2m)
    double t = 0.7;
    auto later = evolve_quadratic(coh, th, t);
    ModeCoefficients rotated;
    for (const auto& [k, a] : alpha) {
        double w = b.k2(*b.index_of(k.n)) / 2.0;
        rotated[k] = a * std::polar(1.0, -w * t);
    }
    cplx ip = inner_product(coherent(th, rotated), later);
    CHECK(ip.real() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(ip.imag()) < 1e-12);

    ModeCoefficients bad{{key({5, 0, 0}), 1.0}};
    CHECK_THROWS(coherent(th, bad));
}

TEST_CASE("quadratic evolution is a group action and keeps the vacuum")
{
    TheoryModel th(TheoryKind::MassiveSpin1, {.m = 1.3}, 2 * pi, 1.2);
    auto vac = vacuum(th);
    auto v5 = std::get<GaussianFunctional>(evolve_quadratic(vac, th, 5.0).v);
    for (std::size_t j = 0; j < vac.dimension(); ++j) {
        CHECK(std::abs(v5.width[j] - vac.width[j]) < 1e-12);
        CHECK(std::abs(v5.phase[j]) < 1e-12);
    }

    std::mt19937_64 rng(3);
    GaussianFunctional g = vac;
    std::uniform_real_distribution<double> u(0.3, 2.0);
    for (std::size_t j = 0; j < g.dimension(); ++j) {
        g.width[j] = cplx(u(rng), u(rng) - 1.0);
        g.center[j] = u(rng) - 1.0;
        g.momentum[j] = u(rng) - 1.0;
        g.phase[j] = u(rng);
    }
    for (auto [t1, t2] : {std::pair{0.3, 0.9}, std::pair{2.0, 3.7}, std::pair{-1.0, 4.5}}) {
        auto a = std::get<GaussianFunctional>(evolve_quadratic(evolve_quadratic(g, th, t1), th, t2).v);
        auto b = std::get<GaussianFunctional>(evolve_quadratic(g, th, t1 + t2).v);
        for (std::size_t j = 0; j < g.dimension(); ++j) {
            CHECK(std::abs(a.width[j] - b.width[j]) < 1e-10);
            CHECK(std::abs(a.center[j] - b.center[j]) < 1e-10);
            CHECK(std::abs(a.momentum[j] - b.momentum[j]) < 1e-10);
            CHECK(std::abs(std::remainder(a.phase[j] - b.phase[j], 2 * pi)) < 1e-10);
        }
        CHECK(norm_squared(b) == doctest::Approx(1.0).epsilon(1e-12));
    }

    // the centre follows the classical oscillator
    double t = 2.3;
    auto e = std::get<GaussianFunctional>(evolve_quadratic(g, th, t).v);
    const auto& osc = th.oscillators();
    for (std::size_t j = 0; j < g.dimension(); ++j) {
        double w = osc[j].omega;
        double expect = g.center[j] * std::cos(w * t) + osc[j].h * g.momentum[j] * std::sin(w * t) / w;
        CHECK(e.center[j] == doctest::Approx(expect).epsilon(1e-12));
    }
}

TEST_CASE("one-particle states")
{
    auto th = schrodinger();
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    ModeCoefficients psi{{key({1, 0, 0}), cplx(0.6, 0.1)}, {key({0, -1, 0}), cplx(0.0, 0.5)}, {key({0, 0, 0}), 0.3}};
    WaveFunctional one = one_particle(th, psi);
    WaveFunctional vac = vacuum(th);
    CHECK(norm_squared(one) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(inner_product(vac, one)) < 1e-14);

    // Psi_1 / Psi_0 is proportional to sum_k psi_k q_{-k}
    std::mt19937_64 rng(4);
    cplx ratio0 = 0.0;
    for (int t = 0; t < 20; ++t) {
        auto x = random_config(b.dimension(), rng);
        auto q = b.amplitudes(x);
        cplx lin = 0.0;
        for (const auto& [k, c] : psi) lin += c * q[b.partner(*b.index_of(k.n))];
        cplx r = std::exp(log_psi(one, x) - log_psi(vac, x)) / lin;
        if (t == 0) ratio0 = r;
        CHECK(std::abs(r - ratio0) < 1e-10 * std::abs(ratio0));
    }
    double nsum = 0.0;
    for (const auto& [k, c] : psi) nsum += std::norm(c);
    CHECK(std::abs(ratio0) == doctest::Approx(std::sqrt(2.0 / nsum)).epsilon(1e-10));

    // exact zero on the hyperplane sum psi_k q_{-k} = 0 is reported as a node
    ModeCoefficients real_psi{{key({0, 0, 0}), 1.0}};
    auto zero_mode = one_particle(th, real_psi);
    std::vector<double> x(b.dimension(), 0.3);
    x[b.coordinate_index(*b.zero_index(), 0, 2)] = 0.0;
    CHECK_THROWS_AS(log_psi(zero_mode, x), DegeneratePoint);

    CHECK_THROWS(n_particle(th, ModeTensor{}));
    ModeTensor asym{2, {{{key({1, 0, 0}), key({0, 0, 0})}, 1.0}, {{key({0, 0, 0}), key({1, 0, 0})}, 2.0}}};
    CHECK_THROWS(n_particle(th, asym));
}

TEST_CASE("many-particle states are orthonormal Fock states")
{
    auto th = schrodinger();
    ModeTensor two{2, {{{key({1, 0, 0}), key({1, 0, 0})}, 1.0}}};
    ModeTensor mixed{2, {{{key({1, 0, 0}), key({0, 1, 0})}, 1.0}, {{key({0, 1, 0}), key({1, 0, 0})}, 1.0}}};
    auto a = n_particle(th, two);
    auto m = n_particle(th, mixed);
    CHECK(norm_squared(a) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(norm_squared(m) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(std::abs(inner_product(a, m)) < 1e-14);
    CHECK(std::abs(inner_product(WaveFunctional(a), WaveFunctional(one_particle(th, {{key({1, 0, 0}), 1.0}})))) < 1e-14);

    // projection of a coherent state onto n quanta in one mode: e^{-|a|^2/2} a^n / sqrt(n!)
    cplx alpha(0.7, 0.4);
    auto coh = coherent(th, {{key({1, 0, 0}), alpha}});
    for (int n = 1; n <= 5; ++n) {
        ModeTensor t{n, {{std::vector<ModeKey>(n, key({1, 0, 0})), 1.0}}};
        auto f = n_particle(th, t);
        cplx expect = std::exp(-0.5 * std::norm(alpha)) * std::pow(alpha, n) / std::sqrt(std::tgamma(n + 1.0));
        cplx got = inner_product(f, coh);
        CHECK(std::abs(got - expect) < 1e-12);
    }
    // the same amplitude through the partner momentum
    cplx beta(0.2, -0.5);
    auto coh2 = coherent(th, {{key({-1, 0, 0}), beta}});
    auto one = one_particle(th, {{key({-1, 0, 0}), 1.0}});
    CHECK(std::abs(inner_product(one, coh2) - std::exp(-0.5 * std::norm(beta)) * beta) < 1e-12);
}

TEST_CASE("inner products agree with quadrature on a single coordinate")
{
    // L = 1 and no cutoff leave only the zero mode: one real coordinate
    TheoryModel th(TheoryKind::MassiveSpin1, {.m = 0.8}, 1.0, 0.0);
    REQUIRE(th.space()->dimension() == 3);
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    auto vac = vacuum(th);
    GaussianFunctional g1 = vac, g2 = vac;
    for (std::size_t j = 0; j < 3; ++j) {
        g1.width[j] = cplx(0.8 + 0.3 * u(rng), 0.4 * u(rng));
        g2.width[j] = cplx(1.1 + 0.3 * u(rng), 0.4 * u(rng));
        g1.center[j] = u(rng);
        g2.center[j] = u(rng);
        g1.momentum[j] = u(rng);
        g2.momentum[j] = u(rng);
        g1.phase[j] = u(rng);
        g2.phase[j] = u(rng);
    }
    auto excited = n_particle(th, ModeTensor{2, {{{key({0, 0, 0}, 0), key({0, 0, 0}, 1)}, 1.0}}});
    auto coh = coherent(th, {{key({0, 0, 0}, 0), cplx(0.3, 0.2)}, {key({0, 0, 0}, 2), cplx(-0.1, 0.4)}});
    std::vector<std::pair<WaveFunctional, WaveFunctional>> pairs{
        {g1, g2}, {excited, coh}, {superpose({1.0, cplx(0, 1)}, {excited, coh}), coh}};
    for (auto& [a, b] : pairs) {
        // product quadrature on a 3-D grid
        int n = 80;
        double lo = -7.0, h = 14.0 / n;
        cplx sum = 0.0;
        std::vector<double> x(3);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                for (int k = 0; k < n; ++k) {
                    x = {lo + (i + 0.5) * h, lo + (j + 0.5) * h, lo + (k + 0.5) * h};
                    sum += std::exp(std::conj(log_psi(a, x)) + log_psi(b, x));
                }
        sum *= h * h * h;
        cplx ip = inner_product(a, b);
        CHECK(std::abs(ip - sum) < 1e-8);
    }
}

TEST_CASE("gradients agree with finite differences at random probes")
{
    std::mt19937_64 rng(10);
    auto th = schrodinger(2 * pi, 1.0);
    TheoryModel em(TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.5);
    int failures = 0;
    for (int probe = 0; probe < 100; ++probe) {
        const TheoryModel& t = probe % 2 ? th : em;
        const ModeBasis& b = *t.space()->sectors()[0].basis;
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        ModeCoefficients alpha, psi;
        for (std::size_t i = 0; i < b.size(); ++i)
            for (int l = 0; l < b.polarizations(); ++l) {
                alpha[key(b.lattice(i), l)] = cplx(u(rng), u(rng));
                psi[key(b.lattice(i), l)] = cplx(u(rng), u(rng));
            }
        WaveFunctional f;
        switch (probe % 4) {
        case 0: f = coherent(t, alpha); break;
        case 1: f = one_particle(t, psi); break;
        case 2: f = superpose({1.0, 0.5}, {coherent(t, alpha), one_particle(t, psi)}); break;
        default: {
            ModeTensor two{2, {}};
            for (int e = 0; e < 3; ++e) {
                ModeKey k1 = key(b.lattice(rng() % b.size()), 0), k2 = key(b.lattice(rng() % b.size()), 0);
                cplx c(u(rng), u(rng));
                two.entries.push_back({{k1, k2}, c});
                if (!(k1 == k2)) two.entries.push_back({{k2, k1}, c});
            }
            try {
                f = n_particle(t, two);
            } catch (const std::invalid_argument&) {
                f = one_particle(t, psi);
            }
        }
        }
        auto x = random_config(f.dimension(), rng, 0.8);
        if (gradient_error(f, x, rng) >= 1e-5) ++failures;
    }
    CHECK(failures == 0);
}

TEST_CASE("superposition far inside one lobe")
{
    auto th = schrodinger(2 * pi, 1.0);
    auto a = coherent(th, {{key({0, 0, 0}), 4.0}});
    auto b = coherent(th, {{key({0, 0, 0}), -4.0}});
    auto s = superpose({1.0, 1.0}, {a, b});
    auto x = a.center;
    cplx ls = log_psi(s, x), la = log_psi(a, x);
    CHECK(std::abs(std::exp(ls - la) - 1.0) < 1e-6);
    CHECK_THROWS(superpose({0.0}, {a}));
}

TEST_CASE("local expectation values")
{
    auto th = schrodinger();
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    ModeCoefficients alpha{{key({1, 0, 0}), cplx(0.8, -0.3)}, {key({0, 0, 1}), cplx(-0.2, 0.5)}};
    auto coh = coherent(th, alpha);
    FieldConfiguration at_mean{th.space(), coh.center};
    std::vector<Vec3> pts{{0.1, 0.2, 0.3}, {1.4, -0.6, 2.0}};
    auto full = local_expectation(coh, at_mean, LocalOperator::PsiFull, pts);
    auto dens = local_expectation(coh, at_mean, LocalOperator::NumberDensity, pts);
    for (std::size_t p = 0; p < pts.size(); ++p) {
        cplx expect = field_at(b, alpha, pts[p]);
        CHECK(std::abs(full[p] - expect) < 1e-12);
        CHECK(dens[p].real() == doctest::Approx(std::norm(expect)).epsilon(1e-6));
    }
    std::mt19937_64 rng(12);
    WaveFunctional vac = vacuum(th);
    FieldConfiguration rnd{th.space(), random_config(b.dimension(), rng)};
    for (cplx v : local_expectation(vac, rnd, LocalOperator::PsiImag, pts)) CHECK(v == cplx(0.0));
    for (cplx v : local_expectation(vac, rnd, LocalOperator::NumberDensity, pts)) CHECK(std::abs(v) < 1e-6);
}

TEST_CASE("evolving functional matches materialized evolution")
{
    TheoryModel th(TheoryKind::FreeEM_Bohm, {}, 2 * pi, 1.5);
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    auto coh = coherent(th, {{key({1, 0, 0}, 0), cplx(1.0, 0.5)}});
    auto one = one_particle(th, {{key({0, 1, 0}, 1), 1.0}, {key({1, 1, 0}, 0), cplx(0, 1)}});
    WaveFunctional sup = superpose({1.0, 0.7}, {coh, one});
    EvolvingFunctional ev(sup, &th);
    std::mt19937_64 rng(13);
    for (double t : {0.0, 0.4, 3.3}) {
        auto snap = ev.at(t);
        auto x = random_config(b.dimension(), rng);
        std::vector<cplx> g1(x.size()), g2(x.size());
        cplx a = ev.log_psi_gradient(t, x, g1);
        cplx c = log_psi_gradient(snap, x, g2);
        CHECK(std::abs(a.real() - c.real()) < 1e-12);
        CHECK(std::abs(std::remainder(a.imag() - c.imag(), 2 * pi)) < 1e-12);
        for (std::size_t j = 0; j < x.size(); ++j) CHECK(std::abs(g1[j] - g2[j]) < 1e-12);
        CHECK(norm_squared(snap) == doctest::Approx(norm_squared(sup)).epsilon(1e-12));
    }
}
