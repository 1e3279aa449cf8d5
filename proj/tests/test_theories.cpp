#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "pwf/theories.hpp"

#include <cmath>
#include <map>
#include <random>

using namespace pwf;

namespace {

std::vector<double> random_vec(std::size_t d, std::mt19937_64& rng, double s = 1.0)
{
    std::normal_distribution<double> n(0.0, s);
    std::vector<double> x(d);
    for (auto& v : x) v = n(rng);
    return x;
}

std::vector<cplx> as_phase_gradient(const std::vector<double>& g)
{
    std::vector<cplx> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = cplx(0.0, g[j]);
    return out;
}

// Real-space oracle for the Coulomb term of the matter velocity: the fields are sampled on a
// periodic grid fine enough to hold every product exactly, and 1/lap is applied by a plain DFT.
std::vector<cplx> coulomb_oracle(const ModeBasis& b, double e, const std::vector<cplx>& phi,
                                 const std::vector<cplx>& dphistar_x, const std::vector<cplx>& dphi_x)
{
    int N = 8;
    double L = b.box_length();
    double norm = std::pow(L, -1.5);
    std::vector<Vec3> pts;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j)
            for (int k = 0; k < N; ++k) pts.push_back({L * i / N, L * j / N, L * k / N});
    auto synth = [&](const std::vector<cplx>& modes, const Vec3& p) {
        cplx s = 0.0;
        for (std::size_t m = 0; m < b.size(); ++m) s += modes[m] * std::polar(norm, dot(b.momentum(m), p));
        return s;
    };
    std::vector<cplx> f(pts.size()), phix(pts.size());
    for (std::size_t p = 0; p < pts.size(); ++p) {
        phix[p] = synth(phi, pts[p]);
        cplx g = synth(dphi_x, pts[p]);
        cplx gs = synth(dphistar_x, pts[p]);
        f[p] = phix[p] * g - std::conj(phix[p]) * gs;
    }
    // to modes, divide by -k^2, back to the grid
    double dv = std::pow(L / N, 3);
    std::vector<cplx> c(pts.size(), 0.0);
    int half = N / 2;
    for (int a = -half + 1; a < half; ++a)
        for (int bb = -half + 1; bb < half; ++bb)
            for (int cc = -half + 1; cc < half; ++cc) {
                if (a == 0 && bb == 0 && cc == 0) continue;
                Vec3 k{2 * pi * a / L, 2 * pi * bb / L, 2 * pi * cc / L};
                cplx mode = 0.0;
                for (std::size_t p = 0; p < pts.size(); ++p) mode += f[p] * std::polar(norm * dv, -dot(k, pts[p]));
                mode /= -norm2(k);
                for (std::size_t p = 0; p < pts.size(); ++p) c[p] += mode * std::polar(norm, dot(k, pts[p]));
            }
    std::vector<cplx> out(b.size(), 0.0);
    for (std::size_t m = 0; m < b.size(); ++m)
        for (std::size_t p = 0; p < pts.size(); ++p)
            out[m] += e * e * phix[p] * c[p] * std::polar(norm * dv, -dot(b.momentum(m), pts[p]));
    return out;
}

} // namespace

TEST_CASE("theory names round trip")
{
    for (auto k : {TheoryKind::SchrodingerFieldBoson, TheoryKind::FreeEM_Bohm, TheoryKind::FreeEM_Valentini,
                   TheoryKind::MassiveSpin1, TheoryKind::ScalarQED, TheoryKind::AbelianHiggs,
                   TheoryKind::HiggsQuadratic, TheoryKind::NonRelParticles, TheoryKind::QuarticDispersion})
        CHECK(theory_kind_from_string(to_string(k)) == k);
    CHECK_THROWS_AS(theory_kind_from_string("yang-mills"), ConfigError);
    CHECK_THROWS(TheoryModel(TheoryKind::QuarticDispersion, {.alpha1 = 0.0, .alpha2 = 1.0}));
    CHECK_NOTHROW(TheoryModel(TheoryKind::QuarticDispersion, {.alpha1 = 0.1, .alpha2 = 1.0}));
    CHECK_THROWS(TheoryModel(TheoryKind::HiggsQuadratic, {.e = 0.0, .mu = 1.0, .lambda = 0.5}, 2 * pi, 1.0));
}

TEST_CASE("vacuum velocity vanishes for every quadratic theory")
{
    std::mt19937_64 rng(1);
    for (auto k : {TheoryKind::SchrodingerFieldBoson, TheoryKind::FreeEM_Bohm, TheoryKind::FreeEM_Valentini,
                   TheoryKind::MassiveSpin1, TheoryKind::HiggsQuadratic}) {
        TheoryModel th(k, {.m = 1.0, .e = 0.3, .mu = 1.0, .lambda = 0.5}, 2 * pi, 1.5);
        WaveFunctional vac = vacuum(th);
        FieldConfiguration c{th.space(), random_vec(th.space()->dimension(), rng)};
        for (double v : guidance_velocity(th, vac, c)) CHECK(v == 0.0);
        for (const auto& o : th.oscillators()) CHECK(o.h >= 0.0);
    }
}

TEST_CASE("vector guidance agrees with the Cartesian kernels")
{
    std::mt19937_64 rng(2);
    for (auto k : {TheoryKind::FreeEM_Bohm, TheoryKind::FreeEM_Valentini, TheoryKind::MassiveSpin1}) {
        TheoryModel th(k, {.m = 0.7}, 2 * pi, 1.5);
        const ModeBasis& b = *th.space()->sectors()[0].basis;
        auto g = random_vec(b.dimension(), rng);
        // Valentini functionals never depend on the longitudinal coordinates
        if (k == TheoryKind::FreeEM_Valentini)
            for (std::size_t j = 0; j < g.size(); ++j)
                if (b.coordinates()[j].pol == 2) g[j] = 0.0;
        std::vector<double> v(g.size());
        guidance_velocity(th, std::vector<double>(g.size(), 0.0), as_phase_gradient(g), v);
        auto ga = b.amplitudes(g);
        auto va = b.amplitudes(v);
        for (std::size_t i = 0; i < b.size(); ++i) {
            auto K = th.cartesian_kernel(0, i);
            for (int r = 0; r < 3; ++r) {
                cplx expect = 0.0;
                for (int c = 0; c < 3; ++c) expect += K[r * 3 + c] * ga[i * 3 + c];
                CHECK(std::abs(va[i * 3 + r] - expect) < 1e-12);
            }
            for (int r = 0; r < 3; ++r)
                for (int c = 0; c < 3; ++c) CHECK(K[r * 3 + c] == K[c * 3 + r]);
        }
        // the velocity satisfies the conjugation pairing, so reality is preserved
        CHECK(b.reality_residual(va) < 1e-14);
    }
}

TEST_CASE("massive spin-1 longitudinal velocity is (1 + k^2/m^2) g")
{
    double m = 0.6;
    TheoryModel th(TheoryKind::MassiveSpin1, {.m = m}, 2 * pi, 1.5);
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    std::vector<cplx> g(b.size() * 3, 0.0);
    std::size_t i = *b.index_of({1, 1, 0});
    cplx s(0.3, -0.8);
    Vec3 k = b.momentum(i);
    double kn = std::sqrt(norm2(k));
    for (int c = 0; c < 3; ++c) {
        g[i * 3 + c] = s * k[c] / kn;
        g[b.partner(i) * 3 + c] = std::conj(s) * (-k[c]) / kn;
    }
    auto gx = b.coordinates_from_amplitudes(g);
    std::vector<double> v(gx.size());
    guidance_velocity(th, std::vector<double>(gx.size(), 0.0), as_phase_gradient(gx), v);
    auto va = b.amplitudes(v);
    for (int c = 0; c < 3; ++c) CHECK(std::abs(va[i * 3 + c] - (1 + norm2(k) / (m * m)) * g[i * 3 + c]) < 1e-12);
}

TEST_CASE("Coulomb term against a real-space evaluation")
{
    double e = 0.8;
    TheoryModel th(TheoryKind::ScalarQED, {.m = 1.0, .e = e}, 2 * pi, 1.0);
    const auto& sec = th.space()->sector("phi");
    const ModeBasis& b = *sec.basis;
    std::mt19937_64 rng(3);
    auto x = random_vec(b.dimension(), rng);
    auto gs = random_vec(b.dimension(), rng);
    std::vector<double> v(b.dimension());
    double mismatch = coulomb_matter_velocity(b, e, x, gs, v);
    CHECK(mismatch < 1e-12);

    std::vector<cplx> phi(b.size()), dstar(b.size()), dphi_field(b.size());
    const double r2 = std::sqrt(2.0);
    for (std::size_t i = 0; i < b.size(); ++i) {
        long iu = b.coordinate_index(i, 0, 0), iv = b.coordinate_index(i, 0, 1);
        phi[i] = cplx(x[iu], x[iv]) / r2;
        dstar[i] = cplx(gs[iu], gs[iv]) / r2;
    }
    // dS/dphi(x) has the conjugate of dS/dphi*(x) as its field
    for (std::size_t i = 0; i < b.size(); ++i) dphi_field[i] = std::conj(dstar[b.partner(i)]);
    auto coul = coulomb_oracle(b, e, phi, dstar, dphi_field);
    for (std::size_t i = 0; i < b.size(); ++i) {
        cplx expect = dstar[i] + coul[i];
        cplx got = cplx(v[b.coordinate_index(i, 0, 0)], v[b.coordinate_index(i, 0, 1)]) / r2;
        CHECK(std::abs(got - expect) < 1e-10);
    }

    // no charge, free matter guidance
    std::vector<double> v0(b.dimension());
    coulomb_matter_velocity(b, 0.0, x, gs, v0);
    for (std::size_t j = 0; j < v0.size(); ++j) CHECK(v0[j] == doctest::Approx(gs[j]).epsilon(1e-15));
}

TEST_CASE("Valentini split and the magnetic field")
{
    ModeBasis b(2 * pi, 1.5, FieldKind::VectorFull, ZeroMode::Exclude);
    std::mt19937_64 rng(4);
    auto x = random_vec(b.dimension(), rng);
    auto a = b.amplitudes(x);
    auto split = valentini_split(b, a);
    auto bt = magnetic_field_modes(b, split.transverse);
    auto ba = magnetic_field_modes(b, a);
    for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(std::abs(split.transverse[i] + split.longitudinal[i] - a[i]) < 1e-14);
        CHECK(std::abs(bt[i] - ba[i]) < 1e-12);
    }
    // A(k) proportional to k has no transverse part
    std::vector<cplx> grad(a.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        Vec3 k = b.momentum(i);
        for (int c = 0; c < 3; ++c) grad[i * 3 + c] = cplx(0.0, k[c]);
    }
    auto s2 = valentini_split(b, grad);
    for (cplx v : s2.transverse) CHECK(std::abs(v) < 1e-14);
    ModeBasis with_zero(2 * pi, 1.5, FieldKind::VectorFull, ZeroMode::Include);
    CHECK_THROWS(valentini_split(with_zero, std::vector<cplx>(with_zero.size() * 3)));

    // Valentini longitudinal velocity is identically zero
    TheoryModel val(TheoryKind::FreeEM_Valentini, {}, 2 * pi, 1.5);
    auto g = random_vec(val.space()->dimension(), rng);
    std::vector<double> v(g.size());
    guidance_velocity(val, g, as_phase_gradient(g), v);
    const ModeBasis& vb = *val.space()->sectors()[0].basis;
    for (std::size_t j = 0; j < v.size(); ++j)
        if (vb.coordinates()[j].pol == 2) CHECK(v[j] == 0.0);
}

TEST_CASE("Higgs quadratic spectrum")
{
    ModeBasis b(2 * pi, 1.5, FieldKind::ScalarReal);
    auto s = higgs_quadratic_spectrum(1.0, 0.5, 0.3, b);
    CHECK(std::abs(s.v - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s.scalar_mass - std::sqrt(2.0)) < 1e-15);
    CHECK(std::abs(s.vector_mass - 0.3 * std::sqrt(2.0)) < 1e-15);
    CHECK(higgs_quadratic_spectrum(1.0, 0.5, 0.0, b).vector_mass == 0.0);
    for (const auto& r : s.scalar)
        if (r.k == 0.0) CHECK(r.omega == s.scalar_mass);
    for (const auto& r : s.vector)
        if (r.k == 0.0) CHECK(r.omega == s.vector_mass);
    CHECK_THROWS(higgs_quadratic_spectrum(1.0, 0.0, 0.3, b));
    CHECK_THROWS(higgs_quadratic_spectrum(1.0, -1.0, 0.3, b));

    // the quadratic theory carries the same dispersion in its oscillators
    TheoryModel q(TheoryKind::HiggsQuadratic, {.e = 0.3, .mu = 1.0, .lambda = 0.5}, 2 * pi, 1.5);
    const auto& osc = q.oscillators();
    for (std::size_t j = 0; j < osc.size(); ++j) {
        auto [sec, local] = q.space()->locate(j);
        const ModeBasis& sb = *q.space()->sectors()[sec].basis;
        double k2 = sb.k2(sb.coordinates()[local].mode);
        double m = sec == 0 ? s.scalar_mass : s.vector_mass;
        CHECK(osc[j].omega == doctest::Approx(std::sqrt(k2 + m * m)).epsilon(1e-14));
    }
}

TEST_CASE("quadratic Higgs guidance is the linearized full guidance")
{
    TheoryParameters p{.e = 0.7, .mu = 1.0, .lambda = 0.5};
    TheoryModel full(TheoryKind::AbelianHiggs, p, 2 * pi, 1.0);
    TheoryModel quad(TheoryKind::HiggsQuadratic, p, 2 * pi, 1.0);
    auto map = higgs_field_map(full, quad);
    CHECK(map.cols == map.rows + 1); // the global phase direction has no image

    std::vector<double> amps{1e-1, 3e-2, 1e-2, 3e-3, 1e-3, 3e-4};
    auto probes = higgs_linearization_scan(full, quad, amps, 42);
    // least-squares slope of log error against log amplitude
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& r : probes) {
        double lx = std::log(r.amplitude), ly = std::log(r.relative_error);
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    double n = double(probes.size());
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope == doctest::Approx(1.0).epsilon(0.05));
    CHECK(probes.back().relative_error < 1e-2);
}
