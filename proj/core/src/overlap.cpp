#include "pwf/overlap.hpp"

#include "pwf/ensemble.hpp"
#include "pwf/holland.hpp"
#include "pwf/rng.hpp"
#include "pwf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pwf {

namespace {

constexpr double neg_inf = -std::numeric_limits<double>::infinity();

// log of the normalized density; -inf at a node
double log_density(const WaveFunctional& f, double log_norm, std::span<const double> x)
{
    try {
        return 2.0 * log_psi(f, x).real() - log_norm;
    } catch (const DegeneratePoint&) {
        return neg_inf;
    }
}

// sqrt(p q) / ((p + q) / 2) and min(p, q) / ((p + q) / 2) from d = log p - log q
void weights(double la, double lb, double& bc, double& mn)
{
    if (la == neg_inf || lb == neg_inf) {
        bc = mn = 0.0;
        return;
    }
    double e = std::exp(-std::abs(la - lb));
    bc = 2.0 * std::sqrt(e) / (1.0 + e);
    mn = 2.0 * e / (1.0 + e);
}

} // namespace

OverlapReport density_overlap(const WaveFunctional& a, const WaveFunctional& b, std::size_t n, std::uint64_t seed,
                              OverlapEstimator estimator, double ess_floor)
{
    if (n < 4) throw std::invalid_argument("overlap needs at least four samples");
    if (!a.space()->same_layout(*b.space())) throw std::invalid_argument("functionals live on different spaces");
    const double na = std::log(norm_squared(a)), nb = std::log(norm_squared(b));
    SeedTree tree(seed);
    Ensemble ea = sample_equilibrium(a, n / 2, tree.derive("overlap-a"));
    Ensemble eb = sample_equilibrium(b, n - n / 2, tree.derive("overlap-b"));

    std::vector<double> bc[2], mn[2];
    double sum = 0, sum2 = 0;
    const Ensemble* ens[2] = {&ea, &eb};
    for (int s = 0; s < 2; ++s) {
        const Ensemble& e = *ens[s];
        bc[s].resize(e.size());
        mn[s].resize(e.size());
        for (std::size_t i = 0; i < e.size(); ++i) {
            auto x = e.member(i);
            weights(log_density(a, na, x), log_density(b, nb, x), bc[s][i], mn[s][i]);
            double g = estimator == OverlapEstimator::Bhattacharyya ? bc[s][i] : mn[s][i];
            sum += g;
            sum2 += g * g;
        }
    }
    auto combine = [](const std::vector<double>* v, double& est, double& err) {
        auto m1 = moments(v[0]), m2 = moments(v[1]);
        est = 0.5 * (m1.mean + m2.mean);
        err = 0.5 * std::hypot(m1.standard_error, m2.standard_error);
    };
    OverlapReport r;
    r.estimator = estimator;
    r.samples = ea.size() + eb.size();
    combine(bc, r.bhattacharyya, r.bhattacharyya_error);
    combine(mn, r.min_overlap, r.min_overlap_error);
    bool use_bc = estimator == OverlapEstimator::Bhattacharyya;
    r.estimate = use_bc ? r.bhattacharyya : r.min_overlap;
    r.error = use_bc ? r.bhattacharyya_error : r.min_overlap_error;
    r.effective_samples = sum2 > 0 ? sum * sum / sum2 : 0.0;
    if (r.effective_samples < ess_floor) {
        r.flagged = true;
        r.message = "effective sample size " + std::to_string(r.effective_samples) + " below floor";
    }
    for (const Ensemble* e : ens)
        if (e->provenance.flagged) {
            r.flagged = true;
            r.message += (r.message.empty() ? "" : "; ") + e->provenance.message;
        }
    return r;
}

double gaussian_bhattacharyya(const GaussianFunctional& a, const GaussianFunctional& b)
{
    if (a.dimension() != b.dimension()) throw std::invalid_argument("dimension mismatch");
    double log_bc = 0;
    for (std::size_t j = 0; j < a.dimension(); ++j) {
        if (!a.active[j] && !b.active[j]) continue;
        if (a.active[j] != b.active[j]) throw std::invalid_argument("active coordinates differ");
        double s1 = 1.0 / (2.0 * a.width[j].real()), s2 = 1.0 / (2.0 * b.width[j].real()); // variances
        double dm = a.center[j] - b.center[j];
        log_bc += 0.5 * std::log(2.0 * std::sqrt(s1 * s2) / (s1 + s2)) - dm * dm / (4.0 * (s1 + s2));
    }
    return std::exp(log_bc);
}

OneParticleMaxima one_particle_maxima(const TheoryModel& theory, const ModeCoefficients& psi, std::size_t starts,
                                      std::uint64_t seed)
{
    WaveFunctional one = one_particle(theory, psi);
    WaveFunctional vac = vacuum(theory);
    const auto& osc = theory.oscillators();
    const std::size_t d = one.dimension();
    std::vector<double> scale(d, 0.0); // sqrt(lambda) on active coordinates
    for (std::size_t j = 0; j < d; ++j)
        if (osc[j].active) scale[j] = std::sqrt(osc[j].width);

    auto rng = SeedTree(seed).engine("maxima");
    std::normal_distribution<double> gauss;

    // Psi_1 / Psi_0 = b . x up to a constant; b_j from differences at a generic base point
    std::vector<double> base(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        if (scale[j] > 0) base[j] = gauss(rng) / scale[j];
    auto ratio = [&](std::span<const double> x) { return std::exp(log_psi(one, x) - log_psi(vac, x)); };
    cplx r0 = ratio(base);
    std::vector<double> re_b(d, 0.0), im_b(d, 0.0);
    for (std::size_t j = 0; j < d; ++j) {
        if (scale[j] == 0) continue;
        auto x = base;
        x[j] += 1.0 / scale[j]; // whitened unit step
        cplx bj = ratio(x) - r0;
        re_b[j] = bj.real();
        im_b[j] = bj.imag();
    }
    // orthonormal basis of span{Re b~, Im b~}
    auto dotv = [&](const std::vector<double>& u, const std::vector<double>& v) {
        double s = 0;
        for (std::size_t j = 0; j < d; ++j) s += u[j] * v[j];
        return s;
    };
    std::vector<std::vector<double>> basis;
    for (auto v : {re_b, im_b}) {
        for (const auto& e : basis) {
            double c = dotv(v, e);
            for (std::size_t j = 0; j < d; ++j) v[j] -= c * e[j];
        }
        double nv = std::sqrt(dotv(v, v));
        if (nv > 1e-12 * std::sqrt(dotv(re_b, re_b) + dotv(im_b, im_b))) {
            for (auto& c : v) c /= nv;
            basis.push_back(v);
        }
    }
    auto off_span = [&](const std::vector<double>& y) {
        auto r = y;
        for (const auto& e : basis) {
            double c = dotv(y, e);
            for (std::size_t j = 0; j < d; ++j) r[j] -= c * e[j];
        }
        return std::sqrt(dotv(r, r) / std::max(dotv(y, y), 1e-300));
    };

    OneParticleMaxima out;
    std::vector<cplx> grad(d);
    auto objective = [&](const std::vector<double>& y, std::vector<double>* gy) {
        std::vector<double> x(d, 0.0);
        for (std::size_t j = 0; j < d; ++j)
            if (scale[j] > 0) x[j] = y[j] / scale[j];
        try {
            double v = 2.0 * log_psi_gradient(one, x, grad).real();
            if (gy)
                for (std::size_t j = 0; j < d; ++j) (*gy)[j] = scale[j] > 0 ? 2.0 * grad[j].real() / scale[j] : 0.0;
            return v;
        } catch (const DegeneratePoint&) {
            return neg_inf;
        }
    };
    for (std::size_t s = 0; s < starts; ++s) {
        std::vector<double> y(d, 0.0), g(d), trial(d), gt(d);
        for (std::size_t j = 0; j < d; ++j)
            if (scale[j] > 0) y[j] = gauss(rng) / std::sqrt(2.0);
        double f = objective(y, &g);
        double step = 0.25;
        bool ok = false;
        double gnorm = 0;
        for (int it = 0; it < 20000 && f > neg_inf; ++it) {
            gnorm = std::sqrt(dotv(g, g));
            if (gnorm < 1e-11) {
                ok = true;
                break;
            }
            // backtracking line search along the gradient (Armijo)
            // whitened curvature at a maximum is at most 4 in magnitude, so 1/4 is a safe full step
            double t = std::min(0.25, step * 2.0);
            double ft = neg_inf;
            for (int k = 0; k < 60; ++k) {
                for (std::size_t j = 0; j < d; ++j) trial[j] = y[j] + t * g[j];
                ft = objective(trial, &gt);
                if (ft >= f + 1e-4 * t * gnorm * gnorm) break;
                // near the top the objective is flat to round-off; accept steps that shrink the gradient
                if (ft >= f - 1e-13 * (1.0 + std::abs(f)) && std::sqrt(dotv(gt, gt)) < 0.5 * gnorm) break;
                t *= 0.5;
            }
            if (!(ft >= f - 1e-13 * (1.0 + std::abs(f)))) break;
            step = t;
            y.swap(trial);
            g.swap(gt);
            f = ft;
        }
        out.converged.push_back(ok ? 1 : 0);
        out.gradient_residual.push_back(gnorm);
        out.span_residual.push_back(off_span(y));
        std::vector<double> x(d, 0.0);
        for (std::size_t j = 0; j < d; ++j)
            if (scale[j] > 0) x[j] = y[j] / scale[j];
        if (ok) out.points.push_back(std::move(x));
    }

    // density on the zero set of b . x, relative to the largest value found at the maxima
    double best = 0;
    for (const auto& x : out.points) best = std::max(best, std::exp(2.0 * log_psi(one, x).real()));
    for (int t = 0; t < 64; ++t) {
        std::vector<double> y(d, 0.0);
        for (std::size_t j = 0; j < d; ++j)
            if (scale[j] > 0) y[j] = gauss(rng) / std::sqrt(2.0);
        for (const auto& e : basis) {
            double c = dotv(y, e);
            for (std::size_t j = 0; j < d; ++j) y[j] -= c * e[j];
        }
        double v = objective(y, nullptr);
        double dens = v == neg_inf ? 0.0 : std::exp(v);
        out.zero_plane_density = std::max(out.zero_plane_density, best > 0 ? dens / best : dens);
    }
    return out;
}

namespace {

ScanResult fit_scan(ScanResult r)
{
    std::vector<double> ns, ls;
    for (const auto& row : r.rows)
        if (row.overlap > 0) {
            ns.push_back(row.n);
            ls.push_back(std::log(row.overlap));
        }
    if (ns.size() >= 2) {
        auto f = fit_line(ns, ls);
        r.slope = f.slope;
        r.intercept = f.intercept;
        r.r2 = f.r2;
    }
    return r;
}

} // namespace

ScanResult n_particle_overlap_scan(const std::string& family, int n_min, int n_max, std::size_t samples,
                                   std::uint64_t seed)
{
    if (n_min < 1 || n_max < n_min) throw std::invalid_argument("need 1 <= n_min <= n_max");
    ScanResult r;
    r.family = family;
    SeedTree tree(seed);
    if (family == "holland") {
        for (int n = n_min; n <= n_max; ++n) {
            auto o = holland_overlap_mc(n, samples, tree.derive("holland", std::uint64_t(n)));
            r.rows.push_back({n, o.estimate, o.error, std::pow(holland_site_overlap(), n)});
        }
        return fit_scan(std::move(r));
    }
    if (family != "excitation") throw std::invalid_argument("unknown overlap family: " + family);
    TheoryModel th(TheoryKind::SchrodingerFieldBoson, {}, 2 * pi, 2.0);
    const ModeBasis& b = *th.space()->sectors()[0].basis;
    std::vector<ModeKey> modes;
    for (std::size_t i = 0; i < b.size(); ++i)
        if (b.representative(i) && b.partner(i) != i) modes.push_back(ModeKey{0, b.lattice(i), 0});
    if (n_max > int(modes.size()) || n_max > max_particle_number)
        throw std::invalid_argument("not enough distinct modes for the requested particle number");
    WaveFunctional vac = vacuum(th);
    for (int n = n_min; n <= n_max; ++n) {
        ModeTensor t{n, {{std::vector<ModeKey>(modes.begin(), modes.begin() + n), 1.0}}};
        WaveFunctional ex = n_particle(th, t);
        auto o = density_overlap(ex, vac, samples, tree.derive("excitation", std::uint64_t(n)));
        // one quantum in a complex amplitude against the vacuum: integral of r e^{-r^2} 2r dr
        r.rows.push_back({n, o.estimate, o.error, std::pow(std::sqrt(pi) / 2.0, n)});
    }
    return fit_scan(std::move(r));
}

} // namespace pwf
