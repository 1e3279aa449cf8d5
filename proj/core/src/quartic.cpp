#include "pwf/quartic.hpp"

#include "pwf/dynamics.hpp"
#include "pwf/rng.hpp"
#include "pwf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pwf {

GridWavefunction gaussian_packet(const GridSpec& spec, double center, double sigma, double momentum)
{
    if (spec.dim != 1) throw std::invalid_argument("packet lives on a 1-D grid");
    if (!(sigma > 0)) throw std::invalid_argument("packet width must be positive");
    GridWavefunction w{spec, std::vector<cplx>(spec.size())};
    for (int i = 0; i < spec.n[0]; ++i) {
        double x = spec.coordinate(0, i);
        w.psi[i] = std::exp(-(x - center) * (x - center) / (4 * sigma * sigma)) * std::polar(1.0, momentum * x);
    }
    w.normalize();
    return w;
}

double grid_ks_statistic(const GridSpec& spec, const std::vector<double>& density, std::vector<double> x)
{
    if (spec.dim != 1 || density.size() != spec.size()) throw std::invalid_argument("1-D grid density expected");
    std::size_t n = density.size();
    double h = spec.spacing(0);
    // cumulative on nodes lower, lower + h, ..., lower + L (periodic closure)
    std::vector<double> cum(n + 1, 0.0);
    for (std::size_t i = 0; i < n; ++i) cum[i + 1] = cum[i] + 0.5 * h * (density[i] + density[(i + 1) % n]);
    double total = cum.back();
    for (auto& c : cum) c /= total;
    double lo = spec.lower[0];
    auto cdf = [&](double y) {
        double s = (y - lo) / h;
        if (s <= 0) return 0.0;
        if (s >= double(n)) return 1.0;
        std::size_t i = std::size_t(s);
        double f = s - double(i);
        return cum[i] + f * (cum[i + 1] - cum[i]);
    };
    return ks_statistic(std::move(x), cdf);
}

double continuity_residual(const GridHamiltonian& h, const GridWavefunction& psi, double dt)
{
    auto rp = grid_density(free_evolve(h, psi, dt)), rm = grid_density(free_evolve(h, psi, -dt));
    auto j = grid_current(psi, h);
    std::vector<cplx> jc(j.begin(), j.end());
    auto dj = spectral_derivative(psi.spec, jc, 0, 1);
    double res = 0, scale = 0;
    for (std::size_t i = 0; i < j.size(); ++i) {
        res = std::max(res, std::abs((rp[i] - rm[i]) / (2 * dt) + dj[i].real()));
        scale = std::max(scale, std::abs(dj[i].real()));
    }
    return scale > 0 ? res / scale : res;
}

namespace {

enum class Law { Correct, Naive };

GridVelocity velocity_at(const GridHamiltonian& h, const GridWavefunction& psi0, double t, Law law)
{
    auto psi = free_evolve(h, psi0, t);
    auto v = law == Law::Correct ? correct_velocity(psi, h) : naive_hj_velocity(psi, h);
    return GridVelocity(psi.spec, {std::move(v)}, grid_density(psi));
}

// Lockstep RK4 for the whole ensemble so each velocity field is built once per stage time.
void transport(const GridHamiltonian& h, const GridWavefunction& psi0, Law law, std::vector<double>& x,
               std::vector<std::uint8_t>& flagged, double t0, double t1, std::size_t steps)
{
    double dt = (t1 - t0) / double(steps);
    std::size_t n = x.size();
    std::vector<double> k1(n), k2(n), k3(n), k4(n), y(n);
    auto eval = [&](const GridVelocity& g, const std::vector<double>& at, std::vector<double>& k) {
        for (std::size_t i = 0; i < n; ++i) {
            if (flagged[i]) {
                k[i] = 0;
                continue;
            }
            double v;
            try {
                g(std::span<const double>(&at[i], 1), std::span<double>(&v, 1));
            } catch (const DegeneratePoint&) {
                flagged[i] = 1;
                v = 0;
            }
            k[i] = std::isfinite(v) ? v : (flagged[i] = 1, 0.0);
        }
    };
    GridVelocity g0 = velocity_at(h, psi0, t0, law);
    for (std::size_t s = 0; s < steps; ++s) {
        double t = t0 + dt * double(s);
        GridVelocity gm = velocity_at(h, psi0, t + 0.5 * dt, law);
        GridVelocity g1 = velocity_at(h, psi0, t + dt, law);
        eval(g0, x, k1);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * dt * k1[i];
        eval(gm, y, k2);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + 0.5 * dt * k2[i];
        eval(gm, y, k3);
        for (std::size_t i = 0; i < n; ++i) y[i] = x[i] + dt * k3[i];
        eval(g1, y, k4);
        for (std::size_t i = 0; i < n; ++i)
            if (!flagged[i]) x[i] += dt / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
        g0 = std::move(g1);
    }
}

std::vector<double> unflagged(const std::vector<double>& x, const std::vector<std::uint8_t>& flagged)
{
    std::vector<double> out;
    for (std::size_t i = 0; i < x.size(); ++i)
        if (!flagged[i]) out.push_back(x[i]);
    return out;
}

} // namespace

QuarticExperimentResult run_quartic_experiment(const QuarticExperimentOptions& o)
{
    if (o.checkpoints < 1 || o.samples < 1 || o.steps < std::size_t(o.checkpoints) ||
        o.steps % std::size_t(o.checkpoints) != 0)
        throw std::invalid_argument("steps must be a positive multiple of the checkpoint count");
    GridSpec spec = GridSpec::line(o.points, o.center - o.box / 2, o.box);
    GridHamiltonian h = GridHamiltonian::quartic(o.alpha1, o.alpha2);
    GridWavefunction psi0 = gaussian_packet(spec, o.center, o.sigma, o.momentum);

    QuarticExperimentResult r;
    r.critical = ks_critical(o.samples, o.alpha / double(o.checkpoints));

    auto rng = SeedTree(o.seed).engine("quartic-initial");
    std::normal_distribution<double> nd(o.center, o.sigma);
    std::vector<double> x0(o.samples);
    for (auto& v : x0) v = nd(rng);
    r.ks_initial = grid_ks_statistic(spec, grid_density(psi0), x0);

    std::vector<double> xc = x0, xn = x0;
    std::vector<std::uint8_t> fc(o.samples, 0), fn(o.samples, 0);
    std::size_t per = o.steps / std::size_t(o.checkpoints);
    for (int k = 1; k <= o.checkpoints; ++k) {
        double ta = o.final_time * (k - 1) / o.checkpoints, tb = o.final_time * k / o.checkpoints;
        transport(h, psi0, Law::Correct, xc, fc, ta, tb, per);
        transport(h, psi0, Law::Naive, xn, fn, ta, tb, per);
        auto rho = grid_density(free_evolve(h, psi0, tb));
        r.times.push_back(tb);
        r.ks_correct.push_back(grid_ks_statistic(spec, rho, unflagged(xc, fc)));
        r.ks_naive.push_back(grid_ks_statistic(spec, rho, unflagged(xn, fn)));
    }
    r.flagged_correct = std::count(fc.begin(), fc.end(), std::uint8_t(1));
    r.flagged_naive = std::count(fn.begin(), fn.end(), std::uint8_t(1));
    r.correct_passes = std::all_of(r.ks_correct.begin(), r.ks_correct.end(), [&](double d) { return d < r.critical; });
    r.naive_fails_final = r.ks_naive.back() > r.critical;

    for (int m : {-7, -3, -1, 1, 2, 5, 11}) {
        GridWavefunction w{spec, std::vector<cplx>(spec.size())};
        double k = 2 * pi * m / o.box;
        for (int i = 0; i < o.points; ++i) w.psi[i] = std::polar(1.0, k * spec.coordinate(0, i));
        w.normalize();
        auto a = naive_hj_velocity(w, h), b = correct_velocity(w, h);
        for (std::size_t i = 0; i < a.size(); ++i) r.plane_wave_difference = std::max(r.plane_wave_difference, std::abs(a[i] - b[i]));
    }

    GridStepLog log;
    grid_evolve(h, psi0, o.final_time / double(o.steps), o.steps, Splitting::Strang, &log);
    r.max_norm_drift = log.max_norm_drift;
    r.continuity_residual = continuity_residual(h, free_evolve(h, psi0, 0.5 * o.final_time));
    return r;
}

} // namespace pwf
