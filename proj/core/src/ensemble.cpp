#include "pwf/ensemble.hpp"

#include "pwf/parallel.hpp"
#include "pwf/rng.hpp"
#include "pwf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace pwf {

std::vector<double> Ensemble::column(std::size_t j) const
{
    if (j >= dim) throw std::out_of_range("coordinate out of range");
    std::vector<double> c(size());
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = data[i * dim + j];
    return c;
}

std::vector<double> Ensemble::project(std::span<const double> u) const
{
    if (u.size() != dim) throw std::invalid_argument("direction does not match the ensemble");
    std::vector<double> p(size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i)
        for (std::size_t j = 0; j < dim; ++j)
            if (u[j] != 0.0) p[i] += u[j] * data[i * dim + j];
    return p;
}

std::vector<std::uint8_t> active_coordinates(const WaveFunctional& f)
{
    if (const auto* g = std::get_if<GaussianFunctional>(&f.v)) return g->active;
    if (const auto* e = std::get_if<ExcitedFunctional>(&f.v)) return e->vacuum.active;
    const auto& s = std::get<SuperpositionFunctional>(f.v);
    std::vector<std::uint8_t> a(f.dimension(), 0);
    for (const auto& c : s.components) {
        auto ac = active_coordinates(c);
        for (std::size_t j = 0; j < a.size(); ++j) a[j] |= ac[j];
    }
    return a;
}

namespace {

const double neg_inf = -std::numeric_limits<double>::infinity();

double log_density(const WaveFunctional& f, std::span<const double> x)
{
    try {
        return 2.0 * log_psi(f, x).real();
    } catch (const DegeneratePoint&) {
        return neg_inf;
    }
}

struct GaussComponent {
    std::vector<double> mean, sd;
};

void build_proposal(const WaveFunctional& f, std::vector<GaussComponent>& out)
{
    // tails heavier than the target where it is not Gaussian; exact widths elsewhere keep
    // independence moves efficient in many dimensions
    const double inflate = 1.2;
    if (const auto* g = std::get_if<GaussianFunctional>(&f.v)) {
        GaussComponent c{g->center, std::vector<double>(g->dimension(), 0.0)};
        for (std::size_t j = 0; j < c.sd.size(); ++j)
            if (g->active[j]) c.sd[j] = 1.1 / std::sqrt(2.0 * g->width[j].real());
        out.push_back(std::move(c));
    } else if (const auto* e = std::get_if<ExcitedFunctional>(&f.v)) {
        const auto& vac = e->vacuum;
        const auto& p = e->poly;
        // mean occupation per coordinate, treating the Hermite products as orthonormal
        std::vector<double> occ(vac.dimension(), 0.0);
        double total = 0;
        for (std::size_t t = 0; t < p.terms(); ++t) {
            double w = std::norm(p.coeff[t]);
            total += w;
            for (std::uint32_t k = p.start[t]; k < p.start[t + 1]; ++k) occ[p.coord[k]] += w * p.power[k];
        }
        GaussComponent c{vac.center, std::vector<double>(vac.dimension(), 0.0)};
        for (std::size_t j = 0; j < c.sd.size(); ++j) {
            if (!vac.active[j]) continue;
            double n = total > 0 ? occ[j] / total : 0.0;
            c.sd[j] = (n > 0 ? inflate : 1.0) * std::sqrt((1.0 + 2.0 * n) / (2.0 * vac.width[j].real()));
        }
        out.push_back(std::move(c));
    } else {
        for (const auto& c : std::get<SuperpositionFunctional>(f.v).components) build_proposal(c, out);
    }
}

// Coordinates on which |Psi|^2 carries the same Gaussian factor in every component; these
// are drawn exactly and kept out of the Markov chain.
struct FreeFactor {
    std::vector<std::uint8_t> free;
    std::vector<double> mean, sd;
};

bool same_factor(const GaussianFunctional& a, const GaussianFunctional& b, std::size_t j)
{
    return a.active[j] && b.active[j] && a.width[j] == b.width[j] && a.center[j] == b.center[j] &&
           a.momentum[j] == b.momentum[j];
}

const GaussianFunctional* untouched_factor(const WaveFunctional& f, std::size_t j)
{
    if (const auto* g = std::get_if<GaussianFunctional>(&f.v)) return g->active[j] ? g : nullptr;
    if (const auto* e = std::get_if<ExcitedFunctional>(&f.v))
        return e->vacuum.active[j] && e->poly.slot[j] < 0 ? &e->vacuum : nullptr;
    const GaussianFunctional* first = nullptr;
    for (const auto& c : std::get<SuperpositionFunctional>(f.v).components) {
        const auto* g = untouched_factor(c, j);
        if (!g || (first && !same_factor(*first, *g, j))) return nullptr;
        if (!first) first = g;
    }
    return first;
}

FreeFactor free_factor(const WaveFunctional& f)
{
    std::size_t d = f.dimension();
    FreeFactor ff{std::vector<std::uint8_t>(d, 0), std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
    for (std::size_t j = 0; j < d; ++j)
        if (const auto* g = untouched_factor(f, j)) {
            ff.free[j] = 1;
            ff.mean[j] = g->center[j];
            ff.sd[j] = 1.0 / std::sqrt(2.0 * g->width[j].real());
        }
    return ff;
}

struct Proposal {
    std::vector<GaussComponent> comps;

    void draw(std::mt19937_64& rng, std::span<double> x) const
    {
        std::uniform_int_distribution<std::size_t> pick(0, comps.size() - 1);
        std::normal_distribution<double> n;
        const auto& c = comps[pick(rng)];
        for (std::size_t j = 0; j < x.size(); ++j) x[j] = c.sd[j] > 0 ? c.mean[j] + c.sd[j] * n(rng) : c.mean[j];
    }
    double log_q(std::span<const double> x) const
    {
        double best = neg_inf;
        std::vector<double> l(comps.size());
        for (std::size_t k = 0; k < comps.size(); ++k) {
            double s = 0;
            for (std::size_t j = 0; j < x.size(); ++j) {
                double sd = comps[k].sd[j];
                if (sd <= 0) continue;
                double z = (x[j] - comps[k].mean[j]) / sd;
                s += -0.5 * z * z - std::log(sd);
            }
            l[k] = s;
            best = std::max(best, s);
        }
        double acc = 0;
        for (double v : l) acc += std::exp(v - best);
        return best + std::log(acc);
    }
};

Ensemble sample_gaussian(const GaussianFunctional& g, std::size_t n, std::uint64_t seed)
{
    Ensemble e;
    e.space = g.space;
    e.dim = g.dimension();
    e.time = g.time;
    e.data.assign(n * e.dim, 0.0);
    std::vector<double> sd(e.dim, 0.0);
    for (std::size_t j = 0; j < e.dim; ++j)
        if (g.active[j]) sd[j] = 1.0 / std::sqrt(2.0 * g.width[j].real());
    auto rng = SeedTree(seed).engine("exact-gaussian");
    std::normal_distribution<double> nd;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < e.dim; ++j)
            if (sd[j] > 0) e.data[i * e.dim + j] = g.center[j] + sd[j] * nd(rng);
    e.provenance.method = "exact-gaussian";
    e.provenance.seed = seed;
    return e;
}

Ensemble sample_mcmc(const WaveFunctional& f, std::size_t n, std::uint64_t seed, const SamplerOptions& opt)
{
    if (opt.chains == 0 || opt.thinning == 0) throw std::invalid_argument("sampler needs chains and thinning");
    Proposal prop;
    build_proposal(f, prop.comps);
    std::size_t d = f.dimension();
    auto active = active_coordinates(f);
    FreeFactor ff = free_factor(f);
    if (opt.force_mcmc) std::fill(ff.free.begin(), ff.free.end(), std::uint8_t(0));
    // the chain runs on the remaining coordinates; free ones stay at their factor mean
    for (auto& c : prop.comps)
        for (std::size_t j = 0; j < d; ++j)
            if (ff.free[j]) {
                c.sd[j] = 0.0;
                c.mean[j] = ff.mean[j];
            }
    for (std::size_t j = 0; j < d; ++j)
        if (ff.free[j]) active[j] = 0;
    std::size_t d_active = std::count(active.begin(), active.end(), std::uint8_t(1));
    std::vector<double> step(d, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        step[j] = prop.comps.front().sd[j] * 2.38 / std::sqrt(double(std::max<std::size_t>(d_active, 1)));

    std::size_t C = std::min(opt.chains, n);
    std::size_t per = (n + C - 1) / C;
    std::vector<std::vector<double>> samples(C), traces(C * (d + 1));
    std::vector<std::size_t> accepted(C, 0), moves(C, 0);
    SeedTree tree(seed);

    parallel_for(C, [&](std::size_t c) {
        auto rng = tree.engine("metropolis-chain", c);
        std::uniform_real_distribution<double> u01;
        std::normal_distribution<double> nd;
        std::vector<double> x(d), y(d);
        double lp = neg_inf;
        for (int tries = 0; tries < 10000 && !std::isfinite(lp); ++tries) {
            prop.draw(rng, x);
            lp = log_density(f, x);
        }
        if (!std::isfinite(lp)) throw std::runtime_error("sampler could not find a point of positive density");
        double lq = prop.log_q(x);
        std::size_t total = opt.burn_in + per * opt.thinning;
        samples[c].reserve(per * d);
        for (std::size_t it = 0; it < total; ++it) {
            bool indep = u01(rng) < opt.independence_fraction;
            double lqy = 0.0;
            if (indep) {
                prop.draw(rng, y);
                lqy = prop.log_q(y);
            } else {
                for (std::size_t j = 0; j < d; ++j) y[j] = x[j] + step[j] * nd(rng);
            }
            double lpy = log_density(f, y);
            double log_ratio = lpy - lp + (indep ? lq - lqy : 0.0);
            ++moves[c];
            if (std::isfinite(lpy) && std::log(u01(rng)) < log_ratio) {
                std::swap(x, y);
                lp = lpy;
                lq = indep ? lqy : prop.log_q(x);
                ++accepted[c];
            }
            if (it >= opt.burn_in && (it - opt.burn_in) % opt.thinning == opt.thinning - 1) {
                samples[c].insert(samples[c].end(), x.begin(), x.end());
                for (std::size_t j = 0; j < d; ++j) traces[c * (d + 1) + j].push_back(x[j]);
                traces[c * (d + 1) + d].push_back(lp);
            }
        }
    });

    Ensemble e;
    e.space = f.space();
    e.dim = d;
    e.time = f.time();
    e.data.reserve(n * d);
    for (std::size_t c = 0; c < C && e.data.size() < n * d; ++c) {
        std::size_t take = std::min(samples[c].size(), n * d - e.data.size());
        e.data.insert(e.data.end(), samples[c].begin(), samples[c].begin() + take);
    }
    if (std::any_of(ff.free.begin(), ff.free.end(), [](std::uint8_t v) { return v != 0; })) {
        auto rng = SeedTree(seed).engine("exact-gaussian-factor");
        std::normal_distribution<double> nd;
        for (std::size_t i = 0; i < e.data.size() / d; ++i)
            for (std::size_t j = 0; j < d; ++j)
                if (ff.free[j]) e.data[i * d + j] = ff.mean[j] + ff.sd[j] * nd(rng);
    }
    double rhat = 1.0;
    if (per >= 4 && C >= 1) {
        for (std::size_t j = 0; j <= d; ++j) {
            if (j < d && !active[j]) continue;
            std::vector<std::vector<double>> chains;
            for (std::size_t c = 0; c < C; ++c) chains.push_back(traces[c * (d + 1) + j]);
            double r = split_rhat(chains);
            if (std::isfinite(r)) rhat = std::max(rhat, r);
        }
    }
    std::size_t acc = 0, mv = 0;
    for (std::size_t c = 0; c < C; ++c) {
        acc += accepted[c];
        mv += moves[c];
    }
    auto& p = e.provenance;
    p.method = "metropolis";
    p.seed = seed;
    p.acceptance_rate = mv ? double(acc) / double(mv) : 0.0;
    p.rhat = rhat;
    p.chains = C;
    p.burn_in = opt.burn_in;
    p.thinning = opt.thinning;
    if (rhat > opt.rhat_limit) {
        p.flagged = true;
        p.message = "split R-hat above limit";
    }
    return e;
}

} // namespace

Ensemble sample_equilibrium(const WaveFunctional& f, std::size_t n, std::uint64_t seed, const SamplerOptions& options)
{
    if (n < 1) throw std::invalid_argument("ensemble needs at least one member");
    if (const auto* g = std::get_if<GaussianFunctional>(&f.v); g && !options.force_mcmc)
        return sample_gaussian(*g, n, seed);
    return sample_mcmc(f, n, seed, options);
}

EnsembleEvolution evolve_ensemble(const Ensemble& start, const TheoryModel& theory, const EvolvingFunctional& psi,
                                  std::span<const double> times, const EvolveOptions& options)
{
    if (times.empty() || times.front() != start.time)
        throw std::invalid_argument("evolution must start at the ensemble time");
    if (!start.space || !start.space->same_layout(*theory.space()))
        throw std::invalid_argument("ensemble does not match the theory");
    std::size_t n = start.size(), d = start.dim, T = times.size();
    std::vector<std::vector<double>> out(T, std::vector<double>(n * d));
    std::vector<TrajectoryStats> stats(n);
    parallel_for(n, [&](std::size_t i) {
        FieldConfiguration c{start.space, std::vector<double>(start.member(i).begin(), start.member(i).end())};
        auto tr = integrate_trajectory(theory, psi, c, times, options.tolerances);
        stats[i] = tr.stats;
        for (std::size_t k = 0; k < tr.states.size(); ++k) std::copy(tr.states[k].begin(), tr.states[k].end(), out[k].begin() + i * d);
    });

    EnsembleEvolution ev;
    for (std::size_t i = 0; i < n; ++i) {
        ev.steps += stats[i].steps;
        ev.rejections += stats[i].rejections;
        ev.degenerate_events += stats[i].degenerate_events;
        ev.projection_residual = std::max(ev.projection_residual, stats[i].projection_residual);
        if (stats[i].flagged) ++ev.flagged;
        else ev.kept.push_back(i);
    }
    for (std::size_t k = 0; k < T; ++k) {
        Ensemble e;
        e.space = start.space;
        e.dim = d;
        e.time = times[k];
        e.provenance = start.provenance;
        e.data.reserve(ev.kept.size() * d);
        for (std::size_t i : ev.kept) e.data.insert(e.data.end(), out[k].begin() + i * d, out[k].begin() + (i + 1) * d);
        ev.checkpoints.push_back(std::move(e));
    }
    if (double(ev.flagged) > options.max_flagged_fraction * double(n)) {
        ev.failed = true;
        ev.message = std::to_string(ev.flagged) + " of " + std::to_string(n) + " trajectories hit the node floor";
    }
    return ev;
}

std::vector<Marginal> standard_marginals(const WaveFunctional& f, std::size_t projections, std::uint64_t seed)
{
    auto active = active_coordinates(f);
    std::size_t d = active.size();
    std::vector<Marginal> m;
    for (std::size_t j = 0; j < d; ++j) {
        if (!active[j]) continue;
        Marginal g{"x" + std::to_string(j), std::vector<double>(d, 0.0)};
        g.direction[j] = 1.0;
        m.push_back(std::move(g));
    }
    auto rng = SeedTree(seed).engine("projections");
    std::normal_distribution<double> nd;
    for (std::size_t p = 0; p < projections; ++p) {
        Marginal g{"projection" + std::to_string(p), std::vector<double>(d, 0.0)};
        double s = 0;
        for (std::size_t j = 0; j < d; ++j)
            if (active[j]) {
                g.direction[j] = nd(rng);
                s += g.direction[j] * g.direction[j];
            }
        if (s == 0) break;
        for (auto& v : g.direction) v /= std::sqrt(s);
        m.push_back(std::move(g));
    }
    return m;
}

namespace {

struct MarginalModel {
    std::function<double(double)> cdf;
    double mean = 0.0;
    double sd = 1.0;
};

bool touches_inactive(const std::vector<std::uint8_t>& active, std::span<const double> u)
{
    for (std::size_t j = 0; j < u.size(); ++j)
        if (u[j] != 0.0 && !active[j]) return true;
    return false;
}

std::optional<MarginalModel> gaussian_model(const GaussianFunctional& g, std::span<const double> u)
{
    if (touches_inactive(g.active, u)) return std::nullopt;
    double mean = 0, var = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        if (u[j] == 0.0) continue;
        mean += u[j] * g.center[j];
        var += u[j] * u[j] / (2.0 * g.width[j].real());
    }
    if (!(var > 0)) return std::nullopt;
    double sd = std::sqrt(var);
    return MarginalModel{[mean, sd](double x) { return normal_cdf((x - mean) / sd); }, mean, sd};
}

// |a0 + b.x|^2 times the centred vacuum Gaussian, marginalized along u.
std::optional<MarginalModel> linear_model(const ExcitedFunctional& e, std::span<const double> u)
{
    const auto& vac = e.vacuum;
    const auto& P = e.poly;
    cplx a0 = 0.0;
    std::vector<cplx> b(u.size(), 0.0);
    for (std::size_t t = 0; t < P.terms(); ++t) {
        int deg = P.degree(t);
        if (deg > 1) return std::nullopt;
        if (deg == 0) {
            a0 += P.coeff[t];
        } else {
            for (std::uint32_t k = P.start[t]; k < P.start[t + 1]; ++k)
                if (P.power[k] == 1) {
                    std::uint32_t j = P.coord[k];
                    b[j] += P.coeff[t] * std::sqrt(2.0 * vac.width[j].real());
                }
        }
    }
    for (std::size_t j = 0; j < u.size(); ++j)
        if (vac.active[j] && vac.center[j] != 0.0) return std::nullopt;
    if (touches_inactive(vac.active, u)) return std::nullopt;
    std::vector<double> var(u.size(), 0.0);
    for (std::size_t j = 0; j < u.size(); ++j)
        if (vac.active[j]) var[j] = 1.0 / (2.0 * vac.width[j].real());
    double s2 = 0;
    cplx bsu = 0.0;
    double bsb = 0;
    for (std::size_t j = 0; j < u.size(); ++j) {
        s2 += u[j] * u[j] * var[j];
        bsu += b[j] * var[j] * u[j];
        bsb += std::norm(b[j]) * var[j];
    }
    if (!(s2 > 0)) return std::nullopt;
    cplx beta = bsu / s2;
    double gamma = std::max(0.0, bsb - std::norm(bsu) / s2);
    double s = std::sqrt(s2);
    double A = std::norm(a0) + gamma, B = 2.0 * std::real(std::conj(a0) * beta) * s, Cq = std::norm(beta) * s2;
    double norm = A + Cq;
    if (!(norm > 0)) return std::nullopt;
    double mean = B * s / norm;
    double second = (A * s2 + 3.0 * Cq * s2) / norm;
    auto cdf = [A, B, Cq, norm, s](double y) {
        double t = y / s;
        if (t == std::numeric_limits<double>::infinity()) return 1.0;
        if (t == -std::numeric_limits<double>::infinity()) return 0.0;
        double Phi = normal_cdf(t), phi = normal_pdf(t);
        return std::clamp((A * Phi - B * phi + Cq * (Phi - t * phi)) / norm, 0.0, 1.0);
    };
    return MarginalModel{cdf, mean, std::sqrt(std::max(0.0, second - mean * mean))};
}

double hermite_poly_value(const ExcitedFunctional& e, std::span<const double> x, cplx& out)
{
    const auto& P = e.poly;
    thread_local std::vector<std::vector<double>> tab;
    tab.resize(P.used.size());
    for (std::size_t u = 0; u < P.used.size(); ++u) {
        std::uint32_t j = P.used[u];
        int nmax = P.used_max[u];
        double y = std::sqrt(e.vacuum.width[j].real()) * x[j];
        auto& h = tab[u];
        h.assign(nmax + 1, 0.0);
        h[0] = 1.0;
        if (nmax >= 1) h[1] = std::sqrt(2.0) * y;
        for (int n = 1; n < nmax; ++n) h[n + 1] = std::sqrt(2.0 / (n + 1)) * y * h[n] - std::sqrt(double(n) / (n + 1)) * h[n - 1];
    }
    out = 0.0;
    for (std::size_t t = 0; t < P.terms(); ++t) {
        cplx c = P.coeff[t];
        for (std::uint32_t k = P.start[t]; k < P.start[t + 1]; ++k) c *= tab[P.slot[P.coord[k]]][P.power[k]];
        out += c;
    }
    return std::norm(out);
}

// Coordinate marginal of an excitation by Gauss-Hermite quadrature over the other touched coordinates.
std::optional<MarginalModel> quadrature_model(const ExcitedFunctional& e, std::size_t j)
{
    const auto& P = e.poly;
    const auto& vac = e.vacuum;
    if (!vac.active[j]) return std::nullopt;
    for (std::size_t k = 0; k < vac.dimension(); ++k)
        if (vac.active[k] && vac.center[k] != 0.0) return std::nullopt;
    double lam = vac.width[j].real();
    double sd0 = 1.0 / std::sqrt(2.0 * lam);
    if (P.slot[j] < 0) return MarginalModel{[sd0](double x) { return normal_cdf(x / sd0); }, 0.0, sd0};
    if (P.used.size() > 6) return std::nullopt;

    std::vector<std::size_t> others;
    std::vector<QuadratureRule> rules;
    for (std::size_t u = 0; u < P.used.size(); ++u)
        if (P.used[u] != j) {
            others.push_back(u);
            rules.push_back(gauss_hermite(P.used_max[u] + 2));
        }
    std::vector<double> x(vac.dimension(), 0.0);
    auto density = [&](double a) {
        x[j] = a;
        std::vector<std::size_t> idx(others.size(), 0);
        double s = 0;
        for (;;) {
            double w = 1;
            for (std::size_t o = 0; o < others.size(); ++o) {
                std::uint32_t k = P.used[others[o]];
                x[k] = rules[o].nodes[idx[o]] / std::sqrt(vac.width[k].real());
                w *= rules[o].weights[idx[o]];
            }
            cplx v;
            s += w * hermite_poly_value(e, x, v);
            std::size_t o = 0;
            for (; o < others.size(); ++o) {
                if (++idx[o] < rules[o].nodes.size()) break;
                idx[o] = 0;
            }
            if (o == others.size()) break;
        }
        return s * std::exp(-lam * a * a);
    };
    int nmax = P.used_max[P.slot[j]];
    double ext = 12.0 * sd0 * std::sqrt(1.0 + 2.0 * nmax);
    const int cells = 4000;
    auto gl = gauss_legendre(4);
    std::vector<double> cum(cells + 1, 0.0), dens(cells + 1);
    double h = 2 * ext / cells, m1 = 0, m2 = 0;
    for (int i = 0; i <= cells; ++i) dens[i] = density(-ext + h * i);
    for (int i = 0; i < cells; ++i) {
        double s = 0, mid = -ext + h * (i + 0.5);
        for (int q = 0; q < 4; ++q) {
            double a = mid + h / 2 * gl.nodes[q];
            double r = gl.weights[q] * h / 2 * density(a);
            s += r;
            m1 += r * a;
            m2 += r * a * a;
        }
        cum[i + 1] = cum[i] + s;
    }
    double total = cum.back();
    if (!(total > 0)) return std::nullopt;
    for (auto& c : cum) c /= total;
    for (auto& r : dens) r /= total;
    m1 /= total;
    m2 /= total;
    // cubic Hermite between nodes, using the density as the slope
    auto cdf = [cum, dens, ext, h](double a) {
        if (a <= -ext) return 0.0;
        if (a >= ext) return 1.0;
        double s = (a + ext) / h;
        std::size_t i = std::min<std::size_t>(std::size_t(s), cum.size() - 2);
        double t = s - double(i), t2 = t * t, t3 = t2 * t;
        double v = (2 * t3 - 3 * t2 + 1) * cum[i] + (t3 - 2 * t2 + t) * h * dens[i] + (-2 * t3 + 3 * t2) * cum[i + 1] +
                   (t3 - t2) * h * dens[i + 1];
        return std::clamp(v, 0.0, 1.0);
    };
    return MarginalModel{cdf, m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

std::optional<MarginalModel> marginal_model(const WaveFunctional& f, std::span<const double> u)
{
    if (u.size() != f.dimension()) throw std::invalid_argument("direction does not match the functional");
    if (const auto* g = std::get_if<GaussianFunctional>(&f.v)) return gaussian_model(*g, u);
    if (const auto* e = std::get_if<ExcitedFunctional>(&f.v)) {
        if (auto m = linear_model(*e, u)) return m;
        std::size_t nz = 0, axis = 0;
        for (std::size_t j = 0; j < u.size(); ++j)
            if (u[j] != 0.0) {
                ++nz;
                axis = j;
            }
        if (nz == 1 && u[axis] == 1.0) return quadrature_model(*e, axis);
    }
    return std::nullopt;
}

} // namespace

std::optional<std::function<double(double)>> marginal_cdf(const WaveFunctional& f, std::span<const double> direction)
{
    auto m = marginal_model(f, direction);
    if (!m) return std::nullopt;
    return m->cdf;
}

EquivarianceReport equivariance_test(const Ensemble& ensemble, const WaveFunctional& f,
                                     const std::vector<Marginal>& marginals, const EquivarianceOptions& options)
{
    if (ensemble.size() == 0) throw std::invalid_argument("empty ensemble");
    if (ensemble.dim != f.dimension()) throw std::invalid_argument("ensemble does not match the functional");
    std::size_t family = options.family_size ? options.family_size : std::max<std::size_t>(marginals.size(), 1);
    double level = options.alpha / double(family);
    EquivarianceReport r;
    r.critical = ks_critical(ensemble.size(), level);
    std::optional<Ensemble> reference;
    r.pass = true;
    for (const auto& m : marginals) {
        auto proj = ensemble.project(m.direction);
        double d, crit;
        auto model = marginal_model(f, m.direction);
        if (model) {
            d = ks_statistic(std::move(proj), model->cdf);
            crit = r.critical;
        } else {
            if (!reference) reference = sample_equilibrium(f, options.reference_samples, SeedTree(options.seed).derive("reference"));
            d = ks_two_sample(std::move(proj), reference->project(m.direction));
            crit = ks_critical_two_sample(ensemble.size(), reference->size(), level);
        }
        r.names.push_back(m.name);
        r.ks.push_back(d);
        r.analytic.push_back(model.has_value());
        r.worst_ratio = std::max(r.worst_ratio, d / crit);
        if (d >= crit) r.pass = false;
    }
    return r;
}

CoarseGrainReport coarse_grained_h(const Ensemble& ensemble, const WaveFunctional& f, const CoarseGrainOptions& o)
{
    if (ensemble.size() == 0) throw std::invalid_argument("empty ensemble");
    if (!(o.bin_fraction > 0) || !(o.range > 0) || !(o.smoothing > 0)) throw std::invalid_argument("bad coarse-graining options");
    std::vector<std::size_t> coords = o.coordinates;
    if (coords.empty()) {
        auto a = active_coordinates(f);
        for (std::size_t j = 0; j < a.size(); ++j)
            if (a[j]) coords.push_back(j);
    }
    std::size_t n = ensemble.size();
    std::size_t cells = std::size_t(std::ceil(2 * o.range / o.bin_fraction));
    std::optional<Ensemble> reference;
    CoarseGrainReport rep;
    double floor_sum = 0;
    for (std::size_t j : coords) {
        std::vector<double> u(ensemble.dim, 0.0);
        u.at(j) = 1.0;
        auto model = marginal_model(f, u);
        std::vector<double> q(cells + 2, 0.0);
        double mean, sd;
        if (model) {
            mean = model->mean;
            sd = model->sd;
        } else {
            if (!reference) reference = sample_equilibrium(f, 20 * n, 0x5eedULL);
            auto m = moments(reference->column(j));
            mean = m.mean;
            sd = std::sqrt(m.variance);
        }
        double lo = mean - o.range * sd, w = o.bin_fraction * sd;
        auto cell = [&](double x) -> std::size_t {
            if (x < lo) return 0;
            double s = (x - lo) / w;
            return s >= double(cells) ? cells + 1 : std::size_t(s) + 1;
        };
        if (model) {
            double prev = 0;
            for (std::size_t c = 0; c <= cells; ++c) {
                double edge = model->cdf(lo + w * double(c));
                q[c] = std::max(edge - prev, 0.0);
                prev = edge;
            }
            q[cells + 1] = std::max(1.0 - prev, 0.0);
        } else {
            for (double x : reference->column(j)) q[cell(x)] += 1.0;
            double tot = double(reference->size()) + o.smoothing * double(q.size());
            for (auto& v : q) v = (v + o.smoothing) / tot;
        }
        std::vector<double> p(cells + 2, 0.0);
        for (std::size_t i = 0; i < n; ++i) p[cell(ensemble.data[i * ensemble.dim + j])] += 1.0;
        double tot = double(n) + o.smoothing * double(p.size());
        double h = 0;
        std::size_t occupied = 0;
        for (std::size_t c = 0; c < p.size(); ++c) {
            double pc = (p[c] + o.smoothing) / tot;
            h += pc * std::log(pc / std::max(q[c], 1e-300));
            if (q[c] * double(n) >= 1.0) ++occupied;
        }
        rep.per_marginal.push_back(std::max(h, 0.0));
        rep.value += rep.per_marginal.back();
        floor_sum += double(occupied > 0 ? occupied - 1 : 0) / (2.0 * double(n));
    }
    rep.noise_floor = floor_sum;
    return rep;
}

Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi)
{
    if (bins == 0) throw std::invalid_argument("histogram needs bins");
    if (!(hi > lo)) {
        lo -= 0.5;
        hi = lo + 1.0;
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) h.edges[b] = lo + (hi - lo) * double(b) / double(bins);
    h.counts.assign(bins, 0.0);
    for (double v : values) {
        if (v < lo || v > hi) continue;
        std::size_t b = std::min(bins - 1, std::size_t((v - lo) / (hi - lo) * double(bins)));
        h.counts[b] += 1.0;
    }
    double w = (hi - lo) / double(bins), n = double(values.size());
    h.density.resize(bins);
    for (std::size_t b = 0; b < bins; ++b) h.density[b] = n > 0 ? h.counts[b] / (n * w) : 0.0;
    return h;
}

DerivedBeableResult derived_beable_distribution(const Ensemble& ensemble, const WaveFunctional& f, LocalOperator op,
                                                const Vec3& point, Component component, std::size_t bins)
{
    DerivedBeableResult r;
    std::vector<cplx> all;
    std::span<const Vec3> pts(&point, 1);
    for (std::size_t i = 0; i < ensemble.size(); ++i) {
        FieldConfiguration c{ensemble.space, std::vector<double>(ensemble.member(i).begin(), ensemble.member(i).end())};
        try {
            all.push_back(local_expectation(f, c, op, pts).front());
        } catch (const DegeneratePoint&) {
            ++r.skipped;
        }
    }
    for (const auto& z : all) {
        r.values.push_back(component == Component::Real ? z.real() : z.imag());
        r.mean += z;
    }
    if (!all.empty()) r.mean /= double(all.size());
    r.mean_error = moments(r.values).standard_error;
    double lo = r.values.empty() ? 0.0 : *std::min_element(r.values.begin(), r.values.end());
    double hi = r.values.empty() ? 1.0 : *std::max_element(r.values.begin(), r.values.end());
    r.histogram = histogram(r.values, bins, lo, hi);
    return r;
}

} // namespace pwf
