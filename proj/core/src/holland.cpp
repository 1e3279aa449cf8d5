#include "pwf/holland.hpp"

#include "pwf/common.hpp"
#include "pwf/rng.hpp"
#include "pwf/stats.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace pwf {

double u_density(int sign, double alpha)
{
    if (sign != 1 && sign != -1) throw std::invalid_argument("sign must be +1 or -1");
    if (!(alpha >= 0.0 && alpha <= pi)) throw std::invalid_argument("alpha out of range");
    double s = std::sin(alpha / 2), c = std::cos(alpha / 2);
    return (sign > 0 ? s * s : c * c) / (8 * pi * pi);
}

double holland_mean_alpha(int sign) { return sign > 0 ? 5 * pi / 8 : 3 * pi / 8; }

double holland_alpha_spread() { return std::sqrt(15 * pi * pi / 64 - 2); }

double holland_site_overlap() { return pi / 4; }

OccupationState OccupationState::first_occupied(std::size_t sites, std::size_t n)
{
    if (n > sites) throw std::invalid_argument("more occupied sites than sites");
    OccupationState s{sites, std::vector<std::uint8_t>(sites, 0)};
    for (std::size_t i = 0; i < n; ++i) s.occupied[i] = 1;
    return s;
}

void OccupationState::validate() const
{
    if (occupied.size() != sites) throw std::invalid_argument("occupation list does not match the site count");
}

namespace {

// cos(alpha) has density (1 - c)/2 for u+ and (1 + c)/2 for u-
double draw_alpha(int sign, double u)
{
    double r = 2.0 * std::sqrt(u);
    double c = sign > 0 ? 1.0 - r : r - 1.0;
    return std::acos(std::clamp(c, -1.0, 1.0));
}

} // namespace

AngularConfigs sample_angles(const OccupationState& state, std::size_t n, std::uint64_t seed)
{
    state.validate();
    AngularConfigs a;
    a.sites = state.sites;
    a.samples = n;
    a.alpha.resize(n * state.sites);
    a.beta.resize(n * state.sites);
    a.gamma.resize(n * state.sites);
    auto rng = SeedTree(seed).engine("angles");
    std::uniform_real_distribution<double> u01;
    for (std::size_t s = 0; s < n; ++s)
        for (std::size_t i = 0; i < state.sites; ++i) {
            std::size_t k = s * state.sites + i;
            a.alpha[k] = draw_alpha(state.occupied[i] ? 1 : -1, u01(rng));
            a.beta[k] = 2 * pi * u01(rng);
            a.gamma[k] = 4 * pi * u01(rng);
        }
    return a;
}

std::vector<double> sample_alpha(int sign, std::size_t n, std::uint64_t seed)
{
    auto rng = SeedTree(seed).engine(sign > 0 ? "alpha-plus" : "alpha-minus");
    std::uniform_real_distribution<double> u01;
    std::vector<double> a(n);
    for (auto& v : a) v = draw_alpha(sign, u01(rng));
    return a;
}

double a_v_statistic(std::span<const double> alpha, std::span<const std::size_t> region)
{
    if (region.empty()) throw std::invalid_argument("empty region");
    double s = 0;
    for (std::size_t i : region) s += alpha[i];
    return s / double(region.size());
}

Distinguishability distinguishability(double n, double n_l, double factor)
{
    if (!(n_l >= 1.0) || n < 0.0 || n > n_l) throw std::invalid_argument("need 0 <= n <= n_l and n_l >= 1");
    Distinguishability d;
    d.lhs = n / std::sqrt(n_l);
    d.rhs = 4.0 / pi * holland_alpha_spread();
    d.factor = factor;
    d.pass = d.lhs >= factor * d.rhs;
    return d;
}

LengthScale length_scale_criterion(double a, double rho, double margin)
{
    if (!(a > 0.0) || !(rho > 0.0)) throw std::invalid_argument("need a > 0 and rho > 0");
    LengthScale l;
    l.threshold = 1.0 / (a * std::cbrt(rho * rho));
    l.length = margin * l.threshold;
    return l;
}

std::vector<SweepCell> holland_sweep(std::span<const std::size_t> region_sizes, std::span<const double> fractions,
                                     std::size_t configs, std::uint64_t seed, double factor)
{
    if (configs < 2) throw std::invalid_argument("sweep needs at least two configurations per state");
    SeedTree tree(seed);
    std::vector<SweepCell> out;
    for (std::size_t r = 0; r < region_sizes.size(); ++r) {
        std::size_t nl = region_sizes[r];
        // A_V for an all-empty region: sum of n_l draws per configuration
        auto rng_e = tree.engine("sweep-empty", r);
        std::uniform_real_distribution<double> u01;
        std::vector<double> empty(configs);
        for (auto& v : empty) {
            double s = 0;
            for (std::size_t i = 0; i < nl; ++i) s += draw_alpha(-1, u01(rng_e));
            v = s / double(nl);
        }
        auto me = moments(empty);
        for (std::size_t f = 0; f < fractions.size(); ++f) {
            SweepCell c;
            c.n_l = nl;
            c.fraction = fractions[f];
            c.n = std::size_t(std::llround(fractions[f] * double(nl)));
            c.analytic = distinguishability(double(c.n), double(nl), factor);
            auto rng_o = tree.engine("sweep-occupied", r * 1000 + f);
            std::vector<double> occ(configs);
            for (auto& v : occ) {
                double s = 0;
                for (std::size_t i = 0; i < nl; ++i) s += draw_alpha(i < c.n ? 1 : -1, u01(rng_o));
                v = s / double(nl);
            }
            auto mo = moments(occ);
            double pooled = std::sqrt(0.5 * (me.variance + mo.variance));
            c.separation = pooled > 0 ? (mo.mean - me.mean) / pooled : 0.0;
            c.empirical_pass = c.separation >= factor;
            c.var_empty = me.variance;
            c.agree = c.empirical_pass == c.analytic.pass;
            out.push_back(c);
        }
    }
    return out;
}

HollandOverlap holland_overlap_mc(int n, std::size_t samples, std::uint64_t seed)
{
    if (n < 0 || samples < 2) throw std::invalid_argument("bad overlap arguments");
    auto rng = SeedTree(seed).engine("holland-overlap", std::uint64_t(n));
    std::uniform_real_distribution<double> u01;
    // densities of alpha alone; beta and gamma factors are common to both states
    auto pa = [](int sign, double a) {
        double c = std::cos(a);
        return (sign > 0 ? (1 - c) : (1 + c)) / 2 * std::sin(a);
    };
    std::vector<double> g[2];
    for (int half = 0; half < 2; ++half) {
        int sign = half == 0 ? 1 : -1;
        for (std::size_t s = 0; s < samples / 2; ++s) {
            double l1 = 0, l2 = 0;
            for (int i = 0; i < n; ++i) {
                double a = draw_alpha(sign, u01(rng));
                l1 += std::log(pa(1, a));
                l2 += std::log(pa(-1, a));
            }
            // sqrt(p1 p2) / ((p1 + p2) / 2) in a form that cannot overflow
            double d = l1 - l2;
            g[half].push_back(2.0 * std::exp(-0.5 * std::abs(d)) / (1.0 + std::exp(-std::abs(d))));
        }
    }
    auto m1 = moments(g[0]), m2 = moments(g[1]);
    return {0.5 * (m1.mean + m2.mean), 0.5 * std::sqrt(m1.standard_error * m1.standard_error + m2.standard_error * m2.standard_error)};
}

} // namespace pwf
