#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace pwf {

// Site lattice model with Euler-angle beables (alpha in [0, pi], beta in [0, 2 pi), gamma in [0, 4 pi)).
// Occupied sites carry the u+ factor, empty sites u-. With dOmega = sin(alpha) dalpha dbeta dgamma,
//   |u+|^2 = sin^2(alpha/2) / (8 pi^2),   |u-|^2 = cos^2(alpha/2) / (8 pi^2),
// which puts the occupied-site mean of alpha at 5 pi / 8 and the empty-site mean at 3 pi / 8.
double u_density(int sign, double alpha);

// Closed forms of the single-site alpha statistics.
double holland_mean_alpha(int sign);
double holland_alpha_spread(); // sqrt(15 pi^2 / 64 - 2), equal for both factors
double holland_site_overlap(); // integral of sqrt(|u+|^2 |u-|^2) dOmega = pi / 4

struct OccupationState {
    std::size_t sites = 0;
    std::vector<std::uint8_t> occupied; // size sites
    static OccupationState first_occupied(std::size_t sites, std::size_t n);
    void validate() const;
};

struct AngularConfigs {
    std::size_t sites = 0;
    std::size_t samples = 0;
    std::vector<double> alpha, beta, gamma; // sample-major, sites per sample
    std::span<const double> alphas(std::size_t s) const { return {alpha.data() + s * sites, sites}; }
};

// Independent inverse-CDF draws per site.
AngularConfigs sample_angles(const OccupationState& state, std::size_t n, std::uint64_t seed);

// Draws alpha only, for statistics that do not involve beta and gamma.
std::vector<double> sample_alpha(int sign, std::size_t n, std::uint64_t seed);

// Sum of alpha over the region divided by the number of sites in it.
double a_v_statistic(std::span<const double> alpha, std::span<const std::size_t> region);

struct Distinguishability {
    double lhs = 0.0; // n / sqrt(n_l)
    double rhs = 0.0; // (4 / pi) sqrt(15 pi^2 / 64 - 2)
    double factor = 10.0;
    bool pass = false; // lhs >= factor * rhs
};
Distinguishability distinguishability(double n, double n_l, double factor = 10.0);

struct LengthScale {
    double threshold = 0.0; // 1 / (a rho^{2/3}): the scale L must greatly exceed
    double length = 0.0;    // margin * threshold
};
LengthScale length_scale_criterion(double a, double rho, double margin = 10.0);

struct SweepCell {
    std::size_t n_l = 0;
    double fraction = 0.0;
    std::size_t n = 0;
    Distinguishability analytic;
    double separation = 0.0; // (mean difference of A_V) / pooled standard deviation
    bool empirical_pass = false;
    double var_empty = 0.0; // sampled Var(A_V) for the empty region
    bool agree = false;
};

// The analytic criterion compared with sampled A_V histograms. Separation in units of the
// pooled spread equals (pi / 4) lhs / spread, so the same margin factor applies to both.
std::vector<SweepCell> holland_sweep(std::span<const std::size_t> region_sizes, std::span<const double> fractions,
                                     std::size_t configs, std::uint64_t seed, double factor = 10.0);

// Bhattacharyya overlap of n occupied sites against n empty sites by mixture importance sampling.
struct HollandOverlap {
    double estimate = 0.0;
    double error = 0.0;
};
HollandOverlap holland_overlap_mc(int n, std::size_t samples, std::uint64_t seed);

} // namespace pwf
