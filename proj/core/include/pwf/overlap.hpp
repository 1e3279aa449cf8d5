#pragma once

#include "pwf/functionals.hpp"
#include "pwf/theories.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pwf {

enum class OverlapEstimator { Bhattacharyya, MinOverlap };

struct OverlapReport {
    OverlapEstimator estimator = OverlapEstimator::Bhattacharyya;
    double estimate = 0.0;
    double error = 0.0;
    std::size_t samples = 0;
    // both estimators are computed from the same draws
    double bhattacharyya = 0.0;
    double bhattacharyya_error = 0.0;
    double min_overlap = 0.0;
    double min_overlap_error = 0.0;
    double effective_samples = 0.0;
    bool flagged = false; // effective sample size below the floor
    std::string message;
};

inline constexpr double default_ess_floor = 100.0;

// Importance sampling with the even mixture of the two densities as proposal
// (half of the draws from each, so the estimate is stratified).
OverlapReport density_overlap(const WaveFunctional& a, const WaveFunctional& b, std::size_t n, std::uint64_t seed,
                              OverlapEstimator estimator = OverlapEstimator::Bhattacharyya,
                              double ess_floor = default_ess_floor);

// Closed form for two Gaussian functionals on the same coordinates.
double gaussian_bhattacharyya(const GaussianFunctional& a, const GaussianFunctional& b);

struct OneParticleMaxima {
    std::vector<std::vector<double>> points;      // converged maximizers
    std::vector<std::uint8_t> converged;          // per start
    std::vector<double> gradient_residual;        // |grad log |Psi|^2| at the end of each start
    std::vector<double> span_residual;            // distance from the span of Re b, Im b (whitened)
    double zero_plane_density = 0.0;              // largest |Psi|^2 found on b.x = 0
};

// Multistart gradient ascent of log |Psi|^2 for a one-particle functional.
OneParticleMaxima one_particle_maxima(const TheoryModel& theory, const ModeCoefficients& psi, std::size_t starts,
                                      std::uint64_t seed);

struct ScanRow {
    int n = 0;
    double overlap = 0.0;
    double error = 0.0;
    double analytic = 0.0; // closed form where one exists, NaN otherwise
};

struct ScanResult {
    std::string family;
    std::vector<ScanRow> rows;
    double slope = 0.0; // least squares of log overlap against n
    double intercept = 0.0;
    double r2 = 0.0;
};

// family "excitation": n quanta in n distinct modes of a Schrodinger field against its vacuum;
// family "holland": n occupied angular sites against n empty ones.
ScanResult n_particle_overlap_scan(const std::string& family, int n_min, int n_max, std::size_t samples,
                                   std::uint64_t seed);

} // namespace pwf
