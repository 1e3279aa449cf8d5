#pragma once

#include "pwf/grid.hpp"

#include <cstdint>
#include <vector>

namespace pwf {

// Equivariance of two candidate guidance laws for H = alpha1 p^4 + alpha2 p^2 on a periodic line:
// the current-based velocity j/|psi|^2 and the Hamilton-Jacobi guess 4 alpha1 S'^3 + 2 alpha2 S'.
struct QuarticExperimentOptions {
    double alpha1 = 0.5;
    double alpha2 = 0.5;
    int points = 1024;
    double box = 80.0;
    double center = 0.0;
    double sigma = 1.0;   // position spread of the initial packet
    double momentum = 0.0;
    double final_time = 2.0;
    int checkpoints = 5;
    std::size_t samples = 10000;
    std::size_t steps = 400; // RK4 steps over the whole run
    double alpha = 0.01;     // family-wise level over the checkpoints
    std::uint64_t seed = 1;
};

struct QuarticExperimentResult {
    std::vector<double> times;
    std::vector<double> ks_correct;
    std::vector<double> ks_naive;
    double ks_initial = 0.0;
    double critical = 0.0;
    std::size_t flagged_correct = 0;
    std::size_t flagged_naive = 0;
    bool correct_passes = false;     // all checkpoints below the critical value
    bool naive_fails_final = false;  // last checkpoint above it
    double plane_wave_difference = 0.0; // max |naive - correct| over a family of plane waves
    double max_norm_drift = 0.0;
    double continuity_residual = 0.0;
};

GridWavefunction gaussian_packet(const GridSpec& spec, double center, double sigma, double momentum);

// Sup distance between the empirical CDF of positions and the CDF of a grid density,
// integrated by the trapezoid rule and interpolated linearly between nodes.
double grid_ks_statistic(const GridSpec& spec, const std::vector<double>& density, std::vector<double> positions);

// Relative residual of d|psi|^2/dt + dj/dx at time t, by central differences in time.
double continuity_residual(const GridHamiltonian& h, const GridWavefunction& psi, double dt = 1e-4);

QuarticExperimentResult run_quartic_experiment(const QuarticExperimentOptions& options);

} // namespace pwf
