#pragma once

#include "pwf/dynamics.hpp"
#include "pwf/ensemble.hpp"
#include "pwf/functionals.hpp"
#include "pwf/theories.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace pwf {

// Declarative description of a wave functional on a theory's field content.
struct FunctionalSpec {
    std::string kind = "vacuum"; // vacuum | coherent | one-particle | superposition
    ModeCoefficients coefficients;  // coherent amplitudes or one-particle psi(k)
    ModeCoefficients second;        // second coherent component of a superposition
    std::vector<cplx> weights{1.0, 1.0};
};

WaveFunctional build_functional(const TheoryModel& theory, const FunctionalSpec& spec);

struct TheorySpec {
    TheoryKind kind = TheoryKind::SchrodingerFieldBoson;
    TheoryParameters params;
    double box_length = 2 * pi;
    double cutoff = 1.5;
    TheoryModel build() const { return TheoryModel(kind, params, box_length, cutoff); }
};

// Evenly spaced times 0, T/(k-1), ..., T.
std::vector<double> checkpoint_times(double final_time, std::size_t checkpoints);

struct EquivarianceExperimentOptions {
    TheorySpec theory;
    FunctionalSpec functional;
    std::size_t samples = 10000;
    double final_time = 2.0;
    std::size_t checkpoints = 5;
    std::size_t projections = 4;
    double alpha = 0.01;
    std::uint64_t seed = 1;
    Tolerances tolerances{1e-7, 1e-9};
};

struct EquivarianceExperimentResult {
    std::vector<double> times;
    std::vector<EquivarianceReport> reports; // one per checkpoint
    std::size_t flagged = 0;
    bool evolution_failed = false;
    std::string message;
    SamplerProvenance sampler;
    double seconds = 0.0;
    bool pass = false;
};

// Samples |Psi|^2, transports the ensemble by the guidance law and runs the KS battery at every
// checkpoint, with the level shared across marginals and checkpoints.
EquivarianceExperimentResult run_equivariance_experiment(const EquivarianceExperimentOptions& options);

struct RelaxationOptions {
    double box_length = 2 * pi;
    double cutoff = 1.5;
    int max_quanta = 3; // Fock levels 0..max_quanta in each of the two coordinates
    std::size_t samples = 2000;
    double final_time = 40.0;
    std::size_t checkpoints = 9;
    double bin_fraction = 0.05;
    std::uint64_t seed = 1;
    Tolerances tolerances{1e-7, 1e-9};
};

struct RelaxationResult {
    std::vector<double> times;
    std::vector<double> h;           // coarse-grained H at each checkpoint
    std::vector<double> noise_floor; // equilibrium value expected from sampling alone
    double slope = 0.0;
    double slope_error = 0.0;
    std::size_t flagged = 0;
    bool pass = false; // fitted slope not above zero within one standard error
    std::string message;
};

// Two free-EM coordinates with incommensurate frequencies in a random-phase Fock superposition,
// started from a vacuum-distributed (nonequilibrium) ensemble.
RelaxationResult run_relaxation_experiment(const RelaxationOptions& options);

struct GaugeEquivalenceOptions {
    double box_length = 2 * pi;
    double cutoff = 1.5;
    FunctionalSpec functional; // built in both theories from the same transverse mode data
    std::size_t trajectories = 8;
    double final_time = 2.0;
    std::size_t checkpoints = 5;
    double longitudinal_scale = 0.5;
    std::uint64_t seed = 1;
    Tolerances tolerances{1e-11, 1e-13};
    double tolerance = 1e-6;
};

struct GaugeEquivalenceResult {
    std::vector<double> times;
    std::vector<double> b_difference; // max over trajectories of max |B_bohm - B_valentini|
    std::vector<double> b_scale;      // max |B| at each checkpoint
    double longitudinal_velocity = 0.0; // largest |velocity| on longitudinal coordinates
    double longitudinal_drift = 0.0;    // largest change of a longitudinal coordinate
    bool pass = false;
    std::string message;
};

FunctionalSpec default_gauge_functional();
GaugeEquivalenceResult run_gauge_equivalence(const GaugeEquivalenceOptions& options);

struct TrajectoryOptions {
    TheorySpec theory;
    FunctionalSpec functional;
    std::vector<double> start; // empty: one draw from |Psi|^2
    double final_time = 1.0;
    std::size_t checkpoints = 11;
    std::uint64_t seed = 1;
    Tolerances tolerances;
};

struct TrajectoryResult {
    Trajectory trajectory;
    std::vector<double> log_density; // log |Psi_t|^2 along the path
    bool pass = false;
};

TrajectoryResult run_trajectory(const TrajectoryOptions& options);

} // namespace pwf
