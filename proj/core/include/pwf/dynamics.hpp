#pragma once

#include "pwf/functionals.hpp"
#include "pwf/theories.hpp"

#include <functional>
#include <limits>
#include <span>
#include <string>
#include <vector>

namespace pwf {

// v = f(t, x). May throw DegeneratePoint, which the integrators treat as a rejected step.
using VelocityField = std::function<void(double t, std::span<const double> x, std::span<double> v)>;

struct Tolerances {
    double rtol = 1e-9;
    double atol = 1e-11;
    double initial_step = 1e-2;
    double min_step = 1e-10; // node floor: below this a trajectory is flagged and stopped
    double max_step = std::numeric_limits<double>::infinity();
    std::size_t max_steps = 1000000;
};

struct TrajectoryStats {
    std::size_t steps = 0;
    std::size_t rejections = 0;
    std::size_t degenerate_events = 0;
    std::size_t evaluations = 0;
    bool flagged = false;
    std::string message;
    double projection_residual = 0.0; // largest reality/transversality residual at output times
};

struct Trajectory {
    std::vector<double> times;
    std::vector<std::vector<double>> states;
    TrajectoryStats stats;
};

// Adaptive Dormand-Prince 5(4). Output times may increase or decrease; the first entry is
// the initial time. A flagged trajectory holds the states reached before the failure.
Trajectory integrate(const VelocityField& f, std::vector<double> x0, std::span<const double> times,
                     const Tolerances& tol = {});

// Dormand-Prince fifth-order solution with a fixed step, for convergence studies.
std::vector<double> integrate_fixed(const VelocityField& f, std::vector<double> x0, double t0, double t1,
                                    std::size_t steps);

// Classical RK4 with a fixed step.
std::vector<double> integrate_rk4(const VelocityField& f, std::vector<double> x0, double t0, double t1,
                                  std::size_t steps);

// Guidance velocity of a theory for a functional evolving in closed form.
VelocityField guidance_field(const TheoryModel& theory, const EvolvingFunctional& psi);

Trajectory integrate_trajectory(const TheoryModel& theory, const EvolvingFunctional& psi,
                                const FieldConfiguration& start, std::span<const double> times,
                                const Tolerances& tol = {});

} // namespace pwf
