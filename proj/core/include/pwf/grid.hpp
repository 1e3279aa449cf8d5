#pragma once

#include "pwf/common.hpp"

#include <array>
#include <span>
#include <vector>

namespace pwf {

// Periodic tensor grid with up to three axes, stored row-major (axis 0 slowest).
struct GridSpec {
    int dim = 1;
    std::array<int, 3> n{1, 1, 1};
    std::array<double, 3> lower{0.0, 0.0, 0.0};
    std::array<double, 3> length{1.0, 1.0, 1.0};

    static GridSpec line(int points, double lo, double len);
    static GridSpec plane(int nx, int ny, double lo, double len);

    std::size_t size() const;
    double spacing(int axis) const { return length[axis] / n[axis]; }
    double coordinate(int axis, int i) const { return lower[axis] + spacing(axis) * i; }
    double cell_volume() const;
    std::size_t index(std::array<int, 3> i) const;
    std::array<int, 3> unravel(std::size_t flat) const;
    // angular wavenumber of FFT bin i along an axis (Nyquist bin is negative)
    double momentum(int axis, int i) const;
    void validate() const;
};

struct GridWavefunction {
    GridSpec spec;
    std::vector<cplx> psi;
    double time = 0.0;

    double norm() const; // sum |psi|^2 dV
    void normalize();
};

// H = sum_a (c2_a p_a^2 + c4_a p_a^4) + V(x), with p = -i d/dx.
struct GridHamiltonian {
    std::array<double, 3> c2{0.0, 0.0, 0.0};
    std::array<double, 3> c4{0.0, 0.0, 0.0};
    std::vector<double> potential; // empty means V = 0

    static GridHamiltonian quartic(double alpha1, double alpha2);
    static GridHamiltonian particles(std::span<const double> masses);

    double kinetic(int axis, double p) const { return c2[axis] * p * p + c4[axis] * p * p * p * p; }
    double kinetic_symbol(const GridSpec& spec, std::size_t flat) const;
    bool has_potential() const;
};

class StabilityViolation : public std::runtime_error {
public:
    explicit StabilityViolation(const std::string& what) : std::runtime_error(what) {}
};

enum class Splitting { Strang, Yoshida4 };

struct GridStepLog {
    double max_norm_drift = 0.0; // largest relative norm change over a single step
    std::size_t steps = 0;
};

// In-place FFT of grid data (sign -1 forward, +1 backward unnormalized).
void grid_fft(const GridSpec& spec, std::vector<cplx>& data, int sign);

// Fourier bins below this fraction of the largest bin are zeroed before differentiating.
inline constexpr double spectral_noise_floor = 1e-13;

std::vector<cplx> spectral_derivative(const GridSpec& spec, std::span<const cplx> f, int axis, int order);

GridWavefunction grid_evolve(const GridHamiltonian& h, GridWavefunction psi, double dt, std::size_t steps,
                             Splitting split = Splitting::Strang, GridStepLog* log = nullptr);

// Exact evolution for V = 0 (diagonal in momentum space).
GridWavefunction free_evolve(const GridHamiltonian& h, const GridWavefunction& psi, double t);

double grid_energy(const GridHamiltonian& h, const GridWavefunction& psi);
std::vector<double> grid_density(const GridWavefunction& psi);

// Probability current along one axis, 2 Im[c2 psi* psi' - c4 psi* psi''' + c4 psi*' psi''].
std::vector<double> grid_current(const GridWavefunction& psi, const GridHamiltonian& h, int axis = 0);
// Same current in amplitude/phase variables; NaN where psi = 0.
std::vector<double> grid_current_polar(const GridWavefunction& psi, const GridHamiltonian& h, int axis = 0);

// Hamilton-Jacobi guess 4 c4 S'^3 + 2 c2 S'; NaN at grid nodes.
std::vector<double> naive_hj_velocity(const GridWavefunction& psi, const GridHamiltonian& h, int axis = 0);
// j / |psi|^2; NaN at grid nodes.
std::vector<double> correct_velocity(const GridWavefunction& psi, const GridHamiltonian& h, int axis = 0);

// Four-point Lagrange interpolation (cubic, periodic) of a real grid field.
double interpolate(const GridSpec& spec, std::span<const double> field, std::span<const double> x);

// Velocity fields on the grid, interpolated to arbitrary points. Throws DegeneratePoint
// where the interpolated density falls below node_floor times its maximum.
class GridVelocity {
public:
    GridVelocity(GridSpec spec, std::vector<std::vector<double>> per_axis, std::vector<double> density,
                 double node_floor = 1e-12);
    void operator()(std::span<const double> x, std::span<double> v) const;
    const GridSpec& spec() const { return spec_; }

private:
    GridSpec spec_;
    std::vector<std::vector<double>> v_;
    std::vector<double> rho_;
    double floor_;
};

// x_a' = dS/dx_a / m_a, one mass per axis.
GridVelocity phase_gradient_velocity(const GridWavefunction& psi, std::span<const double> masses);
std::vector<double> particle_guidance(const GridWavefunction& psi, std::span<const double> masses,
                                      std::span<const double> x);

// Zero mode of the complex Higgs field, (u, v) = sqrt(2)(Re, Im) of the mode amplitude:
// H = (p_u^2 + p_v^2)/2 - mu^2 (u^2 + v^2)/2 + lambda (u^2 + v^2)^2 / (4 L^3). Toy truncation.
GridHamiltonian higgs_zero_mode_toy(const GridSpec& spec, double mu, double lambda, double box_length);

} // namespace pwf
