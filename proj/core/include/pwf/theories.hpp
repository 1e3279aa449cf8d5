#pragma once

#include "pwf/functionals.hpp"
#include "pwf/mode_basis.hpp"

#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pwf {

enum class TheoryKind {
    SchrodingerFieldBoson,
    FreeEM_Bohm,
    FreeEM_Valentini,
    MassiveSpin1,
    ScalarQED,
    AbelianHiggs,
    HiggsQuadratic,
    NonRelParticles,
    QuarticDispersion
};

std::string to_string(TheoryKind kind);
TheoryKind theory_kind_from_string(std::string_view name);

struct TheoryParameters {
    double m = 1.0;      // field mass (Schrodinger field, massive spin-1, scalar QED matter)
    double e = 0.0;      // charge
    double mu = 0.0;     // Higgs potential -mu^2 |phi|^2 + lambda |phi|^4
    double lambda = 0.0;
    double alpha1 = 0.0; // quartic dispersion alpha1 p^4 + alpha2 p^2
    double alpha2 = 0.0;
    std::vector<double> particle_masses;
};

// Per real coordinate: H_j = h p^2 / 2 + kappa x^2 / 2, omega = sqrt(h kappa), ground width
// lambda = kappa / omega. Inactive coordinates are absent from every admissible functional.
struct OscillatorData {
    double h = 0.0;
    double kappa = 0.0;
    double omega = 0.0;
    double width = 1.0;
    bool active = true;
    bool longitudinal = false;
};

class TheoryModel {
public:
    // Field theories: the field content is built from the box length and cutoff.
    TheoryModel(TheoryKind kind, TheoryParameters params, double box_length, double cutoff);
    // Particle and grid theories carry no mode space.
    TheoryModel(TheoryKind kind, TheoryParameters params);

    TheoryKind kind() const { return kind_; }
    const TheoryParameters& params() const { return params_; }
    const std::shared_ptr<const FieldSpace>& space() const { return space_; }
    bool field_theory() const { return space_ != nullptr; }
    // Hamiltonian quadratic in the fields, so Gaussian functionals evolve in closed form.
    bool quadratic() const;
    bool coulomb_coupled() const { return kind_ == TheoryKind::ScalarQED || kind_ == TheoryKind::AbelianHiggs; }
    const std::vector<OscillatorData>& oscillators() const { return osc_; }
    double vev() const;

    // Mode-space kernel for one vector-sector momentum in Cartesian components (row-major 3x3).
    std::array<double, 9> cartesian_kernel(std::size_t sector, std::size_t mode) const;

private:
    void build_field_content(double box_length, double cutoff);

    TheoryKind kind_;
    TheoryParameters params_;
    std::shared_ptr<const FieldSpace> space_;
    std::vector<OscillatorData> osc_;
};

// Guidance velocity from the log-gradient of the functional at x.
void guidance_velocity(const TheoryModel& theory, std::span<const double> x, std::span<const cplx> grad_log_psi,
                       std::span<double> velocity);
std::vector<double> guidance_velocity(const TheoryModel& theory, const WaveFunctional& f,
                                      const FieldConfiguration& config);

// Matter-field velocity with the Coulomb term:
//   phidot = dS/dphi* + e^2 phi (1/lap)(phi dS/dphi - phi* dS/dphi*).
// Also evaluates the conjugate equation and returns the relative mismatch between
// conj(phidot) and the independently computed phi*dot.
double coulomb_matter_velocity(const ModeBasis& matter, double charge, std::span<const double> x,
                               std::span<const double> grad_s, std::span<double> velocity);

struct ValentiniSplit {
    std::vector<cplx> transverse;   // Cartesian, layout [mode * 3 + c]
    std::vector<cplx> longitudinal;
};

ValentiniSplit valentini_split(const ModeBasis& basis, std::span<const cplx> cartesian);
ValentiniSplit valentini_split(const FieldConfiguration& config);

// B(k) = i k x A(k) for every momentum, layout [mode * 3 + c].
std::vector<cplx> magnetic_field_modes(const ModeBasis& basis, std::span<const cplx> cartesian);

struct DispersionRow {
    IVec3 n;
    double k;
    double omega;
};

struct HiggsSpectrum {
    double v;
    double scalar_mass;
    double vector_mass;
    std::vector<DispersionRow> scalar;
    std::vector<DispersionRow> vector;
};

HiggsSpectrum higgs_quadratic_spectrum(double mu, double lambda, double e, const ModeBasis& basis);

// Affine map from the full Higgs variables (phi, A^T) to the quadratic-sector variables
// (eta, A = A^T + A^L), y = M x + offset, with phi = (v + eta + i xi)/sqrt2 and A^L = -grad xi / (e v).
struct HiggsFieldMap {
    std::size_t rows = 0, cols = 0;
    std::vector<double> matrix; // row-major
    std::vector<double> offset;
    std::vector<double> apply(std::span<const double> x) const;
    std::vector<double> apply_linear(std::span<const double> x) const;
    std::vector<double> apply_transpose(std::span<const double> y) const;
};

HiggsFieldMap higgs_field_map(const TheoryModel& full, const TheoryModel& quadratic);

struct LinearizationProbe {
    double amplitude;
    double relative_error;
};

// Compares the quadratic-sector guidance with the full guidance mapped through the
// change of variables, at configurations and functionals scaled by each amplitude.
std::vector<LinearizationProbe> higgs_linearization_scan(const TheoryModel& full, const TheoryModel& quadratic,
                                                         std::span<const double> amplitudes, std::uint64_t seed);

} // namespace pwf
