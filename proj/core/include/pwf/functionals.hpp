#pragma once

#include "pwf/mode_basis.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <span>
#include <variant>
#include <vector>

namespace pwf {

class TheoryModel;

// Product of independent per-coordinate Gaussians,
// log psi_j = -w_j (x_j - c_j)^2 / 2 + i p_j (x_j - c_j) + i theta_j + log(Re w_j / pi) / 4.
// Inactive coordinates do not enter the functional at all.
struct GaussianFunctional {
    std::shared_ptr<const FieldSpace> space;
    std::vector<cplx> width;
    std::vector<double> center;
    std::vector<double> momentum;
    std::vector<double> phase;
    std::vector<std::uint8_t> active;
    double time = 0.0;

    std::size_t dimension() const { return width.size(); }
};

// sum_m c_m prod_j h_{m_j}(sqrt(lambda_j) x_j) with normalized Hermite functions
// h_n(y) = H_n(y) / sqrt(2^n n!). Terms are stored in compressed rows.
struct FockPolynomial {
    std::vector<std::uint32_t> start{0};
    std::vector<std::uint32_t> coord;
    std::vector<std::uint16_t> power;
    std::vector<cplx> coeff;
    // coordinates that appear, with the largest power per coordinate
    std::vector<std::uint32_t> used;
    std::vector<std::uint16_t> used_max;
    std::vector<std::int32_t> slot; // coordinate -> index into used, -1 if absent

    std::size_t terms() const { return coeff.size(); }
    int degree(std::size_t term) const;
    void add_term(const std::vector<std::pair<std::uint32_t, std::uint16_t>>& occupation, cplx c);
    void finalize(std::size_t dimension);
};

// Polynomial (Fock) excitation of a stationary Gaussian vacuum.
struct ExcitedFunctional {
    GaussianFunctional vacuum;
    FockPolynomial poly;
};

struct WaveFunctional;

struct SuperpositionFunctional {
    std::vector<cplx> weights;
    std::vector<WaveFunctional> components;
};

struct WaveFunctional {
    std::variant<GaussianFunctional, ExcitedFunctional, SuperpositionFunctional> v;

    WaveFunctional() = default;
    WaveFunctional(GaussianFunctional g) : v(std::move(g)) {}
    WaveFunctional(ExcitedFunctional e) : v(std::move(e)) {}
    WaveFunctional(SuperpositionFunctional s) : v(std::move(s)) {}

    const std::shared_ptr<const FieldSpace>& space() const;
    std::size_t dimension() const { return space()->dimension(); }
    double time() const;
    bool is_gaussian() const { return std::holds_alternative<GaussianFunctional>(v); }
    bool is_excited() const { return std::holds_alternative<ExcitedFunctional>(v); }
    bool is_superposition() const { return std::holds_alternative<SuperpositionFunctional>(v); }
};

// Mode label used by builders: sector, lattice momentum, polarization.
struct ModeKey {
    std::size_t sector = 0;
    IVec3 n{0, 0, 0};
    int pol = 0;
    auto operator<=>(const ModeKey&) const = default;
};

using ModeCoefficients = std::map<ModeKey, cplx>;

// Symmetric tensor over single-particle modes. Each entry lists one index tuple;
// permutations of the same tuple may appear but must carry equal coefficients.
struct ModeTensor {
    int rank = 0;
    std::vector<std::pair<std::vector<ModeKey>, cplx>> entries;
};

inline constexpr int max_particle_number = 12;

// Ground state of a quadratic theory, zero energy by convention.
GaussianFunctional vacuum(const TheoryModel& theory);
// Eigenstate of every annihilation operator a_k with eigenvalue alpha(k).
GaussianFunctional coherent(const TheoryModel& theory, const ModeCoefficients& alpha);
// (n!)^{-1/2} sum psi(k1..kn) a+_{k1} ... a+_{kn} Psi_0, normalized on output.
ExcitedFunctional n_particle(const TheoryModel& theory, const ModeTensor& coefficients);
// One-particle state from single-mode coefficients psi(k).
ExcitedFunctional one_particle(const TheoryModel& theory, const ModeCoefficients& psi);
WaveFunctional superpose(std::vector<cplx> weights, std::vector<WaveFunctional> components);

// Real-coordinate creation operator of a mode: a+ = sum_j coefficient_j A+_j.
std::vector<std::pair<std::size_t, cplx>> creation_form(const FieldSpace& space, const ModeKey& key);

struct Evaluation {
    double log_r;
    double phase;
};

// log Psi = log R + i S; throws DegeneratePoint at a node.
cplx log_psi(const WaveFunctional& f, std::span<const double> x);
// Same, also writing d log Psi / d x_j (real part: log R gradient, imaginary part: S gradient).
cplx log_psi_gradient(const WaveFunctional& f, std::span<const double> x, std::span<cplx> grad);

Evaluation evaluate(const WaveFunctional& f, const FieldConfiguration& config);
std::vector<double> phase_gradient(const WaveFunctional& f, const FieldConfiguration& config);
std::vector<double> amplitude_gradient(const WaveFunctional& f, const FieldConfiguration& config);

cplx inner_product(const WaveFunctional& a, const WaveFunctional& b);
double norm_squared(const WaveFunctional& f);
WaveFunctional normalized(const WaveFunctional& f);

// Exact evolution under a quadratic theory by time t (relative to the functional's own time).
WaveFunctional evolve_quadratic(const WaveFunctional& f, const TheoryModel& theory, double t);

enum class LocalOperator { PsiImag, PsiFull, NumberDensity };

// Local expectation values at sample points of a single scalar sector:
//   psi_imag       dS/dphi(x) / sqrt2
//   psi_full       (phi(x) + i dS/dphi(x)) / sqrt2
//   number_density Re[Psi* psi+(x) psi(x) Psi] / |Psi|^2, vacuum value subtracted
std::vector<cplx> local_expectation(const WaveFunctional& f, const FieldConfiguration& config, LocalOperator op,
                                    std::span<const Vec3> points);

// Time-dependent view of a functional under a quadratic theory (or a static one when
// theory is null). Evaluation at any time avoids rebuilding the functional.
class EvolvingFunctional {
public:
    EvolvingFunctional(WaveFunctional initial, const TheoryModel* theory);

    const WaveFunctional& initial() const { return initial_; }
    const TheoryModel* theory() const { return theory_; }
    std::size_t dimension() const { return initial_.dimension(); }

    cplx log_psi_gradient(double t, std::span<const double> x, std::span<cplx> grad) const;
    cplx log_psi(double t, std::span<const double> x) const;
    WaveFunctional at(double t) const;

    struct Node; // evolution data, opaque

private:
    WaveFunctional initial_;
    const TheoryModel* theory_;
    std::shared_ptr<const Node> root_;
};

} // namespace pwf
