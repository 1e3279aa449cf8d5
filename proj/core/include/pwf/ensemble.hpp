#pragma once

#include "pwf/dynamics.hpp"
#include "pwf/functionals.hpp"
#include "pwf/theories.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pwf {

struct SamplerProvenance {
    std::string method; // "exact-gaussian" or "metropolis"
    std::uint64_t seed = 0;
    double acceptance_rate = 1.0;
    double rhat = 1.0; // worst split R-hat over active coordinates and log density
    std::size_t chains = 0;
    std::size_t burn_in = 0;
    std::size_t thinning = 0;
    bool flagged = false;
    std::string message;
};

struct Ensemble {
    std::shared_ptr<const FieldSpace> space;
    std::size_t dim = 0;
    std::vector<double> data; // member-major
    double time = 0.0;
    SamplerProvenance provenance;

    std::size_t size() const { return dim ? data.size() / dim : 0; }
    std::span<const double> member(std::size_t i) const { return {data.data() + i * dim, dim}; }
    std::span<double> member(std::size_t i) { return {data.data() + i * dim, dim}; }
    std::vector<double> column(std::size_t j) const;
    std::vector<double> project(std::span<const double> direction) const;
};

struct SamplerOptions {
    bool force_mcmc = false; // also keeps exactly sampleable Gaussian factors inside the chain
    std::size_t chains = 16;
    std::size_t burn_in = 500;
    std::size_t thinning = 10;
    double independence_fraction = 0.5; // share of moves drawn from the global proposal
    double rhat_limit = 1.01;
};

// |Psi|^2 samples. Gaussian functionals are sampled exactly; anything else by Metropolis
// with random-walk and independence moves. Inactive coordinates are set to zero.
Ensemble sample_equilibrium(const WaveFunctional& f, std::size_t n, std::uint64_t seed,
                            const SamplerOptions& options = {});

std::vector<std::uint8_t> active_coordinates(const WaveFunctional& f);

struct EvolveOptions {
    Tolerances tolerances;
    double max_flagged_fraction = 0.01;
};

struct EnsembleEvolution {
    std::vector<Ensemble> checkpoints; // unflagged members only, same member order at every time
    std::vector<std::size_t> kept;     // original indices of the unflagged members
    std::size_t flagged = 0;
    bool failed = false;
    std::string message;
    std::size_t steps = 0;
    std::size_t rejections = 0;
    std::size_t degenerate_events = 0;
    double projection_residual = 0.0;
};

// times[0] must equal the ensemble time.
EnsembleEvolution evolve_ensemble(const Ensemble& start, const TheoryModel& theory, const EvolvingFunctional& psi,
                                  std::span<const double> times, const EvolveOptions& options = {});

// A linear functional of the field coordinates, x -> direction . x
struct Marginal {
    std::string name;
    std::vector<double> direction;
};

// One marginal per active coordinate plus random unit projections over the active coordinates.
std::vector<Marginal> standard_marginals(const WaveFunctional& f, std::size_t projections, std::uint64_t seed);

// CDF of a marginal of |Psi|^2 where one is available without sampling: Gaussian functionals,
// excitations of degree at most one (any direction), and coordinate marginals of excitations
// touching at most six coordinates (Gauss-Hermite quadrature, tabulated).
std::optional<std::function<double(double)>> marginal_cdf(const WaveFunctional& f,
                                                          std::span<const double> direction);

struct EquivarianceOptions {
    double alpha = 0.01;
    std::size_t family_size = 0; // Bonferroni divisor; 0 means the number of marginals
    std::size_t reference_samples = 100000;
    std::uint64_t seed = 0;
};

struct EquivarianceReport {
    std::vector<std::string> names;
    std::vector<double> ks;
    std::vector<std::uint8_t> analytic;
    double critical = 0.0;    // one-sample critical value
    double worst_ratio = 0.0; // max over marginals of ks / its critical value
    bool pass = false;
};

EquivarianceReport equivariance_test(const Ensemble& ensemble, const WaveFunctional& f,
                                     const std::vector<Marginal>& marginals, const EquivarianceOptions& options = {});

struct CoarseGrainOptions {
    double bin_fraction = 0.05; // cell width in units of the equilibrium standard deviation
    double range = 6.0;         // cells cover mean +- range standard deviations, plus two tail cells
    double smoothing = 0.01;    // added to every cell count
    std::vector<std::size_t> coordinates; // empty means every active coordinate
};

struct CoarseGrainReport {
    double value = 0.0;
    std::vector<double> per_marginal;
    double noise_floor = 0.0; // expected value for an equilibrium ensemble of this size
};

CoarseGrainReport coarse_grained_h(const Ensemble& ensemble, const WaveFunctional& f,
                                   const CoarseGrainOptions& options = {});

struct Histogram {
    std::vector<double> edges;
    std::vector<double> counts;
    std::vector<double> density;
};
Histogram histogram(std::span<const double> values, std::size_t bins, double lo, double hi);

enum class Component { Real, Imag };

struct DerivedBeableResult {
    Histogram histogram;
    cplx mean = 0.0;
    double mean_error = 0.0; // standard error of the selected component
    std::size_t skipped = 0;
    std::vector<double> values;
};

DerivedBeableResult derived_beable_distribution(const Ensemble& ensemble, const WaveFunctional& f, LocalOperator op,
                                                const Vec3& point, Component component, std::size_t bins);

} // namespace pwf
