#pragma once

#include "pwf/common.hpp"

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pwf {

enum class FieldKind { ScalarReal, ScalarComplex, VectorTransverse, VectorFull };

// Default keeps k = 0 for scalar and vector-full kinds, drops it for
// vector-transverse. Theories with a 1/k^2 kernel request Exclude.
enum class ZeroMode { Default, Include, Exclude };

std::string to_string(FieldKind kind);
FieldKind field_kind_from_string(std::string_view name);

// k' < k if k'_i < k_i for some i and k'_j <= k_j for every j > i.
bool momentum_precedes(const IVec3& a, const IVec3& b);

// One real canonical coordinate. For a representative momentum k with complex
// amplitude q the pair is (sqrt2 Re q, sqrt2 Im q); a real zero mode carries q itself.
struct Coordinate {
    std::size_t mode;
    int pol;
    int part; // 0 = sqrt2 Re q, 1 = sqrt2 Im q, 2 = real amplitude
};

class ModeBasis {
public:
    static constexpr std::size_t default_mode_limit = 100000;

    ModeBasis(double box_length, double cutoff, FieldKind kind, ZeroMode zero = ZeroMode::Default,
              std::size_t mode_limit = default_mode_limit);

    double box_length() const { return L_; }
    double cutoff() const { return cutoff_; }
    FieldKind kind() const { return kind_; }
    bool real_field() const { return kind_ != FieldKind::ScalarComplex; }
    bool vector_field() const { return kind_ == FieldKind::VectorTransverse || kind_ == FieldKind::VectorFull; }
    bool has_zero_mode() const { return zero_index_.has_value(); }
    std::optional<std::size_t> zero_index() const { return zero_index_; }

    // polarizations carried per momentum: 1, 2 or 3
    int polarizations() const;
    // Cartesian components per momentum in amplitude arrays: 1 or 3
    int components() const { return vector_field() ? 3 : 1; }

    std::size_t size() const { return lattice_.size(); }
    const IVec3& lattice(std::size_t i) const { return lattice_[i]; }
    Vec3 momentum(std::size_t i) const;
    double k2(std::size_t i) const { return norm2(momentum(i)); }
    std::size_t partner(std::size_t i) const { return partner_[i]; }
    bool representative(std::size_t i) const { return representative_[i]; }
    const std::array<Vec3, 3>& polarization(std::size_t i) const { return polarization_[i]; }
    std::optional<std::size_t> index_of(const IVec3& n) const;

    // q_l(-k) = sign * conj(q_l(k)) for real fields; the longitudinal vector is odd in k.
    double pairing_sign(int pol) const { return (kind_ == FieldKind::VectorFull && pol == 2) ? -1.0 : 1.0; }

    std::size_t dimension() const { return coords_.size(); }
    const std::vector<Coordinate>& coordinates() const { return coords_; }
    // -1 when the combination has no coordinate
    long coordinate_index(std::size_t mode, int pol, int part) const;

    // Polarization amplitudes q_l(k) for every momentum, layout [mode * polarizations() + l].
    std::vector<cplx> polarization_amplitudes(std::span<const double> x) const;
    // Cartesian amplitudes for every momentum, layout [mode * components() + c].
    std::vector<cplx> amplitudes(std::span<const double> x) const;
    // Packs amplitudes into coordinates by reading the representatives.
    std::vector<double> coordinates_from_amplitudes(std::span<const cplx> amps) const;

    double reality_residual(std::span<const cplx> amps) const;
    double transversality_residual(std::span<const cplx> amps) const;

    // Derivative of the synthesized field at a point with respect to coordinate j,
    // written to out[0 .. components()).
    void coordinate_pattern(std::size_t j, const Vec3& point, cplx* out) const;

private:
    double L_;
    double cutoff_;
    FieldKind kind_;
    std::vector<IVec3> lattice_;
    std::vector<std::size_t> partner_;
    std::vector<bool> representative_;
    std::vector<std::array<Vec3, 3>> polarization_;
    std::optional<std::size_t> zero_index_;
    std::map<IVec3, std::size_t> lookup_;
    std::vector<Coordinate> coords_;
    std::vector<std::array<long, 6>> coord_of_mode_; // [pol * 2 + part] or part 2 stored at pol * 2
};

// Least-squares projection onto q(-k) = conj q(k); idempotent. Complex fields pass through.
std::vector<cplx> reality_project(const ModeBasis& basis, std::span<const cplx> amps);

// phi(x) = L^{-3/2} sum_k e^{ik.x} q_k, evaluated by direct summation. Output layout
// [point * components() + c]. Throws if a real-field input violates the reality
// condition or a transverse input has a longitudinal part.
std::vector<cplx> synthesize_field(const ModeBasis& basis, std::span<const cplx> amps, std::span<const Vec3> points,
                                   double tolerance = 1e-10);

// Ordered list of named field sectors; the flat coordinate vector concatenates them.
class FieldSpace {
public:
    struct Sector {
        std::string name;
        std::shared_ptr<const ModeBasis> basis;
        std::size_t offset;
    };

    explicit FieldSpace(std::vector<std::pair<std::string, std::shared_ptr<const ModeBasis>>> sectors);
    static std::shared_ptr<const FieldSpace> single(std::shared_ptr<const ModeBasis> basis, std::string name = "field");

    std::size_t dimension() const { return dim_; }
    const std::vector<Sector>& sectors() const { return sectors_; }
    const Sector& sector(std::string_view name) const;
    // (sector index, local coordinate index)
    std::pair<std::size_t, std::size_t> locate(std::size_t j) const;
    bool same_layout(const FieldSpace& other) const;

private:
    std::vector<Sector> sectors_;
    std::size_t dim_ = 0;
};

// A beable: one point of the truncated configuration space.
struct FieldConfiguration {
    std::shared_ptr<const FieldSpace> space;
    std::vector<double> x;

    static FieldConfiguration zero(std::shared_ptr<const FieldSpace> space);
    // Single-sector configuration from Cartesian amplitudes; the invariants are checked.
    static FieldConfiguration from_amplitudes(std::shared_ptr<const FieldSpace> space, std::span<const cplx> amps,
                                              double tolerance = 1e-10);

    std::vector<cplx> amplitudes(std::size_t sector = 0) const;
    std::span<const double> sector_coordinates(std::size_t sector) const;
};

} // namespace pwf
