#include "pwf/mode_basis.hpp"

#include <algorithm>
#include <cmath>

namespace pwf {

namespace {

const Vec3 reference_axis{0.0, 0.0, 1.0};
const Vec3 fallback_axis{1.0, 0.0, 0.0};

Vec3 normalized(const Vec3& v)
{
    double n = std::sqrt(norm2(v));
    return {v[0] / n, v[1] / n, v[2] / n};
}

} // namespace

std::string to_string(FieldKind kind)
{
    switch (kind) {
    case FieldKind::ScalarReal: return "scalar-real";
    case FieldKind::ScalarComplex: return "scalar-complex";
    case FieldKind::VectorTransverse: return "vector-transverse";
    case FieldKind::VectorFull: return "vector-full";
    }
    return "unknown";
}

FieldKind field_kind_from_string(std::string_view name)
{
    if (name == "scalar-real") return FieldKind::ScalarReal;
    if (name == "scalar-complex") return FieldKind::ScalarComplex;
    if (name == "vector-transverse") return FieldKind::VectorTransverse;
    if (name == "vector-full") return FieldKind::VectorFull;
    throw ConfigError("unknown field kind '" + std::string(name) + "'");
}

bool momentum_precedes(const IVec3& a, const IVec3& b)
{
    for (int i = 0; i < 3; ++i) {
        if (a[i] >= b[i]) continue;
        bool dominated = true;
        for (int j = i + 1; j < 3; ++j)
            if (a[j] > b[j]) dominated = false;
        if (dominated) return true;
    }
    return false;
}

ModeBasis::ModeBasis(double box_length, double cutoff, FieldKind kind, ZeroMode zero, std::size_t mode_limit)
    : L_(box_length), cutoff_(cutoff), kind_(kind)
{
    if (!(box_length > 0.0) || !std::isfinite(box_length)) throw std::invalid_argument("box length must be positive");
    if (!(cutoff >= 0.0) || !std::isfinite(cutoff)) throw std::invalid_argument("cutoff must be non-negative");

    bool keep_zero = kind != FieldKind::VectorTransverse;
    if (zero == ZeroMode::Include) keep_zero = true;
    if (zero == ZeroMode::Exclude) keep_zero = false;
    if (kind == FieldKind::VectorTransverse && keep_zero)
        throw std::invalid_argument("vector-transverse basis has no zero mode");

    double radius = cutoff * L_ / (2.0 * pi);
    double r2 = radius * radius * (1.0 + 1e-12);
    int nmax = static_cast<int>(std::floor(radius * (1.0 + 1e-12)));
    double estimate = 4.0 / 3.0 * pi * std::pow(nmax + 1.0, 3);
    if (estimate > 8.0 * static_cast<double>(mode_limit) + 64.0)
        throw std::length_error("mode count exceeds the configured limit");

    for (int z = -nmax; z <= nmax; ++z)
        for (int y = -nmax; y <= nmax; ++y)
            for (int x = -nmax; x <= nmax; ++x) {
                double nn = double(x) * x + double(y) * y + double(z) * z;
                if (nn > r2) continue;
                if (nn == 0.0 && !keep_zero) continue;
                lattice_.push_back({x, y, z});
            }
    if (lattice_.size() > mode_limit) throw std::length_error("mode count exceeds the configured limit");

    std::sort(lattice_.begin(), lattice_.end(), momentum_precedes);
    for (std::size_t i = 0; i < lattice_.size(); ++i) lookup_[lattice_[i]] = i;

    std::size_t n = lattice_.size();
    partner_.resize(n);
    representative_.resize(n);
    polarization_.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const IVec3& a = lattice_[i];
        IVec3 neg{-a[0], -a[1], -a[2]};
        partner_[i] = lookup_.at(neg);
        bool is_zero = a[0] == 0 && a[1] == 0 && a[2] == 0;
        if (is_zero) zero_index_ = i;
        representative_[i] = is_zero || momentum_precedes(neg, a);

        if (is_zero) {
            polarization_[i] = {Vec3{1, 0, 0}, Vec3{0, 1, 0}, Vec3{0, 0, 1}};
            continue;
        }
        Vec3 khat = normalized(momentum(i));
        Vec3 ref = reference_axis;
        if (norm2(cross(khat, ref)) < 1e-20) ref = fallback_axis;
        double proj = dot(ref, khat);
        Vec3 e1 = normalized({ref[0] - proj * khat[0], ref[1] - proj * khat[1], ref[2] - proj * khat[2]});
        Vec3 e2 = cross(khat, e1);
        // flip on the non-representative member so that e2(-k) = e2(k)
        if (!representative_[i]) e2 = {-e2[0], -e2[1], -e2[2]};
        polarization_[i] = {e1, e2, khat};
    }

    int npol = polarizations();
    coord_of_mode_.assign(n, {-1, -1, -1, -1, -1, -1});
    for (std::size_t i = 0; i < n; ++i) {
        if (kind_ == FieldKind::ScalarComplex) {
            coord_of_mode_[i][0] = static_cast<long>(coords_.size());
            coords_.push_back({i, 0, 0});
            coord_of_mode_[i][1] = static_cast<long>(coords_.size());
            coords_.push_back({i, 0, 1});
            continue;
        }
        if (!representative_[i]) continue;
        bool is_zero = zero_index_ && *zero_index_ == i;
        for (int l = 0; l < npol; ++l) {
            if (is_zero) {
                coord_of_mode_[i][2 * l] = static_cast<long>(coords_.size());
                coords_.push_back({i, l, 2});
            } else {
                coord_of_mode_[i][2 * l] = static_cast<long>(coords_.size());
                coords_.push_back({i, l, 0});
                coord_of_mode_[i][2 * l + 1] = static_cast<long>(coords_.size());
                coords_.push_back({i, l, 1});
            }
        }
    }
}

int ModeBasis::polarizations() const
{
    switch (kind_) {
    case FieldKind::VectorTransverse: return 2;
    case FieldKind::VectorFull: return 3;
    default: return 1;
    }
}

Vec3 ModeBasis::momentum(std::size_t i) const
{
    double s = 2.0 * pi / L_;
    const IVec3& n = lattice_[i];
    return {s * n[0], s * n[1], s * n[2]};
}

std::optional<std::size_t> ModeBasis::index_of(const IVec3& n) const
{
    auto it = lookup_.find(n);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

long ModeBasis::coordinate_index(std::size_t mode, int pol, int part) const
{
    if (mode >= size() || pol < 0 || pol >= polarizations()) return -1;
    bool is_zero = zero_index_ && *zero_index_ == mode;
    if (kind_ != FieldKind::ScalarComplex && is_zero) return part == 2 ? coord_of_mode_[mode][2 * pol] : -1;
    if (part == 2) return -1;
    return coord_of_mode_[mode][2 * pol + part];
}

std::vector<cplx> ModeBasis::polarization_amplitudes(std::span<const double> x) const
{
    if (x.size() != dimension()) throw std::invalid_argument("coordinate vector does not match basis");
    int npol = polarizations();
    std::vector<cplx> q(size() * npol);
    const double r2 = std::sqrt(2.0);
    for (std::size_t i = 0; i < size(); ++i) {
        if (kind_ != FieldKind::ScalarComplex && !representative_[i]) continue;
        for (int l = 0; l < npol; ++l) {
            long ia = coordinate_index(i, l, 0);
            long ib = coordinate_index(i, l, 1);
            long iz = coordinate_index(i, l, 2);
            cplx v = iz >= 0 ? cplx(x[iz], 0.0) : cplx(x[ia], x[ib]) / r2;
            q[i * npol + l] = v;
            if (kind_ != FieldKind::ScalarComplex && partner_[i] != i)
                q[partner_[i] * npol + l] = pairing_sign(l) * std::conj(v);
        }
    }
    return q;
}

std::vector<cplx> ModeBasis::amplitudes(std::span<const double> x) const
{
    std::vector<cplx> q = polarization_amplitudes(x);
    if (!vector_field()) return q;
    int npol = polarizations();
    std::vector<cplx> a(size() * 3);
    for (std::size_t i = 0; i < size(); ++i)
        for (int l = 0; l < npol; ++l)
            for (int c = 0; c < 3; ++c) a[i * 3 + c] += q[i * npol + l] * polarization_[i][l][c];
    return a;
}

std::vector<double> ModeBasis::coordinates_from_amplitudes(std::span<const cplx> amps) const
{
    if (amps.size() != size() * components()) throw std::invalid_argument("amplitude array does not match basis");
    std::vector<double> x(dimension());
    const double r2 = std::sqrt(2.0);
    for (std::size_t j = 0; j < coords_.size(); ++j) {
        const Coordinate& c = coords_[j];
        cplx q;
        if (vector_field()) {
            const Vec3& e = polarization_[c.mode][c.pol];
            for (int k = 0; k < 3; ++k) q += e[k] * amps[c.mode * 3 + k];
        } else {
            q = amps[c.mode];
        }
        x[j] = c.part == 2 ? q.real() : (c.part == 0 ? r2 * q.real() : r2 * q.imag());
    }
    return x;
}

double ModeBasis::reality_residual(std::span<const cplx> amps) const
{
    if (!real_field()) return 0.0;
    int nc = components();
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < size(); ++i)
        for (int c = 0; c < nc; ++c) {
            worst = std::max(worst, std::abs(amps[i * nc + c] - std::conj(amps[partner_[i] * nc + c])));
            scale = std::max(scale, std::abs(amps[i * nc + c]));
        }
    return scale > 0.0 ? worst / scale : 0.0;
}

double ModeBasis::transversality_residual(std::span<const cplx> amps) const
{
    if (kind_ != FieldKind::VectorTransverse) return 0.0;
    double worst = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < size(); ++i) {
        const Vec3& khat = polarization_[i][2];
        cplx kA = khat[0] * amps[i * 3] + khat[1] * amps[i * 3 + 1] + khat[2] * amps[i * 3 + 2];
        worst = std::max(worst, std::abs(kA));
        for (int c = 0; c < 3; ++c) scale = std::max(scale, std::abs(amps[i * 3 + c]));
    }
    return scale > 0.0 ? worst / scale : 0.0;
}

void ModeBasis::coordinate_pattern(std::size_t j, const Vec3& point, cplx* out) const
{
    const Coordinate& c = coords_.at(j);
    Vec3 k = momentum(c.mode);
    double phase = dot(k, point);
    double norm = std::pow(L_, -1.5);
    cplx value;
    if (kind_ == FieldKind::ScalarComplex) {
        cplx e = std::polar(norm / std::sqrt(2.0), phase);
        value = c.part == 0 ? e : cplx(0.0, 1.0) * e;
    } else if (c.part == 2) {
        value = norm;
    } else {
        double r2 = std::sqrt(2.0) * norm;
        value = c.part == 0 ? r2 * std::cos(phase) : -r2 * std::sin(phase);
    }
    if (vector_field()) {
        const Vec3& e = polarization_[c.mode][c.pol];
        for (int a = 0; a < 3; ++a) out[a] = value * e[a];
    } else {
        out[0] = value;
    }
}

std::vector<cplx> reality_project(const ModeBasis& basis, std::span<const cplx> amps)
{
    std::vector<cplx> out(amps.begin(), amps.end());
    if (!basis.real_field()) return out;
    int nc = basis.components();
    for (std::size_t i = 0; i < basis.size(); ++i)
        for (int c = 0; c < nc; ++c)
            out[i * nc + c] = 0.5 * (amps[i * nc + c] + std::conj(amps[basis.partner(i) * nc + c]));
    return out;
}

std::vector<cplx> synthesize_field(const ModeBasis& basis, std::span<const cplx> amps, std::span<const Vec3> points,
                                   double tolerance)
{
    int nc = basis.components();
    if (amps.size() != basis.size() * nc) throw std::invalid_argument("amplitude array does not match basis");
    if (basis.reality_residual(amps) > tolerance) throw std::invalid_argument("amplitudes violate the reality condition");
    if (basis.transversality_residual(amps) > tolerance)
        throw std::invalid_argument("amplitudes violate transversality");
    double norm = std::pow(basis.box_length(), -1.5);
    std::vector<cplx> out(points.size() * nc);
    for (std::size_t p = 0; p < points.size(); ++p)
        for (std::size_t i = 0; i < basis.size(); ++i) {
            cplx e = std::polar(norm, dot(basis.momentum(i), points[p]));
            for (int c = 0; c < nc; ++c) out[p * nc + c] += e * amps[i * nc + c];
        }
    return out;
}

FieldSpace::FieldSpace(std::vector<std::pair<std::string, std::shared_ptr<const ModeBasis>>> sectors)
{
    for (auto& [name, basis] : sectors) {
        if (!basis) throw std::invalid_argument("null basis in field space");
        sectors_.push_back({name, basis, dim_});
        dim_ += basis->dimension();
    }
}

std::shared_ptr<const FieldSpace> FieldSpace::single(std::shared_ptr<const ModeBasis> basis, std::string name)
{
    return std::make_shared<const FieldSpace>(
        std::vector<std::pair<std::string, std::shared_ptr<const ModeBasis>>>{{std::move(name), std::move(basis)}});
}

const FieldSpace::Sector& FieldSpace::sector(std::string_view name) const
{
    for (const auto& s : sectors_)
        if (s.name == name) return s;
    throw std::out_of_range("no sector named '" + std::string(name) + "'");
}

std::pair<std::size_t, std::size_t> FieldSpace::locate(std::size_t j) const
{
    for (std::size_t s = sectors_.size(); s-- > 0;)
        if (j >= sectors_[s].offset) return {s, j - sectors_[s].offset};
    throw std::out_of_range("coordinate index out of range");
}

bool FieldSpace::same_layout(const FieldSpace& other) const
{
    if (this == &other) return true;
    if (sectors_.size() != other.sectors_.size()) return false;
    for (std::size_t s = 0; s < sectors_.size(); ++s) {
        const ModeBasis& a = *sectors_[s].basis;
        const ModeBasis& b = *other.sectors_[s].basis;
        if (a.kind() != b.kind() || a.size() != b.size() || a.box_length() != b.box_length() ||
            a.dimension() != b.dimension())
            return false;
    }
    return true;
}

FieldConfiguration FieldConfiguration::zero(std::shared_ptr<const FieldSpace> space)
{
    std::size_t d = space->dimension();
    return {std::move(space), std::vector<double>(d, 0.0)};
}

FieldConfiguration FieldConfiguration::from_amplitudes(std::shared_ptr<const FieldSpace> space,
                                                       std::span<const cplx> amps, double tolerance)
{
    if (space->sectors().size() != 1) throw std::invalid_argument("from_amplitudes expects a single-sector space");
    const ModeBasis& b = *space->sectors()[0].basis;
    if (amps.size() != b.size() * b.components()) throw std::invalid_argument("amplitude array does not match basis");
    if (b.reality_residual(amps) > tolerance) throw std::invalid_argument("amplitudes violate the reality condition");
    if (b.transversality_residual(amps) > tolerance) throw std::invalid_argument("amplitudes violate transversality");
    return {std::move(space), b.coordinates_from_amplitudes(amps)};
}

std::vector<cplx> FieldConfiguration::amplitudes(std::size_t sector) const
{
    const auto& s = space->sectors().at(sector);
    return s.basis->amplitudes(sector_coordinates(sector));
}

std::span<const double> FieldConfiguration::sector_coordinates(std::size_t sector) const
{
    const auto& s = space->sectors().at(sector);
    return std::span<const double>(x).subspan(s.offset, s.basis->dimension());
}

} // namespace pwf
