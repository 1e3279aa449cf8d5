#include "pwf/theories.hpp"
#include "pwf/rng.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

namespace pwf {

namespace {

const cplx I{0.0, 1.0};

struct TheoryName {
    TheoryKind kind;
    const char* name;
};

constexpr TheoryName theory_names[] = {
    {TheoryKind::SchrodingerFieldBoson, "schrodinger-field"},
    {TheoryKind::FreeEM_Bohm, "free-em-bohm"},
    {TheoryKind::FreeEM_Valentini, "free-em-valentini"},
    {TheoryKind::MassiveSpin1, "massive-spin1"},
    {TheoryKind::ScalarQED, "scalar-qed"},
    {TheoryKind::AbelianHiggs, "abelian-higgs"},
    {TheoryKind::HiggsQuadratic, "higgs-quadratic"},
    {TheoryKind::NonRelParticles, "nonrel-particles"},
    {TheoryKind::QuarticDispersion, "quartic-dispersion"},
};

OscillatorData oscillator(double h, double kappa)
{
    OscillatorData o;
    o.h = h;
    o.kappa = kappa;
    o.omega = std::sqrt(h * kappa);
    // a coordinate without restoring force keeps unit width
    o.width = (h > 0.0 && kappa > 0.0) ? std::sqrt(kappa / h) : 1.0;
    return o;
}

// Massive vector field: transverse polarizations with k^2 + m^2, the longitudinal one
// with kinetic factor 1 + k^2/m^2 and potential m^2.
void push_massive_vector(const ModeBasis& b, double m, std::vector<OscillatorData>& out)
{
    for (const Coordinate& c : b.coordinates()) {
        double k2 = b.k2(c.mode);
        if (c.pol == 2) {
            OscillatorData o = oscillator(1.0 + k2 / (m * m), m * m);
            o.longitudinal = true;
            out.push_back(o);
        } else {
            out.push_back(oscillator(1.0, k2 + m * m));
        }
    }
}

using Sectors = std::vector<std::pair<std::string, std::shared_ptr<const ModeBasis>>>;

} // namespace

std::string to_string(TheoryKind kind)
{
    for (const auto& t : theory_names)
        if (t.kind == kind) return t.name;
    return "unknown";
}

TheoryKind theory_kind_from_string(std::string_view name)
{
    for (const auto& t : theory_names)
        if (name == t.name) return t.kind;
    throw ConfigError("unknown theory '" + std::string(name) + "'");
}

TheoryModel::TheoryModel(TheoryKind kind, TheoryParameters params, double box_length, double cutoff)
    : kind_(kind), params_(std::move(params))
{
    if (kind_ == TheoryKind::NonRelParticles || kind_ == TheoryKind::QuarticDispersion)
        throw std::invalid_argument(to_string(kind_) + " has no mode space");
    build_field_content(box_length, cutoff);
}

TheoryModel::TheoryModel(TheoryKind kind, TheoryParameters params) : kind_(kind), params_(std::move(params))
{
    if (kind_ == TheoryKind::QuarticDispersion && !(params_.alpha1 > 0.0 && params_.alpha2 > 0.0))
        throw std::invalid_argument("quartic dispersion needs alpha1 > 0 and alpha2 > 0");
    if (kind_ == TheoryKind::NonRelParticles) {
        if (params_.particle_masses.empty()) throw std::invalid_argument("particle theory needs at least one mass");
        for (double m : params_.particle_masses)
            if (!(m > 0.0)) throw std::invalid_argument("particle masses must be positive");
    }
    if (kind_ != TheoryKind::NonRelParticles && kind_ != TheoryKind::QuarticDispersion)
        throw std::invalid_argument(to_string(kind_) + " needs a box length and cutoff");
}

void TheoryModel::build_field_content(double L, double cutoff)
{
    Sectors sectors;
    const TheoryParameters& p = params_;
    switch (kind_) {
    case TheoryKind::SchrodingerFieldBoson: {
        if (!(p.m > 0.0)) throw std::invalid_argument("Schrodinger field needs m > 0");
        auto b = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::ScalarReal);
        for (const Coordinate& c : b->coordinates()) {
            double w = b->k2(c.mode) / (2.0 * p.m);
            osc_.push_back(oscillator(w, w));
        }
        sectors.emplace_back("field", b);
        break;
    }
    case TheoryKind::FreeEM_Bohm: {
        auto b = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::VectorTransverse);
        for (const Coordinate& c : b->coordinates()) osc_.push_back(oscillator(1.0, b->k2(c.mode)));
        sectors.emplace_back("A", b);
        break;
    }
    case TheoryKind::FreeEM_Valentini: {
        auto b = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::VectorFull, ZeroMode::Exclude);
        for (const Coordinate& c : b->coordinates()) {
            if (c.pol == 2) {
                // the longitudinal field carries no dynamics and the constraint keeps it out of Psi
                OscillatorData o = oscillator(1.0, 0.0);
                o.active = false;
                o.longitudinal = true;
                osc_.push_back(o);
            } else {
                osc_.push_back(oscillator(1.0, b->k2(c.mode)));
            }
        }
        sectors.emplace_back("A", b);
        break;
    }
    case TheoryKind::MassiveSpin1: {
        if (!(p.m > 0.0)) throw std::invalid_argument("massive spin-1 field needs m > 0");
        auto b = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::VectorFull, ZeroMode::Include);
        push_massive_vector(*b, p.m, osc_);
        sectors.emplace_back("A", b);
        break;
    }
    case TheoryKind::HiggsQuadratic: {
        double v = vev();
        double mv = p.e * v;
        if (!(mv > 0.0)) throw std::invalid_argument("quadratic Higgs sector needs e > 0 for a massive vector");
        auto eta = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::ScalarReal);
        for (const Coordinate& c : eta->coordinates()) osc_.push_back(oscillator(1.0, eta->k2(c.mode) + 2.0 * p.mu * p.mu));
        auto a = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::VectorFull, ZeroMode::Exclude);
        push_massive_vector(*a, mv, osc_);
        sectors.emplace_back("eta", eta);
        sectors.emplace_back("A", a);
        break;
    }
    case TheoryKind::ScalarQED:
    case TheoryKind::AbelianHiggs: {
        if (kind_ == TheoryKind::AbelianHiggs) vev();
        if (!(p.e >= 0.0)) throw std::invalid_argument("charge must be non-negative");
        auto phi = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::ScalarComplex);
        // free part of the matter Hamiltonian; the interaction terms are not quadratic
        double m2 = kind_ == TheoryKind::ScalarQED ? p.m * p.m : 0.0;
        for (const Coordinate& c : phi->coordinates()) osc_.push_back(oscillator(1.0, phi->k2(c.mode) + m2));
        auto a = std::make_shared<const ModeBasis>(L, cutoff, FieldKind::VectorTransverse);
        for (const Coordinate& c : a->coordinates()) osc_.push_back(oscillator(1.0, a->k2(c.mode)));
        sectors.emplace_back("phi", phi);
        sectors.emplace_back("A", a);
        break;
    }
    default: break;
    }
    for (const auto& o : osc_)
        if (!(o.h >= 0.0 && o.kappa >= 0.0) || !std::isfinite(o.h) || !std::isfinite(o.kappa))
            throw std::logic_error("kernel is not positive semidefinite");
    space_ = std::make_shared<const FieldSpace>(std::move(sectors));
}

bool TheoryModel::quadratic() const
{
    switch (kind_) {
    case TheoryKind::SchrodingerFieldBoson:
    case TheoryKind::FreeEM_Bohm:
    case TheoryKind::FreeEM_Valentini:
    case TheoryKind::MassiveSpin1:
    case TheoryKind::HiggsQuadratic: return true;
    default: return false;
    }
}

double TheoryModel::vev() const
{
    if (kind_ != TheoryKind::AbelianHiggs && kind_ != TheoryKind::HiggsQuadratic)
        throw std::invalid_argument("only Higgs theories have a vacuum expectation value");
    if (!(params_.lambda > 0.0)) throw std::invalid_argument("Higgs potential needs lambda > 0");
    if (!(params_.mu != 0.0)) throw std::invalid_argument("Higgs potential needs mu^2 > 0");
    return std::sqrt(params_.mu * params_.mu / params_.lambda);
}

std::array<double, 9> TheoryModel::cartesian_kernel(std::size_t sector, std::size_t mode) const
{
    const ModeBasis& b = *space_->sectors().at(sector).basis;
    if (!b.vector_field()) throw std::invalid_argument("cartesian kernel applies to vector sectors");
    Vec3 k = b.momentum(mode);
    double k2 = norm2(k);
    std::array<double, 9> K{};
    for (int i = 0; i < 3; ++i) K[i * 3 + i] = 1.0;
    if (kind_ == TheoryKind::FreeEM_Bohm || kind_ == TheoryKind::ScalarQED || kind_ == TheoryKind::AbelianHiggs) {
        if (k2 > 0.0)
            for (int i = 0; i < 3; ++i)
                for (int j = 0; j < 3; ++j) K[i * 3 + j] -= k[i] * k[j] / k2;
    } else if (kind_ == TheoryKind::MassiveSpin1 || kind_ == TheoryKind::HiggsQuadratic) {
        double m = kind_ == TheoryKind::MassiveSpin1 ? params_.m : params_.e * vev();
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) K[i * 3 + j] += k[i] * k[j] / (m * m);
    }
    return K;
}

// ---- guidance ----

namespace {

using SparseModes = std::map<IVec3, cplx>;

IVec3 add(const IVec3& a, const IVec3& b) { return {a[0] + b[0], a[1] + b[1], a[2] + b[2]}; }
IVec3 neg(const IVec3& a) { return {-a[0], -a[1], -a[2]}; }

// (fg)_k = L^{-3/2} sum_{k1 + k2 = k} f_{k1} g_{k2}
SparseModes convolve(const SparseModes& f, const SparseModes& g, double L)
{
    double s = std::pow(L, -1.5);
    SparseModes out;
    for (const auto& [k1, a] : f) {
        if (a == 0.0) continue;
        for (const auto& [k2, b] : g) out[add(k1, k2)] += s * a * b;
    }
    return out;
}

} // namespace

double coulomb_matter_velocity(const ModeBasis& b, double e, std::span<const double> x, std::span<const double> grad_s,
                               std::span<double> velocity)
{
    if (b.kind() != FieldKind::ScalarComplex) throw std::invalid_argument("Coulomb guidance needs a complex matter field");
    std::size_t n = b.size();
    if (x.size() != b.dimension() || grad_s.size() != b.dimension() || velocity.size() != b.dimension())
        throw std::invalid_argument("matter coordinates do not match the basis");
    const double r2 = std::sqrt(2.0);
    double L = b.box_length();
    double twopi_L = 2.0 * pi / L;

    std::vector<cplx> phi(n), d_phi(n), d_phistar(n);
    for (std::size_t i = 0; i < n; ++i) {
        long iu = b.coordinate_index(i, 0, 0), iv = b.coordinate_index(i, 0, 1);
        phi[i] = cplx(x[iu], x[iv]) / r2;
        d_phi[i] = cplx(grad_s[iu], -grad_s[iv]) / r2;    // dS/dphi_k
        d_phistar[i] = cplx(grad_s[iu], grad_s[iv]) / r2; // dS/dphi*_k
    }

    // field-space modes of phi, phi*, dS/dphi(x) and dS/dphi*(x)
    SparseModes Fphi, Fphis, Gphi, Gphis;
    for (std::size_t i = 0; i < n; ++i) {
        const IVec3& k = b.lattice(i);
        Fphi[k] = phi[i];
        Fphis[neg(k)] = std::conj(phi[i]);
        Gphi[neg(k)] = d_phi[i];
        Gphis[k] = d_phistar[i];
    }
    SparseModes charge = convolve(Fphi, Gphi, L);
    for (const auto& [k, v] : convolve(Fphis, Gphis, L)) charge[k] -= v;
    // inverse Laplacian, zero mode dropped
    for (auto& [k, v] : charge) {
        double k2 = twopi_L * twopi_L * (double(k[0]) * k[0] + double(k[1]) * k[1] + double(k[2]) * k[2]);
        v = k2 > 0.0 ? -v / k2 : cplx(0.0);
    }
    SparseModes term = convolve(Fphi, charge, L);
    SparseModes term_conj = convolve(Fphis, charge, L);

    double mismatch = 0.0, scale = 0.0;
    std::vector<cplx> phidot(n);
    for (std::size_t i = 0; i < n; ++i) {
        const IVec3& k = b.lattice(i);
        auto t = term.find(k);
        phidot[i] = d_phistar[i] + e * e * (t == term.end() ? cplx(0.0) : t->second);
        scale = std::max(scale, std::abs(phidot[i]));
    }
    for (std::size_t i = 0; i < n; ++i) {
        // mode k of phi*dot: dS/dphi(x) mode k is dS/dphi_{-k}; Coulomb term with the opposite sign
        const IVec3& k = b.lattice(i);
        auto mk = b.index_of(neg(k));
        if (!mk) continue;
        auto t = term_conj.find(k);
        cplx phistar_dot = d_phi[*mk] - e * e * (t == term_conj.end() ? cplx(0.0) : t->second);
        mismatch = std::max(mismatch, std::abs(phistar_dot - std::conj(phidot[*mk])));
    }
    for (std::size_t i = 0; i < n; ++i) {
        velocity[b.coordinate_index(i, 0, 0)] = r2 * phidot[i].real();
        velocity[b.coordinate_index(i, 0, 1)] = r2 * phidot[i].imag();
    }
    return scale > 0.0 ? mismatch / scale : mismatch;
}

void guidance_velocity(const TheoryModel& theory, std::span<const double> x, std::span<const cplx> grad_log_psi,
                       std::span<double> velocity)
{
    if (!theory.field_theory()) throw std::invalid_argument("mode-space guidance needs a field theory");
    const FieldSpace& space = *theory.space();
    std::size_t d = space.dimension();
    if (x.size() != d || grad_log_psi.size() != d || velocity.size() != d)
        throw std::invalid_argument("field content does not match the theory");
    const auto& osc = theory.oscillators();
    for (std::size_t j = 0; j < d; ++j) velocity[j] = osc[j].active ? osc[j].h * grad_log_psi[j].imag() : 0.0;

    if (!theory.coulomb_coupled()) return;
    const auto& sec = space.sector("phi");
    std::size_t m = sec.basis->dimension();
    std::vector<double> gs(m);
    for (std::size_t j = 0; j < m; ++j) gs[j] = grad_log_psi[sec.offset + j].imag();
    double mismatch = coulomb_matter_velocity(*sec.basis, theory.params().e, x.subspan(sec.offset, m), gs,
                                              velocity.subspan(sec.offset, m));
    if (mismatch > 1e-9) throw std::runtime_error("matter guidance equations are not mutually conjugate");
}

std::vector<double> guidance_velocity(const TheoryModel& theory, const WaveFunctional& f,
                                      const FieldConfiguration& config)
{
    if (!theory.field_theory() || !f.space()->same_layout(*theory.space()) || config.x.size() != f.dimension())
        throw std::invalid_argument("functional does not match the theory's field content");
    std::vector<cplx> g(f.dimension());
    log_psi_gradient(f, config.x, g);
    std::vector<double> v(g.size());
    guidance_velocity(theory, config.x, g, v);
    return v;
}

// ---- electromagnetic helpers ----

ValentiniSplit valentini_split(const ModeBasis& b, std::span<const cplx> a)
{
    if (b.kind() != FieldKind::VectorFull) throw std::invalid_argument("split needs a vector-full basis");
    if (b.has_zero_mode()) throw std::invalid_argument("split is undefined at k = 0");
    if (a.size() != b.size() * 3) throw std::invalid_argument("amplitude array does not match basis");
    ValentiniSplit out;
    out.transverse.resize(a.size());
    out.longitudinal.resize(a.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        const Vec3& k = b.polarization(i)[2];
        cplx kA = k[0] * a[i * 3] + k[1] * a[i * 3 + 1] + k[2] * a[i * 3 + 2];
        for (int c = 0; c < 3; ++c) {
            out.longitudinal[i * 3 + c] = k[c] * kA;
            out.transverse[i * 3 + c] = a[i * 3 + c] - k[c] * kA;
        }
    }
    return out;
}

ValentiniSplit valentini_split(const FieldConfiguration& config)
{
    return valentini_split(*config.space->sectors().at(0).basis, config.amplitudes(0));
}

std::vector<cplx> magnetic_field_modes(const ModeBasis& b, std::span<const cplx> a)
{
    if (!b.vector_field()) throw std::invalid_argument("magnetic field needs a vector basis");
    if (a.size() != b.size() * 3) throw std::invalid_argument("amplitude array does not match basis");
    std::vector<cplx> out(a.size());
    for (std::size_t i = 0; i < b.size(); ++i) {
        Vec3 k = b.momentum(i);
        out[i * 3 + 0] = I * (k[1] * a[i * 3 + 2] - k[2] * a[i * 3 + 1]);
        out[i * 3 + 1] = I * (k[2] * a[i * 3 + 0] - k[0] * a[i * 3 + 2]);
        out[i * 3 + 2] = I * (k[0] * a[i * 3 + 1] - k[1] * a[i * 3 + 0]);
    }
    return out;
}

// ---- Higgs ----

HiggsSpectrum higgs_quadratic_spectrum(double mu, double lambda, double e, const ModeBasis& basis)
{
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    if (!(mu * mu > 0.0)) throw std::invalid_argument("mu^2 must be positive");
    if (!(e >= 0.0)) throw std::invalid_argument("charge must be non-negative");
    HiggsSpectrum s;
    s.v = std::sqrt(mu * mu / lambda);
    s.scalar_mass = std::sqrt(2.0 * mu * mu);
    s.vector_mass = std::sqrt(e * e * s.v * s.v);
    for (std::size_t i = 0; i < basis.size(); ++i) {
        double k = std::sqrt(basis.k2(i));
        s.scalar.push_back({basis.lattice(i), k, std::sqrt(k * k + s.scalar_mass * s.scalar_mass)});
        s.vector.push_back({basis.lattice(i), k, std::sqrt(k * k + s.vector_mass * s.vector_mass)});
    }
    return s;
}

std::vector<double> HiggsFieldMap::apply_linear(std::span<const double> x) const
{
    if (x.size() != cols) throw std::invalid_argument("input does not match the map");
    std::vector<double> y(rows, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) y[r] += matrix[r * cols + c] * x[c];
    return y;
}

std::vector<double> HiggsFieldMap::apply(std::span<const double> x) const
{
    std::vector<double> y = apply_linear(x);
    for (std::size_t r = 0; r < rows; ++r) y[r] += offset[r];
    return y;
}

std::vector<double> HiggsFieldMap::apply_transpose(std::span<const double> y) const
{
    if (y.size() != rows) throw std::invalid_argument("input does not match the map");
    std::vector<double> x(cols, 0.0);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) x[c] += matrix[r * cols + c] * y[r];
    return x;
}

namespace {

// (phi, A^T) coordinates -> (eta, A) coordinates, with the vacuum shift applied when shift is set.
std::vector<double> higgs_forward(const FieldSpace& full, const FieldSpace& quad, double e, double v,
                                  std::span<const double> x, bool shift)
{
    const auto& phi_s = full.sector("phi");
    const auto& at_s = full.sector("A");
    const auto& eta_s = quad.sector("eta");
    const auto& a_s = quad.sector("A");
    const ModeBasis& pb = *phi_s.basis;
    const ModeBasis& tb = *at_s.basis;
    const ModeBasis& eb = *eta_s.basis;
    const ModeBasis& ab = *a_s.basis;
    double L = pb.box_length();
    const double r2 = std::sqrt(2.0);

    std::vector<cplx> phi = pb.polarization_amplitudes(x.subspan(phi_s.offset, pb.dimension()));
    std::vector<cplx> at = tb.polarization_amplitudes(x.subspan(at_s.offset, tb.dimension()));

    std::vector<cplx> eta(eb.size()), xi(eb.size());
    for (std::size_t i = 0; i < eb.size(); ++i) {
        auto p = pb.index_of(eb.lattice(i));
        auto pm = pb.index_of(neg(eb.lattice(i)));
        if (!p || !pm) throw std::invalid_argument("Higgs bases do not share momenta");
        eta[i] = (phi[*p] + std::conj(phi[*pm])) / r2;
        xi[i] = (phi[*p] - std::conj(phi[*pm])) / (r2 * I);
        bool zero = eb.lattice(i) == IVec3{0, 0, 0};
        if (zero && shift) eta[i] -= v * std::pow(L, 1.5);
    }

    std::vector<double> y(quad.dimension(), 0.0);
    std::vector<double> ye = eb.coordinates_from_amplitudes(eta);
    std::copy(ye.begin(), ye.end(), y.begin() + eta_s.offset);

    std::vector<cplx> a(ab.size() * 3);
    for (std::size_t i = 0; i < ab.size(); ++i) {
        auto t = tb.index_of(ab.lattice(i));
        auto s = eb.index_of(ab.lattice(i));
        if (!t || !s) throw std::invalid_argument("Higgs bases do not share momenta");
        Vec3 k = ab.momentum(i);
        const auto& pol = tb.polarization(*t);
        for (int c = 0; c < 3; ++c) {
            cplx v_t = at[*t * 2] * pol[0][c] + at[*t * 2 + 1] * pol[1][c];
            cplx v_l = -I * k[c] * xi[*s] / (e * v);
            a[i * 3 + c] = v_t + v_l;
        }
    }
    std::vector<double> ya = ab.coordinates_from_amplitudes(a);
    std::copy(ya.begin(), ya.end(), y.begin() + a_s.offset);
    return y;
}

} // namespace

HiggsFieldMap higgs_field_map(const TheoryModel& full, const TheoryModel& quadratic)
{
    if (full.kind() != TheoryKind::AbelianHiggs || quadratic.kind() != TheoryKind::HiggsQuadratic)
        throw std::invalid_argument("map needs an Abelian Higgs theory and its quadratic sector");
    const auto& pf = full.params();
    const auto& pq = quadratic.params();
    if (pf.mu != pq.mu || pf.lambda != pq.lambda || pf.e != pq.e)
        throw std::invalid_argument("theories use different parameters");
    double v = full.vev();
    double e = pf.e;
    const FieldSpace& fs = *full.space();
    const FieldSpace& qs = *quadratic.space();

    HiggsFieldMap map;
    map.cols = fs.dimension();
    map.rows = qs.dimension();
    map.matrix.assign(map.rows * map.cols, 0.0);
    std::vector<double> unit(map.cols, 0.0);
    for (std::size_t c = 0; c < map.cols; ++c) {
        unit[c] = 1.0;
        std::vector<double> col = higgs_forward(fs, qs, e, v, unit, false);
        for (std::size_t r = 0; r < map.rows; ++r) map.matrix[r * map.cols + c] = col[r];
        unit[c] = 0.0;
    }
    map.offset = higgs_forward(fs, qs, e, v, unit, true);
    return map;
}

std::vector<LinearizationProbe> higgs_linearization_scan(const TheoryModel& full, const TheoryModel& quadratic,
                                                         std::span<const double> amplitudes, std::uint64_t seed)
{
    HiggsFieldMap map = higgs_field_map(full, quadratic);
    std::size_t dx = map.cols, dy = map.rows;

    SeedTree seeds(seed);
    auto rng = seeds.engine("higgs-linearization");
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> uni(0.0, 1.0);

    std::vector<cplx> width(dy);
    std::vector<double> center(dy), momentum(dy);
    for (std::size_t j = 0; j < dy; ++j) {
        width[j] = cplx(0.5 + 1.5 * uni(rng), uni(rng) - 0.5);
        center[j] = normal(rng);
        momentum[j] = normal(rng);
    }
    std::vector<double> direction(dx);
    for (auto& d : direction) d = normal(rng);

    // vacuum configuration: phi = v / sqrt2 as a constant field
    const auto& phi_s = full.space()->sector("phi");
    std::vector<double> x_vac(dx, 0.0);
    x_vac[phi_s.offset + phi_s.basis->coordinate_index(*phi_s.basis->zero_index(), 0, 0)] =
        full.vev() * std::pow(phi_s.basis->box_length(), 1.5);

    std::vector<LinearizationProbe> out;
    for (double eps : amplitudes) {
        std::vector<double> x(dx);
        for (std::size_t j = 0; j < dx; ++j) x[j] = x_vac[j] + eps * direction[j];
        std::vector<double> y = map.apply(x);
        std::vector<double> gy(dy);
        std::vector<cplx> gy_c(dy);
        for (std::size_t j = 0; j < dy; ++j) {
            gy[j] = (-width[j] * (y[j] - eps * center[j])).imag() + eps * momentum[j];
            gy_c[j] = cplx(0.0, gy[j]);
        }
        std::vector<double> gx = map.apply_transpose(gy);
        std::vector<cplx> gx_c(dx);
        for (std::size_t j = 0; j < dx; ++j) gx_c[j] = cplx(0.0, gx[j]);

        std::vector<double> vx(dx), vy_quad(dy);
        guidance_velocity(full, x, gx_c, vx);
        guidance_velocity(quadratic, y, gy_c, vy_quad);
        std::vector<double> vy_full = map.apply_linear(vx);
        double num = 0.0, den = 0.0;
        for (std::size_t j = 0; j < dy; ++j) {
            num += (vy_full[j] - vy_quad[j]) * (vy_full[j] - vy_quad[j]);
            den += vy_quad[j] * vy_quad[j];
        }
        out.push_back({eps, std::sqrt(num / den)});
    }
    return out;
}

} // namespace pwf
