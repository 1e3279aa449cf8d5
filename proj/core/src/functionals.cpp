#include "pwf/functionals.hpp"
#include "pwf/theories.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace pwf {

namespace {

constexpr double node_tolerance = 1e-14;
const cplx I{0.0, 1.0};

struct GaussCoord {
    cplx w;
    double c, p, theta;
};

// Exact flow of one oscillator coordinate. The width follows the Riccati equation
// dw/dt = -i h w^2 + i kappa, the centre and momentum follow the classical orbit, and
// the phase keeps a continuous branch of arg D with the zero-point rotation removed.
GaussCoord evolve_coordinate(const GaussCoord& g, double h, double kappa, double dt)
{
    if (dt == 0.0 || (h == 0.0 && kappa == 0.0)) return g;
    double omega = std::sqrt(h * kappa);
    double co, s;
    if (omega > 0.0) {
        co = std::cos(omega * dt);
        s = std::sin(omega * dt) / omega;
    } else {
        co = 1.0;
        s = dt;
    }
    cplx D = co + I * h * g.w * s;
    GaussCoord out;
    out.w = (g.w * co + I * kappa * s) / D;
    out.c = g.c * co + h * g.p * s;
    out.p = g.p * co - kappa * g.c * s;
    double argD;
    if (omega > 0.0) {
        double turns = std::floor(omega * dt / pi);
        double r = omega * dt - turns * pi;
        cplx Dr = std::cos(r) + I * h * g.w * (std::sin(r) / omega);
        argD = turns * pi + std::atan2(Dr.imag(), Dr.real());
    } else {
        argD = std::atan2(D.imag(), D.real());
    }
    out.theta = g.theta + 0.5 * (out.p * out.c - g.p * g.c) - 0.5 * argD + 0.5 * omega * dt;
    return out;
}

double log_hermite_norm(cplx w) { return 0.25 * std::log(w.real() / pi); }

// Normalized Hermite functions h_n(y), n = 0..nmax.
void hermite_table(double y, int nmax, double* out)
{
    out[0] = 1.0;
    if (nmax >= 1) out[1] = std::sqrt(2.0) * y;
    for (int n = 1; n < nmax; ++n)
        out[n + 1] = std::sqrt(2.0 / (n + 1)) * y * out[n] - std::sqrt(double(n) / (n + 1)) * out[n - 1];
}

} // namespace

int FockPolynomial::degree(std::size_t term) const
{
    int d = 0;
    for (std::uint32_t e = start[term]; e < start[term + 1]; ++e) d += power[e];
    return d;
}

void FockPolynomial::add_term(const std::vector<std::pair<std::uint32_t, std::uint16_t>>& occupation, cplx c)
{
    for (const auto& [j, n] : occupation) {
        if (n == 0) continue;
        coord.push_back(j);
        power.push_back(n);
    }
    start.push_back(static_cast<std::uint32_t>(coord.size()));
    coeff.push_back(c);
}

void FockPolynomial::finalize(std::size_t dimension)
{
    slot.assign(dimension, -1);
    used.clear();
    used_max.clear();
    for (std::size_t e = 0; e < coord.size(); ++e) {
        std::uint32_t j = coord[e];
        if (j >= dimension) throw std::invalid_argument("Fock term refers to a missing coordinate");
        if (slot[j] < 0) {
            slot[j] = static_cast<std::int32_t>(used.size());
            used.push_back(j);
            used_max.push_back(0);
        }
        used_max[slot[j]] = std::max(used_max[slot[j]], power[e]);
    }
}

const std::shared_ptr<const FieldSpace>& WaveFunctional::space() const
{
    if (auto g = std::get_if<GaussianFunctional>(&v)) return g->space;
    if (auto e = std::get_if<ExcitedFunctional>(&v)) return e->vacuum.space;
    const auto& s = std::get<SuperpositionFunctional>(v);
    return s.components.front().space();
}

double WaveFunctional::time() const
{
    if (auto g = std::get_if<GaussianFunctional>(&v)) return g->time;
    if (auto e = std::get_if<ExcitedFunctional>(&v)) return e->vacuum.time;
    return std::get<SuperpositionFunctional>(v).components.front().time();
}

// Evolution data mirroring the functional tree.
struct EvolvingFunctional::Node {
    std::vector<double> h, kappa;           // Gaussian coordinates
    std::vector<double> energy;             // Fock terms
    std::vector<std::shared_ptr<const Node>> children;
};

namespace {

using Node = EvolvingFunctional::Node;

cplx eval_gaussian(const GaussianFunctional& g, const Node* node, double dt, std::span<const double> x,
                   cplx* grad)
{
    cplx total = 0.0;
    bool moving = node && dt != 0.0;
    for (std::size_t j = 0; j < g.dimension(); ++j) {
        if (!g.active[j]) {
            if (grad) grad[j] = 0.0;
            continue;
        }
        GaussCoord c{g.width[j], g.center[j], g.momentum[j], g.phase[j]};
        if (moving) c = evolve_coordinate(c, node->h[j], node->kappa[j], dt);
        double d = x[j] - c.c;
        total += -0.5 * c.w * d * d + I * (c.p * d + c.theta) + log_hermite_norm(c.w);
        if (grad) grad[j] = -c.w * d + I * c.p;
    }
    return total;
}

cplx eval_excited(const ExcitedFunctional& e, const Node* node, double dt, std::span<const double> x, cplx* grad)
{
    const FockPolynomial& P = e.poly;
    cplx log_vac = eval_gaussian(e.vacuum, nullptr, 0.0, x, grad);

    std::size_t nu = P.used.size();
    // per used coordinate: values h_0..h_max then derivatives
    thread_local std::vector<double> table;
    thread_local std::vector<std::size_t> offs;
    offs.resize(nu + 1);
    offs[0] = 0;
    for (std::size_t u = 0; u < nu; ++u) offs[u + 1] = offs[u] + 2 * (P.used_max[u] + 1);
    table.resize(offs[nu]);
    for (std::size_t u = 0; u < nu; ++u) {
        std::uint32_t j = P.used[u];
        double sl = std::sqrt(e.vacuum.width[j].real());
        int nmax = P.used_max[u];
        double* h = table.data() + offs[u];
        double* dh = h + nmax + 1;
        hermite_table(sl * x[j], nmax, h);
        dh[0] = 0.0;
        for (int n = 1; n <= nmax; ++n) dh[n] = sl * std::sqrt(2.0 * n) * h[n - 1];
    }

    thread_local std::vector<cplx> gpoly;
    thread_local std::vector<cplx> prefix;
    gpoly.assign(nu, 0.0);
    cplx value = 0.0;
    double scale = 0.0;
    bool moving = node && dt != 0.0;
    for (std::size_t t = 0; t < P.terms(); ++t) {
        cplx c = P.coeff[t];
        if (moving) c *= std::polar(1.0, -node->energy[t] * dt);
        std::uint32_t b = P.start[t], en = P.start[t + 1];
        std::size_t len = en - b;
        prefix.resize(len + 1);
        prefix[0] = c;
        for (std::size_t k = 0; k < len; ++k) {
            std::size_t u = P.slot[P.coord[b + k]];
            prefix[k + 1] = prefix[k] * table[offs[u] + P.power[b + k]];
        }
        value += prefix[len];
        scale += std::abs(prefix[len]);
        if (grad) {
            cplx suffix = 1.0;
            for (std::size_t k = len; k-- > 0;) {
                std::size_t u = P.slot[P.coord[b + k]];
                int n = P.power[b + k];
                const double* h = table.data() + offs[u];
                const double* dh = h + P.used_max[u] + 1;
                gpoly[u] += prefix[k] * dh[n] * suffix;
                suffix *= h[n];
            }
        }
    }
    if (value == 0.0 || std::abs(value) <= node_tolerance * scale)
        throw DegeneratePoint("excited functional vanishes at the configuration");
    if (grad)
        for (std::size_t u = 0; u < nu; ++u) grad[P.used[u]] += gpoly[u] / value;
    return log_vac + std::log(value);
}

cplx eval_rec(const WaveFunctional& f, const Node* node, double dt, std::span<const double> x, cplx* grad);

cplx eval_super(const SuperpositionFunctional& s, const Node* node, double dt, std::span<const double> x, cplx* grad)
{
    std::size_t n = s.components.size();
    std::size_t d = x.size();
    std::vector<cplx> logs(n);
    std::vector<cplx> grads(grad ? n * d : 0);
    double top = -std::numeric_limits<double>::infinity();
    std::vector<bool> live(n, false);
    for (std::size_t i = 0; i < n; ++i) {
        if (s.weights[i] == 0.0) continue;
        const Node* child = node ? node->children[i].get() : nullptr;
        try {
            logs[i] = std::log(s.weights[i]) + eval_rec(s.components[i], child, dt, x, grad ? grads.data() + i * d : nullptr);
        } catch (const DegeneratePoint&) {
            continue; // a component node contributes zero amplitude
        }
        live[i] = true;
        top = std::max(top, logs[i].real());
    }
    cplx sum = 0.0;
    double scale = 0.0;
    std::vector<cplx> terms(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        if (!live[i]) continue;
        terms[i] = std::exp(logs[i] - top);
        sum += terms[i];
        scale += std::abs(terms[i]);
    }
    if (scale == 0.0 || std::abs(sum) <= node_tolerance * scale)
        throw DegeneratePoint("superposition vanishes at the configuration");
    if (grad) {
        std::fill(grad, grad + d, cplx(0.0));
        for (std::size_t i = 0; i < n; ++i) {
            if (!live[i]) continue;
            cplx r = terms[i] / sum;
            for (std::size_t j = 0; j < d; ++j) grad[j] += r * grads[i * d + j];
        }
    }
    return top + std::log(sum);
}

cplx eval_rec(const WaveFunctional& f, const Node* node, double dt, std::span<const double> x, cplx* grad)
{
    if (auto g = std::get_if<GaussianFunctional>(&f.v)) return eval_gaussian(*g, node, dt, x, grad);
    if (auto e = std::get_if<ExcitedFunctional>(&f.v)) return eval_excited(*e, node, dt, x, grad);
    return eval_super(std::get<SuperpositionFunctional>(f.v), node, dt, x, grad);
}

void check_stationary_vacuum(const GaussianFunctional& vac, const TheoryModel& theory)
{
    const auto& osc = theory.oscillators();
    for (std::size_t j = 0; j < vac.dimension(); ++j) {
        if (!vac.active[j]) continue;
        if (std::abs(vac.width[j] - osc[j].width) > 1e-9 * osc[j].width || vac.center[j] != 0.0 ||
            vac.momentum[j] != 0.0)
            throw std::invalid_argument("excitations must sit on the theory's vacuum");
    }
}

std::shared_ptr<const Node> build_node(const WaveFunctional& f, const TheoryModel& theory)
{
    auto node = std::make_shared<Node>();
    const auto& osc = theory.oscillators();
    if (!f.space()->same_layout(*theory.space())) throw std::invalid_argument("functional does not match the theory");
    if (auto g = std::get_if<GaussianFunctional>(&f.v)) {
        for (std::size_t j = 0; j < g->dimension(); ++j) {
            node->h.push_back(osc[j].h);
            node->kappa.push_back(osc[j].kappa);
        }
    } else if (auto e = std::get_if<ExcitedFunctional>(&f.v)) {
        check_stationary_vacuum(e->vacuum, theory);
        const FockPolynomial& P = e->poly;
        for (std::size_t t = 0; t < P.terms(); ++t) {
            double E = 0.0;
            for (std::uint32_t k = P.start[t]; k < P.start[t + 1]; ++k) E += P.power[k] * osc[P.coord[k]].omega;
            node->energy.push_back(E);
        }
    } else {
        for (const auto& c : std::get<SuperpositionFunctional>(f.v).components) node->children.push_back(build_node(c, theory));
    }
    return node;
}

WaveFunctional materialize(const WaveFunctional& f, const Node& node, double dt)
{
    if (auto g = std::get_if<GaussianFunctional>(&f.v)) {
        GaussianFunctional out = *g;
        for (std::size_t j = 0; j < g->dimension(); ++j) {
            if (!g->active[j]) continue;
            GaussCoord c = evolve_coordinate({g->width[j], g->center[j], g->momentum[j], g->phase[j]}, node.h[j],
                                             node.kappa[j], dt);
            out.width[j] = c.w;
            out.center[j] = c.c;
            out.momentum[j] = c.p;
            out.phase[j] = c.theta;
        }
        out.time += dt;
        return out;
    }
    if (auto e = std::get_if<ExcitedFunctional>(&f.v)) {
        ExcitedFunctional out = *e;
        for (std::size_t t = 0; t < out.poly.terms(); ++t) out.poly.coeff[t] *= std::polar(1.0, -node.energy[t] * dt);
        out.vacuum.time += dt;
        return out;
    }
    SuperpositionFunctional out = std::get<SuperpositionFunctional>(f.v);
    for (std::size_t i = 0; i < out.components.size(); ++i)
        out.components[i] = materialize(out.components[i], *node.children[i], dt);
    return out;
}

// ---- inner products ----

cplx gaussian_overlap(const GaussianFunctional& a, const GaussianFunctional& b)
{
    if (a.dimension() != b.dimension()) throw std::invalid_argument("functionals of different dimension");
    cplx log_total = 0.0;
    for (std::size_t j = 0; j < a.dimension(); ++j) {
        if (a.active[j] != b.active[j]) throw std::invalid_argument("functionals differ in their active coordinates");
        if (!a.active[j]) continue;
        cplx w1 = std::conj(a.width[j]), w2 = b.width[j];
        double c1 = a.center[j], c2 = b.center[j], p1 = a.momentum[j], p2 = b.momentum[j];
        cplx A = w1 + w2;
        cplx B = w1 * c1 + w2 * c2 - I * p1 + I * p2;
        cplx C = -0.5 * w1 * c1 * c1 - 0.5 * w2 * c2 * c2 + I * (p1 * c1 - p2 * c2) + I * (b.phase[j] - a.phase[j]);
        log_total += 0.5 * std::log(2.0 * pi / A) + B * B / (2.0 * A) + C + log_hermite_norm(a.width[j]) +
                     log_hermite_norm(b.width[j]);
    }
    return std::exp(log_total);
}

using OccKey = std::vector<std::pair<std::uint32_t, std::uint16_t>>;

OccKey term_key(const FockPolynomial& P, std::size_t t)
{
    OccKey k;
    for (std::uint32_t e = P.start[t]; e < P.start[t + 1]; ++e) k.emplace_back(P.coord[e], P.power[e]);
    std::sort(k.begin(), k.end());
    return k;
}

void check_same_vacuum(const GaussianFunctional& a, const GaussianFunctional& b)
{
    for (std::size_t j = 0; j < a.dimension(); ++j) {
        if (a.active[j] != b.active[j]) throw std::invalid_argument("functionals differ in their active coordinates");
        if (a.active[j] && std::abs(a.width[j] - b.width[j]) > 1e-12 * std::abs(a.width[j]))
            throw std::invalid_argument("inner product needs a common vacuum");
    }
}

cplx excited_excited(const ExcitedFunctional& a, const ExcitedFunctional& b)
{
    check_same_vacuum(a.vacuum, b.vacuum);
    std::map<OccKey, cplx> left;
    for (std::size_t t = 0; t < a.poly.terms(); ++t) left[term_key(a.poly, t)] += a.poly.coeff[t];
    cplx sum = 0.0;
    std::map<OccKey, cplx> right;
    for (std::size_t t = 0; t < b.poly.terms(); ++t) right[term_key(b.poly, t)] += b.poly.coeff[t];
    for (const auto& [k, c] : right) {
        auto it = left.find(k);
        if (it != left.end()) sum += std::conj(it->second) * c;
    }
    return sum;
}

// <excited | gaussian> for a Gaussian whose widths equal the excited vacuum widths.
cplx excited_gaussian(const ExcitedFunctional& a, const GaussianFunctional& g)
{
    check_same_vacuum(a.vacuum, g);
    std::size_t d = g.dimension();
    std::vector<cplx> beta(d);
    cplx log_base = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        if (!g.active[j]) continue;
        double sl = std::sqrt(g.width[j].real());
        beta[j] = (sl * g.center[j] + I * g.momentum[j] / sl) / std::sqrt(2.0);
        log_base += I * (g.phase[j] - 0.5 * g.center[j] * g.momentum[j]) - 0.5 * std::norm(beta[j]);
    }
    cplx sum = 0.0;
    for (std::size_t t = 0; t < a.poly.terms(); ++t) {
        cplx term = std::conj(a.poly.coeff[t]);
        for (std::uint32_t e = a.poly.start[t]; e < a.poly.start[t + 1]; ++e) {
            int n = a.poly.power[e];
            term *= std::pow(beta[a.poly.coord[e]], n) / std::sqrt(std::tgamma(n + 1.0));
        }
        sum += term;
    }
    return std::exp(log_base) * sum;
}

} // namespace

cplx log_psi(const WaveFunctional& f, std::span<const double> x)
{
    if (x.size() != f.dimension()) throw std::invalid_argument("configuration does not match functional");
    return eval_rec(f, nullptr, 0.0, x, nullptr);
}

cplx log_psi_gradient(const WaveFunctional& f, std::span<const double> x, std::span<cplx> grad)
{
    if (x.size() != f.dimension() || grad.size() != f.dimension())
        throw std::invalid_argument("configuration does not match functional");
    return eval_rec(f, nullptr, 0.0, x, grad.data());
}

namespace {
void check_config(const WaveFunctional& f, const FieldConfiguration& config)
{
    if (!config.space || !config.space->same_layout(*f.space()) || config.x.size() != f.dimension())
        throw std::invalid_argument("configuration and functional live on different bases");
}
} // namespace

Evaluation evaluate(const WaveFunctional& f, const FieldConfiguration& config)
{
    check_config(f, config);
    cplx l = log_psi(f, config.x);
    return {l.real(), l.imag()};
}

std::vector<double> phase_gradient(const WaveFunctional& f, const FieldConfiguration& config)
{
    check_config(f, config);
    std::vector<cplx> g(f.dimension());
    log_psi_gradient(f, config.x, g);
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = g[j].imag();
    return out;
}

std::vector<double> amplitude_gradient(const WaveFunctional& f, const FieldConfiguration& config)
{
    check_config(f, config);
    std::vector<cplx> g(f.dimension());
    log_psi_gradient(f, config.x, g);
    std::vector<double> out(g.size());
    for (std::size_t j = 0; j < g.size(); ++j) out[j] = g[j].real();
    return out;
}

cplx inner_product(const WaveFunctional& a, const WaveFunctional& b)
{
    if (auto sa = std::get_if<SuperpositionFunctional>(&a.v)) {
        cplx sum = 0.0;
        for (std::size_t i = 0; i < sa->components.size(); ++i)
            if (sa->weights[i] != 0.0) sum += std::conj(sa->weights[i]) * inner_product(sa->components[i], b);
        return sum;
    }
    if (auto sb = std::get_if<SuperpositionFunctional>(&b.v)) {
        cplx sum = 0.0;
        for (std::size_t i = 0; i < sb->components.size(); ++i)
            if (sb->weights[i] != 0.0) sum += sb->weights[i] * inner_product(a, sb->components[i]);
        return sum;
    }
    auto ga = std::get_if<GaussianFunctional>(&a.v);
    auto gb = std::get_if<GaussianFunctional>(&b.v);
    auto ea = std::get_if<ExcitedFunctional>(&a.v);
    auto eb = std::get_if<ExcitedFunctional>(&b.v);
    if (ga && gb) return gaussian_overlap(*ga, *gb);
    if (ea && eb) return excited_excited(*ea, *eb);
    if (ea && gb) return excited_gaussian(*ea, *gb);
    return std::conj(excited_gaussian(*eb, *ga));
}

double norm_squared(const WaveFunctional& f) { return inner_product(f, f).real(); }

WaveFunctional normalized(const WaveFunctional& f)
{
    double n = norm_squared(f);
    if (!(n > 0.0)) throw std::invalid_argument("functional has zero norm");
    double s = 1.0 / std::sqrt(n);
    if (auto g = std::get_if<GaussianFunctional>(&f.v)) return *g; // Gaussians are normalized by construction
    if (auto e = std::get_if<ExcitedFunctional>(&f.v)) {
        ExcitedFunctional out = *e;
        for (auto& c : out.poly.coeff) c *= s;
        return out;
    }
    SuperpositionFunctional out = std::get<SuperpositionFunctional>(f.v);
    for (auto& w : out.weights) w *= s;
    return out;
}

WaveFunctional evolve_quadratic(const WaveFunctional& f, const TheoryModel& theory, double t)
{
    if (!theory.quadratic()) throw std::invalid_argument("closed-form evolution needs a quadratic theory");
    auto node = build_node(f, theory);
    return materialize(f, *node, t);
}

EvolvingFunctional::EvolvingFunctional(WaveFunctional initial, const TheoryModel* theory)
    : initial_(std::move(initial)), theory_(theory)
{
    if (theory_) {
        if (!theory_->quadratic()) throw std::invalid_argument("closed-form evolution needs a quadratic theory");
        root_ = build_node(initial_, *theory_);
    }
}

cplx EvolvingFunctional::log_psi_gradient(double t, std::span<const double> x, std::span<cplx> grad) const
{
    return eval_rec(initial_, root_.get(), t - initial_.time(), x, grad.data());
}

cplx EvolvingFunctional::log_psi(double t, std::span<const double> x) const
{
    return eval_rec(initial_, root_.get(), t - initial_.time(), x, nullptr);
}

WaveFunctional EvolvingFunctional::at(double t) const
{
    if (!root_) return initial_;
    return materialize(initial_, *root_, t - initial_.time());
}

// ---- builders ----

GaussianFunctional vacuum(const TheoryModel& theory)
{
    if (!theory.field_theory() || !theory.quadratic())
        throw std::invalid_argument("vacuum needs a quadratic field theory");
    const auto& osc = theory.oscillators();
    std::size_t d = osc.size();
    GaussianFunctional g;
    g.space = theory.space();
    g.width.resize(d);
    g.center.assign(d, 0.0);
    g.momentum.assign(d, 0.0);
    g.phase.assign(d, 0.0);
    g.active.resize(d);
    for (std::size_t j = 0; j < d; ++j) {
        g.width[j] = osc[j].width;
        g.active[j] = osc[j].active ? 1 : 0;
    }
    return g;
}

namespace {

struct ResolvedMode {
    const FieldSpace::Sector* sector;
    std::size_t mode;
};

ResolvedMode resolve(const FieldSpace& space, const ModeKey& key)
{
    if (key.sector >= space.sectors().size()) throw std::invalid_argument("mode key names a missing sector");
    const auto& s = space.sectors()[key.sector];
    auto idx = s.basis->index_of(key.n);
    if (!idx) throw std::invalid_argument("mode key is not in the basis");
    if (key.pol < 0 || key.pol >= s.basis->polarizations()) throw std::invalid_argument("polarization out of range");
    return {&s, *idx};
}

} // namespace

std::vector<std::pair<std::size_t, cplx>> creation_form(const FieldSpace& space, const ModeKey& key)
{
    auto [sector, i] = resolve(space, key);
    const ModeBasis& b = *sector->basis;
    const double r = 1.0 / std::sqrt(2.0);
    std::size_t off = sector->offset;
    int l = key.pol;
    if (!b.real_field())
        return {{off + b.coordinate_index(i, l, 0), cplx(r, 0)}, {off + b.coordinate_index(i, l, 1), cplx(0, -r)}};
    if (b.zero_index() && *b.zero_index() == i) return {{off + b.coordinate_index(i, l, 2), cplx(1.0, 0.0)}};
    if (b.representative(i))
        return {{off + b.coordinate_index(i, l, 0), cplx(r, 0)}, {off + b.coordinate_index(i, l, 1), cplx(0, -r)}};
    std::size_t rep = b.partner(i);
    double s = b.pairing_sign(l);
    return {{off + b.coordinate_index(rep, l, 0), cplx(s * r, 0)}, {off + b.coordinate_index(rep, l, 1), cplx(0, s * r)}};
}

GaussianFunctional coherent(const TheoryModel& theory, const ModeCoefficients& alpha)
{
    GaussianFunctional g = vacuum(theory);
    const FieldSpace& space = *theory.space();
    std::size_t d = g.dimension();
    std::vector<cplx> beta(d, 0.0);
    // The annihilation operator is the adjoint of the creation form; invert the
    // two-by-two relation per pair by accumulating eigenvalues of A_j.
    for (const auto& [key, a] : alpha) {
        if (a == 0.0) continue;
        auto [sector, i] = resolve(space, key);
        const ModeBasis& b = *sector->basis;
        std::size_t off = sector->offset;
        int l = key.pol;
        const double r = 1.0 / std::sqrt(2.0);
        auto add = [&](long local, cplx v) {
            std::size_t j = off + static_cast<std::size_t>(local);
            if (!g.active[j]) throw std::invalid_argument("coherent amplitude on a constrained coordinate");
            beta[j] += v;
        };
        if (!b.real_field()) {
            add(b.coordinate_index(i, l, 0), r * a);
            add(b.coordinate_index(i, l, 1), -I * r * a);
        } else if (b.zero_index() && *b.zero_index() == i) {
            add(b.coordinate_index(i, l, 2), a);
        } else if (b.representative(i)) {
            add(b.coordinate_index(i, l, 0), r * a);
            add(b.coordinate_index(i, l, 1), -I * r * a);
        } else {
            std::size_t rep = b.partner(i);
            double s = b.pairing_sign(l);
            add(b.coordinate_index(rep, l, 0), s * r * a);
            add(b.coordinate_index(rep, l, 1), I * s * r * a);
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (!g.active[j]) continue;
        double sl = std::sqrt(g.width[j].real());
        g.center[j] = std::sqrt(2.0) * beta[j].real() / sl;
        g.momentum[j] = std::sqrt(2.0) * sl * beta[j].imag();
        g.phase[j] = 0.5 * g.center[j] * g.momentum[j];
    }
    return g;
}

ExcitedFunctional n_particle(const TheoryModel& theory, const ModeTensor& coefficients)
{
    int n = coefficients.rank;
    if (n <= 0) throw std::invalid_argument("particle number must be at least one");
    if (n > max_particle_number) throw std::invalid_argument("particle number exceeds the supported maximum");
    GaussianFunctional vac = vacuum(theory);
    const FieldSpace& space = *theory.space();
    std::size_t d = vac.dimension();

    std::map<std::vector<ModeKey>, cplx> canonical;
    for (const auto& [keys, c] : coefficients.entries) {
        if (static_cast<int>(keys.size()) != n) throw std::invalid_argument("tensor entry has the wrong rank");
        std::vector<ModeKey> sorted = keys;
        std::sort(sorted.begin(), sorted.end());
        auto [it, fresh] = canonical.emplace(sorted, c);
        if (!fresh && std::abs(it->second - c) > 1e-12 * std::max(1.0, std::abs(c)))
            throw std::invalid_argument("coefficient tensor is not symmetric");
    }

    using Mono = std::vector<std::uint16_t>;
    std::map<Mono, cplx> total;
    double nfact = std::tgamma(n + 1.0);
    for (const auto& [keys, c] : canonical) {
        if (c == 0.0) continue;
        double mult = nfact;
        for (std::size_t a = 0; a < keys.size();) {
            std::size_t b = a;
            while (b < keys.size() && keys[b] == keys[a]) ++b;
            mult /= std::tgamma(double(b - a) + 1.0);
            a = b;
        }
        std::map<Mono, cplx> poly{{Mono(d, 0), c * mult / std::sqrt(nfact)}};
        for (const ModeKey& k : keys) {
            auto form = creation_form(space, k);
            std::map<Mono, cplx> next;
            for (const auto& [m, v] : poly)
                for (const auto& [j, coef] : form) {
                    if (!vac.active[j]) throw std::invalid_argument("excitation of a constrained coordinate");
                    Mono mm = m;
                    ++mm[j];
                    next[mm] += v * coef;
                }
            poly.swap(next);
        }
        for (const auto& [m, v] : poly) total[m] += v;
    }

    ExcitedFunctional out;
    out.vacuum = vac;
    double norm = 0.0;
    std::vector<std::pair<std::vector<std::pair<std::uint32_t, std::uint16_t>>, cplx>> terms;
    for (const auto& [m, v] : total) {
        // (A+)^k |0> = sqrt(k!) |k>
        double f = 1.0;
        std::vector<std::pair<std::uint32_t, std::uint16_t>> occ;
        for (std::size_t j = 0; j < d; ++j)
            if (m[j]) {
                f *= std::sqrt(std::tgamma(m[j] + 1.0));
                occ.emplace_back(static_cast<std::uint32_t>(j), m[j]);
            }
        cplx c = v * f;
        if (std::abs(c) < 1e-300) continue;
        norm += std::norm(c);
        terms.emplace_back(std::move(occ), c);
    }
    if (!(norm > 0.0)) throw std::invalid_argument("coefficient tensor produces the zero state");
    double s = 1.0 / std::sqrt(norm);
    for (auto& [occ, c] : terms) out.poly.add_term(occ, c * s);
    out.poly.finalize(d);
    return out;
}

ExcitedFunctional one_particle(const TheoryModel& theory, const ModeCoefficients& psi)
{
    ModeTensor t;
    t.rank = 1;
    for (const auto& [k, c] : psi) t.entries.push_back({{k}, c});
    return n_particle(theory, t);
}

WaveFunctional superpose(std::vector<cplx> weights, std::vector<WaveFunctional> components)
{
    if (weights.size() != components.size() || components.empty())
        throw std::invalid_argument("superposition needs one weight per component");
    if (std::none_of(weights.begin(), weights.end(), [](cplx w) { return w != 0.0; }))
        throw std::invalid_argument("superposition needs a nonzero weight");
    for (const auto& c : components)
        if (!c.space()->same_layout(*components.front().space()))
            throw std::invalid_argument("superposition components live on different bases");
    return SuperpositionFunctional{std::move(weights), std::move(components)};
}

std::vector<cplx> local_expectation(const WaveFunctional& f, const FieldConfiguration& config, LocalOperator op,
                                    std::span<const Vec3> points)
{
    check_config(f, config);
    const FieldSpace& space = *f.space();
    if (space.sectors().size() != 1 || space.sectors()[0].basis->kind() != FieldKind::ScalarReal)
        throw std::invalid_argument("local expectation values are defined for a real scalar field");
    const ModeBasis& b = *space.sectors()[0].basis;
    std::size_t d = b.dimension();
    std::vector<cplx> grad(d);
    log_psi_gradient(f, config.x, grad);

    std::vector<cplx> out(points.size());
    std::vector<double> pattern(d);
    for (std::size_t p = 0; p < points.size(); ++p) {
        double phi = 0.0, ds = 0.0, dr = 0.0, ff = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            cplx v;
            b.coordinate_pattern(j, points[p], &v);
            pattern[j] = v.real();
            phi += pattern[j] * config.x[j];
            ds += pattern[j] * grad[j].imag();
            dr += pattern[j] * grad[j].real();
            ff += pattern[j] * pattern[j];
        }
        const double r2 = std::sqrt(2.0);
        switch (op) {
        case LocalOperator::PsiImag: out[p] = ds / r2; break;
        case LocalOperator::PsiFull: out[p] = cplx(phi, ds) / r2; break;
        case LocalOperator::NumberDensity: {
            // second directional derivative of log R by central differences of the analytic gradient
            double norm = std::sqrt(ff);
            double h = 1e-4;
            std::vector<double> xp(config.x), xm(config.x);
            for (std::size_t j = 0; j < d; ++j) {
                xp[j] += h * pattern[j] / norm;
                xm[j] -= h * pattern[j] / norm;
            }
            std::vector<cplx> gp(d), gm(d);
            log_psi_gradient(f, xp, gp);
            log_psi_gradient(f, xm, gm);
            double d2 = 0.0;
            for (std::size_t j = 0; j < d; ++j) d2 += pattern[j] * (gp[j].real() - gm[j].real());
            d2 *= norm / (2.0 * h);
            out[p] = 0.5 * (phi * phi - d2 - dr * dr + ds * ds - ff);
            break;
        }
        }
    }
    return out;
}

} // namespace pwf
