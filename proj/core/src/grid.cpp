#include "pwf/grid.hpp"

#include <fftw3.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <mutex>

namespace pwf {

GridSpec GridSpec::line(int points, double lo, double len)
{
    GridSpec s;
    s.dim = 1;
    s.n = {points, 1, 1};
    s.lower = {lo, 0.0, 0.0};
    s.length = {len, 1.0, 1.0};
    s.validate();
    return s;
}

GridSpec GridSpec::plane(int nx, int ny, double lo, double len)
{
    GridSpec s;
    s.dim = 2;
    s.n = {nx, ny, 1};
    s.lower = {lo, lo, 0.0};
    s.length = {len, len, 1.0};
    s.validate();
    return s;
}

void GridSpec::validate() const
{
    if (dim < 1 || dim > 3) throw std::invalid_argument("grid dimension must be 1, 2 or 3");
    for (int a = 0; a < 3; ++a) {
        if (n[a] < 1) throw std::invalid_argument("grid needs at least one point per axis");
        if (a >= dim && n[a] != 1) throw std::invalid_argument("unused grid axes must have one point");
        if (a < dim && !(length[a] > 0.0)) throw std::invalid_argument("grid length must be positive");
    }
}

std::size_t GridSpec::size() const { return std::size_t(n[0]) * n[1] * n[2]; }

double GridSpec::cell_volume() const
{
    double v = 1.0;
    for (int a = 0; a < dim; ++a) v *= spacing(a);
    return v;
}

std::size_t GridSpec::index(std::array<int, 3> i) const
{
    return (std::size_t(i[0]) * n[1] + i[1]) * n[2] + i[2];
}

std::array<int, 3> GridSpec::unravel(std::size_t flat) const
{
    std::array<int, 3> i{};
    i[2] = int(flat % n[2]);
    flat /= n[2];
    i[1] = int(flat % n[1]);
    i[0] = int(flat / n[1]);
    return i;
}

double GridSpec::momentum(int axis, int i) const
{
    int m = n[axis];
    int j = i < (m + 1) / 2 ? i : i - m;
    return 2.0 * pi / length[axis] * j;
}

double GridWavefunction::norm() const
{
    double s = 0.0;
    for (const auto& z : psi) s += std::norm(z);
    return s * spec.cell_volume();
}

void GridWavefunction::normalize()
{
    double nn = norm();
    if (!(nn > 0.0)) throw std::invalid_argument("cannot normalize a vanishing wavefunction");
    double f = 1.0 / std::sqrt(nn);
    for (auto& z : psi) z *= f;
}

GridHamiltonian GridHamiltonian::quartic(double alpha1, double alpha2)
{
    if (!(alpha1 > 0.0 && alpha2 > 0.0)) throw std::invalid_argument("quartic coefficients must be positive");
    GridHamiltonian h;
    h.c4[0] = alpha1;
    h.c2[0] = alpha2;
    return h;
}

GridHamiltonian GridHamiltonian::particles(std::span<const double> masses)
{
    if (masses.empty() || masses.size() > 3) throw std::invalid_argument("one to three masses expected");
    GridHamiltonian h;
    for (std::size_t a = 0; a < masses.size(); ++a) {
        if (!(masses[a] > 0.0)) throw std::invalid_argument("masses must be positive");
        h.c2[a] = 0.5 / masses[a];
    }
    return h;
}

double GridHamiltonian::kinetic_symbol(const GridSpec& spec, std::size_t flat) const
{
    auto i = spec.unravel(flat);
    double k = 0.0;
    for (int a = 0; a < spec.dim; ++a) k += kinetic(a, spec.momentum(a, i[a]));
    return k;
}

bool GridHamiltonian::has_potential() const
{
    if (potential.empty()) return false;
    auto [lo, hi] = std::minmax_element(potential.begin(), potential.end());
    return *hi != *lo;
}

namespace {

std::mutex plan_mutex;

fftw_plan plan_for(const GridSpec& spec, int sign)
{
    static std::map<std::pair<std::array<int, 4>, int>, fftw_plan> cache;
    std::lock_guard<std::mutex> lock(plan_mutex);
    auto key = std::make_pair(std::array<int, 4>{spec.dim, spec.n[0], spec.n[1], spec.n[2]}, sign);
    auto it = cache.find(key);
    if (it != cache.end()) return it->second;
    std::vector<cplx> a(spec.size());
    int dims[3] = {spec.n[0], spec.n[1], spec.n[2]};
    // in-place plan on a scratch array; execution uses the new-array interface
    fftw_plan p = fftw_plan_dft(spec.dim, dims, reinterpret_cast<fftw_complex*>(a.data()),
                                reinterpret_cast<fftw_complex*>(a.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("FFT planning failed");
    cache.emplace(key, p);
    return p;
}

void check_state(const GridWavefunction& psi)
{
    psi.spec.validate();
    if (psi.psi.size() != psi.spec.size()) throw std::invalid_argument("wavefunction size does not match its grid");
}

void check_hamiltonian(const GridHamiltonian& h, const GridSpec& spec)
{
    if (!h.potential.empty() && h.potential.size() != spec.size())
        throw std::invalid_argument("potential size does not match the grid");
    for (int a = 0; a < spec.dim; ++a) {
        double nyq = pi / spec.spacing(a);
        if (!std::isfinite(h.kinetic(a, nyq))) throw std::invalid_argument("kinetic symbol not finite at Nyquist");
    }
}

double kinetic_max(const GridHamiltonian& h, const GridSpec& spec)
{
    double k = 0.0;
    for (std::size_t i = 0; i < spec.size(); ++i) k = std::max(k, std::abs(h.kinetic_symbol(spec, i)));
    return k;
}

} // namespace

void grid_fft(const GridSpec& spec, std::vector<cplx>& data, int sign)
{
    if (data.size() != spec.size()) throw std::invalid_argument("data size does not match the grid");
    fftw_plan p = plan_for(spec, sign < 0 ? FFTW_FORWARD : FFTW_BACKWARD);
    fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()), reinterpret_cast<fftw_complex*>(data.data()));
}

std::vector<cplx> spectral_derivative(const GridSpec& spec, std::span<const cplx> f, int axis, int order)
{
    if (axis < 0 || axis >= spec.dim) throw std::invalid_argument("bad axis");
    if (order < 0) throw std::invalid_argument("bad derivative order");
    std::vector<cplx> d(f.begin(), f.end());
    if (order == 0) return d;
    grid_fft(spec, d, -1);
    int m = spec.n[axis];
    double inv = 1.0 / double(spec.size());
    // Krasny filter: bins at round-off level carry only noise, which k^order would amplify
    double peak = 0.0;
    for (const auto& z : d) peak = std::max(peak, std::abs(z));
    double noise = spectral_noise_floor * peak;
    for (std::size_t flat = 0; flat < d.size(); ++flat) {
        int i = spec.unravel(flat)[axis];
        if ((order % 2 == 1 && m % 2 == 0 && i == m / 2) || std::abs(d[flat]) < noise) {
            d[flat] = 0.0; // Nyquist bin has no odd derivative
            continue;
        }
        d[flat] *= std::pow(cplx(0.0, spec.momentum(axis, i)), order) * inv;
    }
    grid_fft(spec, d, +1);
    return d;
}

GridWavefunction grid_evolve(const GridHamiltonian& h, GridWavefunction psi, double dt, std::size_t steps,
                             Splitting split, GridStepLog* log)
{
    check_state(psi);
    check_hamiltonian(h, psi.spec);
    const GridSpec& spec = psi.spec;
    std::size_t n = spec.size();

    std::vector<double> weights;
    if (split == Splitting::Strang) {
        weights = {1.0};
    } else {
        double w1 = 1.0 / (2.0 - std::cbrt(2.0));
        weights = {w1, 1.0 - 2.0 * w1, w1};
    }
    bool pot = h.has_potential();
    if (pot) {
        auto [lo, hi] = std::minmax_element(h.potential.begin(), h.potential.end());
        double wmax = 0.0;
        for (double w : weights) wmax = std::max(wmax, std::abs(w));
        if ((*hi - *lo) * wmax * std::abs(dt) > pi)
            throw StabilityViolation("potential phase per step exceeds pi; reduce dt");
        if (kinetic_max(h, spec) * wmax * std::abs(dt) > pi)
            throw StabilityViolation("kinetic phase per step at the grid cutoff exceeds pi; reduce dt or refine");
    }

    // phase tables per sub-step weight
    std::vector<std::vector<cplx>> kin(weights.size()), half(weights.size());
    std::vector<double> ksym(n);
    for (std::size_t i = 0; i < n; ++i) ksym[i] = h.kinetic_symbol(spec, i);
    for (std::size_t w = 0; w < weights.size(); ++w) {
        double tau = weights[w] * dt;
        kin[w].resize(n);
        for (std::size_t i = 0; i < n; ++i) kin[w][i] = std::polar(1.0 / double(n), -ksym[i] * tau);
        if (pot) {
            half[w].resize(n);
            for (std::size_t i = 0; i < n; ++i) half[w][i] = std::polar(1.0, -0.5 * h.potential[i] * tau);
        }
    }

    double prev = log ? psi.norm() : 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
        for (std::size_t w = 0; w < weights.size(); ++w) {
            if (pot)
                for (std::size_t i = 0; i < n; ++i) psi.psi[i] *= half[w][i];
            grid_fft(spec, psi.psi, -1);
            for (std::size_t i = 0; i < n; ++i) psi.psi[i] *= kin[w][i];
            grid_fft(spec, psi.psi, +1);
            if (pot)
                for (std::size_t i = 0; i < n; ++i) psi.psi[i] *= half[w][i];
        }
        psi.time += dt;
        if (log) {
            double cur = psi.norm();
            log->max_norm_drift = std::max(log->max_norm_drift, std::abs(cur - prev) / prev);
            prev = cur;
            ++log->steps;
        }
    }
    return psi;
}

GridWavefunction free_evolve(const GridHamiltonian& h, const GridWavefunction& psi, double t)
{
    check_state(psi);
    check_hamiltonian(h, psi.spec);
    if (h.has_potential()) throw std::invalid_argument("exact evolution needs a constant potential");
    double v0 = h.potential.empty() ? 0.0 : h.potential.front();
    GridWavefunction out = psi;
    std::size_t n = psi.spec.size();
    grid_fft(out.spec, out.psi, -1);
    for (std::size_t i = 0; i < n; ++i)
        out.psi[i] *= std::polar(1.0 / double(n), -(h.kinetic_symbol(out.spec, i) + v0) * t);
    grid_fft(out.spec, out.psi, +1);
    out.time = psi.time + t;
    return out;
}

double grid_energy(const GridHamiltonian& h, const GridWavefunction& psi)
{
    check_state(psi);
    check_hamiltonian(h, psi.spec);
    std::vector<cplx> f = psi.psi;
    grid_fft(psi.spec, f, -1);
    double kin = 0.0, pot = 0.0, nn = 0.0;
    for (std::size_t i = 0; i < f.size(); ++i) kin += std::norm(f[i]) * h.kinetic_symbol(psi.spec, i);
    kin /= double(f.size());
    for (std::size_t i = 0; i < f.size(); ++i) {
        double r = std::norm(psi.psi[i]);
        nn += r;
        if (!h.potential.empty()) pot += r * h.potential[i];
    }
    return (kin + pot) / nn;
}

std::vector<double> grid_density(const GridWavefunction& psi)
{
    std::vector<double> r(psi.psi.size());
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = std::norm(psi.psi[i]);
    return r;
}

std::vector<double> grid_current(const GridWavefunction& psi, const GridHamiltonian& h, int axis)
{
    check_state(psi);
    const double a1 = h.c4[axis], a2 = h.c2[axis];
    auto d1 = spectral_derivative(psi.spec, psi.psi, axis, 1);
    std::vector<double> j(psi.psi.size());
    if (a1 == 0.0) {
        for (std::size_t i = 0; i < j.size(); ++i) j[i] = 2.0 * a2 * std::imag(std::conj(psi.psi[i]) * d1[i]);
        return j;
    }
    auto d2 = spectral_derivative(psi.spec, psi.psi, axis, 2);
    auto d3 = spectral_derivative(psi.spec, psi.psi, axis, 3);
    for (std::size_t i = 0; i < j.size(); ++i) {
        cplx c = std::conj(psi.psi[i]);
        j[i] = 2.0 * std::imag(a2 * c * d1[i] - a1 * c * d3[i] + a1 * std::conj(d1[i]) * d2[i]);
    }
    return j;
}

namespace {

struct LogDerivatives {
    std::vector<cplx> l1, l2, l3; // derivatives of log psi
};

LogDerivatives log_derivatives(const GridWavefunction& psi, int axis, int upto)
{
    auto d1 = spectral_derivative(psi.spec, psi.psi, axis, 1);
    std::vector<cplx> d2, d3;
    if (upto >= 2) d2 = spectral_derivative(psi.spec, psi.psi, axis, 2);
    if (upto >= 3) d3 = spectral_derivative(psi.spec, psi.psi, axis, 3);
    const double nan = std::numeric_limits<double>::quiet_NaN();
    LogDerivatives L;
    std::size_t n = psi.psi.size();
    L.l1.resize(n);
    if (upto >= 2) L.l2.resize(n);
    if (upto >= 3) L.l3.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (psi.psi[i] == 0.0) {
            L.l1[i] = nan;
            if (upto >= 2) L.l2[i] = nan;
            if (upto >= 3) L.l3[i] = nan;
            continue;
        }
        cplx inv = 1.0 / psi.psi[i];
        cplx l1 = d1[i] * inv;
        L.l1[i] = l1;
        if (upto >= 2) {
            cplx l2 = d2[i] * inv - l1 * l1;
            L.l2[i] = l2;
            if (upto >= 3) L.l3[i] = d3[i] * inv - 3.0 * l1 * l2 - l1 * l1 * l1;
        }
    }
    return L;
}

} // namespace

std::vector<double> grid_current_polar(const GridWavefunction& psi, const GridHamiltonian& h, int axis)
{
    check_state(psi);
    const double a1 = h.c4[axis], a2 = h.c2[axis];
    auto L = log_derivatives(psi, axis, 3);
    std::vector<double> j(psi.psi.size());
    for (std::size_t i = 0; i < j.size(); ++i) {
        double r1 = L.l1[i].real();  // R'/R
        double s1 = L.l1[i].imag();  // S'
        double r2 = L.l2[i].real() + r1 * r1; // R''/R
        double s2 = L.l2[i].imag();
        double s3 = L.l3[i].imag();
        double v = 4.0 * a1 * (s1 * s1 * s1 - 2.0 * r2 * s1 + r1 * r1 * s1 - r1 * s2 - 0.5 * s3) + 2.0 * a2 * s1;
        j[i] = std::norm(psi.psi[i]) * v;
    }
    return j;
}

std::vector<double> naive_hj_velocity(const GridWavefunction& psi, const GridHamiltonian& h, int axis)
{
    check_state(psi);
    auto L = log_derivatives(psi, axis, 1);
    std::vector<double> v(psi.psi.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double s = L.l1[i].imag();
        v[i] = 4.0 * h.c4[axis] * s * s * s + 2.0 * h.c2[axis] * s;
    }
    return v;
}

std::vector<double> correct_velocity(const GridWavefunction& psi, const GridHamiltonian& h, int axis)
{
    auto j = grid_current(psi, h, axis);
    for (std::size_t i = 0; i < j.size(); ++i) {
        double r = std::norm(psi.psi[i]);
        j[i] = r > 0.0 ? j[i] / r : std::numeric_limits<double>::quiet_NaN();
    }
    return j;
}

double interpolate(const GridSpec& spec, std::span<const double> field, std::span<const double> x)
{
    if (field.size() != spec.size()) throw std::invalid_argument("field size does not match the grid");
    if (x.size() != std::size_t(spec.dim)) throw std::invalid_argument("point dimension does not match the grid");
    std::array<std::array<int, 4>, 3> idx{};
    std::array<std::array<double, 4>, 3> w{};
    for (int a = 0; a < 3; ++a) {
        if (a >= spec.dim) {
            idx[a] = {0, 0, 0, 0};
            w[a] = {1.0, 0.0, 0.0, 0.0};
            continue;
        }
        if (!std::isfinite(x[a])) throw std::invalid_argument("non-finite interpolation point");
        double s = (x[a] - spec.lower[a]) / spec.spacing(a);
        double fl = std::floor(s);
        double u = s - fl;
        long base = long(fl) - 1;
        int m = spec.n[a];
        for (int k = 0; k < 4; ++k) idx[a][k] = int(((base + k) % m + m) % m);
        w[a] = {-u * (u - 1) * (u - 2) / 6.0, (u + 1) * (u - 1) * (u - 2) / 2.0, -(u + 1) * u * (u - 2) / 2.0,
                (u + 1) * u * (u - 1) / 6.0};
    }
    int k1 = spec.dim > 1 ? 4 : 1, k2 = spec.dim > 2 ? 4 : 1;
    double s = 0.0;
    for (int i = 0; i < 4; ++i)
        for (int j = 0; j < k1; ++j)
            for (int k = 0; k < k2; ++k)
                s += w[0][i] * w[1][j] * w[2][k] * field[spec.index({idx[0][i], idx[1][j], idx[2][k]})];
    return s;
}

GridVelocity::GridVelocity(GridSpec spec, std::vector<std::vector<double>> per_axis, std::vector<double> density,
                           double node_floor)
    : spec_(spec), v_(std::move(per_axis)), rho_(std::move(density)), floor_(node_floor)
{
    if (v_.size() != std::size_t(spec_.dim)) throw std::invalid_argument("one velocity field per axis expected");
    if (rho_.size() != spec_.size()) throw std::invalid_argument("density size does not match the grid");
    double mx = *std::max_element(rho_.begin(), rho_.end());
    floor_ *= mx;
    // NaN at exact grid nodes would poison neighbouring stencils; the density check guards those points
    for (auto& f : v_)
        for (auto& x : f)
            if (!std::isfinite(x)) x = 0.0;
}

void GridVelocity::operator()(std::span<const double> x, std::span<double> v) const
{
    if (interpolate(spec_, rho_, x) <= floor_) throw DegeneratePoint("grid density vanishes near the particle");
    for (int a = 0; a < spec_.dim; ++a) v[a] = interpolate(spec_, v_[a], x);
}

GridVelocity phase_gradient_velocity(const GridWavefunction& psi, std::span<const double> masses)
{
    check_state(psi);
    if (masses.size() != std::size_t(psi.spec.dim)) throw std::invalid_argument("one mass per axis expected");
    std::vector<std::vector<double>> fields;
    for (int a = 0; a < psi.spec.dim; ++a) {
        if (!(masses[a] > 0.0)) throw std::invalid_argument("masses must be positive");
        auto L = log_derivatives(psi, a, 1);
        std::vector<double> f(L.l1.size());
        for (std::size_t i = 0; i < f.size(); ++i) f[i] = L.l1[i].imag() / masses[a];
        fields.push_back(std::move(f));
    }
    return GridVelocity(psi.spec, std::move(fields), grid_density(psi));
}

std::vector<double> particle_guidance(const GridWavefunction& psi, std::span<const double> masses,
                                      std::span<const double> x)
{
    auto g = phase_gradient_velocity(psi, masses);
    std::vector<double> v(psi.spec.dim);
    g(x, v);
    return v;
}

GridHamiltonian higgs_zero_mode_toy(const GridSpec& spec, double mu, double lambda, double box_length)
{
    if (spec.dim != 2) throw std::invalid_argument("the zero-mode toy lives on a 2-D grid");
    if (!(lambda > 0.0) || !(box_length > 0.0)) throw std::invalid_argument("need lambda > 0 and L > 0");
    GridHamiltonian h;
    h.c2 = {0.5, 0.5, 0.0};
    h.potential.resize(spec.size());
    double vol = box_length * box_length * box_length;
    for (std::size_t f = 0; f < spec.size(); ++f) {
        auto i = spec.unravel(f);
        double u = spec.coordinate(0, i[0]), v = spec.coordinate(1, i[1]);
        double r2 = u * u + v * v;
        h.potential[f] = -0.5 * mu * mu * r2 + lambda * r2 * r2 / (4.0 * vol);
    }
    return h;
}

} // namespace pwf
