#include "pwf/dynamics.hpp"

#include <algorithm>
#include <cmath>

namespace pwf {

namespace {

// Dormand-Prince tableau
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200, e6 = 22.0 / 525,
                 e7 = -1.0 / 40;

struct Stepper {
    const VelocityField& f;
    std::size_t n;
    std::vector<double> k1, k2, k3, k4, k5, k6, k7, tmp, y5, err;
    std::size_t evaluations = 0;

    Stepper(const VelocityField& fn, std::size_t dim)
        : f(fn), n(dim), k1(dim), k2(dim), k3(dim), k4(dim), k5(dim), k6(dim), k7(dim), tmp(dim), y5(dim), err(dim)
    {
    }

    void eval(double t, const std::vector<double>& y, std::vector<double>& k)
    {
        ++evaluations;
        f(t, y, k);
    }

    // One step from (t, y) with k1 = f(t, y) already filled. Fills y5, err and k7 = f(t + h, y5).
    void step(double t, const std::vector<double>& y, double h)
    {
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * a21 * k1[i];
        eval(t + c2 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a31 * k1[i] + a32 * k2[i]);
        eval(t + c3 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
        eval(t + c4 * h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
        eval(t + c5 * h, tmp, k5);
        for (std::size_t i = 0; i < n; ++i)
            tmp[i] = y[i] + h * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
        eval(t + h, tmp, k6);
        for (std::size_t i = 0; i < n; ++i)
            y5[i] = y[i] + h * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
        eval(t + h, y5, k7);
        for (std::size_t i = 0; i < n; ++i)
            err[i] = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
    }
};

double error_norm(const std::vector<double>& err, const std::vector<double>& y, const std::vector<double>& y5,
                  const Tolerances& tol)
{
    if (err.empty()) return 0.0;
    double s = 0.0;
    for (std::size_t i = 0; i < err.size(); ++i) {
        double sc = tol.atol + tol.rtol * std::max(std::abs(y[i]), std::abs(y5[i]));
        double r = err[i] / sc;
        s += r * r;
    }
    return std::sqrt(s / double(err.size()));
}

} // namespace

Trajectory integrate(const VelocityField& f, std::vector<double> x0, std::span<const double> times,
                     const Tolerances& tol)
{
    Trajectory tr;
    if (times.empty()) return tr;
    for (std::size_t i = 1; i < times.size(); ++i)
        if ((times[i] - times[i - 1]) * (times.back() - times.front()) <= 0.0)
            throw std::invalid_argument("output times must be strictly monotone");
    std::size_t n = x0.size();
    Stepper st(f, n);
    std::vector<double> y = std::move(x0);
    double t = times.front();
    tr.times.push_back(t);
    tr.states.push_back(y);
    double dir = times.size() > 1 && times.back() < times.front() ? -1.0 : 1.0;
    double h = std::min(tol.initial_step, tol.max_step);
    bool have_k1 = false;

    auto fail = [&](const std::string& why) {
        tr.stats.flagged = true;
        tr.stats.message = why;
        tr.stats.evaluations = st.evaluations;
        return tr;
    };

    for (std::size_t out = 1; out < times.size(); ++out) {
        double target = times[out];
        while (dir * (target - t) > 0.0) {
            if (tr.stats.steps + tr.stats.rejections >= tol.max_steps) return fail("step budget exhausted");
            if (!have_k1) {
                try {
                    st.eval(t, y, st.k1);
                } catch (const DegeneratePoint&) {
                    ++tr.stats.degenerate_events;
                    return fail("trajectory sits on a node");
                }
                have_k1 = true;
            }
            double remaining = std::abs(target - t);
            bool last = h >= remaining;
            double hh = last ? remaining : h;
            bool degenerate = false;
            try {
                st.step(t, y, dir * hh);
            } catch (const DegeneratePoint&) {
                degenerate = true;
            }
            if (degenerate) {
                ++tr.stats.degenerate_events;
                ++tr.stats.rejections;
                h = hh / 2;
                if (h < tol.min_step) return fail("step fell below the floor near a node");
                continue;
            }
            double en = error_norm(st.err, y, st.y5, tol);
            if (!std::isfinite(en)) en = 1e10;
            if (en <= 1.0) {
                t = last ? target : t + dir * hh;
                std::swap(y, st.y5);
                std::swap(st.k1, st.k7);
                ++tr.stats.steps;
                double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
                double grown = hh * std::clamp(fac, 0.2, 5.0);
                // a step shortened to land on an output time does not limit the next one
                h = std::min(last ? std::max(h, grown) : grown, tol.max_step);
            } else {
                ++tr.stats.rejections;
                h = hh * std::clamp(0.9 * std::pow(en, -0.2), 0.1, 0.9);
                if (h < tol.min_step) return fail("step fell below the floor");
            }
        }
        tr.times.push_back(t);
        tr.states.push_back(y);
    }
    tr.stats.evaluations = st.evaluations;
    return tr;
}

std::vector<double> integrate_fixed(const VelocityField& f, std::vector<double> x0, double t0, double t1,
                                    std::size_t steps)
{
    if (steps == 0) throw std::invalid_argument("need at least one step");
    Stepper st(f, x0.size());
    std::vector<double> y = std::move(x0);
    double h = (t1 - t0) / double(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        double t = t0 + double(s) * h;
        st.eval(t, y, st.k1);
        st.step(t, y, h);
        std::swap(y, st.y5);
    }
    return y;
}

std::vector<double> integrate_rk4(const VelocityField& f, std::vector<double> x0, double t0, double t1,
                                  std::size_t steps)
{
    if (steps == 0) throw std::invalid_argument("need at least one step");
    std::size_t n = x0.size();
    std::vector<double> y = std::move(x0), k1(n), k2(n), k3(n), k4(n), tmp(n);
    double h = (t1 - t0) / double(steps);
    for (std::size_t s = 0; s < steps; ++s) {
        double t = t0 + double(s) * h;
        f(t, y, k1);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k1[i];
        f(t + 0.5 * h, tmp, k2);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + 0.5 * h * k2[i];
        f(t + 0.5 * h, tmp, k3);
        for (std::size_t i = 0; i < n; ++i) tmp[i] = y[i] + h * k3[i];
        f(t + h, tmp, k4);
        for (std::size_t i = 0; i < n; ++i) y[i] += h / 6.0 * (k1[i] + 2 * k2[i] + 2 * k3[i] + k4[i]);
    }
    return y;
}

VelocityField guidance_field(const TheoryModel& theory, const EvolvingFunctional& psi)
{
    if (!theory.field_theory() || !psi.initial().space()->same_layout(*theory.space()))
        throw std::invalid_argument("functional does not match the theory");
    return [&theory, &psi](double t, std::span<const double> x, std::span<double> v) {
        thread_local std::vector<cplx> g;
        g.resize(x.size());
        psi.log_psi_gradient(t, x, g);
        guidance_velocity(theory, x, g, v);
    };
}

Trajectory integrate_trajectory(const TheoryModel& theory, const EvolvingFunctional& psi,
                                const FieldConfiguration& start, std::span<const double> times, const Tolerances& tol)
{
    if (!start.space || !start.space->same_layout(*theory.space()))
        throw std::invalid_argument("configuration does not match the theory");
    Trajectory tr = integrate(guidance_field(theory, psi), start.x, times, tol);
    // coordinates carry the pairing and transversality by construction; measure what survives
    const FieldSpace& space = *theory.space();
    for (const auto& y : tr.states)
        for (std::size_t s = 0; s < space.sectors().size(); ++s) {
            const auto& sec = space.sectors()[s];
            auto amps = sec.basis->amplitudes(std::span<const double>(y).subspan(sec.offset, sec.basis->dimension()));
            tr.stats.projection_residual = std::max(
                {tr.stats.projection_residual, sec.basis->reality_residual(amps), sec.basis->transversality_residual(amps)});
        }
    return tr;
}

} // namespace pwf
