#include "pwf/stats.hpp"

#include "pwf/common.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace pwf {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::sqrt(2.0)); }

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * pi); }

double kolmogorov_survival(double lambda)
{
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        // small-lambda form converges faster there
        double s = 0.0, y = pi * pi / (8.0 * lambda * lambda);
        for (int k = 1; k < 50; k += 2) s += std::exp(-double(k * k) * y);
        return 1.0 - std::sqrt(2.0 * pi) / lambda * s;
    }
    double s = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double t = std::exp(-2.0 * k * k * lambda * lambda);
        s += (k % 2 ? 2.0 : -2.0) * t;
        if (t < 1e-300) break;
    }
    return std::clamp(s, 0.0, 1.0);
}

namespace {

double kolmogorov_quantile(double alpha)
{
    double lo = 0.2, hi = 5.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (kolmogorov_survival(mid) > alpha) lo = mid;
        else hi = mid;
    }
    return 0.5 * (lo + hi);
}

double stephens(double n) { return std::sqrt(n) + 0.12 + 0.11 / std::sqrt(n); }

} // namespace

double ks_critical(std::size_t n, double alpha)
{
    if (n == 0 || !(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("bad KS arguments");
    return kolmogorov_quantile(alpha) / stephens(double(n));
}

double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha)
{
    if (n == 0 || m == 0) throw std::invalid_argument("bad KS arguments");
    return kolmogorov_quantile(alpha) / stephens(double(n) * m / double(n + m));
}

double ks_pvalue(double d, double effective_n) { return kolmogorov_survival(stephens(effective_n) * d); }

double ks_statistic(std::vector<double> s, const std::function<double(double)>& cdf)
{
    if (s.empty()) throw std::invalid_argument("KS needs samples");
    std::sort(s.begin(), s.end());
    double n = double(s.size()), d = 0.0;
    for (std::size_t i = 0; i < s.size(); ++i) {
        double f = cdf(s[i]);
        d = std::max({d, double(i + 1) / n - f, f - double(i) / n});
    }
    return d;
}

double ks_two_sample(std::vector<double> a, std::vector<double> b)
{
    if (a.empty() || b.empty()) throw std::invalid_argument("KS needs samples");
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double na = double(a.size()), nb = double(b.size()), d = 0.0;
    while (i < a.size() && j < b.size()) {
        double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) ++i;
        while (j < b.size() && b[j] <= x) ++j;
        d = std::max(d, std::abs(double(i) / na - double(j) / nb));
    }
    return d;
}

LineFit fit_line(std::span<const double> x, std::span<const double> y)
{
    std::size_t n = x.size();
    if (n < 2 || y.size() != n) throw std::invalid_argument("fit needs two or more points");
    double mx = std::accumulate(x.begin(), x.end(), 0.0) / n, my = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double sxx = 0, sxy = 0, syy = 0;
    for (std::size_t i = 0; i < n; ++i) {
        sxx += (x[i] - mx) * (x[i] - mx);
        sxy += (x[i] - mx) * (y[i] - my);
        syy += (y[i] - my) * (y[i] - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit needs distinct abscissae");
    LineFit f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    double sse = std::max(0.0, syy - f.slope * sxy);
    f.r2 = syy > 0 ? 1.0 - sse / syy : 1.0;
    f.slope_error = n > 2 ? std::sqrt(sse / double(n - 2) / sxx) : 0.0;
    return f;
}

Moments moments(std::span<const double> v)
{
    Moments m;
    if (v.empty()) return m;
    double n = double(v.size());
    m.mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
    double s = 0;
    for (double x : v) s += (x - m.mean) * (x - m.mean);
    m.variance = v.size() > 1 ? s / (n - 1) : 0.0;
    m.standard_error = std::sqrt(m.variance / n);
    return m;
}

double split_rhat(const std::vector<std::vector<double>>& chains)
{
    if (chains.empty()) throw std::invalid_argument("no chains");
    std::size_t len = chains.front().size() / 2;
    if (len < 2) throw std::invalid_argument("chains too short");
    std::vector<std::span<const double>> halves;
    for (const auto& c : chains) {
        if (c.size() / 2 != len) throw std::invalid_argument("chains differ in length");
        halves.emplace_back(c.data(), len);
        halves.emplace_back(c.data() + c.size() - len, len);
    }
    double m = double(halves.size()), n = double(len);
    std::vector<double> means;
    double w = 0;
    for (auto h : halves) {
        auto mo = moments(h);
        means.push_back(mo.mean);
        w += mo.variance;
    }
    w /= m;
    double b = n * moments(means).variance;
    if (w == 0.0) return b == 0.0 ? 1.0 : std::numeric_limits<double>::infinity();
    double var = (n - 1) / n * w + b / n;
    return std::sqrt(var / w);
}

QuadratureRule gauss_hermite(int n)
{
    if (n < 1) throw std::invalid_argument("rule needs a node");
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    // Newton iteration on the orthonormal recurrence, largest root first
    double z = 0;
    for (int i = 0; i < (n + 1) / 2; ++i) {
        if (i == 0) z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -1.0 / 6);
        else if (i == 1) z -= 1.14 * std::pow(double(n), 0.426) / z;
        else if (i == 2) z = 1.86 * z - 0.86 * r.nodes[0];
        else if (i == 3) z = 1.91 * z - 0.91 * r.nodes[1];
        else z = 2.0 * z - r.nodes[i - 2];
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p1 = std::pow(pi, -0.25), p2 = 0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(double(j) / (j + 1)) * p3;
            }
            pp = std::sqrt(2.0 * n) * p2;
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        r.nodes[i] = z;
        r.nodes[n - 1 - i] = -z;
        r.weights[i] = r.weights[n - 1 - i] = 2.0 / (pp * pp);
    }
    std::reverse(r.nodes.begin(), r.nodes.end());
    std::reverse(r.weights.begin(), r.weights.end());
    return r;
}

QuadratureRule gauss_legendre(int n)
{
    if (n < 1) throw std::invalid_argument("rule needs a node");
    QuadratureRule r;
    r.nodes.resize(n);
    r.weights.resize(n);
    for (int i = 0; i < (n + 1) / 2; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5)), pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p1 = 1, p2 = 0;
            for (int j = 0; j < n; ++j) {
                double p3 = p2;
                p2 = p1;
                p1 = ((2.0 * j + 1) * z * p2 - j * p3) / (j + 1);
            }
            pp = n * (z * p1 - p2) / (z * z - 1);
            double z1 = z;
            z = z1 - p1 / pp;
            if (std::abs(z - z1) < 1e-15) break;
        }
        r.nodes[i] = -z;
        r.nodes[n - 1 - i] = z;
        r.weights[i] = r.weights[n - 1 - i] = 2.0 / ((1 - z * z) * pp * pp);
    }
    return r;
}

} // namespace pwf
