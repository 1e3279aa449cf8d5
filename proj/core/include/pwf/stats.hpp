#pragma once

#include <functional>
#include <span>
#include <vector>

namespace pwf {

double normal_cdf(double x);
double normal_pdf(double x);

// Survival function of the Kolmogorov distribution, P(K > lambda).
double kolmogorov_survival(double lambda);
// Critical D for a one-sample test at level alpha with n samples (Stephens' finite-n correction).
double ks_critical(std::size_t n, double alpha);
double ks_critical_two_sample(std::size_t n, std::size_t m, double alpha);
double ks_pvalue(double d, double effective_n);

// Sup distance between the empirical CDF of the samples and cdf.
double ks_statistic(std::vector<double> samples, const std::function<double(double)>& cdf);
double ks_two_sample(std::vector<double> a, std::vector<double> b);

struct LineFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
    double slope_error = 0.0;
};
LineFit fit_line(std::span<const double> x, std::span<const double> y);

struct Moments {
    double mean = 0.0;
    double variance = 0.0; // unbiased
    double standard_error = 0.0;
};
Moments moments(std::span<const double> v);

// Split-chain potential scale reduction; chains must share one length.
double split_rhat(const std::vector<std::vector<double>>& chains);

struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;
};
// Physicists' Gauss-Hermite rule, weight exp(-y^2).
QuadratureRule gauss_hermite(int n);
// Gauss-Legendre rule on [-1, 1].
QuadratureRule gauss_legendre(int n);

} // namespace pwf
