#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace gradescale::stats {

// Standard-normal CDF via the complementary error function.
// Absolute error is well below 1e-7 everywhere (erfc is accurate to a few ulp).
inline double normal_cdf(double x) {
    if (!std::isfinite(x)) throw std::domain_error("normal_cdf: non-finite input");
    return 0.5 * std::erfc(-x / std::sqrt(2.0));
}

// Inverse standard-normal CDF. Acklam's rational approximation refined by one
// Halley step against normal_cdf, giving near machine precision on (0,1).
inline double normal_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::domain_error("normal_quantile: p must be in (0,1)");

    static constexpr double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                                   -2.759285104469687e+02, 1.383577518672690e+02,
                                   -3.066479806614716e+01, 2.506628277459239e+00};
    static constexpr double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                                   -1.556989798598866e+02, 6.680131188771972e+01,
                                   -1.328068155288572e+01};
    static constexpr double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                   -2.400758277161838e+00, -2.549732539343734e+00,
                                   4.374664141464968e+00,  2.938163982698783e+00};
    static constexpr double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                                   2.445134137142996e+00, 3.754408661907416e+00};
    constexpr double p_low = 0.02425;

    double x;
    if (p < p_low) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    } else if (p <= 1.0 - p_low) {
        const double q = p - 0.5;
        const double r = q * q;
        x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1.0);
    } else {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
            ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1.0);
    }

    const double e = normal_cdf(x) - p;
    const double u = e * std::sqrt(2.0 * M_PI) * std::exp(x * x / 2.0);
    return x - u / (1.0 + x * u / 2.0);
}

// Complementary CDF of the Kolmogorov distribution, Q(l) = P(K > l).
// Uses the theta-function series for small l and the alternating series
// otherwise (both converge to well under 1e-12 at the switch point).
inline double kolmogorov_sf(double lambda) {
    if (lambda <= 0.0) return 1.0;
    if (lambda < 1.18) {
        const double t = std::exp(-M_PI * M_PI / (8.0 * lambda * lambda));
        const double cdf = std::sqrt(2.0 * M_PI) / lambda *
                           (t + std::pow(t, 9.0) + std::pow(t, 25.0) + std::pow(t, 49.0));
        return std::clamp(1.0 - cdf, 0.0, 1.0);
    }
    double sum = 0.0;
    double sign = 1.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += sign * term;
        if (term < 1e-14) break;
        sign = -sign;
    }
    return std::clamp(2.0 * sum, 0.0, 1.0);
}

struct KsResult {
    double statistic = 0.0;
    double p_value = 0.0;
    std::size_t n = 0;
    double fitted_mean = 0.0;
    double fitted_std = 0.0;

    bool consistent_with_normal() const { return p_value > 0.05; }
};

inline constexpr std::size_t kKsMinSample = 8;

// Fitting mean/std from the sample biases the asymptotic p-value upward
// (the Lilliefors effect); reports carry this note rather than a correction.
inline constexpr const char* kLillieforsNote =
    "Normal parameters were estimated from the sample; the asymptotic "
    "Kolmogorov p-value is conservative-biased (no Lilliefors correction applied).";

inline double sample_mean(std::span<const double> xs) {
    return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation, n-1 denominator.
inline double sample_std(std::span<const double> xs, double mean) {
    double ss = 0.0;
    for (double x : xs) ss += (x - mean) * (x - mean);
    return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// One-sample KS test of normality with parameters fitted from the sample.
// statistic = sup_x |ECDF(x) - Phi((x-mean)/std)|, p-value asymptotic from
// the Kolmogorov distribution at sqrt(n) * statistic.
inline KsResult ks_normality(std::span<const double> sample) {
    const std::size_t n = sample.size();
    if (n < kKsMinSample)
        throw std::invalid_argument("ks_normality: need at least " +
                                    std::to_string(kKsMinSample) + " observations, got " +
                                    std::to_string(n));
    for (double x : sample)
        if (!std::isfinite(x)) throw std::invalid_argument("ks_normality: non-finite value");

    const double mean = sample_mean(sample);
    const double sd = sample_std(sample, mean);
    if (!(sd > 0.0)) throw std::invalid_argument("ks_normality: sample has zero variance");

    std::vector<double> sorted(sample.begin(), sample.end());
    std::sort(sorted.begin(), sorted.end());

    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = normal_cdf((sorted[i] - mean) / sd);
        const double hi = static_cast<double>(i + 1) / static_cast<double>(n) - f;
        const double lo = f - static_cast<double>(i) / static_cast<double>(n);
        d = std::max({d, hi, lo});
    }

    KsResult result;
    result.statistic = d;
    result.p_value = kolmogorov_sf(std::sqrt(static_cast<double>(n)) * d);
    result.n = n;
    result.fitted_mean = mean;
    result.fitted_std = sd;
    return result;
}

inline double pearson_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.size() < 2)
        throw std::invalid_argument("pearson_correlation: need two aligned samples of size >= 2");
    const double mx = sample_mean(xs);
    const double my = sample_mean(ys);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0)
        throw std::invalid_argument("pearson_correlation: zero-variance sample");
    return sxy / std::sqrt(sxx * syy);
}

inline double rmse(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size() || xs.empty())
        throw std::invalid_argument("rmse: need two aligned non-empty samples");
    double ss = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) ss += (xs[i] - ys[i]) * (xs[i] - ys[i]);
    return std::sqrt(ss / static_cast<double>(xs.size()));
}

}  // namespace gradescale::stats
