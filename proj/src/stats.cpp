#include "cmflow/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace cmflow::stats {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double normal_quantile(double p) {
    if (p <= 0.0 || p >= 1.0)
        throw std::invalid_argument("normal_quantile: p outside (0,1)");
    static const boost::math::normal_distribution<double> n01(0.0, 1.0);
    return boost::math::quantile(n01, p);
}

double normal_log_pdf(double x, double mu, double sigma) {
    double z = (x - mu) / sigma;
    return -0.5 * z * z - std::log(sigma) - 0.5 * std::log(2.0 * std::numbers::pi);
}

double dkw_half_width(std::size_t n, double alpha) {
    return std::sqrt(std::log(2.0 / alpha) / (2.0 * static_cast<double>(n)));
}

double ks_two_sample(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
    while (i < a.size() && j < b.size()) {
        // step past all observations at the next value so ties move both ECDFs
        double v = (j >= b.size() || (i < a.size() && a[i] <= b[j])) ? a[i] : b[j];
        while (i < a.size() && a[i] == v) ++i;
        while (j < b.size() && b[j] == v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
    }
    return d;
}

double ks_one_sample(std::vector<double> sample, const std::vector<double>& cdf_at_sorted) {
    std::sort(sample.begin(), sample.end());
    if (sample.size() != cdf_at_sorted.size())
        throw std::invalid_argument("ks_one_sample: size mismatch");
    const double n = static_cast<double>(sample.size());
    double d = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        double f = cdf_at_sorted[i];
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
    }
    return d;
}

double ks_p_value(double d, std::size_t n) {
    // Kolmogorov asymptotic series with the usual finite-n adjustment.
    double sn = std::sqrt(static_cast<double>(n));
    double lambda = (sn + 0.12 + 0.11 / sn) * d;
    double sum = 0.0;
    for (int k = 1; k <= 100; ++k) {
        double term = 2.0 * std::pow(-1.0, k - 1) * std::exp(-2.0 * k * k * lambda * lambda);
        sum += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double chi_squared_sf(double x, double k) {
    boost::math::chi_squared_distribution<double> dist(k);
    return boost::math::cdf(boost::math::complement(dist, x));
}

double kendall_tau(const std::vector<double>& x, const std::vector<double>& y,
                   std::size_t cap) {
    if (x.size() != y.size() || x.size() < 2)
        throw std::invalid_argument("kendall_tau: need paired samples, n >= 2");
    std::size_t n = x.size();
    std::size_t stride = n > cap ? n / cap : 1;
    std::vector<double> xs, ys;
    for (std::size_t i = 0; i < n; i += stride) {
        xs.push_back(x[i]);
        ys.push_back(y[i]);
    }
    long long conc = 0, disc = 0;
    for (std::size_t i = 0; i < xs.size(); ++i)
        for (std::size_t j = i + 1; j < xs.size(); ++j) {
            double s = (xs[i] - xs[j]) * (ys[i] - ys[j]);
            if (s > 0)
                ++conc;
            else if (s < 0)
                ++disc;
        }
    return static_cast<double>(conc - disc) /
           (0.5 * static_cast<double>(xs.size()) * static_cast<double>(xs.size() - 1));
}

}  // namespace cmflow::stats
