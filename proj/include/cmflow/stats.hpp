#pragma once

#include <cstddef>
#include <vector>

namespace cmflow::stats {

double normal_cdf(double x);       // standard normal Phi
double normal_quantile(double p);  // Phi^{-1}, p in (0,1)
double normal_log_pdf(double x, double mu, double sigma);

// DKW half-width for a two-sided band at confidence 1-alpha.
double dkw_half_width(std::size_t n, double alpha);

// Two-sample Kolmogorov-Smirnov distance.
double ks_two_sample(std::vector<double> a, std::vector<double> b);

// One-sample KS statistic against a CDF given as sorted (x, F(x)) evaluations
// of the hypothesized law at the sample points. `sample` is sorted in place.
double ks_one_sample(std::vector<double> sample, const std::vector<double>& cdf_at_sorted);

// Asymptotic p-value of the two-sided KS statistic at sample size n.
double ks_p_value(double d, std::size_t n);

// Upper tail of the chi-squared distribution with k degrees of freedom.
double chi_squared_sf(double x, double k);

// Kendall's tau of paired samples, O(n^2) on a subsample cap if n is large.
double kendall_tau(const std::vector<double>& x, const std::vector<double>& y,
                   std::size_t cap = 20000);

}  // namespace cmflow::stats
