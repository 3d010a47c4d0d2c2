#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "cmflow/copula_flow.hpp"
#include "cmflow/ref_copulas.hpp"

namespace cmflow::metrics {

// Density on (0,1)^2; nullopt marks an invalid evaluation to discard.
using DensityFn = std::function<std::optional<double>(double, double)>;

struct JsdResult {
    double value = 0.0;
    int valid_cells = 0;
    int total_cells = 0;
};

// JSD (natural log) of two densities evaluated on equidistant cell centers of
// a mesh x mesh grid. Invalid cells are discarded and both discrete mass
// vectors renormalized over the survivors.
JsdResult jsd_grid(const DensityFn& p, const DensityFn& q, int mesh);

struct JsdMap {
    int mesh = 0;
    std::vector<double> cells;  // row-major per-cell integrand, NaN = invalid
    JsdResult total;
};

// Per-cell JSD contributions scaled so that mean over valid cells = total.
JsdMap jsd_pointwise_map(const DensityFn& p, const DensityFn& q, int mesh);

// T(i,n) = (1/n) sum_k |ln Phat(A_k) + ln n| over bins A_k = [(k-1)/n, k/n).
// An empty bin yields +infinity.
double uniformity_T(const std::vector<double>& samples, int bins);
// Same with max instead of mean.
double uniformity_M(const std::vector<double>& samples, int bins);

// Mean of -log density over samples; throws on a non-finite contribution.
double eval_nll(const std::function<double(double, double)>& log_density,
                const Eigen::MatrixXd& samples);

struct MetricThresholds {
    double jsd = 1e-3;
    double t = 1e-2;
    double m = 8e-2;
};

struct MetricConfig {
    int mesh = 300;
    int bins = 25;
    int uniformity_samples = 500000;
    int nll_samples = 3000;
    std::uint64_t seed = 0;
    MetricThresholds thresholds;
};

struct MetricReport {
    double jsd = 0.0;
    double t1 = 0.0, t2 = 0.0;
    double m1 = 0.0, m2 = 0.0;
    double nll = 0.0;
    int eval_samples = 0;
    int mesh = 0;
    std::uint64_t seed = 0;
    bool stop = false;
};

DensityFn copula_density_fn(const copulas::ReferenceCopula& cop);
DensityFn flow_density_fn(const flows::CopulaFlow& flow);

// Full evaluation of a flow against a target copula, deterministic per seed.
MetricReport metric_report(const flows::CopulaFlow& flow,
                           const copulas::ReferenceCopula& target,
                           const MetricConfig& config);

}  // namespace cmflow::metrics
