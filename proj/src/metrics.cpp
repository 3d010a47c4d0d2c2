#include "cmflow/metrics.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cmflow/rng.hpp"

namespace cmflow::metrics {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

struct GridEval {
    std::vector<double> p, q;    // normalized over valid cells; -1 marks invalid
    std::vector<bool> valid;
    int n_valid = 0;
};

GridEval evaluate_grids(const DensityFn& p, const DensityFn& q, int mesh) {
    if (mesh < 2) throw std::invalid_argument("jsd: mesh must be >= 2");
    GridEval g;
    const int cells = mesh * mesh;
    g.p.assign(cells, -1.0);
    g.q.assign(cells, -1.0);
    g.valid.assign(cells, false);
    double sum_p = 0.0, sum_q = 0.0;
    for (int iy = 0; iy < mesh; ++iy) {
        double y = (iy + 0.5) / mesh;
        for (int ix = 0; ix < mesh; ++ix) {
            double x = (ix + 0.5) / mesh;
            auto pv = p(x, y);
            auto qv = q(x, y);
            if (!pv || !qv || !(*pv >= 0.0) || !(*qv >= 0.0) || !std::isfinite(*pv) ||
                !std::isfinite(*qv))
                continue;
            int k = iy * mesh + ix;
            g.p[k] = *pv;
            g.q[k] = *qv;
            g.valid[k] = true;
            ++g.n_valid;
            sum_p += *pv;
            sum_q += *qv;
        }
    }
    if (g.n_valid == 0 || sum_p <= 0.0 || sum_q <= 0.0)
        throw std::runtime_error("jsd: no valid cells");
    for (int k = 0; k < cells; ++k)
        if (g.valid[k]) {
            g.p[k] /= sum_p;
            g.q[k] /= sum_q;
        }
    return g;
}

double jsd_cell(double p, double q) {
    double m = 0.5 * (p + q);
    double s = 0.0;
    if (p > 0.0) s += 0.5 * p * std::log(p / m);
    if (q > 0.0) s += 0.5 * q * std::log(q / m);
    return s;
}

}  // namespace

JsdResult jsd_grid(const DensityFn& p, const DensityFn& q, int mesh) {
    GridEval g = evaluate_grids(p, q, mesh);
    JsdResult r;
    r.total_cells = mesh * mesh;
    r.valid_cells = g.n_valid;
    for (int k = 0; k < r.total_cells; ++k)
        if (g.valid[k]) r.value += jsd_cell(g.p[k], g.q[k]);
    return r;
}

JsdMap jsd_pointwise_map(const DensityFn& p, const DensityFn& q, int mesh) {
    GridEval g = evaluate_grids(p, q, mesh);
    JsdMap map;
    map.mesh = mesh;
    map.total.total_cells = mesh * mesh;
    map.total.valid_cells = g.n_valid;
    map.cells.assign(mesh * mesh, kNaN);
    for (int k = 0; k < mesh * mesh; ++k)
        if (g.valid[k]) {
            double c = jsd_cell(g.p[k], g.q[k]);
            map.total.value += c;
            // scaled so that (1/n_valid) * sum(cells) = total
            map.cells[k] = c * g.n_valid;
        }
    return map;
}

namespace {

double uniformity(const std::vector<double>& samples, int bins, bool take_max) {
    if (bins < 1) throw std::invalid_argument("uniformity: bins must be >= 1");
    if (samples.size() < static_cast<std::size_t>(bins))
        throw std::invalid_argument("uniformity: need at least `bins` samples");
    std::vector<std::size_t> counts(bins, 0);
    for (double s : samples) {
        int k = static_cast<int>(s * bins);
        k = std::clamp(k, 0, bins - 1);
        ++counts[k];
    }
    const double log_n = std::log(static_cast<double>(bins));
    const double total = static_cast<double>(samples.size());
    double acc = 0.0;
    for (int k = 0; k < bins; ++k) {
        if (counts[k] == 0) return kInf;
        double term = std::abs(std::log(counts[k] / total) + log_n);
        acc = take_max ? std::max(acc, term) : acc + term;
    }
    return take_max ? acc : acc / bins;
}

}  // namespace

double uniformity_T(const std::vector<double>& samples, int bins) {
    return uniformity(samples, bins, false);
}

double uniformity_M(const std::vector<double>& samples, int bins) {
    return uniformity(samples, bins, true);
}

double eval_nll(const std::function<double(double, double)>& log_density,
                const Eigen::MatrixXd& samples) {
    if (samples.rows() == 0) throw std::invalid_argument("nll: empty sample set");
    double acc = 0.0;
    for (Eigen::Index i = 0; i < samples.rows(); ++i) {
        double lp = log_density(samples(i, 0), samples(i, 1));
        if (!std::isfinite(lp))
            throw std::runtime_error("nll: non-finite contribution at row " +
                                     std::to_string(i));
        acc -= lp;
    }
    return acc / static_cast<double>(samples.rows());
}

DensityFn copula_density_fn(const copulas::ReferenceCopula& cop) {
    return [cop](double u, double v) { return cop.density(u, v); };
}

DensityFn flow_density_fn(const flows::CopulaFlow& flow) {
    return [&flow](double u, double v) -> std::optional<double> {
        double d;
        try {
            d = std::exp(flow.log_density_at(u, v));
        } catch (const std::runtime_error&) {
            return std::nullopt;
        }
        if (!std::isfinite(d)) return std::nullopt;
        return d;
    };
}

MetricReport metric_report(const flows::CopulaFlow& flow,
                           const copulas::ReferenceCopula& target,
                           const MetricConfig& config) {
    MetricReport rep;
    rep.mesh = config.mesh;
    rep.seed = config.seed;
    rep.eval_samples = config.uniformity_samples;

    rep.jsd = jsd_grid(copula_density_fn(target), flow_density_fn(flow), config.mesh).value;

    auto rng = make_rng(config.seed, 100);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Eigen::MatrixXd u(config.uniformity_samples, 2);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        u(i, 0) = unif(rng);
        u(i, 1) = unif(rng);
    }
    Eigen::MatrixXd c = flow.sample(u);
    std::vector<double> c1(c.rows()), c2(c.rows());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        c1[i] = c(i, 0);
        c2[i] = c(i, 1);
    }
    rep.t1 = uniformity_T(c1, config.bins);
    rep.t2 = uniformity_T(c2, config.bins);
    rep.m1 = uniformity_M(c1, config.bins);
    rep.m2 = uniformity_M(c2, config.bins);

    Eigen::MatrixXd eval = target.sample(config.nll_samples, mix_seed(config.seed, 101));
    rep.nll = eval_nll(
        [&flow](double a, double b) { return flow.log_density_at(a, b); }, eval);

    const auto& th = config.thresholds;
    rep.stop = rep.jsd <= th.jsd && rep.t1 <= th.t && rep.t2 <= th.t && rep.m1 <= th.m &&
               rep.m2 <= th.m;
    return rep;
}

}  // namespace cmflow::metrics
