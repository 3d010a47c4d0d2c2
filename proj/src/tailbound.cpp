#include "cmflow/tailbound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "cmflow/rng.hpp"
#include "cmflow/stats.hpp"

namespace cmflow::tailbound {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kBandAlpha = 0.01;  // 99% DKW

double apply_activation(Activation act, double x) {
    switch (act) {
        case Activation::Identity: return x;
        case Activation::Relu: return x > 0 ? x : 0.0;
        case Activation::Tanh: return std::tanh(x);
    }
    return x;
}

double empirical_sf(const std::vector<double>& sorted, double x) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), x);
    return static_cast<double>(sorted.end() - it) / static_cast<double>(sorted.size());
}
}  // namespace

PriorFamily prior_from_string(const std::string& s) {
    if (s == "gaussian") return PriorFamily::Gaussian;
    if (s == "uniform") return PriorFamily::Uniform;
    if (s == "laplace") return PriorFamily::Laplace;
    if (s == "cauchy") return PriorFamily::Cauchy;
    throw std::invalid_argument("unknown prior family: " + s);
}

std::string to_string(PriorFamily f) {
    switch (f) {
        case PriorFamily::Gaussian: return "gaussian";
        case PriorFamily::Uniform: return "uniform";
        case PriorFamily::Laplace: return "laplace";
        case PriorFamily::Cauchy: return "cauchy";
    }
    return "?";
}

NetworkSpec NetworkSpec::random(const std::vector<int>& widths, Activation act,
                                std::uint64_t seed, double weight_scale) {
    if (widths.size() < 2) throw std::invalid_argument("network: need at least one layer");
    NetworkSpec net;
    net.activation = act;
    auto rng = make_rng(seed);
    std::normal_distribution<double> dist(0.0, 1.0);
    for (std::size_t k = 1; k < widths.size(); ++k) {
        double sd = weight_scale / std::sqrt(static_cast<double>(widths[k - 1]));
        Eigen::MatrixXd w(widths[k], widths[k - 1]);
        Eigen::VectorXd b(widths[k]);
        for (Eigen::Index i = 0; i < w.size(); ++i) w(i) = sd * dist(rng);
        for (Eigen::Index i = 0; i < b.size(); ++i) b(i) = 0.5 * dist(rng);
        net.weights.push_back(std::move(w));
        net.biases.push_back(std::move(b));
    }
    return net;
}

Eigen::VectorXd NetworkSpec::eval(const Eigen::VectorXd& z) const {
    Eigen::VectorXd h = z;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        h = weights[k] * h + biases[k];
        if (k + 1 < weights.size())
            h = h.unaryExpr([this](double x) { return apply_activation(activation, x); });
    }
    return h;
}

Eigen::MatrixXd NoisePrior::sample(int n, std::uint64_t seed) const {
    auto rng = make_rng(seed);
    Eigen::MatrixXd out(n, dim);
    switch (family) {
        case PriorFamily::Gaussian: {
            std::normal_distribution<double> d(0.0, scale);
            for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = d(rng);
            break;
        }
        case PriorFamily::Uniform: {
            std::uniform_real_distribution<double> d(0.0, scale);
            for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = d(rng);
            break;
        }
        case PriorFamily::Laplace: {
            std::uniform_real_distribution<double> d(-0.5, 0.5);
            for (Eigen::Index i = 0; i < out.size(); ++i) {
                double u = d(rng);
                out(i) = -scale * std::copysign(std::log1p(-2.0 * std::abs(u)), u);
            }
            break;
        }
        case PriorFamily::Cauchy: {
            std::cauchy_distribution<double> d(0.0, scale);
            for (Eigen::Index i = 0; i < out.size(); ++i) out(i) = d(rng);
            break;
        }
    }
    return out;
}

bool NoisePrior::has_moment(int p) const {
    if (family == PriorFamily::Cauchy) return p < 1;
    return true;
}

double lipschitz_upper_bound(const NetworkSpec& net) {
    double bound = 1.0;
    for (const auto& w : net.weights)
        bound *= w.cwiseAbs().colwise().sum().maxCoeff();
    // activation Lipschitz constants are 1 for identity/relu/tanh
    return bound;
}

SurvivalCurve survival_estimate(const std::vector<double>& samples,
                                const std::vector<double>& grid) {
    if (samples.size() < 100)
        throw std::invalid_argument("survival_estimate: need at least 100 samples");
    if (grid.empty()) throw std::invalid_argument("survival_estimate: empty grid");
    std::vector<double> sorted = samples;
    std::sort(sorted.begin(), sorted.end());
    SurvivalCurve c;
    c.x = grid;
    c.sample_count = samples.size();
    c.band_half_width = stats::dkw_half_width(samples.size(), kBandAlpha);
    c.survival.reserve(grid.size());
    for (double x : grid) c.survival.push_back(empirical_sf(sorted, x));
    return c;
}

namespace {

BoundCheckReport compare_survival(const std::vector<double>& lhs_samples,
                                  const std::vector<double>& rhs_samples, double rhs_factor,
                                  const std::vector<double>& grid) {
    std::vector<double> ls = lhs_samples, rs = rhs_samples;
    std::sort(ls.begin(), ls.end());
    std::sort(rs.begin(), rs.end());
    const double band_l = stats::dkw_half_width(ls.size(), kBandAlpha);
    const double band_r = stats::dkw_half_width(rs.size(), kBandAlpha);
    BoundCheckReport rep;
    rep.sample_count = ls.size();
    for (double x : grid) {
        BoundCheckPoint pt;
        pt.x = x;
        pt.lhs = empirical_sf(ls, x);
        pt.rhs = rhs_factor * empirical_sf(rs, x);
        pt.margin = pt.rhs + rhs_factor * band_r + band_l - pt.lhs;
        pt.violated = pt.lhs - band_l > pt.rhs + rhs_factor * band_r;
        if (pt.violated) ++rep.violations;
        rep.points.push_back(pt);
    }
    return rep;
}

}  // namespace

BoundCheckReport check_lemma_sum_bound(double a, double b, int d0, const NoisePrior& prior,
                                       const std::vector<double>& grid, int n,
                                       std::uint64_t seed) {
    if (d0 < 1) throw std::invalid_argument("lemma check: d0 must be >= 1");
    NoisePrior p = prior;
    p.dim = d0;
    Eigen::MatrixXd z = p.sample(n, seed);
    std::vector<double> lhs(n), rhs(n);
    for (int i = 0; i < n; ++i) {
        lhs[i] = a * z.row(i).sum() + b;
        rhs[i] = static_cast<double>(d0) * a * z(i, 0) + b;
    }
    return compare_survival(lhs, rhs, static_cast<double>(d0), grid);
}

BoundCheckReport check_generator_tail_bound(const NetworkSpec& net, const NoisePrior& prior,
                                            int coordinate, const std::vector<double>& grid,
                                            int n, std::uint64_t seed) {
    if (coordinate < 0 || coordinate >= net.output_dim())
        throw std::invalid_argument("tail check: bad coordinate");
    NoisePrior p = prior;
    p.dim = net.input_dim();
    const int d0 = p.dim;
    double L = lipschitz_upper_bound(net);
    double g0 = std::abs(net.eval(Eigen::VectorXd::Zero(d0))(coordinate));
    AffineEnvelope w{static_cast<double>(d0) * L, g0};

    Eigen::MatrixXd z = p.sample(n, seed);
    std::vector<double> lhs(n), rhs(n);
    for (int i = 0; i < n; ++i) {
        lhs[i] = std::abs(net.eval(z.row(i).transpose())(coordinate));
        rhs[i] = w(std::abs(z(i, 0)));
    }
    return compare_survival(lhs, rhs, static_cast<double>(d0), grid);
}

MomentCheckReport check_moment_bound(const NetworkSpec& net, const NoisePrior& prior, int p,
                                     int n, std::uint64_t seed) {
    MomentCheckReport rep;
    if (p < 1) throw std::invalid_argument("moment check: p must be >= 1");
    if (!prior.has_moment(p)) {
        rep.premise_violated = true;
        return rep;
    }
    NoisePrior pr = prior;
    pr.dim = net.input_dim();
    double L = lipschitz_upper_bound(net);
    double g0 = net.eval(Eigen::VectorXd::Zero(pr.dim)).lpNorm<1>();

    Eigen::MatrixXd z = pr.sample(n, seed);
    // E ||Z||^k for k = 0..p from the same draws, so the pointwise inequality
    // ||g(z)||^p <= (L ||z|| + ||g(0)||)^p transfers to the sample means
    std::vector<double> znorm_moments(p + 1, 0.0);
    double est = 0.0;
    for (int i = 0; i < n; ++i) {
        double zn = z.row(i).lpNorm<1>();
        double zk = 1.0;
        for (int k = 0; k <= p; ++k) {
            znorm_moments[k] += zk;
            zk *= zn;
        }
        est += std::pow(net.eval(z.row(i).transpose()).lpNorm<1>(), p);
    }
    for (auto& m : znorm_moments) m /= n;
    rep.estimate = est / n;

    double bound = 0.0;
    double binom = 1.0;
    for (int k = 0; k <= p; ++k) {
        bound += binom * std::pow(L, k) * znorm_moments[k] * std::pow(g0, p - k);
        binom *= static_cast<double>(p - k) / static_cast<double>(k + 1);
    }
    rep.bound = bound;
    rep.holds = rep.estimate <= rep.bound * (1.0 + 1e-12);
    return rep;
}

TailComparisonCurve tail_comparison_demo(const std::vector<double>& model_samples,
                                         const std::vector<double>& target_samples,
                                         const std::vector<double>& grid) {
    if (model_samples.size() < 100000 || target_samples.size() < 100000)
        throw std::invalid_argument("tail demo: need >= 1e5 samples per side");
    if (grid.empty()) throw std::invalid_argument("tail demo: empty tail grid");
    std::vector<double> ms = model_samples, ts = target_samples;
    std::sort(ms.begin(), ms.end());
    std::sort(ts.begin(), ts.end());
    const double bm = stats::dkw_half_width(ms.size(), kBandAlpha);
    const double bt = stats::dkw_half_width(ts.size(), kBandAlpha);

    TailComparisonCurve c;
    for (double x : grid) {
        double fm = empirical_sf(ms, x);
        double ft = empirical_sf(ts, x);
        if (ft <= 0.0) continue;  // past the target's observed support
        c.x.push_back(x);
        double r = fm > 0.0 ? std::log(fm) - std::log(ft) : -kInf;
        c.log_ratio.push_back(r);
        double fl = std::max(fm - bm, 0.0), fh = fm + bm;
        double tl = std::max(ft - bt, 1e-300), th = ft + bt;
        c.lo.push_back(fl > 0.0 ? std::log(fl) - std::log(th) : -kInf);
        c.hi.push_back(std::log(fh) - std::log(tl));
    }
    return c;
}

}  // namespace cmflow::tailbound
