#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace cmflow::tailbound {

enum class Activation { Identity, Relu, Tanh };

// Feed-forward net built from affine layers and a fixed activation with
// phi(0) = 0 and Lipschitz constant 1. Evaluated exactly; used only as the
// subject of the tail-bound checks.
struct NetworkSpec {
    std::vector<Eigen::MatrixXd> weights;  // layer k: d_k x d_{k-1}
    std::vector<Eigen::VectorXd> biases;
    Activation activation = Activation::Tanh;

    static NetworkSpec random(const std::vector<int>& widths, Activation act,
                              std::uint64_t seed, double weight_scale = 1.0);
    Eigen::VectorXd eval(const Eigen::VectorXd& z) const;
    int input_dim() const { return static_cast<int>(weights.front().cols()); }
    int output_dim() const { return static_cast<int>(weights.back().rows()); }
};

enum class PriorFamily { Gaussian, Uniform, Laplace, Cauchy };

PriorFamily prior_from_string(const std::string& s);
std::string to_string(PriorFamily f);

// i.i.d.-component noise prior.
struct NoisePrior {
    PriorFamily family = PriorFamily::Gaussian;
    int dim = 1;
    double scale = 1.0;

    Eigen::MatrixXd sample(int n, std::uint64_t seed) const;  // n x dim
    bool has_moment(int p) const;  // finite E|Z_1|^p
};

// w(z) = d_0 * L * z + |g_i(0)|
struct AffineEnvelope {
    double slope = 0.0;
    double intercept = 0.0;
    double operator()(double z) const { return slope * z + intercept; }
};

struct SurvivalCurve {
    std::vector<double> x;
    std::vector<double> survival;   // non-increasing, in [0,1]
    double band_half_width = 0.0;   // two-sided DKW at level 0.99
    std::size_t sample_count = 0;
};

// Product over layers of the 1-norm induced operator norm (max column
// absolute sum) times activation Lipschitz constants; a valid upper bound
// for the 1-norm Lipschitz constant of the net.
double lipschitz_upper_bound(const NetworkSpec& net);

SurvivalCurve survival_estimate(const std::vector<double>& samples,
                                const std::vector<double>& grid);

struct BoundCheckPoint {
    double x;
    double lhs, rhs;     // empirical estimates (rhs includes the d_0 factor)
    double margin;       // rhs + band - lhs; negative beyond bands = violation
    bool violated;
};

struct BoundCheckReport {
    std::vector<BoundCheckPoint> points;
    int violations = 0;
    std::size_t sample_count = 0;
};

// Lemma check: P(a sum Z_j + b > x) <= d_0 P(d_0 a Z_1 + b > x), flagged
// only beyond joint 99% DKW bands.
BoundCheckReport check_lemma_sum_bound(double a, double b, int d0, const NoisePrior& prior,
                                       const std::vector<double>& grid, int n,
                                       std::uint64_t seed);

// Generated-tail check: empirical sf of |g_i(Z)| against d_0 * sf of
// w(|Z_1|) with w the affine envelope from the Lipschitz bound.
BoundCheckReport check_generator_tail_bound(const NetworkSpec& net, const NoisePrior& prior,
                                            int coordinate, const std::vector<double>& grid,
                                            int n, std::uint64_t seed);

struct MomentCheckReport {
    bool premise_violated = false;  // prior lacks the p-th moment
    double estimate = 0.0;          // MC estimate of E ||g(Z)||_1^p
    double bound = 0.0;             // binomial-theorem bound from the same draws
    bool holds = false;
};

MomentCheckReport check_moment_bound(const NetworkSpec& net, const NoisePrior& prior, int p,
                                     int n, std::uint64_t seed);

struct TailComparisonCurve {
    std::vector<double> x;
    std::vector<double> log_ratio;  // ln sf_model - ln sf_target; -inf past support
    std::vector<double> lo, hi;     // band from joint DKW propagation
};

// Log-survival ratio of model vs target samples on a tail grid. A persistent
// downward trend is the empirical signature that no optimal network exists;
// no formal verdict is asserted.
TailComparisonCurve tail_comparison_demo(const std::vector<double>& model_samples,
                                         const std::vector<double>& target_samples,
                                         const std::vector<double>& grid);

}  // namespace cmflow::tailbound
