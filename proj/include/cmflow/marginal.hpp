#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "cmflow/ddsf.hpp"
#include "cmflow/tail_belief.hpp"

namespace cmflow::marginal {

struct MarginalTrainConfig {
    int epochs = 200;
    int batch_size = 1000;
    double lr = 1e-2;
    std::uint64_t seed = 0;
};

// Univariate marginal flow m: [0,1] -> R. On [0,a] u [b,1] it is the exact
// belief quantile; on (a,b) it inverts a DDSF body stored in the CDF
// direction (alpha,beta) -> (a,b), so the log-likelihood is analytic and
// bisection is needed only when sampling.
class UnivariateMarginalFlow {
public:
    static constexpr int kMaxBisectIters = 200;

    UnivariateMarginalFlow(TailBelief belief, flows::Ddsf body,
                           double bisect_tol = 1e-12);

    // m^{-1}(x); exact belief CDF on the tail region, rescaled body CDF inside.
    double cdf(double x) const;
    // m(u); exact tail quantile outside (a,b), bisection inside.
    double forward(double u) const;
    // ln p(x) for x strictly inside (alpha, beta). Samples on or outside the
    // cut points are the caller's to discard.
    double log_density(double x) const;

    // NLL of the body samples plus the analytic gradient with respect to the
    // body's raw parameters (used by training and by gradient checks).
    double nll_and_grad(const std::vector<double>& body_samples, grad::Vec* grad) const;

    // Discards samples outside (alpha, beta), then minibatch Adam on the NLL.
    // Returns per-epoch mean NLL. Tail branches are untouched.
    std::vector<double> train(const std::vector<double>& samples,
                              const MarginalTrainConfig& config);

    const TailBelief& belief() const { return belief_; }
    const flows::Ddsf& body() const { return body_; }
    flows::Ddsf& body() { return body_; }

private:
    double body_cdf(double x) const;
    bool warped() const;  // sigmoid warp when a cut point is infinite

    TailBelief belief_;
    flows::Ddsf body_;
    double bisect_tol_;
};

class BivariateMarginalFlow {
public:
    BivariateMarginalFlow(UnivariateMarginalFlow m1, UnivariateMarginalFlow m2)
        : components_{std::move(m1), std::move(m2)} {}

    std::array<double, 2> forward(const std::array<double, 2>& u) const {
        return {components_[0].forward(u[0]), components_[1].forward(u[1])};
    }
    std::array<double, 2> cdf(const std::array<double, 2>& x) const {
        return {components_[0].cdf(x[0]), components_[1].cdf(x[1])};
    }

    const UnivariateMarginalFlow& component(int i) const { return components_.at(i); }
    UnivariateMarginalFlow& component(int i) { return components_.at(i); }

private:
    std::array<UnivariateMarginalFlow, 2> components_;
};

}  // namespace cmflow::marginal
