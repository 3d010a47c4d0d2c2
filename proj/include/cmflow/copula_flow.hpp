#pragma once

#include <functional>
#include <vector>

#include "cmflow/coupling.hpp"

namespace cmflow::flows {

struct CopulaTrainConfig {
    int batch_size = 3000;
    int max_steps = 50000;
    int check_every = 500;
    double lr = 1e-3;
};

struct CopulaTrainHistory {
    std::vector<int> steps;
    std::vector<double> nll;
    bool stopped_by_criterion = false;
    bool diverged = false;
};

// Sigmoid-sandwiched copula flow h = sigmoid o nvp o logit on [0,1]^2.
// Bijective on the clamped interior; a constrained net keeps coordinate 2
// bit-exact, pinning that marginal to uniform.
class CopulaFlow {
public:
    static constexpr double kClampEps = 1e-7;

    explicit CopulaFlow(RealNvp2 net, double eps = kClampEps)
        : net_(std::move(net)), eps_(eps) {}

    // c = sigmoid(nvp(logit(u))), u clamped to [eps, 1-eps] first.
    grad::Mat sample(const grad::Mat& u) const;
    // Functional inverse of sample on the interior.
    grad::Mat inverse(const grad::Mat& c) const;
    // Exact model log-density at interior points (clamped at eps).
    Vec log_density(const grad::Mat& c) const;
    double log_density_at(double c1, double c2) const;

    // Mean NLL of a batch plus the analytic parameter gradient.
    double nll_and_grad(const grad::Mat& c, Vec* grad) const;

    // Adam on batches from `sampler` (pairs in [0,1]^2). `stop_check`, when
    // set, runs every check_every steps and returns true to stop early. A
    // non-finite loss aborts and restores the last good parameters.
    CopulaTrainHistory train(const std::function<grad::Mat(int)>& sampler,
                             const CopulaTrainConfig& config,
                             const std::function<bool(const CopulaFlow&, int)>& stop_check = {});

    bool constrained() const { return net_.constrained(); }
    double eps() const { return eps_; }
    const RealNvp2& net() const { return net_; }
    RealNvp2& net() { return net_; }

private:
    RealNvp2 net_;
    double eps_;
};

}  // namespace cmflow::flows
