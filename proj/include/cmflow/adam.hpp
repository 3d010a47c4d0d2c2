#pragma once

#include <Eigen/Dense>

namespace cmflow::grad {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moments are lazily sized on the first step.
class AdamState {
public:
    explicit AdamState(AdamConfig cfg = {}) : cfg_(cfg) {}

    // Returns the updated parameter vector; the state advances by one step.
    Eigen::VectorXd step(const Eigen::VectorXd& params, const Eigen::VectorXd& grads);

    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    AdamConfig cfg_;
    long t_ = 0;
    Eigen::VectorXd m_, v_;
};

}  // namespace cmflow::grad
