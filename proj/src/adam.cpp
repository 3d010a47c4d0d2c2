#include "cmflow/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace cmflow::grad {

Eigen::VectorXd AdamState::step(const Eigen::VectorXd& params,
                                const Eigen::VectorXd& grads) {
    if (params.size() != grads.size())
        throw std::invalid_argument("adam: shape mismatch between params and grads");
    if (m_.size() == 0) {
        m_ = Eigen::VectorXd::Zero(params.size());
        v_ = Eigen::VectorXd::Zero(params.size());
    } else if (m_.size() != params.size()) {
        throw std::invalid_argument("adam: parameter size changed mid-run");
    }
    ++t_;
    m_ = cfg_.beta1 * m_ + (1.0 - cfg_.beta1) * grads;
    v_ = cfg_.beta2 * v_.array().matrix() +
         (1.0 - cfg_.beta2) * grads.array().square().matrix();
    double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
    double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
    Eigen::ArrayXd mhat = m_.array() / bc1;
    Eigen::ArrayXd vhat = v_.array() / bc2;
    return params.array() - cfg_.lr * mhat / (vhat.sqrt() + cfg_.eps);
}

}  // namespace cmflow::grad
