#include "cmflow/copula_flow.hpp"

#include <cmath>
#include <stdexcept>

#include "cmflow/adam.hpp"

namespace cmflow::flows {

namespace {
using grad::Mat;

double clampe(double x, double eps) { return std::clamp(x, eps, 1.0 - eps); }
double logit(double x) { return std::log(x / (1.0 - x)); }
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}  // namespace

Mat CopulaFlow::sample(const Mat& u) const {
    if (u.cols() != 2) throw std::invalid_argument("copula flow: expected B x 2 input");
    Mat v = u.unaryExpr([this](double x) { return logit(clampe(x, eps_)); });
    Mat c = net_.forward(v).y.unaryExpr([](double x) { return sigmoid(x); });
    if (net_.constrained()) c.col(1) = u.col(1);  // coordinate 2 is the identity
    return c;
}

Mat CopulaFlow::inverse(const Mat& c) const {
    if (c.cols() != 2) throw std::invalid_argument("copula flow: expected B x 2 input");
    Mat v = c.unaryExpr([this](double x) { return logit(clampe(x, eps_)); });
    Mat u = net_.inverse(v).y.unaryExpr([](double x) { return sigmoid(x); });
    if (net_.constrained()) u.col(1) = c.col(1);
    return u;
}

Vec CopulaFlow::log_density(const Mat& c) const {
    if (c.cols() != 2) throw std::invalid_argument("copula flow: expected B x 2 input");
    Mat cc = c.unaryExpr([this](double x) { return clampe(x, eps_); });
    Mat v = cc.unaryExpr([](double x) { return logit(x); });
    auto inv = net_.inverse(v);
    Vec out(c.rows());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        double u1 = sigmoid(inv.y(i, 0)), u2 = sigmoid(inv.y(i, 1));
        double lp = std::log(u1 * (1.0 - u1)) + std::log(u2 * (1.0 - u2)) + inv.log_det(i) -
                    std::log(cc(i, 0) * (1.0 - cc(i, 0))) -
                    std::log(cc(i, 1) * (1.0 - cc(i, 1)));
        if (!std::isfinite(lp))
            throw std::runtime_error("copula flow: non-finite log density");
        out(i) = lp;
    }
    return out;
}

double CopulaFlow::log_density_at(double c1, double c2) const {
    Mat c(1, 2);
    c << c1, c2;
    return log_density(c)(0);
}

double CopulaFlow::nll_and_grad(const Mat& c, Vec* grad_out) const {
    const Eigen::Index B = c.rows();
    if (B == 0 || c.cols() != 2) throw std::invalid_argument("copula flow nll: bad batch");
    Mat cc = c.unaryExpr([this](double x) { return clampe(x, eps_); });
    Mat v1 = cc.col(0).unaryExpr([](double x) { return logit(x); });
    Mat v2 = cc.col(1).unaryExpr([](double x) { return logit(x); });
    // data-side change of variables, constant in the parameters
    double data_term = 0.0;
    for (Eigen::Index i = 0; i < B; ++i)
        data_term += std::log(cc(i, 0) * (1.0 - cc(i, 0))) +
                     std::log(cc(i, 1) * (1.0 - cc(i, 1)));
    data_term /= static_cast<double>(B);

    grad::Tape tape;
    int n1 = tape.leaf(v1);
    int n2 = tape.leaf(v2);
    auto inv = net_.build_inverse(tape, n1, n2);
    int u1 = tape.sigmoid(inv.y1);
    int u2 = tape.sigmoid(inv.y2);
    int t1 = tape.log(tape.mul(u1, tape.add_const(tape.neg(u1), 1.0)));
    int t2 = tape.log(tape.mul(u2, tape.add_const(tape.neg(u2), 1.0)));
    int logp = tape.add(tape.add(t1, t2), inv.log_det);
    int loss = tape.scale(tape.sum(logp), -1.0 / static_cast<double>(B));
    loss = tape.add_const(loss, data_term);

    double value = tape.scalar(loss);
    if (grad_out) *grad_out = tape.backward(loss);
    return value;
}

CopulaTrainHistory CopulaFlow::train(
    const std::function<Mat(int)>& sampler, const CopulaTrainConfig& config,
    const std::function<bool(const CopulaFlow&, int)>& stop_check) {
    grad::AdamState adam({config.lr});
    Vec params = net_.raw();
    Vec last_good = params;
    CopulaTrainHistory hist;

    for (int step = 1; step <= config.max_steps; ++step) {
        Mat batch = sampler(config.batch_size);
        Vec grad;
        double loss;
        try {
            loss = nll_and_grad(batch, &grad);
        } catch (const std::runtime_error&) {
            loss = std::numeric_limits<double>::quiet_NaN();
        }
        if (!std::isfinite(loss)) {
            net_.set_raw(last_good);
            hist.diverged = true;
            return hist;
        }
        last_good = params;
        params = adam.step(params, grad);
        net_.set_raw(params);

        if (step % config.check_every == 0 || step == config.max_steps) {
            hist.steps.push_back(step);
            hist.nll.push_back(loss);
            if (stop_check && stop_check(*this, step)) {
                hist.stopped_by_criterion = true;
                return hist;
            }
        }
    }
    return hist;
}

}  // namespace cmflow::flows
