#include "cmflow/marginal.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "cmflow/adam.hpp"
#include "cmflow/rng.hpp"

namespace cmflow::marginal {

namespace {
double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
}

UnivariateMarginalFlow::UnivariateMarginalFlow(TailBelief belief, flows::Ddsf body,
                                               double bisect_tol)
    : belief_(std::move(belief)), body_(std::move(body)), bisect_tol_(bisect_tol) {
    if (bisect_tol_ <= 0.0) throw std::invalid_argument("marginal: bisect tol must be > 0");
}

bool UnivariateMarginalFlow::warped() const {
    return !std::isfinite(belief_.alpha()) || !std::isfinite(belief_.beta());
}

double UnivariateMarginalFlow::body_cdf(double x) const {
    const double a = belief_.a(), b = belief_.b();
    double fx = body_.eval(x).value;
    double s_x, s_alpha, s_beta;
    if (warped()) {
        s_x = sigmoid(fx);
        s_alpha = std::isfinite(belief_.alpha()) ? sigmoid(body_.eval(belief_.alpha()).value) : 0.0;
        s_beta = std::isfinite(belief_.beta()) ? sigmoid(body_.eval(belief_.beta()).value) : 1.0;
    } else {
        s_x = fx;
        s_alpha = body_.eval(belief_.alpha()).value;
        s_beta = body_.eval(belief_.beta()).value;
    }
    return a + (b - a) * (s_x - s_alpha) / (s_beta - s_alpha);
}

double UnivariateMarginalFlow::cdf(double x) const {
    if (!std::isfinite(x)) throw std::invalid_argument("marginal cdf: x must be finite");
    if (x == belief_.alpha()) return belief_.a();
    if (x == belief_.beta()) return belief_.b();
    if (x < belief_.alpha() || x > belief_.beta()) return belief_.cdf(x);
    return body_cdf(x);
}

double UnivariateMarginalFlow::forward(double u) const {
    if (u < 0.0 || u > 1.0) throw std::invalid_argument("marginal forward: u outside [0,1]");
    const double a = belief_.a(), b = belief_.b();
    if (u <= a || u >= b) return belief_.quantile(u);

    double lo = belief_.alpha(), hi = belief_.beta();
    if (!std::isfinite(lo)) {
        lo = std::isfinite(hi) ? hi - 1.0 : -1.0;
        double step = 1.0;
        while (body_cdf(lo) > u) { lo -= step; step *= 2.0; }
    }
    if (!std::isfinite(hi)) {
        hi = lo + 1.0;
        double step = 1.0;
        while (body_cdf(hi) < u) { hi += step; step *= 2.0; }
    }
    for (int it = 0; it < kMaxBisectIters && hi - lo > bisect_tol_; ++it) {
        double mid = 0.5 * (lo + hi);
        if (body_cdf(mid) < u)
            lo = mid;
        else
            hi = mid;
    }
    if (hi - lo > bisect_tol_)
        throw std::runtime_error("marginal forward: bisection did not converge");
    return 0.5 * (lo + hi);
}

double UnivariateMarginalFlow::log_density(double x) const {
    if (!(x > belief_.alpha() && x < belief_.beta()))
        throw std::invalid_argument("marginal log_density: x outside the body (alpha, beta)");
    const double a = belief_.a(), b = belief_.b();
    auto ev = body_.eval(x);
    double log_p = std::log(b - a) + ev.log_derivative;
    double s_alpha, s_beta;
    if (warped()) {
        double s = sigmoid(ev.value);
        log_p += std::log(s * (1.0 - s));
        s_alpha = std::isfinite(belief_.alpha()) ? sigmoid(body_.eval(belief_.alpha()).value) : 0.0;
        s_beta = std::isfinite(belief_.beta()) ? sigmoid(body_.eval(belief_.beta()).value) : 1.0;
    } else {
        s_alpha = body_.eval(belief_.alpha()).value;
        s_beta = body_.eval(belief_.beta()).value;
    }
    return log_p - std::log(s_beta - s_alpha);
}

double UnivariateMarginalFlow::nll_and_grad(const std::vector<double>& body_samples,
                                            grad::Vec* grad_out) const {
    const int B = static_cast<int>(body_samples.size());
    if (B == 0) throw std::invalid_argument("marginal nll: empty body sample set");
    const bool finite_alpha = std::isfinite(belief_.alpha());
    const bool finite_beta = std::isfinite(belief_.beta());
    const int extra = (finite_alpha ? 1 : 0) + (finite_beta ? 1 : 0);

    grad::Mat in(B + extra, 1);
    for (int i = 0; i < B; ++i) in(i, 0) = body_samples[i];
    int idx = B;
    if (finite_alpha) in(idx++, 0) = belief_.alpha();
    if (finite_beta) in(idx, 0) = belief_.beta();

    grad::Tape tape;
    int input = tape.leaf(in);
    auto nodes = body_.build(tape, input);

    int loss = tape.scale(tape.sum(tape.rows(nodes.log_derivative, 0, B)), -1.0 / B);
    int s_alpha, s_beta;
    if (warped()) {
        int v_b = tape.rows(nodes.value, 0, B);
        int sb = tape.sigmoid(v_b);
        int term = tape.log(tape.mul(sb, tape.add_const(tape.neg(sb), 1.0)));
        loss = tape.add(loss, tape.scale(tape.sum(term), -1.0 / B));
        s_alpha = finite_alpha ? tape.sigmoid(tape.rows(nodes.value, B, 1))
                               : tape.constant(0.0);
        s_beta = finite_beta
                     ? tape.sigmoid(tape.rows(nodes.value, B + (finite_alpha ? 1 : 0), 1))
                     : tape.constant(1.0);
    } else {
        s_alpha = tape.rows(nodes.value, B, 1);
        s_beta = tape.rows(nodes.value, B + 1, 1);
    }
    loss = tape.add(loss, tape.log(tape.sub(s_beta, s_alpha)));
    loss = tape.add_const(loss, -std::log(belief_.b() - belief_.a()));

    double value = tape.scalar(loss);
    if (!std::isfinite(value)) throw std::runtime_error("marginal nll: non-finite loss");
    if (grad_out) *grad_out = tape.backward(loss);
    return value;
}

std::vector<double> UnivariateMarginalFlow::train(const std::vector<double>& samples,
                                                  const MarginalTrainConfig& config) {
    std::vector<double> kept;
    for (double x : samples)
        if (x > belief_.alpha() && x < belief_.beta()) kept.push_back(x);
    if (kept.empty())
        throw std::invalid_argument("marginal train: all samples fall outside the body");

    auto rng = make_rng(config.seed, 1);
    grad::AdamState adam({config.lr});
    grad::Vec params = body_.raw();
    std::vector<double> history;
    std::vector<std::size_t> order(kept.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < config.epochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double epoch_loss = 0.0;
        int batches = 0;
        for (std::size_t start = 0; start < kept.size();
             start += static_cast<std::size_t>(config.batch_size)) {
            std::size_t end = std::min(kept.size(),
                                       start + static_cast<std::size_t>(config.batch_size));
            std::vector<double> batch;
            batch.reserve(end - start);
            for (std::size_t k = start; k < end; ++k) batch.push_back(kept[order[k]]);
            grad::Vec grad;
            double loss = nll_and_grad(batch, &grad);
            params = adam.step(params, grad);
            body_.set_raw(params);
            epoch_loss += loss;
            ++batches;
        }
        history.push_back(epoch_loss / batches);
    }
    return history;
}

}  // namespace cmflow::marginal
