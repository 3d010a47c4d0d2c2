#include "cmflow/tail_belief.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "cmflow/stats.hpp"

namespace cmflow::marginal {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TailFamily tail_family_from_string(const std::string& s) {
    if (s == "gaussian") return TailFamily::Gaussian;
    if (s == "exponential") return TailFamily::Exponential;
    if (s == "gpd") return TailFamily::Gpd;
    throw std::invalid_argument("unknown tail family: " + s);
}

std::string to_string(TailFamily f) {
    switch (f) {
        case TailFamily::Gaussian: return "gaussian";
        case TailFamily::Exponential: return "exponential";
        case TailFamily::Gpd: return "gpd";
    }
    return "?";
}

TailBelief::TailBelief(double alpha, double beta, std::optional<TailSide> left,
                       std::optional<TailSide> right)
    : alpha_(alpha), beta_(beta), left_(std::move(left)), right_(std::move(right)) {
    if (!(alpha_ < beta_)) throw std::invalid_argument("tail belief: alpha must be < beta");
    if (left_ && !std::isfinite(alpha_))
        throw std::invalid_argument("tail belief: infinite alpha requires no left belief");
    if (right_ && !std::isfinite(beta_))
        throw std::invalid_argument("tail belief: infinite beta requires no right belief");

    if (left_ && left_->family == TailFamily::Gaussian)
        left_->mass = stats::normal_cdf((alpha_ - left_->p1) / left_->p2);
    if (right_ && right_->family == TailFamily::Gaussian)
        right_->mass = 1.0 - stats::normal_cdf((beta_ - right_->p1) / right_->p2);

    a_ = left_ ? left_->mass : 0.0;
    b_ = right_ ? 1.0 - right_->mass : 1.0;
    if (left_ && !(a_ > 0.0 && a_ < 1.0))
        throw std::invalid_argument("tail belief: left mass must be in (0,1)");
    if (right_ && !(right_->mass > 0.0 && right_->mass < 1.0))
        throw std::invalid_argument("tail belief: right mass must be in (0,1)");
    if (!(a_ < b_)) throw std::invalid_argument("tail belief: requires a < b");
    auto check_side = [](const TailSide& s) {
        if (s.family == TailFamily::Exponential && !(s.p1 > 0.0))
            throw std::invalid_argument("tail belief: exponential rate must be > 0");
        if (s.family == TailFamily::Gpd && !(s.p2 > 0.0))
            throw std::invalid_argument("tail belief: gpd scale must be > 0");
        if (s.family == TailFamily::Gaussian && !(s.p2 > 0.0))
            throw std::invalid_argument("tail belief: gaussian sigma must be > 0");
    };
    if (left_) check_side(*left_);
    if (right_) check_side(*right_);
}

TailBelief TailBelief::gaussian(double mu, double sigma, double alpha, double beta) {
    TailSide side{TailFamily::Gaussian, 0.0, mu, sigma};
    return TailBelief(alpha, beta, side, side);
}

double TailBelief::quantile(double u) const {
    if (u < 0.0 || u > 1.0) throw std::invalid_argument("tail quantile: u outside [0,1]");
    if (u > a_ && u < b_)
        throw std::invalid_argument("tail quantile: u in the learned body (a,b)");
    if (u == a_) return alpha_;
    if (u == b_) return beta_;
    if (u <= a_) {
        const TailSide& s = *left_;
        switch (s.family) {
            case TailFamily::Gaussian:
                if (u == 0.0) return -kInf;
                return s.p1 + s.p2 * stats::normal_quantile(u);
            case TailFamily::Exponential:
                if (u == 0.0) return -kInf;
                return alpha_ + std::log(u / a_) / s.p1;
            case TailFamily::Gpd: {
                const double xi = s.p1, scale = s.p2;
                if (std::abs(xi) < 1e-12)
                    return u == 0.0 ? -kInf : alpha_ + scale * std::log(u / a_);
                if (u == 0.0) return xi > 0 ? -kInf : alpha_ + scale / xi;
                return alpha_ - (scale / xi) * (std::pow(u / a_, -xi) - 1.0);
            }
        }
    }
    const TailSide& s = *right_;
    const double sf = 1.0 - u;  // residual mass above x
    switch (s.family) {
        case TailFamily::Gaussian:
            if (u == 1.0) return kInf;
            return s.p1 + s.p2 * stats::normal_quantile(u);
        case TailFamily::Exponential:
            if (u == 1.0) return kInf;
            return beta_ + std::log(s.mass / sf) / s.p1;
        case TailFamily::Gpd: {
            const double xi = s.p1, scale = s.p2;
            if (std::abs(xi) < 1e-12)
                return u == 1.0 ? kInf : beta_ + scale * std::log(s.mass / sf);
            if (u == 1.0) return xi > 0 ? kInf : beta_ - scale / xi;
            return beta_ + (scale / xi) * (std::pow(sf / s.mass, -xi) - 1.0);
        }
    }
    throw std::logic_error("tail quantile: unreachable");
}

double TailBelief::cdf(double x) const {
    if (x <= alpha_) {
        if (!left_) return 0.0;
        const TailSide& s = *left_;
        switch (s.family) {
            case TailFamily::Gaussian:
                return stats::normal_cdf((x - s.p1) / s.p2);
            case TailFamily::Exponential:
                return a_ * std::exp(s.p1 * (x - alpha_));
            case TailFamily::Gpd: {
                const double xi = s.p1, scale = s.p2;
                if (std::abs(xi) < 1e-12) return a_ * std::exp((x - alpha_) / scale);
                double t = 1.0 + xi * (alpha_ - x) / scale;
                return t <= 0.0 ? 0.0 : a_ * std::pow(t, -1.0 / xi);
            }
        }
    }
    if (x >= beta_) {
        if (!right_) return 1.0;
        const TailSide& s = *right_;
        switch (s.family) {
            case TailFamily::Gaussian:
                return stats::normal_cdf((x - s.p1) / s.p2);
            case TailFamily::Exponential:
                return 1.0 - s.mass * std::exp(-s.p1 * (x - beta_));
            case TailFamily::Gpd: {
                const double xi = s.p1, scale = s.p2;
                if (std::abs(xi) < 1e-12) return 1.0 - s.mass * std::exp(-(x - beta_) / scale);
                double t = 1.0 + xi * (x - beta_) / scale;
                return t <= 0.0 ? 1.0 : 1.0 - s.mass * std::pow(t, -1.0 / xi);
            }
        }
    }
    throw std::invalid_argument("tail cdf: x in the body (alpha, beta)");
}

double TailBelief::log_pdf(double x) const {
    if (x < alpha_ && left_) {
        const TailSide& s = *left_;
        switch (s.family) {
            case TailFamily::Gaussian:
                return stats::normal_log_pdf(x, s.p1, s.p2);
            case TailFamily::Exponential:
                return std::log(a_ * s.p1) + s.p1 * (x - alpha_);
            case TailFamily::Gpd: {
                const double xi = s.p1, scale = s.p2;
                if (std::abs(xi) < 1e-12)
                    return std::log(a_ / scale) + (x - alpha_) / scale;
                double t = 1.0 + xi * (alpha_ - x) / scale;
                if (t <= 0.0) return -kInf;
                return std::log(a_ / scale) - (1.0 / xi + 1.0) * std::log(t);
            }
        }
    }
    if (x > beta_ && right_) {
        const TailSide& s = *right_;
        switch (s.family) {
            case TailFamily::Gaussian:
                return stats::normal_log_pdf(x, s.p1, s.p2);
            case TailFamily::Exponential:
                return std::log(s.mass * s.p1) - s.p1 * (x - beta_);
            case TailFamily::Gpd: {
                const double xi = s.p1, scale = s.p2;
                if (std::abs(xi) < 1e-12)
                    return std::log(s.mass / scale) - (x - beta_) / scale;
                double t = 1.0 + xi * (x - beta_) / scale;
                if (t <= 0.0) return -kInf;
                return std::log(s.mass / scale) - (1.0 / xi + 1.0) * std::log(t);
            }
        }
    }
    throw std::invalid_argument("tail log_pdf: x not strictly inside a tail branch");
}

}  // namespace cmflow::marginal
