#include "cmflow/ref_copulas.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cmflow/rng.hpp"

namespace cmflow::copulas {

namespace {

// ln(e^x + e^y - 1), stable for large x, y >= 0
double log_sum_pow_minus_one(double x, double y) {
    double m = std::max(x, y);
    return m + std::log(std::exp(x - m) + std::exp(y - m) - std::exp(-m));
}

void check_interior(double u, double v) {
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
        throw std::invalid_argument("copula: point must be strictly inside (0,1)^2");
}

}  // namespace

Family family_from_string(const std::string& s) {
    if (s == "clayton") return Family::Clayton;
    if (s == "frank") return Family::Frank;
    if (s == "gumbel") return Family::Gumbel;
    if (s == "independence") return Family::Independence;
    throw std::invalid_argument("unknown copula family: " + s);
}

std::string to_string(Family f) {
    switch (f) {
        case Family::Clayton: return "clayton";
        case Family::Frank: return "frank";
        case Family::Gumbel: return "gumbel";
        case Family::Independence: return "independence";
    }
    return "?";
}

ReferenceCopula::ReferenceCopula(Family family, double theta)
    : family_(family), theta_(theta) {
    switch (family_) {
        case Family::Clayton:
            if (!(theta > 0.0)) throw std::invalid_argument("clayton: theta must be > 0");
            break;
        case Family::Frank:
            if (theta == 0.0 || !std::isfinite(theta))
                throw std::invalid_argument("frank: theta must be finite and nonzero");
            break;
        case Family::Gumbel:
            if (!(theta >= 1.0)) throw std::invalid_argument("gumbel: theta must be >= 1");
            break;
        case Family::Independence:
            break;
    }
}

std::optional<double> ReferenceCopula::log_density(double u, double v) const {
    check_interior(u, v);
    double lp;
    switch (family_) {
        case Family::Independence:
            return 0.0;
        case Family::Clayton: {
            const double th = theta_;
            double lS = log_sum_pow_minus_one(-th * std::log(u), -th * std::log(v));
            lp = std::log1p(th) - (th + 1.0) * (std::log(u) + std::log(v)) -
                 (2.0 + 1.0 / th) * lS;
            break;
        }
        case Family::Frank: {
            const double th = theta_;
            double g1 = -std::expm1(-th);  // 1 - e^{-theta}
            double d = g1 - (-std::expm1(-th * u)) * (-std::expm1(-th * v));
            double num = th * g1;  // positive for either sign of theta
            lp = std::log(num) - th * (u + v) - 2.0 * std::log(std::abs(d));
            break;
        }
        case Family::Gumbel: {
            const double th = theta_;
            double x = -std::log(u), y = -std::log(v);
            double lS = th * std::log(x) +
                        std::log1p(std::exp(th * (std::log(y) - std::log(x))));
            if (y > x)
                lS = th * std::log(y) +
                     std::log1p(std::exp(th * (std::log(x) - std::log(y))));
            double A = std::exp(lS / th);  // S^{1/theta}
            lp = -A + (th - 1.0) * (std::log(x) + std::log(y)) + (x + y) +
                 (1.0 / th - 2.0) * lS + std::log(A + th - 1.0);
            break;
        }
        default:
            return std::nullopt;
    }
    if (!std::isfinite(lp)) return std::nullopt;
    return lp;
}

std::optional<double> ReferenceCopula::density(double u, double v) const {
    auto lp = log_density(u, v);
    if (!lp) return std::nullopt;
    double d = std::exp(*lp);
    if (!std::isfinite(d)) return std::nullopt;
    return d;
}

double ReferenceCopula::cdf(double u, double v) const {
    if (u < 0.0 || u > 1.0 || v < 0.0 || v > 1.0)
        throw std::invalid_argument("copula cdf: point outside [0,1]^2");
    if (u == 0.0 || v == 0.0) return 0.0;
    if (u == 1.0) return v;
    if (v == 1.0) return u;
    switch (family_) {
        case Family::Independence:
            return u * v;
        case Family::Clayton: {
            double lS = log_sum_pow_minus_one(-theta_ * std::log(u), -theta_ * std::log(v));
            return std::exp(-lS / theta_);
        }
        case Family::Frank: {
            double gu = std::expm1(-theta_ * u), gv = std::expm1(-theta_ * v);
            double g1 = std::expm1(-theta_);
            return -std::log1p(gu * gv / g1) / theta_;
        }
        case Family::Gumbel: {
            double x = -std::log(u), y = -std::log(v);
            return std::exp(-std::pow(std::pow(x, theta_) + std::pow(y, theta_), 1.0 / theta_));
        }
    }
    throw std::logic_error("copula cdf: unreachable");
}

double ReferenceCopula::conditional(double u1, double u2) const {
    if (!(u2 > 0.0 && u2 < 1.0))
        throw std::invalid_argument("copula conditional: u2 must be interior");
    if (u1 <= 0.0) return 0.0;
    if (u1 >= 1.0) return 1.0;
    switch (family_) {
        case Family::Independence:
            return u1;
        case Family::Clayton: {
            const double th = theta_;
            double lS = log_sum_pow_minus_one(-th * std::log(u1), -th * std::log(u2));
            return std::exp(-(th + 1.0) * std::log(u2) - (1.0 + 1.0 / th) * lS);
        }
        case Family::Frank: {
            const double th = theta_;
            double gu = std::expm1(-th * u1), gv = std::expm1(-th * u2);
            double g1 = std::expm1(-th);
            return std::exp(-th * u2) * gu / (g1 + gu * gv);
        }
        case Family::Gumbel: {
            const double th = theta_;
            double x = -std::log(u1), y = -std::log(u2);
            double S = std::pow(x, th) + std::pow(y, th);
            double C = std::exp(-std::pow(S, 1.0 / th));
            return C * std::pow(S, 1.0 / th - 1.0) * std::pow(y, th - 1.0) / u2;
        }
    }
    throw std::logic_error("copula conditional: unreachable");
}

double ReferenceCopula::conditional_inverse(double t, double u2) const {
    if (!(u2 > 0.0 && u2 < 1.0))
        throw std::invalid_argument("copula conditional: u2 must be interior");
    if (!(t > 0.0 && t < 1.0))
        throw std::invalid_argument("copula conditional inverse: t must be interior");
    switch (family_) {
        case Family::Independence:
            return t;
        case Family::Clayton: {
            const double th = theta_;
            double inner = std::pow(t * std::pow(u2, th + 1.0), -th / (th + 1.0)) -
                           std::pow(u2, -th) + 1.0;
            return std::pow(inner, -1.0 / th);
        }
        case Family::Frank: {
            const double th = theta_;
            double g1 = std::expm1(-th), gv = std::expm1(-th * u2);
            double E = std::exp(-th * u2);
            double gu = t * g1 / (E - t * gv);
            return -std::log1p(gu) / th;
        }
        case Family::Gumbel: {
            double lo = 1e-15, hi = 1.0 - 1e-15;
            for (int it = 0; it < 200 && hi - lo > 1e-12; ++it) {
                double mid = 0.5 * (lo + hi);
                if (conditional(mid, u2) < t)
                    lo = mid;
                else
                    hi = mid;
            }
            if (hi - lo > 1e-12)
                throw std::runtime_error("gumbel conditional inverse: bisection failed");
            return 0.5 * (lo + hi);
        }
    }
    throw std::logic_error("copula conditional inverse: unreachable");
}

Eigen::MatrixXd ReferenceCopula::sample(int n, std::uint64_t seed) const {
    if (n < 1) throw std::invalid_argument("copula sample: n must be >= 1");
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> unif(1e-12, 1.0 - 1e-12);
    Eigen::MatrixXd out(n, 2);
    for (int i = 0; i < n; ++i) {
        double u2 = unif(rng);
        double t = unif(rng);
        out(i, 0) = conditional_inverse(t, u2);
        out(i, 1) = u2;
    }
    return out;
}

}  // namespace cmflow::copulas
