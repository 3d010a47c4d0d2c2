#pragma once

#include <optional>
#include <string>

namespace cmflow::marginal {

enum class TailFamily { Gaussian, Exponential, Gpd };

TailFamily tail_family_from_string(const std::string& s);
std::string to_string(TailFamily f);

// One side of a tail belief. For the right tail the law above beta is
//   A(x) = 1 - mass * excess_sf(x - beta),
// for the left tail below alpha
//   A(x) = mass * excess_sf(alpha - x),
// where excess_sf is the survival function of the excess law:
//   Exponential: exp(-rate * e)
//   Gpd:         (1 + xi * e / scale)^(-1/xi)
// A Gaussian side instead uses the full normal CDF; its mass must be
// consistent with the cut point.
struct TailSide {
    TailFamily family = TailFamily::Exponential;
    double mass = 0.0;  // a for the left side, 1-b for the right side
    // exponential: p1 = rate; gpd: p1 = xi, p2 = scale; gaussian: p1 = mu, p2 = sigma
    double p1 = 1.0;
    double p2 = 1.0;
};

// Trusted CDF A_X on the tail region (-inf, alpha] u [beta, inf) with cached
// masses a = A(alpha), b = A(beta). An infinite cut point is allowed only for
// a side with zero mass.
class TailBelief {
public:
    TailBelief(double alpha, double beta, std::optional<TailSide> left,
               std::optional<TailSide> right);

    static TailBelief gaussian(double mu, double sigma, double alpha, double beta);

    double alpha() const { return alpha_; }
    double beta() const { return beta_; }
    double a() const { return a_; }
    double b() const { return b_; }

    // A^{-1}(u) for u in [0, a] u [b, 1]. Rejects u in the body gap (a, b).
    double quantile(double u) const;
    // A(x) for x in the tail region.
    double cdf(double x) const;
    // ln A'(x) for x strictly inside a tail branch.
    double log_pdf(double x) const;

    bool in_left_tail(double x) const { return x <= alpha_ && a_ > 0.0; }
    bool in_right_tail(double x) const { return x >= beta_ && b_ < 1.0; }

    const std::optional<TailSide>& left() const { return left_; }
    const std::optional<TailSide>& right() const { return right_; }

private:
    double alpha_, beta_;
    double a_, b_;
    std::optional<TailSide> left_, right_;
};

}  // namespace cmflow::marginal
