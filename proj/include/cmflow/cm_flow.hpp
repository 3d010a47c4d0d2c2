#pragma once

#include "cmflow/copula_flow.hpp"
#include "cmflow/marginal.hpp"

namespace cmflow::model {

// Full CM flow g = m o h: a copula flow followed by coordinatewise marginal
// flows. Sampling runs u -> h -> m; density runs the inverse chain.
class CmFlow {
public:
    CmFlow(marginal::BivariateMarginalFlow marginal, flows::CopulaFlow copula)
        : marginal_(std::move(marginal)), copula_(std::move(copula)) {}

    std::array<double, 2> sample(const std::array<double, 2>& u) const;
    Eigen::MatrixXd sample(const Eigen::MatrixXd& u) const;

    // Pair-copula log-density: copula term at the marginal CDFs plus the two
    // marginal terms (body branch analytic, tail branch via the belief pdf).
    // Points on a body/tail seam are rejected.
    double log_density(const std::array<double, 2>& x) const;

    const marginal::BivariateMarginalFlow& marginal() const { return marginal_; }
    const flows::CopulaFlow& copula() const { return copula_; }
    marginal::BivariateMarginalFlow& marginal() { return marginal_; }
    flows::CopulaFlow& copula() { return copula_; }

private:
    marginal::BivariateMarginalFlow marginal_;
    flows::CopulaFlow copula_;
};

enum class PseudoObsMode { Rank, Model };

// Rank-based pseudo-observations c_ik = rank/(n+1) with average ranks for
// ties; model-based uses a trained marginal CDF instead.
std::vector<std::array<double, 2>> pseudo_observations(
    const std::vector<std::array<double, 2>>& data, PseudoObsMode mode = PseudoObsMode::Rank,
    const marginal::BivariateMarginalFlow* marginal = nullptr);

}  // namespace cmflow::model
