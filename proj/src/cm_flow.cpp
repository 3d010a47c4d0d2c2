#include "cmflow/cm_flow.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

namespace cmflow::model {

std::array<double, 2> CmFlow::sample(const std::array<double, 2>& u) const {
    Eigen::MatrixXd row(1, 2);
    row << u[0], u[1];
    Eigen::MatrixXd c = copula_.sample(row);
    return marginal_.forward({c(0, 0), c(0, 1)});
}

Eigen::MatrixXd CmFlow::sample(const Eigen::MatrixXd& u) const {
    Eigen::MatrixXd c = copula_.sample(u);
    Eigen::MatrixXd x(u.rows(), 2);
    for (Eigen::Index i = 0; i < u.rows(); ++i) {
        auto pair = marginal_.forward({c(i, 0), c(i, 1)});
        x(i, 0) = pair[0];
        x(i, 1) = pair[1];
    }
    return x;
}

double CmFlow::log_density(const std::array<double, 2>& x) const {
    double log_p = 0.0;
    std::array<double, 2> u{};
    for (int i = 0; i < 2; ++i) {
        const auto& m = marginal_.component(i);
        const auto& belief = m.belief();
        double xi = x[i];
        if (xi == belief.alpha() || xi == belief.beta())
            throw std::invalid_argument("cm log_density: point on a body/tail seam");
        if (xi > belief.alpha() && xi < belief.beta()) {
            u[i] = m.cdf(xi);
            log_p += m.log_density(xi);
        } else {
            u[i] = belief.cdf(xi);
            double lp = belief.log_pdf(xi);
            if (!std::isfinite(lp))
                throw std::runtime_error("cm log_density: non-finite belief density");
            log_p += lp;
        }
    }
    return log_p + copula_.log_density_at(u[0], u[1]);
}

std::vector<std::array<double, 2>> pseudo_observations(
    const std::vector<std::array<double, 2>>& data, PseudoObsMode mode,
    const marginal::BivariateMarginalFlow* marginal) {
    const std::size_t n = data.size();
    if (n < 2) throw std::invalid_argument("pseudo_observations: need n >= 2 rows");
    std::vector<std::array<double, 2>> out(n);

    if (mode == PseudoObsMode::Model) {
        if (!marginal)
            throw std::invalid_argument("pseudo_observations: model mode needs a marginal");
        for (std::size_t i = 0; i < n; ++i)
            for (int k = 0; k < 2; ++k)
                out[i][k] = marginal->component(k).cdf(data[i][k]);
        return out;
    }

    for (int k = 0; k < 2; ++k) {
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        std::sort(idx.begin(), idx.end(),
                  [&](std::size_t a, std::size_t b) { return data[a][k] < data[b][k]; });
        // average rank over tie runs
        std::size_t i = 0;
        while (i < n) {
            std::size_t j = i;
            while (j + 1 < n && data[idx[j + 1]][k] == data[idx[i]][k]) ++j;
            double avg_rank = 0.5 * static_cast<double>(i + j) + 1.0;  // 1-based
            for (std::size_t r = i; r <= j; ++r)
                out[idx[r]][k] = avg_rank / static_cast<double>(n + 1);
            i = j + 1;
        }
    }
    return out;
}

}  // namespace cmflow::model
