#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include <Eigen/Dense>

namespace cmflow::copulas {

enum class Family { Clayton, Frank, Gumbel, Independence };

Family family_from_string(const std::string& s);
std::string to_string(Family f);

// Reference bivariate copulas with closed-form density, CDF and conditional
// distribution. Densities are evaluated in log space to delay overflow near
// the corners; an evaluation that still over/underflows is reported as an
// explicit invalid result rather than a silent NaN.
class ReferenceCopula {
public:
    ReferenceCopula(Family family, double theta);

    // nullopt marks an invalid evaluation. Boundary input throws.
    std::optional<double> log_density(double u, double v) const;
    std::optional<double> density(double u, double v) const;

    double cdf(double u, double v) const;

    // P(U1 <= u1 | U2 = u2) = dC/du2, a CDF in u1.
    double conditional(double u1, double u2) const;
    // Its inverse in u1: analytic for Clayton/Frank, bisection for Gumbel.
    double conditional_inverse(double t, double u2) const;

    // i.i.d. draws by conditional inversion, reproducible by seed.
    Eigen::MatrixXd sample(int n, std::uint64_t seed) const;

    Family family() const { return family_; }
    double theta() const { return theta_; }

private:
    Family family_;
    double theta_;
};

}  // namespace cmflow::copulas
