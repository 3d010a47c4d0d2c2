#include <doctest.h>

#include <cmath>
#include <vector>

#include "cmflow/ref_copulas.hpp"
#include "cmflow/stats.hpp"

using namespace cmflow;
using copulas::Family;
using copulas::ReferenceCopula;

TEST_CASE("frozen density and cdf values at the centre") {
    ReferenceCopula clayton(Family::Clayton, 2.0);
    CHECK(clayton.density(0.5, 0.5).value() ==
          doctest::Approx(1.48100364934334).epsilon(1e-12));
    // C(1/2,1/2) = (2^2 + 2^2 - 1)^{-1/2} = 7^{-1/2}
    CHECK(clayton.cdf(0.5, 0.5) == doctest::Approx(0.377964473009227).epsilon(1e-12));

    ReferenceCopula frank(Family::Frank, 5.0);
    CHECK(frank.density(0.5, 0.5).value() ==
          doctest::Approx(1.47356372458463).epsilon(1e-12));
    CHECK(frank.cdf(0.5, 0.5) == doctest::Approx(0.377148510747196).epsilon(1e-12));

    ReferenceCopula gumbel(Family::Gumbel, 5.0);
    CHECK(gumbel.cdf(0.5, 0.5) == doctest::Approx(0.451031983077474).epsilon(1e-12));

    ReferenceCopula indep(Family::Independence, 0.0);
    CHECK(indep.density(0.3, 0.8).value() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(indep.cdf(0.3, 0.8) == doctest::Approx(0.24).epsilon(1e-14));
}

TEST_CASE("cdf boundary behaviour") {
    for (auto [fam, theta] : {std::pair{Family::Clayton, 2.0},
                              std::pair{Family::Frank, 5.0},
                              std::pair{Family::Gumbel, 5.0}}) {
        ReferenceCopula c(fam, theta);
        for (double u : {0.2, 0.7}) {
            CHECK(c.cdf(u, 1.0) == doctest::Approx(u).epsilon(1e-12));
            CHECK(c.cdf(1.0, u) == doctest::Approx(u).epsilon(1e-12));
            CHECK(c.cdf(u, 0.0) == 0.0);
            CHECK(c.cdf(0.0, u) == 0.0);
        }
    }
}

TEST_CASE("conditional is the u2 partial of the cdf") {
    const double h = 1e-6;
    for (auto [fam, theta] : {std::pair{Family::Clayton, 2.0},
                              std::pair{Family::Frank, 5.0},
                              std::pair{Family::Gumbel, 5.0},
                              std::pair{Family::Independence, 0.0}}) {
        ReferenceCopula c(fam, theta);
        for (double u1 : {0.2, 0.6, 0.9})
            for (double u2 : {0.3, 0.5, 0.8}) {
                double fd = (c.cdf(u1, u2 + h) - c.cdf(u1, u2 - h)) / (2 * h);
                CHECK(c.conditional(u1, u2) == doctest::Approx(fd).epsilon(1e-6));
            }
    }
}

TEST_CASE("density is the mixed second difference of the cdf") {
    const double h = 1e-4;
    for (auto [fam, theta] : {std::pair{Family::Clayton, 2.0},
                              std::pair{Family::Frank, 5.0},
                              std::pair{Family::Gumbel, 5.0}}) {
        ReferenceCopula c(fam, theta);
        for (double u1 : {0.25, 0.6})
            for (double u2 : {0.35, 0.75}) {
                double fd = (c.cdf(u1 + h, u2 + h) - c.cdf(u1 + h, u2 - h) -
                             c.cdf(u1 - h, u2 + h) + c.cdf(u1 - h, u2 - h)) /
                            (4 * h * h);
                CHECK(c.density(u1, u2).value() == doctest::Approx(fd).epsilon(1e-5));
            }
    }
}

TEST_CASE("conditional inverse round trips") {
    ReferenceCopula clayton(Family::Clayton, 2.0);
    CHECK(clayton.conditional_inverse(0.5, 0.5) ==
          doctest::Approx(0.546390642843400).epsilon(1e-12));
    for (auto [fam, theta] : {std::pair{Family::Clayton, 2.0},
                              std::pair{Family::Frank, 5.0},
                              std::pair{Family::Gumbel, 5.0},
                              std::pair{Family::Independence, 0.0}}) {
        ReferenceCopula c(fam, theta);
        for (double t : {0.1, 0.5, 0.93})
            for (double v : {0.2, 0.5, 0.85}) {
                double u = c.conditional_inverse(t, v);
                CHECK(c.conditional(u, v) == doctest::Approx(t).epsilon(1e-8));
            }
    }
}

TEST_CASE("density integrates to one") {
    const int n = 400;
    for (auto [fam, theta] : {std::pair{Family::Clayton, 2.0},
                              std::pair{Family::Frank, 5.0},
                              std::pair{Family::Gumbel, 5.0}}) {
        ReferenceCopula c(fam, theta);
        double total = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                auto d = c.density((i + 0.5) / n, (j + 0.5) / n);
                if (d) total += *d;
            }
        total /= static_cast<double>(n) * n;
        CHECK(total == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_CASE("sampling reproduces the dependence strength") {
    // Kendall tau: Clayton theta/(theta+2), Gumbel 1 - 1/theta, Frank via
    // the Debye integral (frozen value for theta = 5)
    struct Case {
        Family fam;
        double theta;
        double tau;
    };
    for (const Case& k : {Case{Family::Clayton, 2.0, 0.5},
                          Case{Family::Gumbel, 5.0, 0.8},
                          Case{Family::Frank, 5.0, 0.456700958},
                          Case{Family::Independence, 0.0, 0.0}}) {
        ReferenceCopula c(k.fam, k.theta);
        auto s = c.sample(5000, 7);
        std::vector<double> x(s.col(0).data(), s.col(0).data() + s.rows());
        std::vector<double> y(s.col(1).data(), s.col(1).data() + s.rows());
        CHECK(stats::kendall_tau(x, y) == doctest::Approx(k.tau).epsilon(0.08).scale(1.0));
    }
}

TEST_CASE("sampling matches the cdf cell masses") {
    ReferenceCopula c(Family::Clayton, 2.0);
    const int n = 20000, bins = 10;
    auto s = c.sample(n, 11);
    std::vector<std::vector<int>> counts(bins, std::vector<int>(bins, 0));
    for (int i = 0; i < n; ++i) {
        int bi = std::min(bins - 1, static_cast<int>(s(i, 0) * bins));
        int bj = std::min(bins - 1, static_cast<int>(s(i, 1) * bins));
        counts[bi][bj]++;
    }
    double stat = 0.0;
    for (int i = 0; i < bins; ++i)
        for (int j = 0; j < bins; ++j) {
            double u0 = static_cast<double>(i) / bins, u1 = (i + 1.0) / bins;
            double v0 = static_cast<double>(j) / bins, v1 = (j + 1.0) / bins;
            double p = c.cdf(u1, v1) - c.cdf(u0, v1) - c.cdf(u1, v0) + c.cdf(u0, v0);
            double e = n * p;
            stat += (counts[i][j] - e) * (counts[i][j] - e) / e;
        }
    CHECK(stats::chi_squared_sf(stat, bins * bins - 1.0) > 1e-4);
}

TEST_CASE("sampling is reproducible by seed and boundary input throws") {
    ReferenceCopula c(Family::Frank, 5.0);
    auto a = c.sample(100, 3);
    auto b = c.sample(100, 3);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS(c.density(0.0, 0.5), std::invalid_argument);
    CHECK_THROWS_AS(c.conditional(0.5, 1.0), std::invalid_argument);
}

TEST_CASE("parameter validation and name round trips") {
    CHECK_THROWS_AS(ReferenceCopula(Family::Clayton, -1.0), std::invalid_argument);
    CHECK_THROWS_AS(ReferenceCopula(Family::Frank, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(ReferenceCopula(Family::Gumbel, 0.5), std::invalid_argument);
    for (auto f : {Family::Clayton, Family::Frank, Family::Gumbel, Family::Independence})
        CHECK(copulas::family_from_string(copulas::to_string(f)) == f);
    CHECK_THROWS_AS(copulas::family_from_string("gauss"), std::invalid_argument);
}
