#include <doctest.h>

#include <cmath>
#include <random>

#include "cmflow/metrics.hpp"
#include "cmflow/rng.hpp"

using namespace cmflow;
using flows::CopulaFlow;
using flows::RealNvp2;
using metrics::DensityFn;

namespace {

DensityFn constant_density(double c) {
    return [c](double, double) { return c; };
}

std::vector<double> uniform_samples(int n, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<double> s(n);
    for (auto& x : s) x = u(rng);
    return s;
}

}  // namespace

TEST_CASE("jsd of a density with itself is zero") {
    copulas::ReferenceCopula clayton(copulas::Family::Clayton, 2.0);
    auto p = metrics::copula_density_fn(clayton);
    auto r = metrics::jsd_grid(p, p, 100);
    CHECK(r.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
    CHECK(r.valid_cells == r.total_cells);
}

TEST_CASE("jsd is symmetric and bounded by ln 2") {
    copulas::ReferenceCopula clayton(copulas::Family::Clayton, 2.0);
    copulas::ReferenceCopula gumbel(copulas::Family::Gumbel, 5.0);
    auto p = metrics::copula_density_fn(clayton);
    auto q = metrics::copula_density_fn(gumbel);
    auto pq = metrics::jsd_grid(p, q, 100);
    auto qp = metrics::jsd_grid(q, p, 100);
    CHECK(pq.value == doctest::Approx(qp.value).epsilon(1e-12));
    CHECK(pq.value > 0.0);
    CHECK(pq.value < std::log(2.0));
}

TEST_CASE("jsd of uniform against a half-square step has a closed form") {
    auto p = constant_density(1.0);
    DensityFn q = [](double x, double) -> std::optional<double> {
        return x < 0.5 ? 2.0 : 0.0;
    };
    // half the cells carry (p, q) ~ (1, 2), half (1, 0):
    // JSD = 0.25 ln(4/3) + 0.5 ln(4/3) ... = 0.5 * (0.5 ln(4/3)) + 0.5 ln(4/3)
    double expected = 0.5 * (0.5 * std::log(4.0 / 3.0)) + 0.5 * std::log(4.0 / 3.0);
    auto r = metrics::jsd_grid(p, q, 200);
    CHECK(r.value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("invalid cells are discarded and the rest renormalized") {
    auto p = constant_density(1.0);
    DensityFn q = [](double x, double) -> std::optional<double> {
        if (x > 0.5) return std::nullopt;  // right half invalid
        return 3.0;                        // constant: equal after renormalization
    };
    auto r = metrics::jsd_grid(p, q, 100);
    CHECK(r.valid_cells == r.total_cells / 2);
    CHECK(r.value == doctest::Approx(0.0).scale(1.0).epsilon(1e-14));
}

TEST_CASE("pointwise map averages back to the total") {
    copulas::ReferenceCopula clayton(copulas::Family::Clayton, 2.0);
    copulas::ReferenceCopula frank(copulas::Family::Frank, 5.0);
    auto map = metrics::jsd_pointwise_map(metrics::copula_density_fn(clayton),
                                          metrics::copula_density_fn(frank), 60);
    double acc = 0.0;
    int n_valid = 0;
    for (double c : map.cells)
        if (std::isfinite(c)) {
            acc += c;
            ++n_valid;
        }
    CHECK(n_valid == map.total.valid_cells);
    CHECK(acc / n_valid == doctest::Approx(map.total.value).epsilon(1e-12));
}

TEST_CASE("uniformity statistics vanish on perfectly balanced samples") {
    std::vector<double> s;
    for (int b = 0; b < 25; ++b)
        for (int k = 0; k < 40; ++k) s.push_back((b + 0.5) / 25.0);
    CHECK(metrics::uniformity_T(s, 25) == 0.0);
    CHECK(metrics::uniformity_M(s, 25) == 0.0);
}

TEST_CASE("an empty bin sends both statistics to infinity") {
    std::vector<double> s(100, 0.1);  // everything in one bin
    CHECK(std::isinf(metrics::uniformity_T(s, 25)));
    CHECK(std::isinf(metrics::uniformity_M(s, 25)));
}

TEST_CASE("T is never above M and both sit at the Monte Carlo floor") {
    auto s = uniform_samples(500000, 5);
    double t = metrics::uniformity_T(s, 25);
    double m = metrics::uniformity_M(s, 25);
    CHECK(t <= m);
    // per-bin relative error has sd sqrt(bins/N) ~ 7.1e-3; the mean absolute
    // value sits near sigma sqrt(2/pi) ~ 5.6e-3
    CHECK(t > 1e-3);
    CHECK(t < 1.2e-2);
    CHECK(m < 5e-2);
}

TEST_CASE("the floor shrinks like one over root N") {
    double t_small = metrics::uniformity_T(uniform_samples(20000, 6), 25);
    double t_big = metrics::uniformity_T(uniform_samples(500000, 6), 25);
    CHECK(t_big < t_small / 2.0);
}

TEST_CASE("eval_nll is minus the mean log density") {
    Eigen::MatrixXd s(4, 2);
    s << 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8;
    CHECK(metrics::eval_nll([](double, double) { return 0.0; }, s) == 0.0);
    CHECK(metrics::eval_nll([](double a, double b) { return a + b; }, s) ==
          doctest::Approx(-0.9).epsilon(1e-14));
    CHECK_THROWS_AS(metrics::eval_nll(
                        [](double, double) { return std::nan(""); }, s),
                    std::runtime_error);
}

TEST_CASE("an identity flow passes every check against independence") {
    CopulaFlow flow(RealNvp2::make(4, 8, false, 1));
    copulas::ReferenceCopula indep(copulas::Family::Independence, 0.0);
    metrics::MetricConfig cfg;
    cfg.mesh = 100;
    cfg.bins = 25;
    cfg.uniformity_samples = 200000;
    cfg.nll_samples = 2000;
    cfg.seed = 3;
    auto rep = metrics::metric_report(flow, indep, cfg);
    CHECK(rep.jsd < 1e-12);
    CHECK(rep.nll == doctest::Approx(0.0).scale(1.0).epsilon(1e-10));
    CHECK(rep.t1 < cfg.thresholds.t);
    CHECK(rep.t2 < cfg.thresholds.t);
    CHECK(rep.m1 < cfg.thresholds.m);
    CHECK(rep.m2 < cfg.thresholds.m);
    CHECK(rep.stop);
}

TEST_CASE("metric report is deterministic for a fixed seed") {
    CopulaFlow flow(RealNvp2::make(2, 6, true, 9));
    copulas::ReferenceCopula indep(copulas::Family::Independence, 0.0);
    metrics::MetricConfig cfg;
    cfg.mesh = 40;
    cfg.uniformity_samples = 50000;
    cfg.nll_samples = 500;
    cfg.seed = 17;
    auto a = metrics::metric_report(flow, indep, cfg);
    auto b = metrics::metric_report(flow, indep, cfg);
    CHECK(a.jsd == b.jsd);
    CHECK(a.t1 == b.t1);
    CHECK(a.m2 == b.m2);
    CHECK(a.nll == b.nll);
}
