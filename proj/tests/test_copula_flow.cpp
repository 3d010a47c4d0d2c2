#include <doctest.h>

#include <cmath>
#include <random>

#include "cmflow/copula_flow.hpp"
#include "cmflow/rng.hpp"
#include "cmflow/stats.hpp"

using namespace cmflow;
using flows::CopulaFlow;
using flows::RealNvp2;
using grad::Mat;
using grad::Vec;

namespace {

CopulaFlow perturbed_flow(int depth, int hidden, bool constrained, std::uint64_t seed,
                          double sigma = 0.3) {
    auto nvp = RealNvp2::make(depth, hidden, constrained, seed);
    auto rng = make_rng(seed, 77);
    std::normal_distribution<double> d(0.0, sigma);
    Vec raw = nvp.raw();
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
    nvp.set_raw(raw);
    return CopulaFlow(std::move(nvp));
}

Mat uniform_batch(int n, std::uint64_t seed) {
    auto rng = make_rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Mat m(n, 2);
    for (int i = 0; i < n; ++i) {
        m(i, 0) = u(rng);
        m(i, 1) = u(rng);
    }
    return m;
}

}  // namespace

TEST_CASE("identity network gives the independence copula") {
    CopulaFlow flow(RealNvp2::make(6, 16, false, 1));
    Mat c = uniform_batch(50, 2);
    Vec ld = flow.log_density(c);
    CHECK(ld.cwiseAbs().maxCoeff() < 1e-12);
    // and sampling is the identity
    Mat s = flow.sample(c);
    CHECK((s - c).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("sample and inverse round trip on the interior") {
    // mild perturbation: the round trip is exact only while the transformed
    // logits stay inside the clamp band
    auto flow = perturbed_flow(6, 16, false, 5, 0.1);
    Mat u = uniform_batch(200, 6);
    u = u.unaryExpr([](double x) { return 0.01 + 0.98 * x; });
    Mat c = flow.sample(u);
    Mat back = flow.inverse(c);
    CHECK((back - u).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("density integrates to one over the unit square") {
    auto flow = perturbed_flow(4, 8, false, 9, 0.1);
    const int n = 500;
    double total = 0.0;
    Mat pts(n, 2);
    for (int i = 0; i < n; ++i) {
        double x = (i + 0.5) / n;
        for (int j = 0; j < n; ++j) pts(j, 1) = (j + 0.5) / n;
        pts.col(0).setConstant(x);
        total += flow.log_density(pts).array().exp().sum();
    }
    total /= static_cast<double>(n) * n;
    CHECK(total >= 0.99);
    CHECK(total <= 1.01);
}

TEST_CASE("constrained flow keeps coordinate 2 bit-exact and uniform") {
    auto flow = perturbed_flow(6, 16, true, 13);
    Mat u = uniform_batch(5000, 14);
    Mat c = flow.sample(u);
    for (int i = 0; i < u.rows(); ++i) CHECK(c(i, 1) == u(i, 1));
    Mat back = flow.inverse(c);
    for (int i = 0; i < u.rows(); ++i) CHECK(back(i, 1) == c(i, 1));

    // coordinate 1 marginal of the pushforward of uniforms stays uniform:
    // the flow is a bijection of [0,1]^2 with uniform-preserving structure
    // only in coordinate 2, so test coordinate 2 explicitly
    std::vector<double> col2(c.col(1).data(), c.col(1).data() + c.rows());
    std::sort(col2.begin(), col2.end());
    std::vector<double> cdf(col2.begin(), col2.end());
    double ks = stats::ks_one_sample(col2, cdf);
    CHECK(stats::ks_p_value(ks, col2.size()) > 1e-3);
}

TEST_CASE("log_density_at matches the batched evaluation") {
    auto flow = perturbed_flow(4, 8, false, 17);
    Mat c(3, 2);
    c << 0.2, 0.8, 0.5, 0.5, 0.91, 0.07;
    Vec ld = flow.log_density(c);
    for (int i = 0; i < 3; ++i)
        CHECK(flow.log_density_at(c(i, 0), c(i, 1)) == ld(i));
}

TEST_CASE("nll equals minus the mean log density") {
    auto flow = perturbed_flow(4, 8, false, 21);
    Mat c = uniform_batch(40, 22);
    double nll = flow.nll_and_grad(c, nullptr);
    CHECK(nll == doctest::Approx(-flow.log_density(c).mean()).epsilon(1e-12));
}

TEST_CASE("nll gradient matches finite differences") {
    for (bool constrained : {false, true}) {
        auto flow = perturbed_flow(2, 6, constrained, 25);
        Mat c = uniform_batch(30, 26);
        Vec analytic;
        flow.nll_and_grad(c, &analytic);
        auto f = [&](const Vec& raw) {
            auto g = flow;
            g.net().set_raw(raw);
            return g.nll_and_grad(c, nullptr);
        };
        CHECK(grad::grad_check(f, flow.net().raw(), analytic, 1e-5) <= 1e-5);
    }
}

TEST_CASE("training on dependent data lowers the nll") {
    CopulaFlow flow(RealNvp2::make(4, 16, false, 31));
    // comonotone-ish data: c2 near c1
    auto sampler = [](int n) {
        static auto rng = make_rng(33);
        std::uniform_real_distribution<double> u(0.0, 1.0);
        std::normal_distribution<double> d(0.0, 0.05);
        Mat m(n, 2);
        for (int i = 0; i < n; ++i) {
            m(i, 0) = u(rng);
            m(i, 1) = std::clamp(m(i, 0) + d(rng), 1e-4, 1.0 - 1e-4);
        }
        return m;
    };
    flows::CopulaTrainConfig cfg;
    cfg.batch_size = 500;
    cfg.max_steps = 400;
    cfg.check_every = 100;
    cfg.lr = 3e-3;
    auto hist = flow.train(sampler, cfg);
    CHECK_FALSE(hist.diverged);
    CHECK(hist.nll.size() == 4);
    // the identity start scores 0 on any data; strongly dependent data has
    // markedly negative copula entropy, so training must have moved
    CHECK(hist.nll.back() < -0.5);
}

TEST_CASE("training stops early when the criterion is met") {
    CopulaFlow flow(RealNvp2::make(2, 8, false, 41));
    auto sampler = [](int n) { return uniform_batch(n, 42); };
    flows::CopulaTrainConfig cfg;
    cfg.batch_size = 200;
    cfg.max_steps = 1000;
    cfg.check_every = 100;
    auto hist = flow.train(sampler, cfg,
                           [](const CopulaFlow&, int step) { return step >= 200; });
    CHECK(hist.stopped_by_criterion);
    CHECK(hist.steps.back() == 200);
}
