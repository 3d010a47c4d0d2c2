#include <doctest.h>

#include <cmath>
#include <random>

#include "cmflow/coupling.hpp"
#include "cmflow/rng.hpp"

using namespace cmflow;
using flows::Conditioner;
using flows::RealNvp2;
using grad::Mat;
using grad::Tape;
using grad::Vec;

TEST_CASE("fresh network is the identity with zero log det") {
    auto nvp = RealNvp2::make(6, 32, false, 3);
    Mat x(4, 2);
    x << 0.3, -0.7, 2.0, 0.1, -1.5, 0.4, 0.0, 0.0;
    // heads are zero-initialized, so s = t = 0 everywhere
    auto r = nvp.forward(x);
    CHECK((r.y - x).cwiseAbs().maxCoeff() == 0.0);
    CHECK(r.log_det.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("single layer with constant conditioner: y = x1 e^s + t, log det = s") {
    // force the conditioner to a constant via the head biases
    auto nvp = RealNvp2::make(1, 4, true, 0);
    Vec raw = nvp.raw();
    // layout tail: ..., Ws(4), bs, Wt(4), bt
    raw(raw.size() - 1) = 2.0;                     // bt: shift 2
    raw(raw.size() - 6) = std::log(2.0);           // bs: raw log-scale ln 2
    nvp.set_raw(raw);
    Mat x(1, 2);
    x << 0.5, 0.9;
    auto r = nvp.forward(x);
    // s_max tanh(s_raw/s_max) with s_max = 5
    double s = 5.0 * std::tanh(std::log(2.0) / 5.0);
    CHECK(r.y(0, 0) == doctest::Approx(0.5 * std::exp(s) + 2.0).epsilon(1e-14));
    CHECK(r.y(0, 1) == 0.9);
    CHECK(r.log_det(0) == doctest::Approx(s).epsilon(1e-14));
}

TEST_CASE("forward and inverse are mutual inverses with opposite log dets") {
    auto nvp = RealNvp2::make(6, 16, false, 11);
    // perturb away from the identity
    auto rng = make_rng(12);
    std::normal_distribution<double> d(0.0, 0.3);
    Vec raw = nvp.raw();
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
    nvp.set_raw(raw);

    Mat x(64, 2);
    for (int i = 0; i < 64; ++i) {
        x(i, 0) = d(rng) * 3;
        x(i, 1) = d(rng) * 3;
    }
    auto f = nvp.forward(x);
    auto b = nvp.inverse(f.y);
    CHECK((b.y - x).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((b.log_det + f.log_det).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("log det matches the numeric Jacobian") {
    auto nvp = RealNvp2::make(4, 8, false, 21);
    auto rng = make_rng(22);
    std::normal_distribution<double> d(0.0, 0.4);
    Vec raw = nvp.raw();
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
    nvp.set_raw(raw);

    const double h = 1e-6;
    for (double x1 : {-0.8, 0.5}) {
        for (double x2 : {-0.2, 1.1}) {
            Mat pts(4, 2);
            pts << x1 + h, x2, x1 - h, x2, x1, x2 + h, x1, x2 - h;
            Mat y = nvp.forward(pts).y;
            Eigen::Matrix2d jac;
            jac(0, 0) = (y(0, 0) - y(1, 0)) / (2 * h);
            jac(1, 0) = (y(0, 1) - y(1, 1)) / (2 * h);
            jac(0, 1) = (y(2, 0) - y(3, 0)) / (2 * h);
            jac(1, 1) = (y(2, 1) - y(3, 1)) / (2 * h);
            Mat p(1, 2);
            p << x1, x2;
            double ld = nvp.forward(p).log_det(0);
            CHECK(ld == doctest::Approx(std::log(std::abs(jac.determinant())))
                            .epsilon(1e-6));
        }
    }
}

TEST_CASE("constrained network never touches coordinate 2") {
    auto nvp = RealNvp2::make(6, 16, true, 31);
    auto rng = make_rng(32);
    std::normal_distribution<double> d(0.0, 0.5);
    Vec raw = nvp.raw();
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
    nvp.set_raw(raw);
    Mat x(16, 2);
    for (int i = 0; i < 16; ++i) {
        x(i, 0) = d(rng);
        x(i, 1) = d(rng);
    }
    auto f = nvp.forward(x);
    auto b = nvp.inverse(x);
    for (int i = 0; i < 16; ++i) {
        CHECK(f.y(i, 1) == x(i, 1));
        CHECK(b.y(i, 1) == x(i, 1));
    }
}

TEST_CASE("tape forward matches the plain evaluation") {
    auto nvp = RealNvp2::make(3, 8, false, 41);
    auto rng = make_rng(42);
    std::normal_distribution<double> d(0.0, 0.3);
    Vec raw = nvp.raw();
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
    nvp.set_raw(raw);

    Mat x(8, 2);
    for (int i = 0; i < 8; ++i) {
        x(i, 0) = d(rng);
        x(i, 1) = d(rng);
    }
    Tape t;
    int x1 = t.leaf(x.col(0));
    int x2 = t.leaf(x.col(1));
    auto nodes = nvp.build_forward(t, x1, x2);
    auto plain = nvp.forward(x);
    CHECK((t.value(nodes.y1).col(0) - plain.y.col(0)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.value(nodes.y2).col(0) - plain.y.col(1)).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((t.value(nodes.log_det).col(0) - plain.log_det).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("tape gradients of both directions match finite differences") {
    for (bool use_inverse : {false, true}) {
        auto nvp = RealNvp2::make(2, 6, false, 51);
        auto rng = make_rng(52);
        std::normal_distribution<double> d(0.0, 0.3);
        Vec raw = nvp.raw();
        for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
        nvp.set_raw(raw);

        Mat x(5, 2);
        for (int i = 0; i < 5; ++i) {
            x(i, 0) = d(rng);
            x(i, 1) = d(rng);
        }
        auto loss_of = [&](const RealNvp2& net, Vec* grad) {
            Tape t;
            int x1 = t.leaf(x.col(0));
            int x2 = t.leaf(x.col(1));
            auto nodes = use_inverse ? net.build_inverse(t, x1, x2)
                                     : net.build_forward(t, x1, x2);
            int loss = t.add(t.sum(t.mul(nodes.y1, nodes.y1)),
                             t.add(t.sum(t.tanh(nodes.y2)), t.sum(nodes.log_det)));
            double v = t.scalar(loss);
            if (grad) *grad = t.backward(loss);
            return v;
        };
        Vec analytic;
        loss_of(nvp, &analytic);
        CHECK(analytic.size() == nvp.num_params());
        auto f = [&](const Vec& r) {
            auto net = nvp;
            net.set_raw(r);
            return loss_of(net, nullptr);
        };
        CHECK(grad::grad_check(f, nvp.raw(), analytic, 1e-5) <= 1e-5);
    }
}

TEST_CASE("raw round trip preserves behaviour") {
    auto nvp = RealNvp2::make(4, 8, true, 61);
    auto rng = make_rng(62);
    std::normal_distribution<double> d(0.0, 0.4);
    Vec raw = nvp.raw();
    for (Eigen::Index i = 0; i < raw.size(); ++i) raw(i) += d(rng);
    nvp.set_raw(raw);

    auto other = RealNvp2::make(4, 8, true, 999);
    other.set_raw(nvp.raw());
    Mat x(3, 2);
    x << 0.1, 0.2, -0.5, 0.7, 1.2, -0.3;
    CHECK((other.forward(x).y - nvp.forward(x).y).cwiseAbs().maxCoeff() == 0.0);
}
