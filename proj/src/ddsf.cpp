#include "cmflow/ddsf.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cmflow/rng.hpp"

namespace cmflow::flows {

namespace {

double softplus(double x) {
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

Eigen::RowVectorXd softmax_row(const Eigen::RowVectorXd& r) {
    Eigen::RowVectorXd e = (r.array() - r.maxCoeff()).exp();
    return e / e.sum();
}

}  // namespace

Ddsf::Ddsf(std::vector<int> widths) : widths_(std::move(widths)) {
    if (widths_.size() < 2 || widths_.front() != 1 || widths_.back() != 1)
        throw std::invalid_argument("ddsf: widths must start and end at 1");
    for (int d : widths_)
        if (d < 1) throw std::invalid_argument("ddsf: widths must be positive");
    Eigen::Index n = 0;
    for (int l = 1; l <= depth(); ++l) {
        Eigen::Index dl = widths_[l], dp = widths_[l - 1];
        n += dl + dl + dl * dl + dl * dp;
    }
    raw_ = Vec::Zero(n);
}

Ddsf Ddsf::random(std::vector<int> widths, std::uint64_t seed, double stddev) {
    Ddsf f(std::move(widths));
    auto rng = make_rng(seed);
    std::normal_distribution<double> dist(0.0, stddev);
    for (Eigen::Index i = 0; i < f.raw_.size(); ++i) f.raw_(i) = dist(rng);
    return f;
}

Ddsf::Offsets Ddsf::offsets(int layer) const {
    Eigen::Index off = 0;
    for (int l = 1; l < layer; ++l) {
        Eigen::Index dl = widths_[l], dp = widths_[l - 1];
        off += dl + dl + dl * dl + dl * dp;
    }
    Eigen::Index dl = widths_[layer];
    return {off, off + dl, off + 2 * dl, off + 2 * dl + dl * dl};
}

Ddsf::LayerParams Ddsf::layer_params(int layer) const {
    if (layer < 1 || layer > depth()) throw std::invalid_argument("ddsf: bad layer index");
    Eigen::Index dl = widths_[layer], dp = widths_[layer - 1];
    Offsets o = offsets(layer);
    LayerParams p;
    p.a = raw_.segment(o.a, dl).unaryExpr([](double x) { return softplus(x); });
    p.b = raw_.segment(o.b, dl);
    p.w.resize(dl, dl);
    p.u.resize(dl, dp);
    for (Eigen::Index i = 0; i < dl; ++i) {
        p.w.row(i) = softmax_row(raw_.segment(o.w + i * dl, dl).transpose());
        p.u.row(i) = softmax_row(raw_.segment(o.u + i * dp, dp).transpose());
    }
    return p;
}

void Ddsf::set_raw(const Vec& raw) {
    if (raw.size() != raw_.size()) throw std::invalid_argument("ddsf: raw size mismatch");
    raw_ = raw;
}

void Ddsf::eval_batch(const Vec& u, Vec& value, Vec& log_derivative) const {
    const Eigen::Index B = u.size();
    Mat h = u;                   // B x d_{l-1}
    Mat t = Mat::Ones(B, 1);     // d h^(l-1) / d h^(0)
    for (int l = 1; l <= depth(); ++l) {
        LayerParams p = layer_params(l);
        Mat pre = h * p.u.transpose();
        Mat z = (pre.array().rowwise() * p.a.transpose().array()).rowwise() +
                p.b.transpose().array();
        Mat s = z.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
        Mat y = s * p.w.transpose();
        Mat hc = y.unaryExpr([](double v) {
            double c = std::clamp(v, kClampEps, 1.0 - kClampEps);
            return std::log(c / (1.0 - c));
        });
        Mat tpre = t * p.u.transpose();
        Mat ds = s.array() * (1.0 - s.array()) *
                 (tpre.array().rowwise() * p.a.transpose().array());
        Mat dy = ds * p.w.transpose();
        Mat tn = dy.array() / (y.array() * (1.0 - y.array()));
        if (!hc.allFinite() || !tn.allFinite())
            throw std::runtime_error("ddsf: non-finite intermediate at layer " +
                                     std::to_string(l));
        h = std::move(hc);
        t = std::move(tn);
    }
    value = h.col(0);
    log_derivative = t.col(0).array().log();
}

Ddsf::Eval Ddsf::eval(double u) const {
    Vec in(1), v, ld;
    in(0) = u;
    eval_batch(in, v, ld);
    return {v(0), ld(0)};
}

Ddsf::TapeNodes Ddsf::build(grad::Tape& tape, int input) const {
    const Eigen::Index B = tape.value(input).rows();
    int h = input;
    int t = tape.leaf(Mat::Ones(B, 1));
    for (int l = 1; l <= depth(); ++l) {
        Eigen::Index dl = widths_[l], dp = widths_[l - 1];
        Offsets o = offsets(l);
        // Leaves registered in raw-vector order: a, b, w, u.
        Mat raw_a = raw_.segment(o.a, dl).transpose();
        Mat raw_b = raw_.segment(o.b, dl).transpose();
        Mat raw_w = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>(
            raw_.data() + o.w, dl, dl);
        Mat raw_u = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                                   Eigen::RowMajor>>(
            raw_.data() + o.u, dl, dp);
        int a = tape.softplus(tape.param(raw_a));
        int b = tape.param(raw_b);
        int wT = tape.transpose(tape.softmax_rows(tape.param(raw_w)));
        int uT = tape.transpose(tape.softmax_rows(tape.param(raw_u)));

        int pre = tape.matmul(h, uT);
        int z = tape.add_row(tape.mul_row(pre, a), b);
        int s = tape.sigmoid(z);
        int y = tape.matmul(s, wT);
        int hn = tape.logit_eps(y, kClampEps);

        int one_minus_s = tape.add_const(tape.neg(s), 1.0);
        int tpre = tape.matmul(t, uT);
        int ds = tape.mul(tape.mul(s, one_minus_s), tape.mul_row(tpre, a));
        int dy = tape.matmul(ds, wT);
        int one_minus_y = tape.add_const(tape.neg(y), 1.0);
        int tn = tape.div(dy, tape.mul(y, one_minus_y));

        h = hn;
        t = tn;
    }
    return {h, tape.log(t)};
}

}  // namespace cmflow::flows
