#include "cmflow/coupling.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "cmflow/rng.hpp"

namespace cmflow::flows {

namespace {
using grad::Mat;

struct CondOffsets {
    Eigen::Index w1, b1, w2, b2, ws, bs, wt, bt, total;
};

CondOffsets cond_offsets(int h) {
    CondOffsets o{};
    o.w1 = 0;
    o.b1 = o.w1 + h;
    o.w2 = o.b1 + h;
    o.b2 = o.w2 + static_cast<Eigen::Index>(h) * h;
    o.ws = o.b2 + h;
    o.bs = o.ws + h;
    o.wt = o.bs + 1;
    o.bt = o.wt + h;
    o.total = o.bt + 1;
    return o;
}
}  // namespace

Conditioner::Conditioner(int hidden) : hidden_(hidden) {
    if (hidden < 1) throw std::invalid_argument("conditioner: hidden width must be >= 1");
    raw_ = Vec::Zero(cond_offsets(hidden).total);
}

Conditioner Conditioner::random(int hidden, std::uint64_t seed) {
    Conditioner c(hidden);
    auto rng = make_rng(seed);
    auto o = cond_offsets(hidden);
    std::normal_distribution<double> d1(0.0, 1.0);
    std::normal_distribution<double> d2(0.0, 1.0 / std::sqrt(static_cast<double>(hidden)));
    for (Eigen::Index i = o.w1; i < o.w2; ++i) c.raw_(i) = d1(rng);
    for (Eigen::Index i = o.w2; i < o.ws; ++i) c.raw_(i) = d2(rng);
    // heads stay zero so the layer starts as the identity
    return c;
}

void Conditioner::set_raw(const Vec& raw) {
    if (raw.size() != raw_.size()) throw std::invalid_argument("conditioner: raw size mismatch");
    raw_ = raw;
}

void Conditioner::eval(const Vec& x, Vec& s_raw, Vec& t) const {
    const int h = hidden_;
    auto o = cond_offsets(h);
    Eigen::RowVectorXd w1 = raw_.segment(o.w1, h).transpose();
    Eigen::RowVectorXd b1 = raw_.segment(o.b1, h).transpose();
    Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>
        w2(raw_.data() + o.w2, h, h);
    Eigen::RowVectorXd b2 = raw_.segment(o.b2, h).transpose();
    Vec ws = raw_.segment(o.ws, h);
    Vec wt = raw_.segment(o.wt, h);

    Mat h1 = ((x * w1).rowwise() + b1).array().tanh();
    Mat h2 = ((h1 * w2).rowwise() + b2).array().tanh();
    s_raw = (h2 * ws).array() + raw_(o.bs);
    t = (h2 * wt).array() + raw_(o.bt);
}

Conditioner::ParamNodes Conditioner::register_params(grad::Tape& tape) const {
    const int h = hidden_;
    auto o = cond_offsets(h);
    ParamNodes p;
    p.w1 = tape.param(raw_.segment(o.w1, h).transpose());
    p.b1 = tape.param(raw_.segment(o.b1, h).transpose());
    p.w2 = tape.param(
        Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic,
                                       Eigen::RowMajor>>(raw_.data() + o.w2, h, h));
    p.b2 = tape.param(raw_.segment(o.b2, h).transpose());
    p.ws = tape.param(raw_.segment(o.ws, h));
    p.bs = tape.param(Mat::Constant(1, 1, raw_(o.bs)));
    p.wt = tape.param(raw_.segment(o.wt, h));
    p.bt = tape.param(Mat::Constant(1, 1, raw_(o.bt)));
    return p;
}

Conditioner::OutNodes Conditioner::build(grad::Tape& tape, int input,
                                         const ParamNodes& p) const {
    int h1 = tape.tanh(tape.add_row(tape.matmul(input, p.w1), p.b1));
    int h2 = tape.tanh(tape.add_row(tape.matmul(h1, p.w2), p.b2));
    int s_raw = tape.add_row(tape.matmul(h2, p.ws), p.bs);
    int t = tape.add_row(tape.matmul(h2, p.wt), p.bt);
    return {s_raw, t};
}

RealNvp2 RealNvp2::make(int depth, int hidden, bool constrained, std::uint64_t seed,
                        double s_max) {
    if (depth < 1) throw std::invalid_argument("realnvp: depth must be >= 1");
    std::vector<CouplingLayer> layers;
    layers.reserve(depth);
    for (int i = 0; i < depth; ++i) {
        int active = constrained ? 1 : (i % 2 == 0 ? 1 : 2);
        layers.push_back({active, Conditioner::random(hidden, mix_seed(seed, i)), s_max});
    }
    return RealNvp2(std::move(layers), constrained);
}

Eigen::Index RealNvp2::num_params() const {
    Eigen::Index n = 0;
    for (const auto& l : layers_) n += l.conditioner.num_params();
    return n;
}

Vec RealNvp2::raw() const {
    Vec out(num_params());
    Eigen::Index off = 0;
    for (const auto& l : layers_) {
        out.segment(off, l.conditioner.num_params()) = l.conditioner.raw();
        off += l.conditioner.num_params();
    }
    return out;
}

void RealNvp2::set_raw(const Vec& raw) {
    if (raw.size() != num_params()) throw std::invalid_argument("realnvp: raw size mismatch");
    Eigen::Index off = 0;
    for (auto& l : layers_) {
        l.conditioner.set_raw(raw.segment(off, l.conditioner.num_params()));
        off += l.conditioner.num_params();
    }
}

RealNvp2::Result RealNvp2::forward(const grad::Mat& x) const {
    if (x.cols() != 2) throw std::invalid_argument("realnvp: expected B x 2 input");
    if (!x.allFinite()) throw std::invalid_argument("realnvp: non-finite input");
    Vec c1 = x.col(0), c2 = x.col(1);
    Vec log_det = Vec::Zero(x.rows());
    for (const auto& l : layers_) {
        Vec& active = (l.active == 1) ? c1 : c2;
        const Vec& passive = (l.active == 1) ? c2 : c1;
        Vec s_raw, t;
        l.conditioner.eval(passive, s_raw, t);
        Vec s = l.s_max * (s_raw / l.s_max).array().tanh();
        active = (active.array() * s.array().exp() + t.array()).matrix();
        log_det += s;
    }
    Result r;
    r.y.resize(x.rows(), 2);
    r.y.col(0) = c1;
    r.y.col(1) = c2;
    r.log_det = std::move(log_det);
    return r;
}

RealNvp2::Result RealNvp2::inverse(const grad::Mat& y) const {
    if (y.cols() != 2) throw std::invalid_argument("realnvp: expected B x 2 input");
    if (!y.allFinite()) throw std::invalid_argument("realnvp: non-finite input");
    Vec c1 = y.col(0), c2 = y.col(1);
    Vec log_det = Vec::Zero(y.rows());
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) {
        const auto& l = *it;
        Vec& active = (l.active == 1) ? c1 : c2;
        const Vec& passive = (l.active == 1) ? c2 : c1;
        Vec s_raw, t;
        l.conditioner.eval(passive, s_raw, t);
        Vec s = l.s_max * (s_raw / l.s_max).array().tanh();
        active = ((active.array() - t.array()) * (-s.array()).exp()).matrix();
        log_det -= s;
    }
    Result r;
    r.y.resize(y.rows(), 2);
    r.y.col(0) = c1;
    r.y.col(1) = c2;
    r.log_det = std::move(log_det);
    return r;
}

RealNvp2::TapeResult RealNvp2::build_forward(grad::Tape& tape, int x1, int x2) const {
    std::vector<Conditioner::ParamNodes> params;
    params.reserve(layers_.size());
    for (const auto& l : layers_) params.push_back(l.conditioner.register_params(tape));

    const Eigen::Index B = tape.value(x1).rows();
    int log_det = tape.leaf(Mat::Zero(B, 1));
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        const auto& l = layers_[i];
        int active = (l.active == 1) ? x1 : x2;
        int passive = (l.active == 1) ? x2 : x1;
        auto out = l.conditioner.build(tape, passive, params[i]);
        int s = tape.scale(tape.tanh(tape.scale(out.s_raw, 1.0 / l.s_max)), l.s_max);
        int y = tape.add(tape.mul(active, tape.exp(s)), out.t);
        log_det = tape.add(log_det, s);
        if (l.active == 1)
            x1 = y;
        else
            x2 = y;
    }
    return {x1, x2, log_det};
}

RealNvp2::TapeResult RealNvp2::build_inverse(grad::Tape& tape, int y1, int y2) const {
    std::vector<Conditioner::ParamNodes> params;
    params.reserve(layers_.size());
    for (const auto& l : layers_) params.push_back(l.conditioner.register_params(tape));

    const Eigen::Index B = tape.value(y1).rows();
    int log_det = tape.leaf(Mat::Zero(B, 1));
    for (std::size_t k = layers_.size(); k-- > 0;) {
        const auto& l = layers_[k];
        int active = (l.active == 1) ? y1 : y2;
        int passive = (l.active == 1) ? y2 : y1;
        auto out = l.conditioner.build(tape, passive, params[k]);
        int s = tape.scale(tape.tanh(tape.scale(out.s_raw, 1.0 / l.s_max)), l.s_max);
        int x = tape.mul(tape.sub(active, out.t), tape.exp(tape.neg(s)));
        log_det = tape.sub(log_det, s);
        if (l.active == 1)
            y1 = x;
        else
            y2 = x;
    }
    return {y1, y2, log_det};
}

}  // namespace cmflow::flows
