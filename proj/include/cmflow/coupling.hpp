#pragma once

#include <cstdint>
#include <vector>

#include "cmflow/tape.hpp"

namespace cmflow::flows {

using grad::Vec;

// Scalar-input conditioner of a coupling layer: two tanh hidden layers, then
// separate heads for the raw log-scale and the shift. The heads are
// zero-initialized so a fresh layer is the identity map.
class Conditioner {
public:
    explicit Conditioner(int hidden);
    static Conditioner random(int hidden, std::uint64_t seed);

    void eval(const Vec& x, Vec& s_raw, Vec& t) const;

    struct ParamNodes {
        int w1, b1, w2, b2, ws, bs, wt, bt;
    };
    ParamNodes register_params(grad::Tape& tape) const;

    struct OutNodes {
        int s_raw, t;  // each B x 1
    };
    OutNodes build(grad::Tape& tape, int input, const ParamNodes& p) const;

    int hidden() const { return hidden_; }
    Eigen::Index num_params() const { return raw_.size(); }
    const Vec& raw() const { return raw_; }
    void set_raw(const Vec& raw);

private:
    int hidden_;
    Vec raw_;  // W1(1xH), b1(H), W2(HxH row-major), b2(H), Ws(H), bs, Wt(H), bt
};

// One affine coupling layer on R^2. `active` is 1 or 2; the other coordinate
// passes through unchanged and feeds the conditioner. The effective log-scale
// is S_max * tanh(s_raw / S_max), bounded in (-S_max, S_max).
struct CouplingLayer {
    int active;
    Conditioner conditioner;
    double s_max;
};

// Bivariate Real NVP: a stack of coupling layers with analytic inverse and
// log-determinant. Constrained nets transform only coordinate 1, so
// coordinate 2 is preserved bit-exactly in both directions.
class RealNvp2 {
public:
    static constexpr double kDefaultSMax = 5.0;

    static RealNvp2 make(int depth, int hidden, bool constrained, std::uint64_t seed,
                         double s_max = kDefaultSMax);

    struct Result {
        grad::Mat y;       // B x 2
        Vec log_det;       // per-row log |det J|
    };
    Result forward(const grad::Mat& x) const;
    Result inverse(const grad::Mat& y) const;

    struct TapeResult {
        int y1, y2;     // B x 1 each
        int log_det;    // B x 1
    };
    // Parameters are registered once, in layer order, aligned with raw().
    TapeResult build_forward(grad::Tape& tape, int x1, int x2) const;
    TapeResult build_inverse(grad::Tape& tape, int y1, int y2) const;

    bool constrained() const { return constrained_; }
    int depth() const { return static_cast<int>(layers_.size()); }
    const CouplingLayer& layer(int i) const { return layers_.at(i); }

    Eigen::Index num_params() const;
    Vec raw() const;
    void set_raw(const Vec& raw);

private:
    RealNvp2(std::vector<CouplingLayer> layers, bool constrained)
        : layers_(std::move(layers)), constrained_(constrained) {}

    std::vector<CouplingLayer> layers_;
    bool constrained_;
};

}  // namespace cmflow::flows
