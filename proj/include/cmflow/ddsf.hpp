#pragma once

#include <cstdint>
#include <vector>

#include "cmflow/tape.hpp"

namespace cmflow::flows {

using grad::Mat;
using grad::Vec;

// Deep dense sigmoidal flow: a strictly increasing scalar map built from
// sigmoid layers with positive slopes and row-stochastic mixing matrices.
// Raw parameters are unconstrained; softplus/softmax enforce the constraints.
class Ddsf {
public:
    static constexpr double kClampEps = 1e-7;

    // widths = d_0..d_L with d_0 = d_L = 1
    explicit Ddsf(std::vector<int> widths);
    static Ddsf random(std::vector<int> widths, std::uint64_t seed, double stddev = 0.1);

    struct Eval {
        double value;
        double log_derivative;  // ln d h^(L) / d h^(0), always finite
    };
    Eval eval(double u) const;
    void eval_batch(const Vec& u, Vec& value, Vec& log_derivative) const;

    struct TapeNodes {
        int value;           // B x 1
        int log_derivative;  // B x 1
    };
    // Registers raw params as trainable leaves in raw-vector order, so
    // Tape::backward gradients align with raw().
    TapeNodes build(grad::Tape& tape, int input) const;

    struct LayerParams {
        Vec a, b;  // a > 0 after softplus
        Mat w, u;  // rows are softmax outputs: positive, sum 1
    };
    LayerParams layer_params(int layer) const;  // layer in 1..depth

    int depth() const { return static_cast<int>(widths_.size()) - 1; }
    const std::vector<int>& widths() const { return widths_; }
    Eigen::Index num_params() const { return raw_.size(); }
    const Vec& raw() const { return raw_; }
    void set_raw(const Vec& raw);

private:
    struct Offsets {
        Eigen::Index a, b, w, u;
    };
    Offsets offsets(int layer) const;

    std::vector<int> widths_;
    Vec raw_;
};

}  // namespace cmflow::flows
