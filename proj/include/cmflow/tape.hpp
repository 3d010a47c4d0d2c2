#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <vector>

namespace cmflow::grad {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

// Reverse-mode tape over dense matrix-valued nodes. Nodes are appended in
// topological order; backward() walks them in reverse. A tape is rebuilt per
// batch and owned by a single thread during a forward/backward pass.
class Tape {
public:
    enum class Op {
        Leaf,        // constant input or trainable parameter
        Add,         // elementwise, same shape
        AddRow,      // a + row broadcast over rows of a
        Sub,         // elementwise
        Mul,         // elementwise
        MulRow,      // a .* row broadcast
        Div,         // elementwise
        MatMul,      // a * b
        Transpose,
        Sum,         // reduce to 1x1
        Scale,       // a * c
        AddConst,    // a + c
        Neg,
        Exp,
        Log,
        Sigmoid,
        LogitEps,    // logit(clamp(a, eps, 1-eps)); zero slope where clamped
        Softplus,
        SoftmaxRows, // softmax per row
        Tanh,
        Rows         // contiguous row slice
    };

    int leaf(const Mat& value, bool trainable = false);
    int param(const Mat& value) { return leaf(value, true); }
    int constant(double value) { return leaf(Mat::Constant(1, 1, value)); }

    int add(int a, int b);
    int add_row(int a, int row);
    int sub(int a, int b);
    int mul(int a, int b);
    int mul_row(int a, int row);
    int div(int a, int b);
    int matmul(int a, int b);
    int transpose(int a);
    int sum(int a);
    int scale(int a, double c);
    int add_const(int a, double c);
    int neg(int a);
    int exp(int a);
    int log(int a);
    int sigmoid(int a);
    int logit_eps(int a, double eps);
    int softplus(int a);
    int softmax_rows(int a);
    int tanh(int a);
    int rows(int a, int start, int count);

    const Mat& value(int id) const { return nodes_[check(id)].value; }
    const Mat& adjoint(int id) const { return nodes_[check(id)].adjoint; }
    double scalar(int id) const;

    // Exact reverse-mode derivatives of a scalar output with respect to every
    // trainable leaf, flattened (row-major per leaf) in registration order.
    // Adjoints are reset on entry, so repeated calls give identical results.
    Vec backward(int output);

    std::size_t size() const { return nodes_.size(); }
    std::size_t num_trainable() const { return trainable_size_; }

private:
    struct Node {
        Op op;
        int a = -1, b = -1;
        double c = 0.0;
        bool trainable = false;
        Mat value;
        Mat adjoint;
    };

    int push(Op op, int a, int b, Mat value, double c = 0.0);
    int check(int id) const;

    std::vector<Node> nodes_;
    std::vector<int> trainable_;
    std::size_t trainable_size_ = 0;
};

// Max over coordinates of |analytic - central difference| divided by
// max(|analytic| + |central|, 1e-4), with the central difference taken at
// step h. `f` must be evaluable at params +/- h perturbations; `analytic`
// is the gradient under test.
double grad_check(const std::function<double(const Vec&)>& f, const Vec& params,
                  const Vec& analytic, double h);

}  // namespace cmflow::grad
