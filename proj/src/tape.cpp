#include "cmflow/tape.hpp"

#include <cmath>

namespace cmflow::grad {

namespace {

Mat sigmoid_of(const Mat& x) {
    return x.unaryExpr([](double v) { return 1.0 / (1.0 + std::exp(-v)); });
}

Mat softplus_of(const Mat& x) {
    // log(1+exp(x)) in the overflow-safe form
    return x.unaryExpr([](double v) {
        return v > 0 ? v + std::log1p(std::exp(-v)) : std::log1p(std::exp(v));
    });
}

Mat softmax_rows_of(const Mat& x) {
    Mat y(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i) {
        double m = x.row(i).maxCoeff();
        Eigen::RowVectorXd e = (x.row(i).array() - m).exp();
        y.row(i) = e / e.sum();
    }
    return y;
}

}  // namespace

int Tape::check(int id) const {
    if (id < 0 || static_cast<std::size_t>(id) >= nodes_.size())
        throw std::invalid_argument("tape: bad node id");
    return id;
}

int Tape::push(Op op, int a, int b, Mat value, double c) {
    Node n;
    n.op = op;
    n.a = a;
    n.b = b;
    n.c = c;
    n.value = std::move(value);
    n.adjoint = Mat::Zero(n.value.rows(), n.value.cols());
    nodes_.push_back(std::move(n));
    return static_cast<int>(nodes_.size()) - 1;
}

int Tape::leaf(const Mat& value, bool trainable) {
    int id = push(Op::Leaf, -1, -1, value);
    nodes_[id].trainable = trainable;
    if (trainable) {
        trainable_.push_back(id);
        trainable_size_ += static_cast<std::size_t>(value.size());
    }
    return id;
}

int Tape::add(int a, int b) {
    return push(Op::Add, check(a), check(b), nodes_[a].value + nodes_[b].value);
}

int Tape::add_row(int a, int row) {
    check(a); check(row);
    if (nodes_[row].value.rows() != 1 || nodes_[row].value.cols() != nodes_[a].value.cols())
        throw std::invalid_argument("add_row: shape mismatch");
    return push(Op::AddRow, a, row, nodes_[a].value.rowwise() + nodes_[row].value.row(0));
}

int Tape::sub(int a, int b) {
    return push(Op::Sub, check(a), check(b), nodes_[a].value - nodes_[b].value);
}

int Tape::mul(int a, int b) {
    return push(Op::Mul, check(a), check(b),
                (nodes_[a].value.array() * nodes_[b].value.array()).matrix());
}

int Tape::mul_row(int a, int row) {
    check(a); check(row);
    if (nodes_[row].value.rows() != 1 || nodes_[row].value.cols() != nodes_[a].value.cols())
        throw std::invalid_argument("mul_row: shape mismatch");
    Mat v = nodes_[a].value.array().rowwise() * nodes_[row].value.row(0).array();
    return push(Op::MulRow, a, row, std::move(v));
}

int Tape::div(int a, int b) {
    return push(Op::Div, check(a), check(b),
                (nodes_[a].value.array() / nodes_[b].value.array()).matrix());
}

int Tape::matmul(int a, int b) {
    return push(Op::MatMul, check(a), check(b), nodes_[a].value * nodes_[b].value);
}

int Tape::transpose(int a) {
    return push(Op::Transpose, check(a), -1, nodes_[a].value.transpose());
}

int Tape::sum(int a) {
    return push(Op::Sum, check(a), -1, Mat::Constant(1, 1, nodes_[a].value.sum()));
}

int Tape::scale(int a, double c) {
    return push(Op::Scale, check(a), -1, nodes_[a].value * c, c);
}

int Tape::add_const(int a, double c) {
    return push(Op::AddConst, check(a), -1, nodes_[a].value.array() + c, c);
}

int Tape::neg(int a) { return push(Op::Neg, check(a), -1, -nodes_[a].value); }

int Tape::exp(int a) {
    return push(Op::Exp, check(a), -1, nodes_[a].value.array().exp().matrix());
}

int Tape::log(int a) {
    return push(Op::Log, check(a), -1, nodes_[a].value.array().log().matrix());
}

int Tape::sigmoid(int a) {
    return push(Op::Sigmoid, check(a), -1, sigmoid_of(nodes_[a].value));
}

int Tape::logit_eps(int a, double eps) {
    check(a);
    Mat v = nodes_[a].value.unaryExpr([eps](double x) {
        double c = std::clamp(x, eps, 1.0 - eps);
        return std::log(c / (1.0 - c));
    });
    return push(Op::LogitEps, a, -1, std::move(v), eps);
}

int Tape::softplus(int a) {
    return push(Op::Softplus, check(a), -1, softplus_of(nodes_[a].value));
}

int Tape::softmax_rows(int a) {
    return push(Op::SoftmaxRows, check(a), -1, softmax_rows_of(nodes_[a].value));
}

int Tape::tanh(int a) {
    return push(Op::Tanh, check(a), -1, nodes_[a].value.array().tanh().matrix());
}

int Tape::rows(int a, int start, int count) {
    check(a);
    if (start < 0 || count < 1 || start + count > nodes_[a].value.rows())
        throw std::invalid_argument("rows: slice out of range");
    int id = push(Op::Rows, a, -1, nodes_[a].value.middleRows(start, count),
                  static_cast<double>(start));
    return id;
}

double Tape::scalar(int id) const {
    const Mat& v = value(id);
    if (v.size() != 1) throw std::invalid_argument("tape: node is not scalar");
    return v(0, 0);
}

Vec Tape::backward(int output) {
    check(output);
    if (nodes_[output].value.size() != 1)
        throw std::invalid_argument("backward: output node must be scalar");
    for (auto& n : nodes_) {
        if (!n.value.allFinite())
            throw std::runtime_error("backward: non-finite forward value on tape");
        n.adjoint.setZero();
    }
    nodes_[output].adjoint(0, 0) = 1.0;

    for (int i = static_cast<int>(nodes_.size()) - 1; i >= 0; --i) {
        Node& n = nodes_[i];
        const Mat& g = n.adjoint;
        if (g.isZero(0.0)) continue;
        switch (n.op) {
            case Op::Leaf:
                break;
            case Op::Add:
                nodes_[n.a].adjoint += g;
                nodes_[n.b].adjoint += g;
                break;
            case Op::AddRow:
                nodes_[n.a].adjoint += g;
                nodes_[n.b].adjoint.row(0) += g.colwise().sum();
                break;
            case Op::Sub:
                nodes_[n.a].adjoint += g;
                nodes_[n.b].adjoint -= g;
                break;
            case Op::Mul:
                nodes_[n.a].adjoint.array() += g.array() * nodes_[n.b].value.array();
                nodes_[n.b].adjoint.array() += g.array() * nodes_[n.a].value.array();
                break;
            case Op::MulRow:
                nodes_[n.a].adjoint.array() +=
                    g.array().rowwise() * nodes_[n.b].value.row(0).array();
                nodes_[n.b].adjoint.row(0) +=
                    (g.array() * nodes_[n.a].value.array()).colwise().sum().matrix();
                break;
            case Op::Div:
                nodes_[n.a].adjoint.array() += g.array() / nodes_[n.b].value.array();
                nodes_[n.b].adjoint.array() -=
                    g.array() * n.value.array() / nodes_[n.b].value.array();
                break;
            case Op::MatMul:
                nodes_[n.a].adjoint += g * nodes_[n.b].value.transpose();
                nodes_[n.b].adjoint += nodes_[n.a].value.transpose() * g;
                break;
            case Op::Transpose:
                nodes_[n.a].adjoint += g.transpose();
                break;
            case Op::Sum:
                nodes_[n.a].adjoint.array() += g(0, 0);
                break;
            case Op::Scale:
                nodes_[n.a].adjoint += g * n.c;
                break;
            case Op::AddConst:
                nodes_[n.a].adjoint += g;
                break;
            case Op::Neg:
                nodes_[n.a].adjoint -= g;
                break;
            case Op::Exp:
                nodes_[n.a].adjoint.array() += g.array() * n.value.array();
                break;
            case Op::Log:
                nodes_[n.a].adjoint.array() += g.array() / nodes_[n.a].value.array();
                break;
            case Op::Sigmoid:
                nodes_[n.a].adjoint.array() +=
                    g.array() * n.value.array() * (1.0 - n.value.array());
                break;
            case Op::LogitEps: {
                const double eps = n.c;
                const Mat& x = nodes_[n.a].value;
                for (Eigen::Index r = 0; r < x.rows(); ++r)
                    for (Eigen::Index c = 0; c < x.cols(); ++c) {
                        double xv = x(r, c);
                        if (xv > eps && xv < 1.0 - eps)
                            nodes_[n.a].adjoint(r, c) += g(r, c) / (xv * (1.0 - xv));
                    }
                break;
            }
            case Op::Softplus:
                nodes_[n.a].adjoint.array() +=
                    g.array() * sigmoid_of(nodes_[n.a].value).array();
                break;
            case Op::SoftmaxRows: {
                // J^T g per row: s .* (g - (g . s))
                for (Eigen::Index r = 0; r < n.value.rows(); ++r) {
                    double dot = n.value.row(r).dot(g.row(r));
                    nodes_[n.a].adjoint.row(r).array() +=
                        n.value.row(r).array() * (g.row(r).array() - dot);
                }
                break;
            }
            case Op::Tanh:
                nodes_[n.a].adjoint.array() +=
                    g.array() * (1.0 - n.value.array().square());
                break;
            case Op::Rows:
                nodes_[n.a].adjoint.middleRows(static_cast<int>(n.c), g.rows()) += g;
                break;
        }
    }

    Vec grad(trainable_size_);
    Eigen::Index off = 0;
    for (int id : trainable_) {
        const Mat& a = nodes_[id].adjoint;
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c) grad(off++) = a(r, c);
    }
    return grad;
}

double grad_check(const std::function<double(const Vec&)>& f, const Vec& params,
                  const Vec& analytic, double h) {
    if (analytic.size() != params.size())
        throw std::invalid_argument("grad_check: size mismatch");
    double worst = 0.0;
    Vec p = params;
    for (Eigen::Index i = 0; i < p.size(); ++i) {
        double keep = p(i);
        p(i) = keep + h;
        double fp = f(p);
        p(i) = keep - h;
        double fm = f(p);
        p(i) = keep;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw std::runtime_error("grad_check: non-finite evaluation");
        double fd = (fp - fm) / (2.0 * h);
        // the floor keeps finite-difference noise on near-zero coordinates
        // from dominating the relative error
        double err = std::abs(analytic(i) - fd) /
                     std::max(std::abs(analytic(i)) + std::abs(fd), 1e-4);
        worst = std::max(worst, err);
    }
    return worst;
}

}  // namespace cmflow::grad
