#pragma once

#include <cstdio>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "pcgen/common.hpp"

namespace pcgen::diff {

/// Dense row-major matrix of doubles. A row vector is 1 x d.
class Matrix {
public:
    Matrix() = default;
    Matrix(int rows, int cols, double fill = 0.0)
        : rows_(rows), cols_(cols), v_(static_cast<std::size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative shape");
    }

    static Matrix from_rows(const std::vector<std::vector<double>>& rows);

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    std::size_t size() const { return v_.size(); }
    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(int r, int c) { return v_[static_cast<std::size_t>(r) * cols_ + c]; }
    double operator()(int r, int c) const { return v_[static_cast<std::size_t>(r) * cols_ + c]; }

    double* data() { return v_.data(); }
    const double* data() const { return v_.data(); }
    std::span<const double> values() const { return v_; }
    std::span<double> values() { return v_; }

    void fill(double x) { std::fill(v_.begin(), v_.end(), x); }
    bool finite() const { return all_finite(v_); }

    std::string shape_str() const;

private:
    int rows_ = 0, cols_ = 0;
    std::vector<double> v_;
};

/// Named trainable tensor with a gradient accumulator of the same shape.
/// Writes reject non-finite values.
struct ParamTensor {
    std::string name;
    Matrix value;
    Matrix grad;
    bool grad_ready = false;

    ParamTensor() = default;
    ParamTensor(std::string n, Matrix v);

    void set_value(const Matrix& v);
    void set_entry(int r, int c, double x);
    void zero_grad() {
        grad.fill(0.0);
        grad_ready = false;
    }
};

/// Record of primitive operations supporting exact reverse-mode replay.
/// One tape serves one forward pass; backward() consumes it.
class Tape {
public:
    using NodeId = int;

    NodeId param(ParamTensor& p);
    NodeId input(Matrix m);     // leaf whose gradient is retrievable after backward
    NodeId constant(Matrix m);  // leaf excluded from differentiation

    NodeId matmul(NodeId a, NodeId b);
    NodeId add(NodeId a, NodeId b);
    NodeId add_rowvec(NodeId a, NodeId row);  // (n x d) + (1 x d), broadcast over rows
    NodeId sub(NodeId a, NodeId b);
    NodeId mul(NodeId a, NodeId b);
    NodeId mul_scalar(NodeId a, NodeId s);  // s is 1 x 1
    NodeId affine(NodeId a, double scale, double shift);
    NodeId softplus(NodeId a);
    NodeId leaky_relu(NodeId a, double slope);
    NodeId abs(NodeId a);
    NodeId square(NodeId a);
    NodeId max_pool_rows(NodeId a);   // n x d -> 1 x d; ties go to the lowest row index
    NodeId mean_pool_rows(NodeId a);  // n x d -> 1 x d; order-exact summation
    NodeId repeat_rows(NodeId a, int n);  // 1 x d -> n x d
    NodeId concat_cols(NodeId a, NodeId b);
    NodeId sum_all(NodeId a);   // -> 1 x 1
    NodeId mean_all(NodeId a);  // -> 1 x 1

    const Matrix& value(NodeId id) const { return node(id).value; }

    /// Reverse replay from `output` seeded with `out_grad`. Accumulates into
    /// every reachable ParamTensor's gradient and marks the tape consumed.
    void backward(NodeId output, const Matrix& out_grad);

    /// Convenience seed for 1x1 outputs.
    void backward_scalar(NodeId output, double seed = 1.0);

    /// Gradient w.r.t. an input/param leaf, valid after backward().
    const Matrix& grad(NodeId id) const;

    bool consumed() const { return consumed_; }
    std::size_t node_count() const { return nodes_.size(); }
    void clear();

private:
    enum class Op {
        Param,
        Input,
        Const,
        MatMul,
        Add,
        AddRow,
        Sub,
        Mul,
        MulScalar,
        Affine,
        Softplus,
        LeakyRelu,
        Abs,
        Square,
        MaxPoolRows,
        MeanPoolRows,
        RepeatRows,
        ConcatCols,
        SumAll,
        MeanAll,
    };

    struct Node {
        Op op;
        Matrix value;
        Matrix grad;
        int a = -1, b = -1;
        double s0 = 0.0, s1 = 0.0;      // affine scale/shift, leaky slope
        std::vector<int> arg_rows;      // max-pool argmax row per column
        ParamTensor* tensor = nullptr;  // Param leaves
    };

    Node& node(NodeId id) {
        check_id(id);
        return nodes_[static_cast<std::size_t>(id)];
    }
    const Node& node(NodeId id) const {
        check_id(id);
        return nodes_[static_cast<std::size_t>(id)];
    }
    void check_id(NodeId id) const;
    NodeId push(Node n);

    std::vector<Node> nodes_;
    bool consumed_ = false;
};

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.5;
    double beta2 = 0.9;
    double eps = 1e-8;
};

/// Adam with bias correction over a fixed set of parameters.
class Adam {
public:
    Adam(std::vector<ParamTensor*> params, AdamConfig cfg);

    /// One update from the accumulated gradients, which are then zeroed.
    /// Throws if no parameter has a populated gradient.
    void step();

    void zero_grad();
    long step_count() const { return t_; }
    const AdamConfig& config() const { return cfg_; }

private:
    struct Slot {
        ParamTensor* p;
        Matrix m, v;
    };
    std::vector<Slot> slots_;
    AdamConfig cfg_;
    long t_ = 0;
};

/// Versioned plain-text checkpoint; values are written as hex floats so a
/// save/load cycle is bit-exact.
void save_params(const std::string& path, std::span<const ParamTensor* const> params);
void load_params(const std::string& path, std::span<ParamTensor* const> params);

}  // namespace pcgen::diff

namespace pcgen {
/// A point cloud is an n x d matrix, one point per row.
using Cloud = diff::Matrix;
}  // namespace pcgen
