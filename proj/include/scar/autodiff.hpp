#pragma once

#include <functional>
#include <vector>

#include <Eigen/Core>

namespace scar::ad {

using Mat = Eigen::MatrixXd;

/// Reverse-mode tape over dense matrices. One tape per forward pass; ops
/// record a closure that scatters the upstream gradient to their parents.
/// Scalars are 1x1 matrices. Values are immutable once created.
class Tape {
public:
    struct Var {
        int id = -1;
        bool valid() const { return id >= 0; }
    };

    Var leaf(Mat value, bool requires_grad = false);
    Var constant(Mat value) { return leaf(std::move(value), false); }

    const Mat& val(Var v) const { return nodes_[v.id].value; }
    const Mat& grad(Var v) const;

    // --- elementwise / linear algebra ---
    Var matmul(Var a, Var b);     // A * B
    Var matmul_nt(Var a, Var b);  // A * B^T
    Var add(Var a, Var b);
    Var sub(Var a, Var b);
    Var hadamard(Var a, Var b);
    Var scale(Var a, double s);
    Var gelu(Var a);
    Var silu(Var a);
    Var softmax_rows(Var a);

    // --- broadcasts over rows (b is 1 x cols) ---
    Var add_row_broadcast(Var m, Var row);
    Var add_rows_range(Var m, Var row, int r0, int r1);  // only rows [r0, r1)
    Var modulate(Var x, Var scale_row, Var shift_row);   // x .* (1 + s) + b
    Var row_gate(Var x, Var gate_row);                   // x .* g

    /// out = base, then out[r0:r1) += gamma * delta[r0:r1). Rows outside the
    /// range are copied from base untouched.
    Var masked_residual(Var base, Var delta, double gamma, int r0, int r1);

    // --- structure ---
    Var slice_cols(Var a, int c0, int n);
    Var concat_cols(const std::vector<Var>& parts);
    Var vstack2(Var a, Var b);
    Var select_row(Var table, int row);

    Var layer_norm(Var x, Var gain, Var bias, double eps = 1e-6);

    // --- reductions to scalars ---
    Var mse_rows(Var pred, Var target, int r0, int r1);

    /// Sum over m of (1 - cos(h[m], h[S+m])) with eps-stabilized norms.
    Var alignment_pairs(Var h, int S, double eps = 1e-8);

    void backward(Var loss);

private:
    struct Node {
        Mat value;
        Mat grad;
        bool requires_grad = false;
        std::function<void()> back;
    };

    Var make(Mat value, bool requires_grad, std::function<void()> back = nullptr);
    bool needs(Var v) const { return nodes_[v.id].requires_grad; }
    Mat& g(Var v) { return nodes_[v.id].grad; }
    const Mat& v(Var v) const { return nodes_[v.id].value; }

    std::vector<Node> nodes_;
};

using Var = Tape::Var;

}  // namespace scar::ad
