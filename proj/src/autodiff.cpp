#include "scar/autodiff.hpp"

#include <cmath>

#include "scar/errors.hpp"

namespace scar::ad {

Var Tape::leaf(Mat value, bool requires_grad) {
    return make(std::move(value), requires_grad);
}

Var Tape::make(Mat value, bool requires_grad, std::function<void()> back) {
    Node node;
    node.value = std::move(value);
    node.requires_grad = requires_grad;
    node.back = std::move(back);
    nodes_.push_back(std::move(node));
    return Var{static_cast<int>(nodes_.size()) - 1};
}

const Mat& Tape::grad(Var v) const {
    const Node& n = nodes_[v.id];
    if (!n.requires_grad) throw RuntimeFailure("grad requested for a non-grad node");
    return n.grad;
}

Var Tape::matmul(Var a, Var b) {
    Mat value = v(a) * v(b);
    const bool rg = needs(a) || needs(b);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, b, out] {
            const Mat& go = g(out);
            if (needs(a)) g(a).noalias() += go * v(b).transpose();
            if (needs(b)) g(b).noalias() += v(a).transpose() * go;
        };
    return out;
}

Var Tape::matmul_nt(Var a, Var b) {
    Mat value = v(a) * v(b).transpose();
    const bool rg = needs(a) || needs(b);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, b, out] {
            const Mat& go = g(out);
            if (needs(a)) g(a).noalias() += go * v(b);
            if (needs(b)) g(b).noalias() += go.transpose() * v(a);
        };
    return out;
}

Var Tape::add(Var a, Var b) {
    Mat value = v(a) + v(b);
    const bool rg = needs(a) || needs(b);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, b, out] {
            if (needs(a)) g(a) += g(out);
            if (needs(b)) g(b) += g(out);
        };
    return out;
}

Var Tape::sub(Var a, Var b) {
    Mat value = v(a) - v(b);
    const bool rg = needs(a) || needs(b);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, b, out] {
            if (needs(a)) g(a) += g(out);
            if (needs(b)) g(b) -= g(out);
        };
    return out;
}

Var Tape::hadamard(Var a, Var b) {
    Mat value = v(a).cwiseProduct(v(b));
    const bool rg = needs(a) || needs(b);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, b, out] {
            if (needs(a)) g(a) += g(out).cwiseProduct(v(b));
            if (needs(b)) g(b) += g(out).cwiseProduct(v(a));
        };
    return out;
}

Var Tape::scale(Var a, double s) {
    Mat value = v(a) * s;
    const bool rg = needs(a);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, s, out] { g(a) += s * g(out); };
    return out;
}

namespace {
constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;
}  // namespace

Var Tape::gelu(Var a) {
    const Mat& x = v(a);
    Mat th = (kGeluC * (x.array() + kGeluA * x.array().cube())).tanh();
    Mat value = 0.5 * x.array() * (1.0 + th.array());
    const bool rg = needs(a);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, out, th = std::move(th)] {
            const Mat& x = v(a);
            const auto sech2 = 1.0 - th.array().square();
            const auto du = kGeluC * (1.0 + 3.0 * kGeluA * x.array().square());
            g(a) += (g(out).array() *
                     (0.5 * (1.0 + th.array()) + 0.5 * x.array() * sech2 * du))
                        .matrix();
        };
    return out;
}

Var Tape::silu(Var a) {
    Mat sig = (1.0 / (1.0 + (-v(a).array()).exp())).matrix();
    Mat value = v(a).cwiseProduct(sig);
    const bool rg = needs(a);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, out, sig = std::move(sig)] {
            g(a) += (g(out).array() *
                     (sig.array() * (1.0 + v(a).array() * (1.0 - sig.array()))))
                        .matrix();
        };
    return out;
}

Var Tape::softmax_rows(Var a) {
    Mat value = v(a);
    for (Eigen::Index r = 0; r < value.rows(); ++r) {
        const double mx = value.row(r).maxCoeff();
        value.row(r) = (value.row(r).array() - mx).exp();
        value.row(r) /= value.row(r).sum();
    }
    const bool rg = needs(a);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, out] {
            const Mat& y = v(out);
            const Mat& go = g(out);
            const Eigen::VectorXd dot = (go.cwiseProduct(y)).rowwise().sum();
            g(a) += y.cwiseProduct(go - dot.replicate(1, y.cols()));
        };
    return out;
}

Var Tape::add_row_broadcast(Var m, Var row) {
    Mat value = v(m);
    value.rowwise() += v(row).row(0);
    const bool rg = needs(m) || needs(row);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, m, row, out] {
            if (needs(m)) g(m) += g(out);
            if (needs(row)) g(row) += g(out).colwise().sum();
        };
    return out;
}

Var Tape::add_rows_range(Var m, Var row, int r0, int r1) {
    Mat value = v(m);
    value.middleRows(r0, r1 - r0).rowwise() += v(row).row(0);
    const bool rg = needs(m) || needs(row);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, m, row, out, r0, r1] {
            if (needs(m)) g(m) += g(out);
            if (needs(row)) g(row) += g(out).middleRows(r0, r1 - r0).colwise().sum();
        };
    return out;
}

Var Tape::modulate(Var x, Var scale_row, Var shift_row) {
    Mat value = v(x).array().rowwise() * (1.0 + v(scale_row).row(0).array());
    value.rowwise() += v(shift_row).row(0);
    const bool rg = needs(x) || needs(scale_row) || needs(shift_row);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, x, scale_row, shift_row, out] {
            const Mat& go = g(out);
            if (needs(x))
                g(x) += (go.array().rowwise() * (1.0 + v(scale_row).row(0).array())).matrix();
            if (needs(scale_row)) g(scale_row) += go.cwiseProduct(v(x)).colwise().sum();
            if (needs(shift_row)) g(shift_row) += go.colwise().sum();
        };
    return out;
}

Var Tape::row_gate(Var x, Var gate_row) {
    Mat value = v(x).array().rowwise() * v(gate_row).row(0).array();
    const bool rg = needs(x) || needs(gate_row);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, x, gate_row, out] {
            const Mat& go = g(out);
            if (needs(x)) g(x) += (go.array().rowwise() * v(gate_row).row(0).array()).matrix();
            if (needs(gate_row)) g(gate_row) += go.cwiseProduct(v(x)).colwise().sum();
        };
    return out;
}

Var Tape::masked_residual(Var base, Var delta, double gamma, int r0, int r1) {
    Mat value = v(base);
    value.middleRows(r0, r1 - r0) += gamma * v(delta).middleRows(r0, r1 - r0);
    const bool rg = needs(base) || needs(delta);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, base, delta, gamma, r0, r1, out] {
            if (needs(base)) g(base) += g(out);
            if (needs(delta))
                g(delta).middleRows(r0, r1 - r0) += gamma * g(out).middleRows(r0, r1 - r0);
        };
    return out;
}

Var Tape::slice_cols(Var a, int c0, int n) {
    Mat value = v(a).middleCols(c0, n);
    const bool rg = needs(a);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, c0, n, out] { g(a).middleCols(c0, n) += g(out); };
    return out;
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
    Eigen::Index rows = v(parts[0]).rows(), cols = 0;
    bool rg = false;
    for (Var p : parts) {
        cols += v(p).cols();
        rg = rg || needs(p);
    }
    Mat value(rows, cols);
    Eigen::Index off = 0;
    for (Var p : parts) {
        value.middleCols(off, v(p).cols()) = v(p);
        off += v(p).cols();
    }
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, parts, out] {
            Eigen::Index off = 0;
            for (Var p : parts) {
                const Eigen::Index n = v(p).cols();
                if (needs(p)) g(p) += g(out).middleCols(off, n);
                off += n;
            }
        };
    return out;
}

Var Tape::vstack2(Var a, Var b) {
    Mat value(v(a).rows() + v(b).rows(), v(a).cols());
    value.topRows(v(a).rows()) = v(a);
    value.bottomRows(v(b).rows()) = v(b);
    const bool rg = needs(a) || needs(b);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, a, b, out] {
            if (needs(a)) g(a) += g(out).topRows(v(a).rows());
            if (needs(b)) g(b) += g(out).bottomRows(v(b).rows());
        };
    return out;
}

Var Tape::select_row(Var table, int row) {
    Mat value = v(table).row(row);
    const bool rg = needs(table);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, table, row, out] { g(table).row(row) += g(out).row(0); };
    return out;
}

Var Tape::layer_norm(Var x, Var gain, Var bias, double eps) {
    const Mat& xv = v(x);
    Mat xhat(xv.rows(), xv.cols());
    Eigen::VectorXd inv_std(xv.rows());
    for (Eigen::Index r = 0; r < xv.rows(); ++r) {
        const double mu = xv.row(r).mean();
        const double var = (xv.row(r).array() - mu).square().mean();
        inv_std[r] = 1.0 / std::sqrt(var + eps);
        xhat.row(r) = (xv.row(r).array() - mu) * inv_std[r];
    }
    Mat value = xhat.array().rowwise() * v(gain).row(0).array();
    value.rowwise() += v(bias).row(0);
    const bool rg = needs(x) || needs(gain) || needs(bias);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, x, gain, bias, out, xhat = std::move(xhat),
                               inv_std = std::move(inv_std)] {
            const Mat& go = g(out);
            if (needs(gain)) g(gain) += go.cwiseProduct(xhat).colwise().sum();
            if (needs(bias)) g(bias) += go.colwise().sum();
            if (needs(x)) {
                Mat dxhat = go.array().rowwise() * v(gain).row(0).array();
                const Eigen::Index d = dxhat.cols();
                for (Eigen::Index r = 0; r < dxhat.rows(); ++r) {
                    const double m1 = dxhat.row(r).mean();
                    const double m2 = dxhat.row(r).cwiseProduct(xhat.row(r)).sum() /
                                      static_cast<double>(d);
                    g(x).row(r) += inv_std[r] *
                                   (dxhat.row(r).array() - m1 - xhat.row(r).array() * m2).matrix();
                }
            }
        };
    return out;
}

Var Tape::mse_rows(Var pred, Var target, int r0, int r1) {
    const Eigen::Index n = r1 - r0;
    const Eigen::Index cols = v(pred).cols();
    Mat diff = v(pred).middleRows(r0, n) - v(target).middleRows(r0, n);
    Mat value(1, 1);
    value(0, 0) = diff.squaredNorm() / static_cast<double>(n * cols);
    const bool rg = needs(pred) || needs(target);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, pred, target, r0, n, cols, out, diff = std::move(diff)] {
            const double go = g(out)(0, 0);
            const Mat d = (2.0 / static_cast<double>(n * cols)) * go * diff;
            if (needs(pred)) g(pred).middleRows(r0, n) += d;
            if (needs(target)) g(target).middleRows(r0, n) -= d;
        };
    return out;
}

Var Tape::alignment_pairs(Var h, int S, double eps) {
    const Mat& hv = v(h);
    if (hv.rows() != 2 * S) throw ShapeMismatch("alignment_pairs: expected 2*S rows");
    double total = 0.0;
    for (int m = 0; m < S; ++m) {
        const auto a = hv.row(m), b = hv.row(S + m);
        const double na = std::max(a.norm(), eps), nb = std::max(b.norm(), eps);
        total += 1.0 - a.dot(b) / (na * nb);
    }
    Mat value(1, 1);
    value(0, 0) = total;
    const bool rg = needs(h);
    Var out = make(std::move(value), rg);
    if (rg)
        nodes_[out.id].back = [this, h, S, eps, out] {
            const double go = g(out)(0, 0);
            const Mat& hv = v(h);
            for (int m = 0; m < S; ++m) {
                const auto a = hv.row(m), b = hv.row(S + m);
                const double norm_a = a.norm(), norm_b = b.norm();
                const double na = std::max(norm_a, eps), nb = std::max(norm_b, eps);
                const double dot = a.dot(b);
                // d(1 - s)/da with s = dot / (na * nb); the clamped branch has
                // zero derivative through the norm.
                Eigen::RowVectorXd da = -b / (na * nb);
                if (norm_a > eps) da += dot / (na * na * nb) * (a / norm_a);
                Eigen::RowVectorXd db = -a / (na * nb);
                if (norm_b > eps) db += dot / (na * nb * nb) * (b / norm_b);
                g(h).row(m) += go * da;
                g(h).row(S + m) += go * db;
            }
        };
    return out;
}

void Tape::backward(Var loss) {
    Node& last = nodes_[loss.id];
    if (last.value.size() != 1) throw RuntimeFailure("backward expects a scalar loss");
    if (!last.requires_grad) throw RuntimeFailure("loss does not depend on any grad leaf");
    for (Node& n : nodes_)
        if (n.requires_grad) n.grad = Mat::Zero(n.value.rows(), n.value.cols());
    last.grad(0, 0) = 1.0;
    for (int i = loss.id; i >= 0; --i)
        if (nodes_[i].requires_grad && nodes_[i].back) nodes_[i].back();
}

}  // namespace scar::ad
